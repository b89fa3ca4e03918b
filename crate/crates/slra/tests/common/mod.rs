//! Shared property-suite engine used by the property and acceptance test
//! targets: seeded invariant checks over norms, projections and
//! factorizations, with a deterministic checksum so sequential and parallel
//! execution can be compared bit for bit.

#![allow(dead_code)]

use rayon::prelude::*;
use slra::mat::DenseMatrix;
use slra::metrics::{
    approximation_ratio, haar_orthonormal, planted_matrix, residual_spectrum, ApproxRatio,
    SpectrumKind, SpectrumSpec,
};
use slra::norms::schatten_norm;
use slra::qr::orthonormalize;
use slra::rng::{gaussian_matrix, SeededRng};
use slra::svd::svd;

/// Outcome of one suite: violations must be zero; `cases` and `checksum`
/// feed the determinism cross-check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteOutcome {
    pub cases: u64,
    pub violations: u64,
    pub checksum: u64,
}

fn mix(acc: u64, x: f64) -> u64 {
    acc.rotate_left(7) ^ x.to_bits()
}

pub fn random_projector(n: usize, j: usize, rng: &mut SeededRng) -> DenseMatrix {
    let z = haar_orthonormal(n, j, rng).unwrap();
    z.matmul_nt(&z)
}

/// `||P A Q||_p^p + ||(I-P) A (I-Q)||_p^p <= ||A||_p^p (1 + 1e-9)`.
fn pinching_suite(trial: u64) -> SuiteOutcome {
    let mut out = SuiteOutcome { cases: 0, violations: 0, checksum: 0 };
    let mut rng = SeededRng::new(31_000 + trial);
    let m = 10 + (trial % 7) as usize;
    let n = 8 + (trial % 9) as usize;
    let a = gaussian_matrix(m, n, &mut rng).unwrap();
    let jp = 1 + (trial % (m as u64 - 1)) as usize;
    let jq = 1 + (trial % (n as u64 - 1)) as usize;
    let p_proj = random_projector(m, jp, &mut rng);
    let q_proj = random_projector(n, jq, &mut rng);

    let paq = p_proj.matmul(&a).matmul(&q_proj);
    let complement = a.sub(&p_proj.matmul(&a));
    let rest = complement.sub(&complement.matmul(&q_proj));
    for p in [1.0, 2.0, 3.0, 5.0] {
        let lhs = schatten_norm(&paq, p).unwrap().powf(p)
            + schatten_norm(&rest, p).unwrap().powf(p);
        let rhs = schatten_norm(&a, p).unwrap().powf(p) * (1.0 + 1e-9);
        out.cases += 1;
        if lhs > rhs {
            out.violations += 1;
        }
        out.checksum = mix(out.checksum, lhs);
    }
    out
}

/// For `a, b, c >= 0`, `b >= c`, `gamma < 1/2`, `a^2 >= b^2 - gamma c^2`:
/// `a^p >= b^p - gamma p c^2 b^(p-2)`.
fn two_to_p_suite(trial: u64) -> SuiteOutcome {
    let mut out = SuiteOutcome { cases: 0, violations: 0, checksum: 0 };
    let mut rng = SeededRng::new(47_000 + trial);
    for _ in 0..100 {
        let b = rng.uniform() * 10.0;
        let c = rng.uniform() * b;
        let gamma = rng.uniform() * 0.499;
        let floor = (b * b - gamma * c * c).max(0.0);
        let a = (floor + rng.uniform() * b * b).sqrt();
        for p in [1.0, 2.0, 3.0, 4.0, 8.0] {
            let lhs = a.powf(p);
            let rhs = if b > 0.0 {
                b.powf(p) - gamma * p * c * c * b.powf(p - 2.0)
            } else {
                0.0
            };
            out.cases += 1;
            if lhs < rhs - 1e-12 * rhs.abs().max(1.0) {
                out.violations += 1;
            }
            out.checksum = mix(out.checksum, lhs - rhs);
        }
    }
    out
}

/// Unitary invariance and the triangle inequality of the Schatten norms.
fn norm_axioms_suite(trial: u64) -> SuiteOutcome {
    let mut out = SuiteOutcome { cases: 0, violations: 0, checksum: 0 };
    let mut rng = SeededRng::new(53_000 + trial);
    let m = 6 + (trial % 8) as usize;
    let n = 5 + (trial % 6) as usize;
    let a = gaussian_matrix(m, n, &mut rng).unwrap();
    let b = gaussian_matrix(m, n, &mut rng).unwrap();
    let u = haar_orthonormal(m, m, &mut rng).unwrap();
    let v = haar_orthonormal(n, n, &mut rng).unwrap();
    let rotated = u.matmul(&a).matmul_nt(&v);
    for p in [1.0, 2.0, 2.5, 4.0, f64::INFINITY] {
        let na = schatten_norm(&a, p).unwrap();
        let nr = schatten_norm(&rotated, p).unwrap();
        out.cases += 1;
        if (na - nr).abs() > 1e-10 * na.max(1e-300) {
            out.violations += 1;
        }
        let nab = schatten_norm(&a.add(&b), p).unwrap();
        let nb = schatten_norm(&b, p).unwrap();
        out.cases += 1;
        if nab > na + nb + 1e-10 * (na + nb) {
            out.violations += 1;
        }
        out.checksum = mix(out.checksum, na + nr + nab);
    }
    out
}

/// `sigma_i(A (I - Q)) >= sigma_(i+k)(A)` for any rank-k projection.
fn weyl_suite(trial: u64) -> SuiteOutcome {
    let mut out = SuiteOutcome { cases: 0, violations: 0, checksum: 0 };
    let mut rng = SeededRng::new(59_000 + trial);
    let m = 8 + (trial % 10) as usize;
    let n = 8 + (trial % 7) as usize;
    let k = 1 + (trial % 4) as usize;
    let a = gaussian_matrix(m, n, &mut rng).unwrap();
    let g = gaussian_matrix(m, k, &mut rng).unwrap();
    // Random rank-k projection with column span inside rowspan(A).
    let w = orthonormalize(&a.matmul_tn(&g)).unwrap().q;
    let sigma_a = svd(&a).unwrap().singular_values;
    let sigma_r = residual_spectrum(&a, &w).unwrap();
    let kk = w.cols();
    for (i, s) in sigma_r.iter().enumerate() {
        if i + kk >= sigma_a.len() {
            break;
        }
        out.cases += 1;
        if *s < sigma_a[i + kk] - 1e-9 * sigma_a[0] {
            out.violations += 1;
        }
        out.checksum = mix(out.checksum, *s);
    }
    out
}

/// The exact truncation is never beaten: ratios are at least `1 - 1e-9`.
fn eym_floor_suite(trial: u64) -> SuiteOutcome {
    let mut out = SuiteOutcome { cases: 0, violations: 0, checksum: 0 };
    let mut rng = SeededRng::new(61_000 + trial);
    let n = 10 + (trial % 8) as usize;
    let a = planted_matrix(&SpectrumSpec {
        kind: SpectrumKind::PowerLaw { exponent: 0.6 },
        n,
        rotation_seed: Some(61_500 + trial),
    })
    .unwrap();
    let k = 1 + (trial % 4) as usize;
    let w = haar_orthonormal(n, k, &mut rng).unwrap();
    let exact = svd(&a).unwrap().right_vectors(k);
    for p in [1.0, 2.0, 3.0] {
        for cand in [&w, &exact] {
            let r = match approximation_ratio(&a, cand, p).unwrap() {
                ApproxRatio::Ratio(r) => r,
                ApproxRatio::AbsoluteError(_) => continue,
            };
            out.cases += 1;
            if r < 1.0 - 1e-9 {
                out.violations += 1;
            }
            out.checksum = mix(out.checksum, r);
        }
    }
    out
}

/// Orthonormalization is idempotent on spans.
fn idempotence_suite(trial: u64) -> SuiteOutcome {
    let mut out = SuiteOutcome { cases: 0, violations: 0, checksum: 0 };
    let mut rng = SeededRng::new(67_000 + trial);
    let m = 12 + (trial % 10) as usize;
    let k = 1 + (trial % 5) as usize;
    let g = gaussian_matrix(m, k, &mut rng).unwrap();
    let q1 = orthonormalize(&g).unwrap().q;
    let q2 = orthonormalize(&q1).unwrap().q;
    let overlap = svd(&q1.matmul_tn(&q2)).unwrap().singular_values;
    for c in overlap {
        out.cases += 1;
        // cos(angle) = 1 up to 1e-10 means angle <= ~1.5e-5; demand much
        // tighter since q2 should reproduce q1's span exactly.
        if (c - 1.0).abs() > 1e-12 {
            out.violations += 1;
        }
        out.checksum = mix(out.checksum, c);
    }
    out
}

pub fn run_all(parallel: bool) -> Vec<(&'static str, SuiteOutcome)> {
    type Suite = (&'static str, fn(u64) -> SuiteOutcome, u64);
    let suites: Vec<Suite> = vec![
        ("pinching", pinching_suite, 200),
        ("two_to_p", two_to_p_suite, 100),
        ("norm_axioms", norm_axioms_suite, 60),
        ("weyl", weyl_suite, 100),
        ("eym_floor", eym_floor_suite, 40),
        ("idempotence", idempotence_suite, 50),
    ];
    suites
        .into_iter()
        .map(|(name, f, trials)| {
            let fold = |acc: SuiteOutcome, o: SuiteOutcome| SuiteOutcome {
                cases: acc.cases + o.cases,
                violations: acc.violations + o.violations,
                checksum: acc.checksum ^ o.checksum,
            };
            let zero = SuiteOutcome { cases: 0, violations: 0, checksum: 0 };
            let total = if parallel {
                (0..trials)
                    .into_par_iter()
                    .map(f)
                    .reduce(|| zero, fold)
            } else {
                (0..trials).map(f).fold(zero, fold)
            };
            (name, total)
        })
        .collect()
}

