//! Evaluation harness: planted test matrices with known spectra, exact
//! approximation ratios against the SVD optimum, and principal angles between
//! subspaces.

use crate::error::{Error, Result};
use crate::mat::DenseMatrix;
use crate::norms::schatten_of_values;
use crate::qr::orthonormalize;
use crate::rng::{gaussian_matrix, SeededRng};
use crate::svd::svd;

/// Spectrum families used by the test matrices.
#[derive(Debug, Clone)]
pub enum SpectrumKind {
    /// All singular values equal to 1.
    Flat,
    /// `sigma_i = i^(-exponent)`.
    PowerLaw { exponent: f64 },
    /// Explicit head values followed by a constant tail.
    Gapped { head: Vec<f64>, tail: f64 },
    /// Fully explicit nonincreasing spectrum (its length fixes `n`).
    Explicit(Vec<f64>),
}

/// Description of a planted `n x n` matrix `U diag(sigma) V^T`.
#[derive(Debug, Clone)]
pub struct SpectrumSpec {
    pub kind: SpectrumKind,
    pub n: usize,
    /// Seed for the Haar-like rotations; `None` leaves `U = V = I`.
    pub rotation_seed: Option<u64>,
}

impl SpectrumSpec {
    /// The singular values this spec generates.
    pub fn values(&self) -> Result<Vec<f64>> {
        let sigma: Vec<f64> = match &self.kind {
            SpectrumKind::Flat => vec![1.0; self.n],
            SpectrumKind::PowerLaw { exponent } => {
                (1..=self.n).map(|i| (i as f64).powf(-exponent)).collect()
            }
            SpectrumKind::Gapped { head, tail } => {
                if head.len() > self.n {
                    return Err(Error::invalid("gapped head longer than n"));
                }
                let mut v = head.clone();
                v.resize(self.n, *tail);
                v
            }
            SpectrumKind::Explicit(values) => values.clone(),
        };
        if sigma.len() != self.n {
            return Err(Error::invalid(format!(
                "spectrum length {} does not match n = {}",
                sigma.len(),
                self.n
            )));
        }
        if sigma.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::invalid("spectrum values must be positive and finite"));
        }
        if sigma.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::invalid("spectrum must be nonincreasing"));
        }
        Ok(sigma)
    }
}

/// Orthonormal `n x k` factor from the QR of a seeded Gaussian.
pub fn haar_orthonormal(n: usize, k: usize, rng: &mut SeededRng) -> Result<DenseMatrix> {
    let g = gaussian_matrix(n, k, rng)?;
    Ok(orthonormalize(&g)?.q)
}

/// `A = U diag(sigma) V^T` with rotations from `spec.rotation_seed`.
pub fn planted_matrix(spec: &SpectrumSpec) -> Result<DenseMatrix> {
    let sigma = spec.values()?;
    planted_from_values(spec.n, spec.n, &sigma, spec.rotation_seed)
}

/// Rectangular planted matrix with the given nonincreasing spectrum on its
/// top `min(rows, cols)` singular values.
pub fn planted_rectangular(
    rows: usize,
    cols: usize,
    sigma: &[f64],
    rotation_seed: Option<u64>,
) -> Result<DenseMatrix> {
    if sigma.len() > rows.min(cols) {
        return Err(Error::invalid("more singular values than min dimension"));
    }
    planted_from_values(rows, cols, sigma, rotation_seed)
}

fn planted_from_values(
    rows: usize,
    cols: usize,
    sigma: &[f64],
    rotation_seed: Option<u64>,
) -> Result<DenseMatrix> {
    let r = sigma.len();
    match rotation_seed {
        None => Ok(DenseMatrix::diag_rect(rows, cols, sigma)),
        Some(seed) => {
            let mut rng_u = SeededRng::new(seed).derive(1);
            let mut rng_v = SeededRng::new(seed).derive(2);
            let u = haar_orthonormal(rows, r, &mut rng_u)?;
            let v = haar_orthonormal(cols, r, &mut rng_v)?;
            let mut us = u;
            for i in 0..us.rows() {
                let row = us.row_mut(i);
                for (j, &s) in sigma.iter().enumerate() {
                    row[j] *= s;
                }
            }
            Ok(us.matmul_nt(&v))
        }
    }
}

/// Standard conditioning test matrix: `k` head singular values spread from
/// `kappa` down to `0.6 kappa`, a unit tail, Haar-like rotations. Its
/// condition number `sigma_1 / sigma_(k+1)` equals `kappa`.
pub fn stability_test_matrix(n: usize, k: usize, kappa: f64, seed: u64) -> Result<DenseMatrix> {
    if k == 0 || k >= n {
        return Err(Error::invalid(format!("need 1 <= k < n, got k = {k}, n = {n}")));
    }
    if !(kappa >= 1.0) {
        return Err(Error::invalid(format!("kappa must be at least 1, got {kappa}")));
    }
    let head: Vec<f64> = (0..k)
        .map(|i| kappa * (1.0 - 0.4 * i as f64 / k.max(1) as f64))
        .collect();
    planted_matrix(&SpectrumSpec {
        kind: SpectrumKind::Gapped { head, tail: 1.0 },
        n,
        rotation_seed: Some(seed),
    })
}

/// Ratio outcome: a plain ratio against the optimum, or a flagged absolute
/// residual when the optimum is numerically zero (exact rank-k input).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ApproxRatio {
    Ratio(f64),
    AbsoluteError(f64),
}

impl ApproxRatio {
    pub fn ratio(&self) -> Option<f64> {
        match self {
            ApproxRatio::Ratio(r) => Some(*r),
            ApproxRatio::AbsoluteError(_) => None,
        }
    }

    /// The ratio when defined, `1.0` for the flagged exact case (the residual
    /// is then asserted separately).
    pub fn ratio_or_one(&self) -> f64 {
        match self {
            ApproxRatio::Ratio(r) => *r,
            ApproxRatio::AbsoluteError(_) => 1.0,
        }
    }
}

/// `||A (I - W W^T)||_p / ||A - A_k||_p` with the denominator from the exact
/// SVD, `k = cols(W)`.
///
/// `W` must have orthonormal columns (`||W^T W - I||_F <= 1e-6`). When the
/// optimum is at most `1e-12 ||A||_F` the result switches to
/// [`ApproxRatio::AbsoluteError`] carrying the numerator.
pub fn approximation_ratio(a: &DenseMatrix, w: &DenseMatrix, p: f64) -> Result<ApproxRatio> {
    approximation_ratio_with_spectrum(a, &svd(a)?.singular_values, w, p)
}

/// Same ratio with the spectrum of `a` already computed (batch evaluation
/// against one oracle decomposition).
pub fn approximation_ratio_with_spectrum(
    a: &DenseMatrix,
    sigma_a: &[f64],
    w: &DenseMatrix,
    p: f64,
) -> Result<ApproxRatio> {
    if w.rows() != a.cols() {
        return Err(Error::invalid(format!(
            "factor has {} rows but the matrix has {} columns",
            w.rows(),
            a.cols()
        )));
    }
    let defect = w.orthonormality_defect();
    if defect > 1e-6 {
        return Err(Error::invalid(format!(
            "factor is not orthonormal: defect {defect:.3e}"
        )));
    }
    let k = w.cols();
    if k >= sigma_a.len() {
        // Residual spectrum is empty; the optimum is exactly zero.
        let resid = residual_norm(a, w, p)?;
        return Ok(ApproxRatio::AbsoluteError(resid));
    }
    let opt = schatten_of_values(&sigma_a[k..], p)?;
    if opt <= 1e-12 * a.frobenius_norm() {
        let resid = residual_norm(a, w, p)?;
        return Ok(ApproxRatio::AbsoluteError(resid));
    }
    Ok(ApproxRatio::Ratio(residual_norm(a, w, p)? / opt))
}

/// `||A (I - W W^T)||_p` for an orthonormal factor `W`.
pub fn residual_norm(a: &DenseMatrix, w: &DenseMatrix, p: f64) -> Result<f64> {
    let resid = residual_matrix(a, w);
    crate::norms::schatten_norm(&resid, p)
}

/// Singular values of `A (I - W W^T)`, for evaluating many norms against one
/// decomposition.
pub fn residual_spectrum(a: &DenseMatrix, w: &DenseMatrix) -> Result<Vec<f64>> {
    Ok(svd(&residual_matrix(a, w))?.singular_values)
}

/// `A - (A W) W^T`.
pub fn residual_matrix(a: &DenseMatrix, w: &DenseMatrix) -> DenseMatrix {
    let aw = a.matmul(w);
    a.sub(&aw.matmul_nt(w))
}

/// Principal angles (radians, nondecreasing) between the column spans of two
/// orthonormal factors of the same ambient dimension.
pub fn principal_angles(w1: &DenseMatrix, w2: &DenseMatrix) -> Result<Vec<f64>> {
    if w1.rows() != w2.rows() {
        return Err(Error::invalid("ambient dimensions differ"));
    }
    for (name, w) in [("first", w1), ("second", w2)] {
        if w.orthonormality_defect() > 1e-6 {
            return Err(Error::invalid(format!("{name} factor is not orthonormal")));
        }
    }
    let overlap = w1.matmul_tn(w2);
    let cosines = svd(&overlap)?.singular_values;
    Ok(cosines.iter().map(|c| c.clamp(-1.0, 1.0).acos()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn explicit_identity_rotation_is_diagonal() {
        let spec = SpectrumSpec {
            kind: SpectrumKind::Explicit(vec![3.0, 2.0, 1.0]),
            n: 3,
            rotation_seed: None,
        };
        let a = planted_matrix(&spec).unwrap();
        assert_eq!(a.data(), DenseMatrix::diag(&[3.0, 2.0, 1.0]).data());
    }

    #[test]
    fn gapped_spectrum_recovered_by_svd() {
        let spec = SpectrumSpec {
            kind: SpectrumKind::Gapped { head: vec![100.0], tail: 1.0 },
            n: 64,
            rotation_seed: Some(9),
        };
        let a = planted_matrix(&spec).unwrap();
        let sigma = svd(&a).unwrap().singular_values;
        assert!((sigma[0] - 100.0).abs() <= 1e-9 * 100.0);
        for s in &sigma[1..] {
            assert!((s - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn flat_spectrum_is_flat() {
        let spec = SpectrumSpec { kind: SpectrumKind::Flat, n: 32, rotation_seed: Some(3) };
        let a = planted_matrix(&spec).unwrap();
        let sigma = svd(&a).unwrap().singular_values;
        for s in sigma {
            assert!((s - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn nonpositive_spectrum_rejected() {
        let spec = SpectrumSpec {
            kind: SpectrumKind::Explicit(vec![1.0, 0.0]),
            n: 2,
            rotation_seed: None,
        };
        assert!(planted_matrix(&spec).is_err());
    }

    #[test]
    fn ratio_of_exact_optimum_is_one() {
        let spec = SpectrumSpec {
            kind: SpectrumKind::PowerLaw { exponent: 1.0 },
            n: 24,
            rotation_seed: Some(4),
        };
        let a = planted_matrix(&spec).unwrap();
        let w = svd(&a).unwrap().right_vectors(3);
        for p in [1.0, 2.0, 4.0, f64::INFINITY] {
            let r = approximation_ratio(&a, &w, p).unwrap().ratio().unwrap();
            assert!((r - 1.0).abs() <= 1e-9, "p={p}: ratio {r}");
        }
    }

    #[test]
    fn bad_factor_ratio_exceeds_one() {
        let a = DenseMatrix::diag(&[3.0, 2.0, 1.0, 0.1]);
        let f = svd(&a).unwrap();
        // Bottom singular vector as a rank-1 factor.
        let w = f.vt.transpose().columns(3, 4);
        let r = approximation_ratio(&a, &w, 2.0).unwrap().ratio().unwrap();
        assert!(r > 1.0);
        let expect = (9.0f64 + 4.0 + 1.0).sqrt() / (4.0f64 + 1.0 + 0.01).sqrt();
        assert!((r - expect).abs() < 1e-10);
    }

    #[test]
    fn exact_low_rank_flags_absolute_error() {
        let mut rng = SeededRng::new(17);
        let u = haar_orthonormal(20, 2, &mut rng).unwrap();
        let v = haar_orthonormal(15, 2, &mut rng).unwrap();
        let mut us = u.clone();
        for i in 0..us.rows() {
            us.row_mut(i)[0] *= 5.0;
            us.row_mut(i)[1] *= 2.0;
        }
        let a = us.matmul_nt(&v);
        let w = svd(&a).unwrap().right_vectors(2);
        match approximation_ratio(&a, &w, 3.0).unwrap() {
            ApproxRatio::AbsoluteError(e) => assert!(e <= 1e-8 * a.frobenius_norm()),
            other => panic!("expected absolute-error flag, got {other:?}"),
        }
    }

    #[test]
    fn non_orthonormal_factor_rejected() {
        let a = DenseMatrix::identity(3);
        let w = DenseMatrix::new(3, 1, vec![1.0, 1.0, 0.0]).unwrap();
        assert!(approximation_ratio(&a, &w, 2.0).is_err());
    }

    #[test]
    fn principal_angle_extremes() {
        let mut w1 = DenseMatrix::zeros(4, 2);
        w1.set(0, 0, 1.0);
        w1.set(1, 1, 1.0);
        let angles = principal_angles(&w1, &w1).unwrap();
        assert!(angles.iter().all(|a| a.abs() <= 1e-8));

        let mut w2 = DenseMatrix::zeros(4, 2);
        w2.set(2, 0, 1.0);
        w2.set(3, 1, 1.0);
        let angles = principal_angles(&w1, &w2).unwrap();
        for a in angles {
            assert!((a - std::f64::consts::FRAC_PI_2).abs() <= 1e-12);
        }
    }

    #[test]
    fn principal_angles_match_overlap_svd() {
        let mut rng = SeededRng::new(23);
        let w1 = haar_orthonormal(12, 3, &mut rng).unwrap();
        let w2 = haar_orthonormal(12, 3, &mut rng).unwrap();
        let angles = principal_angles(&w1, &w2).unwrap();
        let cosines = svd(&w1.matmul_tn(&w2)).unwrap().singular_values;
        for (a, c) in angles.iter().zip(cosines) {
            assert!((a.cos() - c).abs() <= 1e-12);
        }
        assert!(angles.windows(2).all(|w| w[0] <= w[1] + 1e-15));
    }
}
