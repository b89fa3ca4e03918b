//! Lanczos iteration with full reorthogonalization, plus the power-weighted
//! vector assembly used by approximate PCA.

use crate::error::{Error, Result};
use crate::fp::Fp;
use crate::mat::DenseMatrix;
use crate::svd::sym_eigen_desc;

pub(crate) struct LanczosRun {
    /// Orthonormal Lanczos vectors.
    pub basis: Vec<Vec<f64>>,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub breakdown: bool,
    pub matvecs: usize,
}

impl LanczosRun {
    /// Eigendecomposition of the tridiagonal projection, nonincreasing.
    pub fn ritz(&self) -> (Vec<f64>, DenseMatrix) {
        let j = self.alphas.len();
        let mut t = DenseMatrix::zeros(j, j);
        for (i, &a) in self.alphas.iter().enumerate() {
            t.set(i, i, a);
        }
        for (i, &b) in self.betas.iter().enumerate() {
            t.set(i, i + 1, b);
            t.set(i + 1, i, b);
        }
        sym_eigen_desc(&t)
    }

    pub fn top_ritz_value(&self) -> f64 {
        self.ritz().0.first().copied().unwrap_or(0.0)
    }
}

/// Runs `steps` Lanczos iterations of a symmetric operator from `start`,
/// re-orthogonalizing each new vector against the whole basis (two passes).
/// Stops early on breakdown (an invariant subspace was found).
pub(crate) fn lanczos(
    matvec: &mut dyn FnMut(&[f64]) -> Result<Vec<f64>>,
    start: &[f64],
    steps: usize,
    fp: Fp,
) -> Result<LanczosRun> {
    let d = start.len();
    let steps = steps.clamp(1, d);
    let mut run = LanczosRun {
        basis: Vec::with_capacity(steps),
        alphas: Vec::with_capacity(steps),
        betas: Vec::with_capacity(steps.saturating_sub(1)),
        breakdown: false,
        matvecs: 0,
    };
    let nrm = fp.norm2(start);
    if nrm == 0.0 || !nrm.is_finite() {
        return Err(Error::NumericFailure("lanczos start vector is degenerate".into()));
    }
    let mut v: Vec<f64> = start.to_vec();
    fp.scale(1.0 / nrm, &mut v);
    run.basis.push(v);

    for j in 0..steps {
        let vj = run.basis[j].clone();
        let mut w = matvec(&vj)?;
        run.matvecs += 1;
        if !w.iter().all(|x| x.is_finite()) {
            return Err(Error::NumericFailure("operator returned non-finite vector".into()));
        }
        let alpha = fp.dot(&w, &vj);
        run.alphas.push(alpha);
        fp.axpy(-alpha, &vj, &mut w);
        if j > 0 {
            let beta_prev = run.betas[j - 1];
            fp.axpy(-beta_prev, &run.basis[j - 1], &mut w);
        }
        for _pass in 0..2 {
            for vi in &run.basis {
                let c = fp.dot(vi, &w);
                fp.axpy(-c, vi, &mut w);
            }
        }
        if j + 1 == steps {
            break;
        }
        let beta = fp.norm2(&w);
        let scale = run.alphas.iter().fold(0.0f64, |m, a| m.max(a.abs())).max(1e-300);
        if !beta.is_finite() {
            return Err(Error::NumericFailure("lanczos residual overflowed".into()));
        }
        if beta <= 1e-13 * scale {
            run.breakdown = true;
            break;
        }
        fp.scale(1.0 / beta, &mut w);
        run.betas.push(beta);
        run.basis.push(w);
    }
    Ok(run)
}

/// Assembles `Q f(T) e_1` for `f(x) = x^q_power`, normalized to unit length.
/// Ritz values are clamped at zero (the operator is assumed PSD) and the
/// weights are normalized by the top value so large powers cannot overflow.
/// The small eigenproblem and weight arithmetic run at working precision; the
/// final `d`-dimensional combination runs under `fp`.
pub(crate) fn power_weighted_vector(run: &LanczosRun, q_power: u32, fp: Fp) -> Vec<f64> {
    let (theta, s) = run.ritz();
    let d = run.basis[0].len();
    let j = theta.len();
    let top = theta[0].max(0.0);
    if top <= 0.0 {
        // No positive curvature found; the normalized start vector is as
        // good as anything.
        return run.basis[0].clone();
    }
    // c = S diag((theta/top)^q) S^T e_1.
    let mut c = vec![0.0; j];
    for i in 0..j {
        let w = (theta[i].max(0.0) / top).powi(q_power as i32);
        let s_first = s.get(0, i);
        for (r, ci) in c.iter_mut().enumerate() {
            *ci += s.get(r, i) * w * s_first;
        }
    }
    let mut y = vec![0.0; d];
    for (ci, vi) in c.iter().zip(&run.basis) {
        fp.axpy(*ci, vi, &mut y);
    }
    let nrm = fp.norm2(&y);
    if nrm > 0.0 && nrm.is_finite() {
        fp.scale(1.0 / nrm, &mut y);
    } else {
        y = run.basis[0].clone();
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::dot;
    use crate::rng::SeededRng;

    fn diag_op(diag: Vec<f64>) -> impl FnMut(&[f64]) -> Result<Vec<f64>> {
        move |x: &[f64]| Ok(x.iter().zip(&diag).map(|(xi, di)| xi * di).collect())
    }

    #[test]
    fn recovers_diagonal_eigenvalues() {
        let d = vec![5.0, 3.0, 2.0, 1.0, 0.5, 0.25];
        let mut op = diag_op(d.clone());
        let mut rng = SeededRng::new(1);
        let start = rng.normal_vec(6);
        let run = lanczos(&mut op, &start, 6, Fp::native()).unwrap();
        let (theta, _) = run.ritz();
        for (t, e) in theta.iter().zip(&d) {
            assert!((t - e).abs() < 1e-10, "ritz {t} vs {e}");
        }
        // Basis stays orthonormal under full reorthogonalization.
        for i in 0..run.basis.len() {
            for j in 0..i {
                assert!(dot(&run.basis[i], &run.basis[j]).abs() < 1e-12);
            }
            assert!((dot(&run.basis[i], &run.basis[i]) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn breakdown_on_invariant_subspace() {
        // Start vector inside a 2-dimensional invariant subspace.
        let mut op = diag_op(vec![4.0, 2.0, 1.0, 1.0]);
        let start = vec![1.0, 1.0, 0.0, 0.0];
        let run = lanczos(&mut op, &start, 4, Fp::native()).unwrap();
        assert!(run.breakdown);
        assert_eq!(run.alphas.len(), 2);
        let (theta, _) = run.ritz();
        assert!((theta[0] - 4.0).abs() < 1e-12);
        assert!((theta[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn power_weighting_converges_to_top_eigenvector() {
        let mut op = diag_op(vec![2.0, 1.9, 0.5, 0.1]);
        let mut rng = SeededRng::new(3);
        let start = rng.normal_vec(4);
        let run = lanczos(&mut op, &start, 4, Fp::native()).unwrap();
        let w = power_weighted_vector(&run, 200, Fp::native());
        assert!((dot(&w, &w) - 1.0).abs() < 1e-12);
        assert!(w[0].abs() > 1.0 - 1e-8, "top component {}", w[0]);
    }

    #[test]
    fn zero_operator_returns_unit_vector() {
        let mut op = diag_op(vec![0.0, 0.0, 0.0]);
        let start = vec![1.0, 2.0, 2.0];
        let run = lanczos(&mut op, &start, 3, Fp::native()).unwrap();
        let w = power_weighted_vector(&run, 7, Fp::native());
        assert!((dot(&w, &w) - 1.0).abs() < 1e-12);
    }
}
