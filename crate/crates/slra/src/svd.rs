//! Exact dense SVD and symmetric eigendecomposition for small matrices.
//!
//! The primary path is nalgebra's bidiagonalization-based SVD; if it fails to
//! converge (rare, degenerate inputs) a one-sided Jacobi fallback finishes the
//! job. Results are always returned with singular values sorted in
//! nonincreasing order and factors mapped back to row-major storage.

use crate::error::{Error, Result};
use crate::mat::{dot, norm2, DenseMatrix};
use crate::ops;
use nalgebra as na;

/// Thin SVD `A = U diag(sigma) Vt` with `r = min(rows, cols)`.
#[derive(Debug, Clone)]
pub struct SvdResult {
    /// `rows x r`, orthonormal columns.
    pub u: DenseMatrix,
    /// Nonincreasing, nonnegative, length `r`.
    pub singular_values: Vec<f64>,
    /// `r x cols`, orthonormal rows.
    pub vt: DenseMatrix,
}

impl SvdResult {
    /// `|| U diag(sigma) Vt - A ||_F`.
    pub fn reconstruction_error(&self, a: &DenseMatrix) -> f64 {
        let mut scaled = self.u.clone();
        for i in 0..scaled.rows() {
            let row = scaled.row_mut(i);
            for (j, &s) in self.singular_values.iter().enumerate() {
                row[j] *= s;
            }
        }
        scaled.matmul(&self.vt).sub(a).frobenius_norm()
    }

    /// Best rank-`k` approximation assembled from the factors.
    pub fn truncate(&self, k: usize) -> DenseMatrix {
        assert!(k >= 1 && k <= self.singular_values.len());
        let uk = self.u.columns(0, k);
        let mut scaled = uk.clone();
        for i in 0..scaled.rows() {
            let row = scaled.row_mut(i);
            for (j, s) in self.singular_values[..k].iter().enumerate() {
                row[j] *= s;
            }
        }
        let vtk = {
            let mut data = Vec::with_capacity(k * self.vt.cols());
            for i in 0..k {
                data.extend_from_slice(self.vt.row(i));
            }
            DenseMatrix::from_raw(k, self.vt.cols(), data)
        };
        scaled.matmul(&vtk)
    }

    /// Top-`k` right singular vectors as columns (`cols x k`).
    pub fn right_vectors(&self, k: usize) -> DenseMatrix {
        assert!(k >= 1 && k <= self.vt.rows());
        self.vt.transpose().columns(0, k)
    }

    /// Top-`k` left singular vectors as columns (`rows x k`).
    pub fn left_vectors(&self, k: usize) -> DenseMatrix {
        assert!(k >= 1 && k <= self.u.cols());
        self.u.columns(0, k)
    }
}

/// Thin SVD of `m`. Errors on non-finite input.
pub fn svd(m: &DenseMatrix) -> Result<SvdResult> {
    if !m.is_finite() {
        return Err(Error::invalid("svd input has non-finite entries"));
    }
    ops::record_svd();
    let dm = na::DMatrix::from_row_slice(m.rows(), m.cols(), m.data());
    if let Some(f) = dm.try_svd(true, true, f64::EPSILON, 100_000) {
        let u = f.u.expect("svd requested u");
        let vt = f.v_t.expect("svd requested v_t");
        let mut result = SvdResult {
            u: from_na(&u),
            singular_values: f.singular_values.iter().copied().collect(),
            vt: from_na(&vt),
        };
        sort_desc(&mut result);
        return Ok(result);
    }
    // nalgebra gave up; one-sided Jacobi always converges.
    Ok(jacobi_svd(m))
}

fn from_na(m: &na::DMatrix<f64>) -> DenseMatrix {
    DenseMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn sort_desc(r: &mut SvdResult) {
    let n = r.singular_values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| r.singular_values[b].partial_cmp(&r.singular_values[a]).unwrap());
    if order.iter().enumerate().all(|(i, &o)| i == o) {
        return;
    }
    let sigma: Vec<f64> = order.iter().map(|&o| r.singular_values[o]).collect();
    let u = DenseMatrix::from_fn(r.u.rows(), n, |i, j| r.u.get(i, order[j]));
    let vt = DenseMatrix::from_fn(n, r.vt.cols(), |i, j| r.vt.get(order[i], j));
    r.singular_values = sigma;
    r.u = u;
    r.vt = vt;
}

/// One-sided Jacobi SVD. Slow but robust; only used as a fallback.
fn jacobi_svd(m: &DenseMatrix) -> SvdResult {
    if m.rows() < m.cols() {
        // Factor the transpose and swap the roles of U and V.
        let t = jacobi_svd(&m.transpose());
        return SvdResult {
            u: t.vt.transpose(),
            singular_values: t.singular_values,
            vt: t.u.transpose(),
        };
    }
    let (rows, cols) = (m.rows(), m.cols());
    let mut w: Vec<Vec<f64>> = (0..cols).map(|j| m.column(j)).collect();
    let mut v = DenseMatrix::identity(cols);
    let tol = 1e-15;
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let alpha = dot(&w[p], &w[p]);
                let beta = dot(&w[q], &w[q]);
                let gamma = dot(&w[p], &w[q]);
                if gamma.abs() <= tol * (alpha * beta).sqrt() || alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..rows {
                    let wp = w[p][i];
                    let wq = w[q][i];
                    w[p][i] = c * wp - s * wq;
                    w[q][i] = s * wp + c * wq;
                }
                for i in 0..cols {
                    let vp = v.get(i, p);
                    let vq = v.get(i, q);
                    v.set(i, p, c * vp - s * vq);
                    v.set(i, q, s * vp + c * vq);
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..cols).collect();
    let norms: Vec<f64> = w.iter().map(|c| norm2(c)).collect();
    order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).unwrap());

    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(cols);
    let mut sigma = Vec::with_capacity(cols);
    for &j in &order {
        sigma.push(norms[j]);
        if norms[j] > 0.0 {
            u_cols.push(w[j].iter().map(|x| x / norms[j]).collect());
        } else {
            u_cols.push(vec![0.0; rows]);
        }
    }
    complete_zero_columns(&mut u_cols, &sigma);

    let u = DenseMatrix::from_fn(rows, cols, |i, j| u_cols[j][i]);
    let vt = DenseMatrix::from_fn(cols, cols, |i, j| v.get(j, order[i]));
    SvdResult { u, singular_values: sigma, vt }
}

/// Replaces U columns belonging to zero singular values by unit vectors
/// orthogonal to the rest of the basis.
fn complete_zero_columns(u_cols: &mut [Vec<f64>], sigma: &[f64]) {
    let rows = u_cols[0].len();
    for j in 0..u_cols.len() {
        if sigma[j] > 0.0 {
            continue;
        }
        let mut best: Option<Vec<f64>> = None;
        let mut best_norm = 0.0;
        for cand in 0..rows {
            let mut e = vec![0.0; rows];
            e[cand] = 1.0;
            for (l, col) in u_cols.iter().enumerate() {
                if l == j {
                    continue;
                }
                let c = dot(col, &e);
                for (ei, &ci) in e.iter_mut().zip(col) {
                    *ei -= c * ci;
                }
            }
            let n = norm2(&e);
            if n > best_norm {
                best_norm = n;
                best = Some(e);
            }
            if n > 0.5 {
                break;
            }
        }
        let mut e = best.expect("ambient dimension exhausted");
        let n = norm2(&e);
        for x in e.iter_mut() {
            *x /= n;
        }
        u_cols[j] = e;
    }
}

/// Eigendecomposition of a symmetric matrix, eigenvalues nonincreasing,
/// eigenvectors as the columns of the returned matrix.
pub(crate) fn sym_eigen_desc(t: &DenseMatrix) -> (Vec<f64>, DenseMatrix) {
    assert_eq!(t.rows(), t.cols());
    let dm = na::DMatrix::from_row_slice(t.rows(), t.cols(), t.data());
    let eig = na::SymmetricEigen::new(dm);
    let n = t.rows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let values: Vec<f64> = order.iter().map(|&o| eig.eigenvalues[o]).collect();
    let vectors = DenseMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{gaussian_matrix, SeededRng};

    fn check_contract(a: &DenseMatrix, f: &SvdResult) {
        let r = a.rows().min(a.cols());
        assert_eq!(f.singular_values.len(), r);
        assert!(f.singular_values.windows(2).all(|w| w[0] >= w[1]));
        assert!(f.singular_values.iter().all(|&s| s >= 0.0));
        assert!(f.u.orthonormality_defect() <= 1e-10 * r as f64);
        assert!(f.vt.transpose().orthonormality_defect() <= 1e-10 * r as f64);
        assert!(f.reconstruction_error(a) <= 1e-8 * a.frobenius_norm().max(1e-300));
    }

    #[test]
    fn diagonal_spectrum() {
        let a = DenseMatrix::diag(&[3.0, 2.0, 1.0]);
        let f = svd(&a).unwrap();
        check_contract(&a, &f);
        for (s, e) in f.singular_values.iter().zip([3.0, 2.0, 1.0]) {
            assert!((s - e).abs() < 1e-12);
        }
    }

    #[test]
    fn permutation_matrix_has_unit_spectrum() {
        let a = DenseMatrix::new(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let f = svd(&a).unwrap();
        check_contract(&a, &f);
        assert!((f.singular_values[0] - 1.0).abs() < 1e-12);
        assert!((f.singular_values[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_rectangular_reconstructs() {
        let a = gaussian_matrix(40, 30, &mut SeededRng::new(11)).unwrap();
        let f = svd(&a).unwrap();
        check_contract(&a, &f);
        let a2 = gaussian_matrix(25, 60, &mut SeededRng::new(12)).unwrap();
        let f2 = svd(&a2).unwrap();
        check_contract(&a2, &f2);
    }

    #[test]
    fn rejects_non_finite() {
        let mut a = DenseMatrix::identity(2);
        a.set(0, 1, f64::NAN);
        assert!(svd(&a).is_err());
    }

    #[test]
    fn jacobi_fallback_agrees_with_primary() {
        let a = gaussian_matrix(12, 8, &mut SeededRng::new(4)).unwrap();
        let f = svd(&a).unwrap();
        let j = jacobi_svd(&a);
        check_contract(&a, &j);
        for (x, y) in f.singular_values.iter().zip(&j.singular_values) {
            assert!((x - y).abs() <= 1e-10 * f.singular_values[0]);
        }
        // Rank-deficient and wide inputs exercise the completion path.
        let low = a.columns(0, 3).matmul(&gaussian_matrix(3, 8, &mut SeededRng::new(5)).unwrap());
        let jl = jacobi_svd(&low);
        check_contract(&low, &jl);
        let wide = jacobi_svd(&a.transpose());
        check_contract(&a.transpose(), &wide);
    }

    #[test]
    fn truncate_is_best_rank_k() {
        let a = DenseMatrix::diag(&[5.0, 3.0, 1.0]);
        let f = svd(&a).unwrap();
        let a1 = f.truncate(1);
        let err = a1.sub(&a).frobenius_norm();
        assert!((err - (9.0f64 + 1.0).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn sym_eigen_sorted() {
        let t = DenseMatrix::new(2, 2, vec![2.0, 1.0, 1.0, 2.0]).unwrap();
        let (vals, vecs) = sym_eigen_desc(&t);
        assert!((vals[0] - 3.0).abs() < 1e-12);
        assert!((vals[1] - 1.0).abs() < 1e-12);
        assert!(vecs.orthonormality_defect() < 1e-12);
    }
}
