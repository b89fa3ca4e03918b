//! Block Krylov iteration.
//!
//! From a Gaussian start block `Pi`, the iteration spans
//! `[A Pi, (A A^T) A Pi, ..., (A A^T)^q A Pi]`, orthonormalizes it into a
//! basis `Q`, projects the Gram operator to `M = Q^T A A^T Q` and returns the
//! top Ritz vectors `Z = Q U_k` together with the Ritz estimates
//! `sigma_hat_i = sqrt(lambda_i(M))` of the leading singular values.
//!
//! Blocks are re-orthogonalized against the whole accumulated basis with two
//! Gram-Schmidt passes per iteration; exact arithmetic needs none of that,
//! `f64` does. When the requested basis would span the whole space
//! (`(q+1) b > min(m, n)`), or the basis collapses early below the requested
//! rank, the routine switches to the exact SVD and flags the result as
//! saturated.

use crate::error::{Error, Result};
use crate::mat::{norm2, DenseMatrix};
use crate::qr::orthonormalize;
use crate::rng::{gaussian_matrix, SeededRng};
use crate::svd::svd;

#[derive(Debug, Clone, Copy)]
pub struct KrylovConfig {
    /// Number of Ritz vectors returned in `Z`.
    pub rank_k: usize,
    /// Start-block width; must be at least `rank_k`.
    pub block_size_b: usize,
    /// Number of `(A A^T)` applications.
    pub iterations_q: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct KrylovResult {
    /// `m x rank_k`, orthonormal columns.
    pub z: DenseMatrix,
    /// Projected Gram matrix `Q^T A A^T Q` (diagonal in the saturated case).
    pub gram_m: DenseMatrix,
    /// Ritz estimates of the singular values, nonincreasing, one per basis
    /// column.
    pub sigma_estimates: Vec<f64>,
    /// True when the result came from the exact-SVD path because the Krylov
    /// basis would have spanned the whole space.
    pub saturated: bool,
    /// Number of orthonormal basis columns behind the estimates.
    pub basis_size: usize,
}

/// Runs the block Krylov iteration on `a` (any `m x n` shape).
pub fn block_krylov(a: &DenseMatrix, cfg: &KrylovConfig) -> Result<KrylovResult> {
    let (m, n) = (a.rows(), a.cols());
    let min_dim = m.min(n);
    if cfg.rank_k == 0 {
        return Err(Error::invalid("rank must be at least 1"));
    }
    if cfg.rank_k > min_dim {
        return Err(Error::invalid(format!(
            "rank {} exceeds min dimension {min_dim}",
            cfg.rank_k
        )));
    }
    if cfg.block_size_b < cfg.rank_k {
        return Err(Error::invalid(format!(
            "block size {} is below rank {}",
            cfg.block_size_b, cfg.rank_k
        )));
    }
    if cfg.iterations_q == 0 {
        return Err(Error::invalid("iteration count must be at least 1"));
    }

    if (cfg.iterations_q + 1).saturating_mul(cfg.block_size_b) > min_dim {
        return exact_path(a, cfg.rank_k);
    }

    let mut rng = SeededRng::new(cfg.seed);
    let pi = gaussian_matrix(n, cfg.block_size_b, &mut rng)?;
    let mut block = a.matmul(&pi);
    let mut basis: Vec<DenseMatrix> = Vec::new();
    for iter in 0..=cfg.iterations_q {
        if iter > 0 {
            block = a.matmul(&a.matmul_tn(&block));
        }
        match orthogonalize_block(&block, &basis) {
            Some(q_new) => basis.push(q_new),
            None => break, // invariant subspace reached
        }
    }
    let refs: Vec<&DenseMatrix> = basis.iter().collect();
    if refs.is_empty() {
        return exact_path(a, cfg.rank_k);
    }
    let q = DenseMatrix::hstack(&refs);
    if q.cols() < cfg.rank_k {
        // The iteration collapsed below the requested rank; the invariant
        // subspace it found is exact, so fall through to the SVD.
        return exact_path(a, cfg.rank_k);
    }

    let g = a.matmul_tn(&q); // n x c
    let f = svd(&g)?;
    let gram_m = g.matmul_tn(&g);
    let u_k = f.right_vectors(cfg.rank_k); // c x k eigenvectors of M
    let z = q.matmul(&u_k);
    Ok(KrylovResult {
        z,
        gram_m,
        sigma_estimates: f.singular_values,
        saturated: false,
        basis_size: q.cols(),
    })
}

fn exact_path(a: &DenseMatrix, k: usize) -> Result<KrylovResult> {
    let f = svd(a)?;
    let z = f.left_vectors(k);
    let gram_m =
        DenseMatrix::diag(&f.singular_values.iter().map(|s| s * s).collect::<Vec<_>>());
    let basis_size = f.singular_values.len();
    Ok(KrylovResult { z, gram_m, sigma_estimates: f.singular_values, saturated: true, basis_size })
}

/// Orthogonalizes a raw Krylov block against the accumulated basis.
///
/// Each cycle runs two Gram-Schmidt passes, drops columns whose surviving
/// component fell below the filter (they are already spanned; what remains of
/// them is cancellation noise that must not be normalized back up), and QR's
/// the rest. Cycles repeat until the new block is orthogonal to the basis to
/// near machine precision; unit columns that then collapse under a 1/2 filter
/// were noise and disappear. Returns `None` when nothing genuinely new is
/// left.
fn orthogonalize_block(block: &DenseMatrix, basis: &[DenseMatrix]) -> Option<DenseMatrix> {
    let mut work = block.clone();
    let mut tol = 1e-8;
    for _cycle in 0..4 {
        let pre_norms: Vec<f64> = (0..work.cols()).map(|j| norm2(&work.column(j))).collect();
        for _pass in 0..2 {
            for qb in basis {
                let coeff = qb.matmul_tn(&work);
                work = work.sub(&qb.matmul(&coeff));
            }
        }
        let keep: Vec<usize> = (0..work.cols())
            .filter(|&j| {
                let post = norm2(&work.column(j));
                pre_norms[j] > 0.0 && post > tol * pre_norms[j]
            })
            .collect();
        if keep.is_empty() {
            return None;
        }
        let kept = DenseMatrix::from_fn(work.rows(), keep.len(), |i, j| work.get(i, keep[j]));
        work = match orthonormalize(&kept) {
            Ok(o) => o.q,
            Err(_) => return None,
        };
        let coherence = basis
            .iter()
            .map(|qb| qb.matmul_tn(&work).max_abs())
            .fold(0.0f64, f64::max);
        if coherence <= 1e-12 {
            return Some(work);
        }
        // Columns are unit length from here on.
        tol = 0.5;
    }
    Some(work)
}

/// Ritz estimates at the requested 1-based indices (`i` refers to the `i`-th
/// largest estimate).
pub fn ritz_estimates(result: &KrylovResult, indices: &[usize]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(indices.len());
    for &i in indices {
        if i == 0 || i > result.sigma_estimates.len() {
            return Err(Error::invalid(format!(
                "ritz index {i} out of range [1, {}]",
                result.sigma_estimates.len()
            )));
        }
        out.push(result.sigma_estimates[i - 1]);
    }
    Ok(out)
}
