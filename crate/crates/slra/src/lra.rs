//! Dual block-size Schatten-p low-rank approximation.
//!
//! The solver runs the block Krylov iteration twice: once at block size `k`
//! for about `q log2(n)` iterations and once at block size `b' + k` for about
//! `sqrt(p) log2(n / eps)` iterations, where `q` and `b'` come from
//! [`choose_params`]. Each run yields a candidate right factor
//! `W_i = orth(A^T Z_i)`; the winner is picked from the second run's Ritz
//! estimates: `W_2` when `sigma_hat_k >= (1 + 1/(2p)) sigma_hat_(b'+k)`
//! (a detectable spectral gap makes the wide gap-convergent run reliable)
//! and `W_1` otherwise.
//!
//! `p = inf` is routed to the deflation solver in [`crate::lazysvd`], whose
//! guarantee covers the operator norm; the `b'` formula needs finite `p`.

use crate::cost::{CostModelParams, Regime};
use crate::error::{Error, Result};
use crate::krylov::{block_krylov, KrylovConfig};
use crate::mat::DenseMatrix;
use crate::qr::orthonormalize;
use crate::rng::SeededRng;
use crate::svd::svd;
use serde::Serialize;

#[derive(Debug, Clone, Copy)]
pub struct LraParams {
    pub rank_k: usize,
    pub p: f64,
    pub epsilon: f64,
    /// Iteration exponent, `ceil` of the regime formula, at least 1.
    pub q: usize,
    /// Wide-run block excess: `ceil(1.5 max(1, k / (q^2 eps)))`.
    pub b_prime: usize,
    pub regime: Regime,
}

/// The regime formula for `q` before rounding.
pub fn raw_q(n: usize, k: usize, p: f64, epsilon: f64, cost: &CostModelParams) -> f64 {
    let beta = cost.beta();
    let n_alpha = (n as f64).powf(cost.alpha());
    let sqrt_p = p.sqrt();
    match crate::cost::regime(n as f64, k as f64, epsilon, cost) {
        Regime::SmallK => sqrt_p,
        Regime::MidK => {
            let t = p.powf(1.0 / (2.0 * (1.0 + 2.0 * beta)))
                * (k as f64 / (n_alpha * epsilon)).powf(beta / (1.0 + 2.0 * beta));
            sqrt_p.max(t)
        }
        Regime::LargeK => {
            let t = p.powf(1.0 / (2.0 * (1.0 + 2.0 * beta)))
                / epsilon.powf(beta / (1.0 + 2.0 * beta));
            sqrt_p.max(t)
        }
    }
}

/// Picks `(q, b')` and the regime label for an `n x n` problem.
pub fn choose_params(
    n: usize,
    k: usize,
    p: f64,
    epsilon: f64,
    cost: &CostModelParams,
) -> Result<LraParams> {
    if k == 0 || k > n {
        return Err(Error::invalid(format!("rank k = {k} out of range [1, {n}]")));
    }
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::invalid(format!("need finite p >= 1, got {p}")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid(format!("epsilon must be in (0, 1), got {epsilon}")));
    }
    let q = raw_q(n, k, p, epsilon, cost).ceil().max(1.0) as usize;
    let b_prime = (1.5 * (k as f64 / (q as f64 * q as f64 * epsilon)).max(1.0)).ceil() as usize;
    Ok(LraParams {
        rank_k: k,
        p,
        epsilon,
        q,
        b_prime,
        regime: crate::cost::regime(n as f64, k as f64, epsilon, cost),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    W1,
    W2,
    /// Full SVD because the wide block would have spanned the space.
    ExactFallback,
    /// Deflation solver handled the request (`p = inf` route).
    LazySvd,
}

#[derive(Debug, Clone)]
pub struct LowRankSolution {
    /// `n x k`, orthonormal columns.
    pub w: DenseMatrix,
    pub branch: Branch,
    /// Ritz estimate of `sigma_k` from the wide run (exact on fallback).
    pub sigma_hat_k: f64,
    /// Ritz estimate of `sigma_(b'+k)` (0 when past the spectrum's end).
    pub sigma_hat_bk: f64,
    /// Measured residual norm, filled in by callers that evaluate it.
    pub achieved_error: Option<f64>,
    /// True when any Krylov run inside took the exact-SVD path.
    pub krylov_saturated: bool,
}

/// The branch rule on its own: `W2` iff
/// `sigma_hat_k >= (1 + 1/(2p)) sigma_hat_bk`.
pub fn select_branch(sigma_hat_k: f64, sigma_hat_bk: f64, p: f64) -> Result<Branch> {
    if sigma_hat_k < 0.0 || sigma_hat_bk < 0.0 {
        return Err(Error::invalid("singular value estimates must be nonnegative"));
    }
    if !(p >= 1.0) {
        return Err(Error::invalid(format!("need p >= 1, got {p}")));
    }
    if sigma_hat_k >= (1.0 + 1.0 / (2.0 * p)) * sigma_hat_bk {
        Ok(Branch::W2)
    } else {
        Ok(Branch::W1)
    }
}

/// Tuning knobs; `Default` matches the production parameters.
#[derive(Debug, Clone, Copy)]
pub struct LraOptions {
    /// Scales both iteration counts (`ceil(mult * q * log2 n)` and
    /// `ceil(mult * sqrt(p) * log2(n / eps))`). Guarantee checks run at 4.
    pub iteration_multiplier: f64,
}

impl Default for LraOptions {
    fn default() -> Self {
        LraOptions { iteration_multiplier: 1.0 }
    }
}

pub fn schatten_lra(
    a: &DenseMatrix,
    k: usize,
    p: f64,
    epsilon: f64,
    seed: u64,
    cost: &CostModelParams,
) -> Result<LowRankSolution> {
    schatten_lra_with(a, k, p, epsilon, seed, cost, &LraOptions::default())
}

pub fn schatten_lra_with(
    a: &DenseMatrix,
    k: usize,
    p: f64,
    epsilon: f64,
    seed: u64,
    cost: &CostModelParams,
    opts: &LraOptions,
) -> Result<LowRankSolution> {
    let (m, n) = (a.rows(), a.cols());
    let min_dim = m.min(n);
    if k == 0 || k > min_dim {
        return Err(Error::invalid(format!("rank k = {k} out of range [1, {min_dim}]")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid(format!("epsilon must be in (0, 1), got {epsilon}")));
    }
    if p.is_infinite() && p > 0.0 {
        return lazysvd_route(a, k, epsilon, seed);
    }
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::invalid(format!("need p >= 1, got {p}")));
    }

    let n_eff = m.max(n);
    let params = choose_params(n_eff, k, p, epsilon, cost)?;
    let wide = params.b_prime + k;
    if wide >= min_dim {
        return exact_fallback(a, k, wide);
    }

    let master = SeededRng::new(seed);
    let mult = opts.iteration_multiplier;
    let t1 = (mult * params.q as f64 * (n_eff as f64).log2()).ceil().max(1.0) as usize;
    let t2 = (mult * p.sqrt() * (n_eff as f64 / epsilon).log2()).ceil().max(1.0) as usize;

    let run1 = block_krylov(
        a,
        &KrylovConfig {
            rank_k: k,
            block_size_b: k,
            iterations_q: t1,
            seed: master.derive(1).seed(),
        },
    )?;
    let run2 = block_krylov(
        a,
        &KrylovConfig {
            rank_k: wide,
            block_size_b: wide,
            iterations_q: t2,
            seed: master.derive(2).seed(),
        },
    )?;

    let sigma_hat_k = run2.sigma_estimates[k - 1];
    let sigma_hat_bk = run2.sigma_estimates.get(wide - 1).copied().unwrap_or(0.0);
    let branch = select_branch(sigma_hat_k, sigma_hat_bk, p)?;
    let z = match branch {
        Branch::W1 => &run1.z,
        Branch::W2 => &run2.z,
        _ => unreachable!(),
    };
    let w = right_factor(a, &z.columns(0, k), k, &master)?;
    Ok(LowRankSolution {
        w,
        branch,
        sigma_hat_k,
        sigma_hat_bk,
        achieved_error: None,
        krylov_saturated: run1.saturated || run2.saturated,
    })
}

fn exact_fallback(a: &DenseMatrix, k: usize, wide: usize) -> Result<LowRankSolution> {
    let f = svd(a)?;
    let w = f.right_vectors(k);
    let sigma_hat_k = f.singular_values[k - 1];
    let sigma_hat_bk = f.singular_values.get(wide - 1).copied().unwrap_or(0.0);
    Ok(LowRankSolution {
        w,
        branch: Branch::ExactFallback,
        sigma_hat_k,
        sigma_hat_bk,
        achieved_error: None,
        krylov_saturated: false,
    })
}

fn lazysvd_route(a: &DenseMatrix, k: usize, epsilon: f64, seed: u64) -> Result<LowRankSolution> {
    let state = crate::lazysvd::modified_lazysvd(a, k, epsilon, 0.1, seed)?;
    let v = state.v().expect("deflation returned k >= 1 columns");
    let w = orthonormalize(v)?.q;
    if w.cols() < k {
        return Err(Error::NumericFailure("deflation basis lost rank".into()));
    }
    Ok(LowRankSolution {
        w,
        branch: Branch::LazySvd,
        sigma_hat_k: 0.0,
        sigma_hat_bk: 0.0,
        achieved_error: None,
        krylov_saturated: false,
    })
}

/// `orth(A^T Z)`, padded back to `k` orthonormal columns if the product lost
/// rank (only possible when `A` itself has rank below `k`; any completion is
/// optimal there).
fn right_factor(
    a: &DenseMatrix,
    z: &DenseMatrix,
    k: usize,
    master: &SeededRng,
) -> Result<DenseMatrix> {
    let at_z = a.matmul_tn(z);
    let (w, _rank) = crate::qr::span_basis_padded(&at_z, k, &mut master.derive(9))?;
    Ok(w)
}
