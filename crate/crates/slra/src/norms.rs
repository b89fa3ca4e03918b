//! Schatten and truncated spectral norms.

use crate::error::{Error, Result};
use crate::mat::DenseMatrix;
use crate::svd::svd;

/// `(sum_i sigma_i^p)^(1/p)` over all singular values; `p = inf` gives the
/// operator norm `sigma_1`. Requires `p >= 1`.
pub fn schatten_norm(m: &DenseMatrix, p: f64) -> Result<f64> {
    let sigma = svd(m)?.singular_values;
    schatten_of_values(&sigma, p)
}

/// Same norm computed from an already available spectrum.
pub fn schatten_of_values(sigma: &[f64], p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::invalid(format!("schatten norm needs p >= 1, got {p}")));
    }
    Ok(power_sum_root(sigma, p))
}

/// `(sum_{i<=r} sigma_i^p)^(1/p)` over the top `r` singular values.
pub fn truncated_norm(m: &DenseMatrix, p: f64, r: usize) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::invalid(format!("truncated norm needs p >= 1, got {p}")));
    }
    let min_dim = m.rows().min(m.cols());
    if r == 0 || r > min_dim {
        return Err(Error::invalid(format!(
            "truncation rank {r} out of range [1, {min_dim}]"
        )));
    }
    let sigma = svd(m)?.singular_values;
    Ok(power_sum_root(&sigma[..r], p))
}

/// Truncated power sum from a precomputed nonincreasing spectrum.
pub fn truncated_of_values(sigma: &[f64], p: f64, r: usize) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::invalid(format!("truncated norm needs p >= 1, got {p}")));
    }
    if r == 0 || r > sigma.len() {
        return Err(Error::invalid(format!(
            "truncation rank {r} out of range [1, {}]",
            sigma.len()
        )));
    }
    Ok(power_sum_root(&sigma[..r], p))
}

/// `(sum sigma_i^p)^(1/p)` scaled by the leading value so large `p` neither
/// overflows nor underflows.
fn power_sum_root(sigma: &[f64], p: f64) -> f64 {
    let top = sigma.first().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return 0.0;
    }
    if p.is_infinite() {
        return top;
    }
    let sum: f64 = sigma.iter().map(|&s| (s / top).powf(p)).sum();
    top * sum.powf(1.0 / p)
}
