//! Subsampled randomized Hadamard transform sketching.
//!
//! The sketch is `S A` with `S = sqrt(n_pad / s) * P * H * D`: a random sign
//! diagonal `D`, the orthonormal Walsh-Hadamard transform `H` on the input
//! zero-padded to the next power of two, and a uniform sample (without
//! replacement) `P` of `s` of the padded coordinates. The transform runs in
//! `O(n_pad * cols * log n_pad)` with row-block butterflies.

use crate::error::{Error, Result};
use crate::mat::DenseMatrix;
use crate::rng::SeededRng;

pub fn next_pow2(n: usize) -> usize {
    n.next_power_of_two()
}

/// In-place Walsh-Hadamard butterflies down the rows of an `n_pad x cols`
/// row-major buffer. Unnormalized: the caller folds the `1/sqrt(n_pad)` into
/// its own scaling.
fn fwht_rows(data: &mut [f64], n_pad: usize, cols: usize) {
    debug_assert_eq!(data.len(), n_pad * cols);
    let mut half = 1;
    while half < n_pad {
        let step = half * 2;
        for start in (0..n_pad).step_by(step) {
            for i in start..start + half {
                let (lo, hi) = data.split_at_mut((i + half) * cols);
                let a = &mut lo[i * cols..i * cols + cols];
                let b = &mut hi[..cols];
                for (x, y) in a.iter_mut().zip(b.iter_mut()) {
                    let s = *x + *y;
                    let d = *x - *y;
                    *x = s;
                    *y = d;
                }
            }
        }
        half = step;
    }
}

/// Applies the SRHT to the rows of `a`, returning the `s x cols` sketch `S a`.
///
/// Draw order from `rng`: one sign per input row, then the sample of `s`
/// padded coordinates. `s` must satisfy `1 <= s <= rows`.
pub fn srht_sketch(a: &DenseMatrix, s: usize, rng: &mut SeededRng) -> Result<DenseMatrix> {
    let rows = a.rows();
    let cols = a.cols();
    if s == 0 {
        return Err(Error::invalid("srht sketch size must be positive"));
    }
    if s > rows {
        return Err(Error::invalid(format!(
            "srht sketch size {s} exceeds row count {rows}"
        )));
    }
    let n_pad = next_pow2(rows);
    let mut padded = vec![0.0; n_pad * cols];
    for i in 0..rows {
        let sign = rng.sign();
        let dst = &mut padded[i * cols..(i + 1) * cols];
        for (d, &x) in dst.iter_mut().zip(a.row(i)) {
            *d = sign * x;
        }
    }
    fwht_rows(&mut padded, n_pad, cols);
    let picks = rng.sample_without_replacement(n_pad, s);
    // sqrt(n_pad/s) * (1/sqrt(n_pad)) applied to the unnormalized transform.
    let scale = 1.0 / (s as f64).sqrt();
    let mut out = Vec::with_capacity(s * cols);
    for &row in &picks {
        out.extend(padded[row * cols..(row + 1) * cols].iter().map(|x| x * scale));
    }
    Ok(DenseMatrix::from_raw(s, cols, out))
}

/// Sketches the columns of `a`: returns `a T` with `T = S^T` for an SRHT `S`
/// on the transposed matrix, shape `rows x s`.
pub fn srht_sketch_cols(a: &DenseMatrix, s: usize, rng: &mut SeededRng) -> Result<DenseMatrix> {
    Ok(srht_sketch(&a.transpose(), s, rng)?.transpose())
}
