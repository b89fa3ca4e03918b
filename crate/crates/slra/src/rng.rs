//! Seeded randomness with a fixed cross-platform stream.
//!
//! The generator is ChaCha8 keyed through `seed_from_u64`, so the raw 64-bit
//! stream is identical on every platform for a given seed. Derived quantities
//! are produced by fixed conversions:
//!
//! * uniforms take the top 53 bits of one `u64`,
//! * Gaussians use the Box-Muller transform on a pair of uniforms
//!   (`u1` is shifted into `(0, 1]` so the logarithm never sees zero),
//! * bounded integers use rejection sampling on the high bits,
//! * sub-streams are derived with a SplitMix64 finalizer so independent
//!   pipeline stages never share randomness.

use crate::error::{Error, Result};
use crate::mat::DenseMatrix;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

const STREAM_SALT: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic random stream identified by a 64-bit seed.
#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    rng: ChaCha8Rng,
    cached_normal: Option<f64>,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            cached_normal: None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent sub-stream `stream` of this seed. The derivation is
    /// `splitmix64(seed XOR splitmix64(stream XOR salt))` with a fixed salt,
    /// so sub-streams are stable across runs and distinct across indices.
    pub fn derive(&self, stream: u64) -> SeededRng {
        SeededRng::new(splitmix64(self.seed ^ splitmix64(stream ^ STREAM_SALT)))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform in `[0, 1)` from the top 53 bits of one draw.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box-Muller; the second value of each pair is
    /// cached so draws come in deterministic order. The angle comes from the
    /// first raw draw and the radius from the second, with the radius uniform
    /// shifted into `(0, 1]` so the logarithm never sees zero.
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.cached_normal.take() {
            return z;
        }
        let u_angle = self.uniform();
        let u_radius = ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let r = (-2.0 * u_radius.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u_angle;
        self.cached_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    pub fn normal_vec(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.standard_normal()).collect()
    }

    /// Random sign in `{-1.0, +1.0}` from one bit.
    #[inline]
    pub fn sign(&mut self) -> f64 {
        if self.next_u64() >> 63 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Uniform integer in `[0, bound)` by rejection on the high bits.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0);
        let zone = u64::MAX - (u64::MAX % bound);
        loop {
            let x = self.next_u64();
            if x < zone {
                return x % bound;
            }
        }
    }

    /// First `s` entries of a random permutation of `0..n` (partial
    /// Fisher-Yates).
    pub fn sample_without_replacement(&mut self, n: usize, s: usize) -> Vec<usize> {
        assert!(s <= n);
        let mut idx: Vec<usize> = (0..n).collect();
        for i in 0..s {
            let j = i + self.below((n - i) as u64) as usize;
            idx.swap(i, j);
        }
        idx.truncate(s);
        idx
    }
}

/// Matrix with i.i.d. standard normal entries drawn row-major from `rng`.
pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut SeededRng) -> Result<DenseMatrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::invalid(format!(
            "gaussian matrix dimensions must be positive, got {rows}x{cols}"
        )));
    }
    Ok(DenseMatrix::from_fn(rows, cols, |_, _| rng.standard_normal()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_seeds_identical_streams() {
        let a = gaussian_matrix(2, 2, &mut SeededRng::new(7)).unwrap();
        let b = gaussian_matrix(2, 2, &mut SeededRng::new(7)).unwrap();
        assert_eq!(a.data(), b.data());
        // Golden values pin the stream; a change here is a determinism break.
        let expect = [
            1.034076330808736,
            1.5806313228876454,
            -0.22639571334183978,
            -0.7662339143261959,
        ];
        for (x, e) in a.data().iter().zip(expect) {
            assert!((x - e).abs() < 1e-15, "stream drifted: {x} vs {e}");
        }
    }

    #[test]
    fn gaussian_moments() {
        let m = gaussian_matrix(1000, 50, &mut SeededRng::new(1)).unwrap();
        let n = (m.rows() * m.cols()) as f64;
        let mean: f64 = m.data().iter().sum::<f64>() / n;
        let var: f64 = m.data().iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        assert!(mean.abs() < 0.01, "sample mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "sample variance {var}");
    }

    #[test]
    fn zero_dimension_is_an_error() {
        assert!(gaussian_matrix(3, 0, &mut SeededRng::new(0)).is_err());
        assert!(gaussian_matrix(0, 3, &mut SeededRng::new(0)).is_err());
    }

    #[test]
    fn derive_changes_stream() {
        let mut base = SeededRng::new(42);
        let mut d1 = base.derive(1);
        let mut d2 = base.derive(2);
        assert_ne!(d1.next_u64(), d2.next_u64());
        assert_ne!(base.next_u64(), base.derive(1).next_u64());
        // Derivation is a pure function of (seed, stream).
        assert_eq!(
            SeededRng::new(42).derive(1).next_u64(),
            SeededRng::new(42).derive(1).next_u64()
        );
    }

    #[test]
    fn sample_without_replacement_is_a_partial_permutation() {
        let mut rng = SeededRng::new(5);
        let s = rng.sample_without_replacement(10, 10);
        let mut sorted = s.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..10).collect::<Vec<_>>());
        let part = rng.sample_without_replacement(100, 7);
        assert_eq!(part.len(), 7);
        let mut dedup = part.clone();
        dedup.sort_unstable();
        dedup.dedup();
        assert_eq!(dedup.len(), 7);
    }
}
