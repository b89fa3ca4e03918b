//! Reduced-precision floating-point emulation.
//!
//! Arithmetic is emulated by rounding the native `f64` result of every
//! operation to a narrower mantissa (round to nearest, ties to even). For
//! mantissa widths up to 26 bits this is exactly the arithmetic of a machine
//! with that precision (the two-step rounding through `f64` is exact); for
//! widths 27..52 the emulation can differ from a true narrow machine by one
//! ulp on double-rounding cases and is treated as an approximation.
//!
//! [`Fp`] threads an optional [`PrecisionConfig`] through the kernels that
//! participate in the stability experiments. `Fp::native()` compiles to plain
//! `f64` arithmetic; at width 52 the emulated path is bit-identical to it.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RoundingMode {
    NearestEven,
}

/// Which scalar operations get rounded. Defaults to all of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpSet {
    pub add: bool,
    pub sub: bool,
    pub mul: bool,
    pub div: bool,
    pub sqrt: bool,
}

impl Default for OpSet {
    fn default() -> Self {
        OpSet { add: true, sub: true, mul: true, div: true, sqrt: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionConfig {
    /// Mantissa width in bits, in `[8, 52]`. The unit roundoff of the
    /// emulated machine is `2^-mantissa_bits`.
    pub mantissa_bits: u32,
    pub rounding: RoundingMode,
    pub apply_to: OpSet,
}

impl PrecisionConfig {
    pub fn new(mantissa_bits: u32) -> Result<Self> {
        if !(8..=52).contains(&mantissa_bits) {
            return Err(Error::invalid(format!(
                "mantissa width must be in [8, 52], got {mantissa_bits}"
            )));
        }
        Ok(PrecisionConfig {
            mantissa_bits,
            rounding: RoundingMode::NearestEven,
            apply_to: OpSet::default(),
        })
    }

    pub fn unit_roundoff(&self) -> f64 {
        (2.0f64).powi(-(self.mantissa_bits as i32))
    }
}

/// Rounds `x` to the nearest value representable with the configured mantissa
/// width, ties to even. Non-finite inputs propagate unchanged.
pub fn round_to_precision(x: f64, cfg: &PrecisionConfig) -> f64 {
    if !x.is_finite() {
        return x;
    }
    let drop = 52 - cfg.mantissa_bits;
    if drop == 0 {
        return x;
    }
    let bits = x.to_bits();
    let mask = (1u64 << drop) - 1;
    let tail = bits & mask;
    let base = bits & !mask;
    let half = 1u64 << (drop - 1);
    let keep_lsb_odd = (base >> drop) & 1 == 1;
    let rounded = if tail > half || (tail == half && keep_lsb_odd) {
        // The carry may overflow the mantissa into the exponent field, which
        // is exactly the IEEE behavior (including rounding up to infinity).
        base.wrapping_add(1u64 << drop)
    } else {
        base
    };
    f64::from_bits(rounded)
}

/// Arithmetic mode: native `f64` or emulated reduced precision.
#[derive(Debug, Clone, Copy)]
pub struct Fp {
    cfg: Option<PrecisionConfig>,
}

impl Fp {
    pub fn native() -> Fp {
        Fp { cfg: None }
    }

    pub fn emulated(cfg: PrecisionConfig) -> Fp {
        Fp { cfg: Some(cfg) }
    }

    pub fn is_native(&self) -> bool {
        self.cfg.is_none()
    }

    pub fn config(&self) -> Option<&PrecisionConfig> {
        self.cfg.as_ref()
    }

    #[inline]
    pub fn add(&self, a: f64, b: f64) -> f64 {
        match &self.cfg {
            None => a + b,
            Some(c) if c.apply_to.add => round_to_precision(a + b, c),
            Some(_) => a + b,
        }
    }

    #[inline]
    pub fn sub(&self, a: f64, b: f64) -> f64 {
        match &self.cfg {
            None => a - b,
            Some(c) if c.apply_to.sub => round_to_precision(a - b, c),
            Some(_) => a - b,
        }
    }

    #[inline]
    pub fn mul(&self, a: f64, b: f64) -> f64 {
        match &self.cfg {
            None => a * b,
            Some(c) if c.apply_to.mul => round_to_precision(a * b, c),
            Some(_) => a * b,
        }
    }

    #[inline]
    pub fn div(&self, a: f64, b: f64) -> f64 {
        match &self.cfg {
            None => a / b,
            Some(c) if c.apply_to.div => round_to_precision(a / b, c),
            Some(_) => a / b,
        }
    }

    #[inline]
    pub fn sqrt(&self, a: f64) -> f64 {
        match &self.cfg {
            None => a.sqrt(),
            Some(c) if c.apply_to.sqrt => round_to_precision(a.sqrt(), c),
            Some(_) => a.sqrt(),
        }
    }

    /// Sequential left-to-right dot product under this arithmetic.
    pub fn dot(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), y.len());
        let mut acc = 0.0;
        for (&a, &b) in x.iter().zip(y) {
            acc = self.add(acc, self.mul(a, b));
        }
        acc
    }

    pub fn norm2(&self, x: &[f64]) -> f64 {
        self.sqrt(self.dot(x, x))
    }

    /// `y += alpha * x` under this arithmetic.
    pub fn axpy(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), y.len());
        for (yi, &xi) in y.iter_mut().zip(x) {
            *yi = self.add(*yi, self.mul(alpha, xi));
        }
    }

    pub fn scale(&self, alpha: f64, x: &mut [f64]) {
        for xi in x.iter_mut() {
            *xi = self.mul(*xi, alpha);
        }
    }
}
