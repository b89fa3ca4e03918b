//! Reduced-precision stability experiments for the deflation solvers.
//!
//! A sweep replays both deflation variants (raw-append with least-squares
//! projections vs. classical Gram-Schmidt) under emulated mantissa widths and
//! records what actually happened: achieved Schatten ratios, the measured
//! condition number of the basis, per-step leakage and operator-application
//! counts. Failures (contract violations, numeric blow-ups) become rows, not
//! crashes. Nothing is asserted here; the report is data for downstream
//! comparison.

use crate::error::Result;
use crate::fp::{Fp, PrecisionConfig};
use crate::lazysvd::{modified_lazysvd_with, original_lazysvd_baseline_with, LazySvdOptions};
use crate::mat::DenseMatrix;
use crate::metrics::approximation_ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const STABILITY_SCHEMA_VERSION: u32 = 1;

/// Failure probability budget used by every sweep cell.
const SWEEP_ETA: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LazyVariant {
    /// Raw deflation basis, least-squares projections.
    Modified,
    /// Explicit Gram-Schmidt deflation.
    Baseline,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub mantissa_bits: u32,
    pub variant: LazyVariant,
    pub seed: u64,
    pub ok: bool,
    /// Error text when the run aborted.
    pub failure: Option<String>,
    pub ratio_p2: Option<f64>,
    pub ratio_p4: Option<f64>,
    pub ratio_pinf: Option<f64>,
    pub kappa_vk: Option<f64>,
    pub max_leakage: Option<f64>,
    pub leakage_per_step: Vec<f64>,
    pub matvec_count: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityReport {
    pub schema_version: u32,
    pub rows_n: usize,
    pub cols_n: usize,
    pub rank_k: usize,
    pub eps: f64,
    pub rows: Vec<SweepRow>,
}

/// Runs the `widths x {modified, baseline} x seeds` grid on `a`. Cells are
/// independent and evaluated in parallel; the row order is deterministic
/// (width-major, variant, seed) regardless of thread count.
pub fn run_lazysvd_sweep(
    a: &DenseMatrix,
    k: usize,
    eps: f64,
    widths: &[u32],
    seeds: &[u64],
) -> Result<StabilityReport> {
    let mut cells = Vec::new();
    for &w in widths {
        for variant in [LazyVariant::Modified, LazyVariant::Baseline] {
            for &seed in seeds {
                cells.push((w, variant, seed));
            }
        }
    }
    let rows: Vec<SweepRow> = cells
        .par_iter()
        .map(|&(w, variant, seed)| run_cell(a, k, eps, w, variant, seed))
        .collect();
    Ok(StabilityReport {
        schema_version: STABILITY_SCHEMA_VERSION,
        rows_n: a.rows(),
        cols_n: a.cols(),
        rank_k: k,
        eps,
        rows,
    })
}

fn run_cell(
    a: &DenseMatrix,
    k: usize,
    eps: f64,
    mantissa_bits: u32,
    variant: LazyVariant,
    seed: u64,
) -> SweepRow {
    let mut row = SweepRow {
        mantissa_bits,
        variant,
        seed,
        ok: false,
        failure: None,
        ratio_p2: None,
        ratio_p4: None,
        ratio_pinf: None,
        kappa_vk: None,
        max_leakage: None,
        leakage_per_step: Vec::new(),
        matvec_count: None,
    };
    let cfg = match PrecisionConfig::new(mantissa_bits) {
        Ok(c) => c,
        Err(e) => {
            row.failure = Some(e.to_string());
            return row;
        }
    };
    let opts = LazySvdOptions { fp: Fp::emulated(cfg), ..Default::default() };
    let outcome = match variant {
        LazyVariant::Modified => modified_lazysvd_with(a, k, eps, SWEEP_ETA, seed, &opts),
        LazyVariant::Baseline => original_lazysvd_baseline_with(a, k, eps, SWEEP_ETA, seed, &opts),
    };
    let state = match outcome {
        Ok(s) => s,
        Err(e) => {
            row.failure = Some(e.to_string());
            return row;
        }
    };
    row.kappa_vk = Some(state.kappa_estimate);
    row.max_leakage = state.leakage_per_step.iter().cloned().reduce(f64::max);
    row.leakage_per_step = state.leakage_per_step.clone();
    row.matvec_count = Some(state.matvec_count as u64);
    // Ratios are measured at working precision; the emulated machine only
    // ran the solver.
    let q = match state.orthonormal_basis() {
        Ok(q) => q,
        Err(e) => {
            row.failure = Some(format!("basis unusable: {e}"));
            return row;
        }
    };
    let mut ratios = [None, None, None];
    for (slot, p) in ratios.iter_mut().zip([2.0, 4.0, f64::INFINITY]) {
        match approximation_ratio(a, &q, p) {
            Ok(r) => *slot = Some(r.ratio_or_one()),
            Err(e) => {
                row.failure = Some(format!("ratio evaluation failed: {e}"));
                return row;
            }
        }
    }
    row.ratio_p2 = ratios[0];
    row.ratio_p4 = ratios[1];
    row.ratio_pinf = ratios[2];
    row.ok = true;
    row
}
