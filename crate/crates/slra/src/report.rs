//! Versioned run reports emitted by the command-line interface.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const RUN_REPORT_SCHEMA_VERSION: u32 = 1;

/// One solver invocation, fully described. Serialized as JSON; the schema is
/// stable under the version stamp so downstream tooling can parse it without
/// tracking this crate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub algorithm: String,
    pub input_path: String,
    pub rows: usize,
    pub cols: usize,
    pub rank_k: usize,
    /// Schatten exponent as text so `inf` survives JSON.
    pub p: String,
    pub epsilon: f64,
    pub seed: u64,
    pub repeats: u32,
    pub iteration_multiplier: f64,
    pub omega: f64,
    pub alpha: f64,
    pub deterministic: bool,
    /// Which branch or provenance produced the factor.
    pub branch: String,
    /// `"ratio"` when the optimum was nonzero, `"absolute"` for exact
    /// low-rank inputs.
    pub error_metric: String,
    /// Achieved ratio per evaluated exponent (keys like `"2"`, `"4"`,
    /// `"inf"`); empty in absolute mode.
    pub ratios: BTreeMap<String, f64>,
    /// Residual norm `||A (I - W W^T)||_p` at the run's own `p`.
    pub achieved_error: f64,
    pub matvec_count: u64,
    pub matmul_count: u64,
    pub svd_count: u64,
    /// Zeroed in deterministic mode so reports are byte-stable.
    pub wall_clock_ms: u64,
    pub output_path: String,
}

pub fn p_label(p: f64) -> String {
    if p.is_infinite() {
        "inf".to_string()
    } else if p == p.trunc() && p.abs() < 1e6 {
        format!("{}", p as i64)
    } else {
        format!("{p}")
    }
}
