//! Global operation counters for run reports.
//!
//! The counters are monotone atomics; callers take a snapshot before and
//! after a run and report the difference. They exist for observability only
//! and never influence results.

use std::sync::atomic::{AtomicU64, Ordering};

static MATMUL: AtomicU64 = AtomicU64::new(0);
static MATVEC: AtomicU64 = AtomicU64::new(0);
static SVD: AtomicU64 = AtomicU64::new(0);

#[inline]
pub(crate) fn record_matmul() {
    MATMUL.fetch_add(1, Ordering::Relaxed);
}

#[inline]
pub(crate) fn record_matvec() {
    MATVEC.fetch_add(1, Ordering::Relaxed);
}

#[inline]
pub(crate) fn record_svd() {
    SVD.fetch_add(1, Ordering::Relaxed);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OpSnapshot {
    pub matmul: u64,
    pub matvec: u64,
    pub svd: u64,
}

pub fn snapshot() -> OpSnapshot {
    OpSnapshot {
        matmul: MATMUL.load(Ordering::Relaxed),
        matvec: MATVEC.load(Ordering::Relaxed),
        svd: SVD.load(Ordering::Relaxed),
    }
}

impl OpSnapshot {
    /// Counts accumulated since `earlier`.
    pub fn since(&self, earlier: &OpSnapshot) -> OpSnapshot {
        OpSnapshot {
            matmul: self.matmul - earlier.matmul,
            matvec: self.matvec - earlier.matvec,
            svd: self.svd - earlier.svd,
        }
    }
}
