//! Randomized low-rank approximation in Schatten-p norms.
//!
//! The crate bundles four solver families behind one dense-matrix carrier:
//!
//! * [`krylov`] — block Krylov iteration returning an orthonormal basis and
//!   Ritz estimates of the leading singular values;
//! * [`lra`] — the dual block-size Schatten-p solver that runs the Krylov
//!   iteration at two block sizes and picks a branch from the Ritz estimates;
//! * [`sketch`] — SRHT sketch-and-solve pipelines for `p > 2`, including the
//!   truncated-norm solver and the combined algorithm that avoids the full
//!   SVD of the doubly sketched matrix;
//! * [`lazysvd`] — deflation-based top-k extraction with Lanczos-powered
//!   approximate PCA and least-squares projections, stable enough to run
//!   under the reduced-precision emulation in [`fp`] / [`precision`].
//!
//! [`cost`] models rectangular matrix-multiplication cost and the crossover
//! arithmetic used to pick solver parameters; [`metrics`] supplies planted
//! matrices and exact ratios for evaluation; [`io`] reads Matrix Market and
//! the raw binary format.

pub mod cli;
pub mod cost;
pub mod error;
pub mod fp;
pub mod io;
pub mod krylov;
pub mod lanczos;
pub mod lazysvd;
pub mod lra;
pub mod mat;
pub mod metrics;
pub mod norms;
pub mod ops;
pub mod precision;
pub mod qr;
pub mod report;
pub mod rng;
pub mod sketch;
pub mod srht;
pub mod svd;

pub use error::{Error, Result};
pub use mat::DenseMatrix;
pub use rng::SeededRng;
