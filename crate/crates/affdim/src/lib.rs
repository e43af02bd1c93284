//! Dimension estimators for self-affine sets and measures.
//!
//! The crate computes singular-value pressure and its roots (affinity
//! dimension and its projected variant), Lyapunov spectra and the Lyapunov
//! dimension, a projected local-dimension functional along sampled symbolic
//! paths, structural criteria for dimension drop under orthogonal
//! projection, and an empirical chaos-game / box-counting harness for
//! cross-checking the predictions.
//!
//! Conventions used throughout:
//! * matrices are dense row-major `f64`, ambient dimension at most
//!   [`linalg::DIM_MAX`];
//! * words over the alphabet `{1, ..., m}` act by left products
//!   `T_I = T_{i_1} * ... * T_{i_n}`;
//! * sums over words accumulate in log space (log-sum-exp), never by
//!   exponentiating per-word values first;
//! * randomized routines take an explicit seed and derive an independent
//!   stream per sample, so results do not depend on thread count. The
//!   `parallel` feature (default) runs data-parallel loops on rayon; without
//!   it the same loops run sequentially with identical output.

#![forbid(unsafe_code)]
// Index loops are the house style for the dense kernels: row/column indices
// carry meaning and most loops touch several arrays at matching positions.
#![allow(clippy::needless_range_loop)]

pub mod attractor;
pub mod criteria;
mod error;
pub mod ergodic;
pub mod linalg;
mod parallel;
pub mod pressure;
pub mod words;

pub use error::{Error, Result};
