//! Generative neural surrogates for stochastic simulators.
//!
//! A feed-forward generator `y = f(x, s; θ)` is fed the conditioning inputs
//! `x` concatenated with standard-normal noise `s`, and trained so that the
//! conditional distribution of its outputs matches replicated simulator runs
//! under the conditional maximum mean discrepancy (CMMD).

pub mod dataset;
pub mod discrepancy;
pub mod error;
pub mod evaluation;
pub mod kernels;
pub mod linalg;
pub mod network;
pub mod seed;
pub mod simulators;
pub mod training;

pub use error::{Error, Result};
