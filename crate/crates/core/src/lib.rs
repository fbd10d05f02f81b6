//! Friedman's rank statistic, its chi-square approximation, explicit error bounds,
//! and exact and Monte Carlo machinery for checking them.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod error;

pub mod bounds;
pub mod chisq;
pub mod quad;
pub mod ranks;
pub mod special;
pub mod testfn;

pub use error::{Error, Result};
pub mod exact;
pub mod report;
pub mod coupling;
pub mod stein;
pub mod montecarlo;
