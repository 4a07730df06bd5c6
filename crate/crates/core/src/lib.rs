//! Numerical laboratory for complete convergence of weighted sums of i.i.d.
//! random variables: sequence-side growth checks, distribution-side moment
//! and tail conditions, the Montgomery-Smith divergent construction, and a
//! seeded Monte Carlo engine for the tail-probability series.

// `!(x > 0.0)` style guards are kept because they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod counterexample;
pub mod distributions;
pub mod error;
pub mod montecarlo;
pub mod numerics;
pub mod scenario;
pub mod sequences;
pub mod series_lab;
pub mod verdict;

pub use error::{Error, Result};
pub use numerics::LogNumber;
