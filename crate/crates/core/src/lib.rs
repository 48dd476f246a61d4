//! Adaptive confidence intervals for the Pareto tail index when the
//! second-order index is unknown.
//!
//! The crate covers the heavy-tailed families used in simulation studies,
//! Hill-type estimation, the second-order goodness-of-fit tests and their
//! separation thresholds, the grid-based adaptive interval, Wald and score
//! baselines, and a deterministic Monte Carlo harness.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adaptive;
pub mod baselines;
pub mod distributions;
pub mod empirics;
pub mod error;
pub mod experiments;
pub mod interval;
pub mod rates;
pub mod rng;
pub mod soptest;
mod roots;

pub use distributions::{DistributionSpec, PerturbedPareto, SecondOrderParams};
pub use empirics::{PlugInEstimates, TailSample};
pub use error::{Error, Result};
pub use interval::{CiMethod, ConfidenceInterval, Target};
