//! Grenander-type and kernel-smoothed Grenander-type estimators of a
//! monotone hazard rate or density from right-censored data, with pointwise
//! confidence intervals and a Monte Carlo harness.
//!
//! Typical flow: build a [`CensoredSample`], fit a [`FitContext`] up to a
//! truncation point, then smooth it with [`smooth_estimate`] or compute an
//! interval with [`confidence_interval`].

// `!(x > y)` is used on purpose to reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod data;
pub mod error;
pub mod inference;
pub mod isotonic;
pub mod kernel;
pub mod simulation;
pub mod smoothing;
pub mod step;

pub use data::{generate, quantile, read_csv, write_csv, CensoredObservation, CensoredSample, Law, ScenarioSpec};
pub use error::{Error, Result};
pub use inference::{confidence_interval, ConfidenceInterval, FitContext, Method, SmoothCiOptions, Target};
pub use isotonic::{Direction, GrenanderFit, MonotoneEstimate, PiecewiseLinear};
pub use kernel::{Kernel, Triweight};
pub use smoothing::{smooth_curve, smooth_estimate, Bandwidth, SmoothingMode};
pub use step::StepFunction;
