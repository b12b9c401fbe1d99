//! Kernel-smoothed Grenander-type estimators.
//!
//! A Grenander-type estimate is piecewise constant, so its convolution with a
//! kernel reduces to differences of the kernel's partial integrals at the
//! piece ends:
//!
//! ```text
//! ∫ k_b(x - u) est(u) du = Σ_j est_j [K((x - a_j)/b) - K((x - c_j)/b)]
//! ```
//!
//! over pieces `[a_j, c_j]` clipped to `[(x - b) ∨ 0, (x + b) ∧ upper]`.
//! The boundary-corrected mode swaps `k` for `φ k(u) ± ψ u k(u)` within one
//! bandwidth of either end of `[0, upper]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::isotonic::MonotoneEstimate;
use crate::kernel::{boundary_coefficients, Kernel};

/// Positive kernel bandwidth in time units.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Bandwidth(f64);

impl Bandwidth {
    pub fn new(b: f64) -> Result<Self> {
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::Config(format!("bandwidth must be positive, got {b}")));
        }
        Ok(Self(b))
    }

    /// `c · n^{-rate}`.
    pub fn from_rate(c: f64, n: usize, rate: f64) -> Result<Self> {
        Self::new(c * (n as f64).powf(-rate))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoothingMode {
    /// Plain kernel, integration range clipped to the support.
    Standard,
    /// Boundary kernels within one bandwidth of either support end.
    BoundaryCorrected,
}

/// How the second-derivative estimator treats windows that overflow the
/// support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowPolicy {
    /// Require `[x - b, x + b] ⊂ [0, upper]`.
    Interior,
    /// Integrate over `[(x - b) ∨ 0, (x + b) ∧ upper]`, i.e. differentiate the
    /// clipped standard estimate.
    Clipped,
}

/// `(φ, ψ')` weights of `k` and `u k(u)` at `x`; `ψ'` carries the sign of
/// the right-boundary branch.
fn kernel_weights(kernel: &dyn Kernel, b: f64, x: f64, mode: SmoothingMode, upper: f64) -> Result<(f64, f64)> {
    if mode == SmoothingMode::Standard {
        return Ok((1.0, 0.0));
    }
    if x <= b {
        let c = boundary_coefficients(kernel, (x / b).clamp(0.0, 1.0))?;
        Ok((c.phi, c.psi))
    } else if x >= upper - b {
        let c = boundary_coefficients(kernel, ((upper - x) / b).clamp(0.0, 1.0))?;
        Ok((c.phi, -c.psi))
    } else {
        Ok((1.0, 0.0))
    }
}

fn check_support(est: &MonotoneEstimate, x: f64, b: f64, upper: f64) -> Result<(f64, f64)> {
    if !(x >= 0.0 && x <= upper) {
        return Err(Error::OutsideDomain { x, lower: 0.0, upper });
    }
    let lo = (x - b).max(0.0);
    let hi = (x + b).min(upper);
    if lo < est.start() || hi > est.end() {
        let missing = if lo < est.start() { lo } else { hi };
        return Err(Error::OutsideDomain {
            x: missing,
            lower: est.start(),
            upper: est.end(),
        });
    }
    Ok((lo, hi))
}

/// Calls `visit(y_a, y_c, value)` for every piece overlapping `[lo, hi]`,
/// with `y = (x - u)/b` at the clipped piece ends.
fn for_each_piece(est: &MonotoneEstimate, x: f64, b: f64, lo: f64, hi: f64, mut visit: impl FnMut(f64, f64, f64)) {
    let bps = est.breakpoints();
    let first = bps.partition_point(|&t| t <= lo).saturating_sub(1);
    for (j, &value) in est.slopes().iter().enumerate().skip(first) {
        let (a, c) = (bps[j], bps[j + 1]);
        if a >= hi {
            break;
        }
        let (a, c) = (a.max(lo), c.min(hi));
        if c > a {
            visit((x - a) / b, (x - c) / b, value);
        }
    }
}

/// Smoothed estimate at `x ∈ [0, upper]`.
pub fn smooth_estimate(
    est: &MonotoneEstimate,
    kernel: &dyn Kernel,
    b: Bandwidth,
    x: f64,
    mode: SmoothingMode,
    upper: f64,
) -> Result<f64> {
    let b = b.get();
    let (lo, hi) = check_support(est, x, b, upper)?;
    let (phi, psi) = kernel_weights(kernel, b, x, mode, upper)?;
    let mut acc = 0.0;
    for_each_piece(est, x, b, lo, hi, |ya, yc, value| {
        let mut w = phi * (kernel.antiderivative(ya) - kernel.antiderivative(yc));
        if psi != 0.0 {
            w += psi * (kernel.first_moment_integral(ya) - kernel.first_moment_integral(yc));
        }
        acc += value * w;
    });
    Ok(acc)
}

/// [`smooth_estimate`] over a grid; errors carry the grid index.
pub fn smooth_curve(
    est: &MonotoneEstimate,
    kernel: &dyn Kernel,
    b: Bandwidth,
    grid: &[f64],
    mode: SmoothingMode,
    upper: f64,
) -> Result<Vec<(f64, f64)>> {
    grid.iter()
        .enumerate()
        .map(|(index, &x)| {
            smooth_estimate(est, kernel, b, x, mode, upper)
                .map(|v| (x, v))
                .map_err(|e| Error::Grid {
                    index,
                    source: Box::new(e),
                })
        })
        .collect()
}

/// Second derivative of the standard smoothed estimate,
/// `∫ k_b''(x - u) est(u) du = Σ_j est_j [k'(y_a) - k'(y_c)] / b²`.
pub fn smooth_second_derivative(
    est: &MonotoneEstimate,
    kernel: &dyn Kernel,
    b: Bandwidth,
    x: f64,
    upper: f64,
    policy: WindowPolicy,
) -> Result<f64> {
    let bw = b.get();
    if policy == WindowPolicy::Interior && (x - bw < 0.0 || x + bw > upper) {
        return Err(Error::NotInterior { x, bandwidth: bw });
    }
    let (lo, hi) = check_support(est, x, bw, upper)?;
    let mut acc = 0.0;
    for_each_piece(est, x, bw, lo, hi, |ya, yc, value| {
        acc += value * (kernel.derivative(ya) - kernel.derivative(yc));
    });
    Ok(acc / (bw * bw))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isotonic::Direction;
    use crate::kernel::Triweight;

    fn constant(c: f64) -> MonotoneEstimate {
        MonotoneEstimate::from_pieces(vec![0.0, 0.3, 0.55, 1.0, 2.0], vec![c; 4], Direction::Increasing).unwrap()
    }

    #[test]
    fn constant_estimate_interior() {
        let b = Bandwidth::new(0.2).unwrap();
        let v = smooth_estimate(&constant(1.7), &Triweight, b, 1.0, SmoothingMode::Standard, 2.0).unwrap();
        assert!((v - 1.7).abs() < 1e-14);
    }

    #[test]
    fn constant_estimate_boundary_corrected() {
        let b = Bandwidth::new(0.4).unwrap();
        for x in [0.0, 0.1, 0.25, 0.4, 1.7, 1.95, 2.0] {
            let v = smooth_estimate(&constant(1.7), &Triweight, b, x, SmoothingMode::BoundaryCorrected, 2.0).unwrap();
            assert!((v - 1.7).abs() < 1e-12, "x = {x}: {v}");
        }
        // the plain kernel loses mass near the edge
        let v = smooth_estimate(&constant(1.7), &Triweight, b, 0.0, SmoothingMode::Standard, 2.0).unwrap();
        assert!((v - 0.85).abs() < 1e-12);
    }

    #[test]
    fn outside_support_and_undefined_range() {
        let b = Bandwidth::new(0.2).unwrap();
        let est = constant(1.0);
        assert!(smooth_estimate(&est, &Triweight, b, 2.5, SmoothingMode::Standard, 2.0).is_err());
        // support claims more than the estimate covers
        assert!(smooth_estimate(&est, &Triweight, b, 1.95, SmoothingMode::Standard, 3.0).is_err());
        assert!(Bandwidth::new(0.0).is_err());
        assert!(Bandwidth::new(f64::NAN).is_err());
    }

    #[test]
    fn curve_matches_pointwise_and_reports_index() {
        let b = Bandwidth::new(0.2).unwrap();
        let est = constant(2.0);
        let curve = smooth_curve(&est, &Triweight, b, &[0.7], SmoothingMode::Standard, 2.0).unwrap();
        let single = smooth_estimate(&est, &Triweight, b, 0.7, SmoothingMode::Standard, 2.0).unwrap();
        assert_eq!(curve, vec![(0.7, single)]);
        let err = smooth_curve(&est, &Triweight, b, &[0.5, 3.0], SmoothingMode::Standard, 2.0).unwrap_err();
        assert!(matches!(err, Error::Grid { index: 1, .. }));
    }

    #[test]
    fn second_derivative_of_constant_is_zero() {
        let b = Bandwidth::new(0.3).unwrap();
        let d = smooth_second_derivative(&constant(3.0), &Triweight, b, 1.0, 2.0, WindowPolicy::Interior).unwrap();
        assert!(d.abs() < 1e-12);
        assert!(matches!(
            smooth_second_derivative(&constant(3.0), &Triweight, b, 0.2, 2.0, WindowPolicy::Interior),
            Err(Error::NotInterior { .. })
        ));
        assert!(smooth_second_derivative(&constant(3.0), &Triweight, b, 0.2, 2.0, WindowPolicy::Clipped).is_ok());
    }
}
