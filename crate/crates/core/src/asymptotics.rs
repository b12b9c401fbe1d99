//! Asymptotic bias and variance of the smoothed estimators at bandwidth
//! `b = c · n^{-1/5}`, and the AMSE-optimal constant `c`.
//!
//! For the hazard,
//!
//! ```text
//! μ  = ½ c² λ''(x) ∫u²k
//! σ² = λ(x) ∫k² / (c (1 - H(x)))
//! ```
//!
//! and the density versions replace `(λ, λ'', H)` by `(f, f'', G)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::Kernel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticMoments {
    pub mu: f64,
    pub sigma2: f64,
    pub c: f64,
}

impl AsymptoticMoments {
    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }

    /// `μ² + σ²`.
    pub fn amse(&self) -> f64 {
        self.mu * self.mu + self.sigma2
    }
}

fn check_inputs(value: f64, survival: f64, c: f64) -> Result<()> {
    if !(survival > 0.0) {
        return Err(Error::SurvivalZero(survival));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Config(format!("bandwidth constant must be positive, got {c}")));
    }
    if !(value >= 0.0 && value.is_finite()) {
        return Err(Error::Config(format!(
            "function value must be nonnegative, got {value}"
        )));
    }
    Ok(())
}

fn moments(value: f64, second: f64, survival: f64, c: f64, kernel: &dyn Kernel) -> Result<AsymptoticMoments> {
    check_inputs(value, survival, c)?;
    Ok(AsymptoticMoments {
        mu: 0.5 * c * c * second * kernel.second_moment(),
        sigma2: value * kernel.roughness() / (c * survival),
        c,
    })
}

/// Limit mean and variance of `n^{2/5}(λ̃^SG(x) - λ(x))`.
pub fn hazard_moments(
    lambda: f64,
    lambda2: f64,
    one_minus_h: f64,
    c: f64,
    kernel: &dyn Kernel,
) -> Result<AsymptoticMoments> {
    moments(lambda, lambda2, one_minus_h, c, kernel)
}

/// Limit mean and variance of `n^{2/5}(f̃^SG(x) - f(x))`.
pub fn density_moments(f: f64, f2: f64, one_minus_g: f64, c: f64, kernel: &dyn Kernel) -> Result<AsymptoticMoments> {
    moments(f, f2, one_minus_g, c, kernel)
}

fn c_opt(value: f64, second: f64, survival: f64, kernel: &dyn Kernel) -> Result<f64> {
    check_inputs(value, survival, 1.0)?;
    if second == 0.0 || !second.is_finite() {
        return Err(Error::NoFiniteOptimum);
    }
    let mu2 = kernel.second_moment();
    let num = value * kernel.roughness();
    let den = survival * second * second * mu2 * mu2;
    Ok((num / den).powf(0.2))
}

/// AMSE-optimal bandwidth constant for the smoothed hazard estimator.
pub fn c_opt_hazard(lambda: f64, lambda2: f64, one_minus_h: f64, kernel: &dyn Kernel) -> Result<f64> {
    c_opt(lambda, lambda2, one_minus_h, kernel)
}

/// AMSE-optimal bandwidth constant for the smoothed density estimator.
pub fn c_opt_density(f: f64, f2: f64, one_minus_g: f64, kernel: &dyn Kernel) -> Result<f64> {
    c_opt(f, f2, one_minus_g, kernel)
}

/// `¼ c⁴ λ''² (∫u²k)² + λ ∫k² / (c (1 - H))`, the AMSE as a function of `c`.
pub fn amse(value: f64, second: f64, survival: f64, c: f64, kernel: &dyn Kernel) -> Result<f64> {
    Ok(moments(value, second, survival, c, kernel)?.amse())
}

/// Plug-in version: estimated function value, second derivative and
/// survival-type factor evaluated at the same point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlugIn {
    pub value: f64,
    pub second_derivative: f64,
    pub survival: f64,
}

impl PlugIn {
    pub fn moments(&self, c: f64, kernel: &dyn Kernel) -> Result<AsymptoticMoments> {
        // The smoothed estimate may dip slightly below zero near a boundary;
        // the variance formula needs a nonnegative level.
        moments(self.value.max(0.0), self.second_derivative, self.survival, c, kernel)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Triweight;

    #[test]
    fn zero_curvature_means_no_bias() {
        let m = hazard_moments(0.75, 0.0, 0.5, 1.2, &Triweight).unwrap();
        assert_eq!(m.mu, 0.0);
        assert!(m.sigma2 > 0.0);
    }

    #[test]
    fn scaling_in_c() {
        let a = hazard_moments(0.75, 6.0, 0.54, 1.2, &Triweight).unwrap();
        let b = hazard_moments(0.75, 6.0, 0.54, 2.4, &Triweight).unwrap();
        assert!((b.mu / a.mu - 4.0).abs() < 1e-12);
        assert!((b.sigma2 / a.sigma2 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn invalid_inputs() {
        assert!(matches!(
            hazard_moments(0.75, 6.0, 0.0, 1.2, &Triweight),
            Err(Error::SurvivalZero(_))
        ));
        assert!(hazard_moments(0.75, 6.0, 0.5, 0.0, &Triweight).is_err());
        assert!(matches!(
            c_opt_density(0.1, 0.0, 0.5, &Triweight),
            Err(Error::NoFiniteOptimum)
        ));
    }

    #[test]
    fn homogeneity_of_c_opt() {
        let a = 1.7_f64;
        let c1 = c_opt_hazard(0.75, 6.0, 0.54, &Triweight).unwrap();
        let c2 = c_opt_hazard(0.75 * a, 6.0 * a, 0.54, &Triweight).unwrap();
        assert!((c2 / c1 - a.powf(-0.2)).abs() < 1e-12);
    }
}
