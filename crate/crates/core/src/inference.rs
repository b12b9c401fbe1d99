//! Pointwise confidence intervals for a monotone hazard or density.
//!
//! Three constructions share one fitted context:
//!
//! - the raw Grenander-type estimate with its cube-root Chernoff limit,
//! - the smoothed estimate at an undersmoothing bandwidth `c n^{-1/4}`, where
//!   the bias is negligible and only the variance is plugged in,
//! - the smoothed estimate at `c n^{-5/17}` with the bias estimated from a
//!   second derivative at the wider bandwidth `c n^{-1/17}`.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::asymptotics::PlugIn;
use crate::data::CensoredSample;
use crate::error::{Error, Result};
use crate::isotonic::{grenander_density, grenander_hazard, Direction, GrenanderFit};
use crate::kernel::Kernel;
use crate::smoothing::{smooth_estimate, smooth_second_derivative, Bandwidth, SmoothingMode, WindowPolicy};
use crate::step::{censoring_mp, empirical_h, StepFunction};

/// 0.975 quantile of the Chernoff distribution, the law of
/// `argmin_t {W(t) + t²}`.
pub const CHERNOFF_Q975: f64 = 0.998181;

/// A tabulated Chernoff quantile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChernoffQuantile {
    pub p: f64,
    pub q: f64,
}

impl ChernoffQuantile {
    /// Quantile for a two-sided interval at level `alpha`; only `alpha = 0.05`
    /// is tabulated.
    pub fn for_alpha(alpha: f64) -> Result<Self> {
        if (alpha - 0.05).abs() > 1e-12 {
            return Err(Error::UnsupportedAlpha(alpha));
        }
        Ok(Self {
            p: 0.975,
            q: CHERNOFF_Q975,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Hazard,
    Density,
}

impl Target {
    pub fn name(self) -> &'static str {
        match self {
            Target::Hazard => "hazard",
            Target::Density => "density",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    GrenanderChernoff,
    SgUndersmooth,
    SgBiasEstimate,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::GrenanderChernoff, Method::SgUndersmooth, Method::SgBiasEstimate];

    pub fn name(self) -> &'static str {
        match self {
            Method::GrenanderChernoff => "grenander",
            Method::SgUndersmooth => "sg-under",
            Method::SgBiasEstimate => "sg-bias",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConfidenceInterval {
    pub center: f64,
    pub lower: f64,
    pub upper: f64,
    pub method: Method,
    pub target: Target,
    pub x0: f64,
    pub alpha: f64,
    /// Bandwidth of the point estimate; absent for the raw estimator.
    pub bandwidth: Option<f64>,
}

impl ConfidenceInterval {
    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }
}

/// A Grenander-type fit together with the survival-type estimator used in
/// the variance plug-ins: `H_n` for the hazard, the censoring estimator
/// `G_n` for the density.
#[derive(Debug, Clone)]
pub struct FitContext {
    pub target: Target,
    pub n: usize,
    /// Right end of the fit; also the support end used by the smoothers.
    pub end: f64,
    pub grenander: GrenanderFit,
    plug_in_cdf: StepFunction,
}

impl FitContext {
    /// Fits on `[0, end]`. The hazard is taken nondecreasing; the density
    /// follows `direction`.
    pub fn new(sample: &CensoredSample, target: Target, direction: Direction, end: f64) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::EmptySample);
        }
        let (grenander, plug_in_cdf) = match target {
            Target::Hazard => (grenander_hazard(sample, end)?, empirical_h(sample)),
            Target::Density => (grenander_density(sample, end, direction)?, censoring_mp(sample)),
        };
        Ok(Self {
            target,
            n: sample.len(),
            end,
            grenander,
            plug_in_cdf,
        })
    }

    /// Fits up to the last observed time not exceeding `limit`.
    pub fn truncated(sample: &CensoredSample, target: Target, direction: Direction, limit: f64) -> Result<Self> {
        let end = sample
            .last_time_before(limit)
            .filter(|&t| t > 0.0)
            .ok_or(Error::EmptyKnotSet { start: 0.0, end: limit })?;
        Self::new(sample, target, direction, end)
    }

    /// `1 - H_n(x)` or `1 - G_n(x)`.
    pub fn survival_factor(&self, x: f64) -> Result<f64> {
        let s = 1.0 - self.plug_in_cdf.eval(x);
        if s <= 0.0 {
            return Err(Error::SurvivalZero(x));
        }
        Ok(s)
    }

    pub fn smoothed(&self, kernel: &dyn Kernel, b: Bandwidth, x: f64, mode: SmoothingMode) -> Result<f64> {
        smooth_estimate(&self.grenander.estimate, kernel, b, x, mode, self.end)
    }

    /// Plug-in quantities at `x`: the smoothed estimate at `b`, its second
    /// derivative at `b2` (zero when `b2` is `None`) and the survival factor.
    pub fn plug_in(
        &self,
        kernel: &dyn Kernel,
        b: Bandwidth,
        b2: Option<Bandwidth>,
        x: f64,
        options: &SmoothCiOptions,
    ) -> Result<PlugIn> {
        let value = self.smoothed(kernel, b, x, options.mode)?;
        let second_derivative = match b2 {
            Some(b2) => smooth_second_derivative(&self.grenander.estimate, kernel, b2, x, self.end, options.window)
                .map_err(|e| match e {
                    Error::NotInterior { x, bandwidth } => Error::BiasBandwidthMargin { x0: x, bandwidth },
                    other => other,
                })?,
            None => 0.0,
        };
        Ok(PlugIn {
            value,
            second_derivative,
            survival: self.survival_factor(x)?,
        })
    }
}

/// Interval for the raw Grenander-type estimate:
/// `est(x0) ± n^{-1/3} |4 est(x0) est'(x0) / S(x0)|^{1/3} q`, with `est'` the
/// difference quotient across the enclosing jumps and `q` the Chernoff
/// quantile.
pub fn grenander_ci(ctx: &FitContext, x0: f64, alpha: f64) -> Result<ConfidenceInterval> {
    let q = ChernoffQuantile::for_alpha(alpha)?.q;
    let est = &ctx.grenander.estimate;
    let center = est.eval(x0)?;
    let derivative = est.jump_derivative(x0)?;
    let survival = ctx.survival_factor(x0)?;
    let c_hat = (4.0 * center * derivative / survival).abs().cbrt();
    let half = (ctx.n as f64).powf(-1.0 / 3.0) * c_hat * q;
    Ok(ConfidenceInterval {
        center,
        lower: center - half,
        upper: center + half,
        method: Method::GrenanderChernoff,
        target: ctx.target,
        x0,
        alpha,
        bandwidth: None,
    })
}

/// Which bandwidth constant enters the plug-in variance and bias.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentConstant {
    /// The scenario constant `c` itself.
    Nominal,
    /// `b n^{1/5}` for the bandwidth actually used, so that
    /// `n^{-2/5} σ̂` is the standard deviation of the estimate at `b`.
    Effective,
}

/// Knobs of the smoothed intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothCiOptions {
    pub mode: SmoothingMode,
    pub window: WindowPolicy,
    pub constant: MomentConstant,
    /// Shift the interval by the estimated bias instead of widening it
    /// symmetrically.
    pub shift_by_bias: bool,
}

impl Default for SmoothCiOptions {
    fn default() -> Self {
        Self {
            mode: SmoothingMode::Standard,
            window: WindowPolicy::Clipped,
            constant: MomentConstant::Effective,
            shift_by_bias: false,
        }
    }
}

fn normal_quantile(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let normal = Normal::standard();
    Ok(normal.inverse_cdf(1.0 - alpha / 2.0))
}

#[allow(clippy::too_many_arguments)]
fn smoothed_interval(
    ctx: &FitContext,
    kernel: &dyn Kernel,
    x0: f64,
    c: f64,
    alpha: f64,
    rate: f64,
    bias_rate: Option<f64>,
    options: &SmoothCiOptions,
    method: Method,
) -> Result<ConfidenceInterval> {
    let z = normal_quantile(alpha)?;
    let n = ctx.n as f64;
    let b = Bandwidth::from_rate(c, ctx.n, rate)?;
    let b2 = bias_rate.map(|r| Bandwidth::from_rate(c, ctx.n, r)).transpose()?;
    let plug = ctx.plug_in(kernel, b, b2, x0, options)?;
    let c_moments = match options.constant {
        MomentConstant::Nominal => c,
        MomentConstant::Effective => b.get() * n.powf(0.2),
    };
    let m = plug.moments(c_moments, kernel)?;
    let scale = n.powf(-0.4);
    let (center, half) = if options.shift_by_bias {
        (plug.value - scale * m.mu, scale * m.sigma() * z)
    } else {
        (plug.value, scale * (m.sigma() * z + m.mu))
    };
    // A negative bias estimate could flip the symmetric interval; its width
    // is kept nonnegative.
    let half = half.abs();
    Ok(ConfidenceInterval {
        center,
        lower: center - half,
        upper: center + half,
        method,
        target: ctx.target,
        x0,
        alpha,
        bandwidth: Some(b.get()),
    })
}

/// Normal interval around the smoothed estimate at `b = c n^{-1/4}`, with
/// the bias term omitted.
pub fn sg_ci_undersmooth(
    ctx: &FitContext,
    kernel: &dyn Kernel,
    x0: f64,
    c: f64,
    alpha: f64,
    options: &SmoothCiOptions,
) -> Result<ConfidenceInterval> {
    smoothed_interval(ctx, kernel, x0, c, alpha, 0.25, None, options, Method::SgUndersmooth)
}

/// Normal interval around the smoothed estimate at `b = c n^{-5/17}`,
/// `center ± n^{-2/5}(σ̂ z + μ̂)`, with `μ̂` from the second derivative at
/// `b₁ = c n^{-1/17}`.
pub fn sg_ci_bias_estimate(
    ctx: &FitContext,
    kernel: &dyn Kernel,
    x0: f64,
    c: f64,
    alpha: f64,
    options: &SmoothCiOptions,
) -> Result<ConfidenceInterval> {
    smoothed_interval(
        ctx,
        kernel,
        x0,
        c,
        alpha,
        5.0 / 17.0,
        Some(1.0 / 17.0),
        options,
        Method::SgBiasEstimate,
    )
}

/// Dispatches on `method`.
pub fn confidence_interval(
    ctx: &FitContext,
    kernel: &dyn Kernel,
    method: Method,
    x0: f64,
    c: f64,
    alpha: f64,
    options: &SmoothCiOptions,
) -> Result<ConfidenceInterval> {
    match method {
        Method::GrenanderChernoff => grenander_ci(ctx, x0, alpha),
        Method::SgUndersmooth => sg_ci_undersmooth(ctx, kernel, x0, c, alpha, options),
        Method::SgBiasEstimate => sg_ci_bias_estimate(ctx, kernel, x0, c, alpha, options),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate, ScenarioSpec};
    use crate::kernel::Triweight;

    fn weibull_ctx(n: usize, seed: u64) -> FitContext {
        let sample = generate(&ScenarioSpec::weibull_hazard(n, seed)).unwrap();
        FitContext::truncated(&sample, Target::Hazard, Direction::Increasing, 0.973).unwrap()
    }

    #[test]
    fn chernoff_alpha_is_restricted() {
        assert!(ChernoffQuantile::for_alpha(0.05).is_ok());
        assert!(matches!(
            ChernoffQuantile::for_alpha(0.1),
            Err(Error::UnsupportedAlpha(_))
        ));
    }

    #[test]
    fn grenander_interval_at_origin_is_undefined() {
        let ctx = weibull_ctx(200, 3);
        assert!(matches!(
            grenander_ci(&ctx, 0.0, 0.05),
            Err(Error::DerivativeUndefined(_))
        ));
    }

    #[test]
    fn intervals_contain_their_centers() {
        let ctx = weibull_ctx(500, 11);
        let opts = SmoothCiOptions::default();
        for method in Method::ALL {
            let ci = confidence_interval(&ctx, &Triweight, method, 0.5, 1.2, 0.05, &opts).unwrap();
            assert!(ci.lower <= ci.center && ci.center <= ci.upper, "{ci:?}");
            assert!(((ci.center - ci.lower) - (ci.upper - ci.center)).abs() < 1e-12);
        }
    }

    #[test]
    fn interior_policy_reports_margin_error() {
        let ctx = weibull_ctx(500, 11);
        let opts = SmoothCiOptions {
            window: WindowPolicy::Interior,
            ..SmoothCiOptions::default()
        };
        assert!(matches!(
            sg_ci_bias_estimate(&ctx, &Triweight, 0.5, 1.2, 0.05, &opts),
            Err(Error::BiasBandwidthMargin { .. })
        ));
    }

    #[test]
    fn survival_zero_past_last_observation() {
        let sample = CensoredSample::from_pairs([(1.0, true), (2.0, false), (3.0, true)]).unwrap();
        let ctx = FitContext::new(&sample, Target::Hazard, Direction::Increasing, 3.0).unwrap();
        assert!(matches!(ctx.survival_factor(3.0), Err(Error::SurvivalZero(_))));
        let ctx = FitContext::new(&sample, Target::Density, Direction::Decreasing, 3.0).unwrap();
        assert!(ctx.survival_factor(3.0).unwrap() > 0.0);
    }
}
