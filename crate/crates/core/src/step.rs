//! Right-continuous step functions and the classical estimators built on a
//! censored sample: Nelson-Aalen, Kaplan-Meier, the empirical distribution
//! of the follow-up times and a censoring-distribution estimator that stays
//! strictly below one.

use crate::data::CensoredSample;
use crate::error::{Error, Result};

/// Right-continuous piecewise-constant function on `[0, ∞)`.
///
/// `values[i]` holds on `[knots[i], knots[i + 1])`; `value_at_origin` holds
/// on `[0, knots[0])`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    knots: Vec<f64>,
    values: Vec<f64>,
    value_at_origin: f64,
}

impl StepFunction {
    pub fn new(knots: Vec<f64>, values: Vec<f64>, value_at_origin: f64) -> Result<Self> {
        if knots.len() != values.len() {
            return Err(Error::Config(format!(
                "{} knots but {} values",
                knots.len(),
                values.len()
            )));
        }
        if let Some(w) = knots.windows(2).find(|w| !(w[0] < w[1])) {
            return Err(Error::Config(format!(
                "knots must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        if knots.iter().chain(values.iter()).any(|v| !v.is_finite()) || !value_at_origin.is_finite() {
            return Err(Error::Config("step function entries must be finite".into()));
        }
        Ok(Self {
            knots,
            values,
            value_at_origin,
        })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_at_origin(&self) -> f64 {
        self.value_at_origin
    }

    /// Value of the last knot `≤ t`.
    pub fn eval(&self, t: f64) -> f64 {
        match self.knots.partition_point(|&k| k <= t) {
            0 => self.value_at_origin,
            i => self.values[i - 1],
        }
    }

    /// Left limit `f(t-)`.
    pub fn left_limit(&self, t: f64) -> f64 {
        match self.knots.partition_point(|&k| k < t) {
            0 => self.value_at_origin,
            i => self.values[i - 1],
        }
    }

    /// Largest jump `|f(t) - f(t-)|` over all knots.
    pub fn max_jump(&self) -> f64 {
        let mut prev = self.value_at_origin;
        let mut best = 0.0_f64;
        for &v in &self.values {
            best = best.max((v - prev).abs());
            prev = v;
        }
        best
    }

    /// `(knot, value)` pairs.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.knots.iter().copied().zip(self.values.iter().copied())
    }

    /// Pointwise `scale * f + offset`.
    pub fn affine(&self, scale: f64, offset: f64) -> StepFunction {
        StepFunction {
            knots: self.knots.clone(),
            values: self.values.iter().map(|v| scale * v + offset).collect(),
            value_at_origin: scale * self.value_at_origin + offset,
        }
    }
}

/// Groups the sorted sample into distinct times with
/// `(time, events, at_risk)` where `at_risk = #{j : T_j ≥ time}`.
fn risk_table(sample: &CensoredSample) -> Vec<(f64, usize, usize)> {
    let obs = sample.observations();
    let n = obs.len();
    let mut table = Vec::new();
    let mut i = 0;
    while i < n {
        let t = obs[i].time;
        let mut j = i;
        let mut d = 0;
        while j < n && obs[j].time == t {
            d += usize::from(obs[j].event);
            j += 1;
        }
        table.push((t, d, n - i));
        i = j;
    }
    table
}

/// Nelson-Aalen estimator `Λ_n(t) = Σ_{T_i ≤ t} Δ_i / #{j : T_j ≥ T_i}`.
/// Knots sit at the uncensored times only.
pub fn nelson_aalen(sample: &CensoredSample) -> StepFunction {
    let mut knots = Vec::new();
    let mut values = Vec::new();
    let mut acc = 0.0;
    for (t, d, r) in risk_table(sample) {
        if d > 0 {
            acc += d as f64 / r as f64;
            knots.push(t);
            values.push(acc);
        }
    }
    StepFunction {
        knots,
        values,
        value_at_origin: 0.0,
    }
}

/// Kaplan-Meier estimate of the event-time distribution function,
/// `F_n(t) = 1 - Π_{t_i ≤ t} (1 - d_i / r_i)` over distinct uncensored times.
pub fn kaplan_meier(sample: &CensoredSample) -> StepFunction {
    let mut knots = Vec::new();
    let mut values = Vec::new();
    let mut surv = 1.0;
    for (t, d, r) in risk_table(sample) {
        if d > 0 {
            surv *= 1.0 - d as f64 / r as f64;
            knots.push(t);
            values.push((1.0 - surv).clamp(0.0, 1.0));
        }
    }
    StepFunction {
        knots,
        values,
        value_at_origin: 0.0,
    }
}

/// Empirical distribution function `H_n` of the follow-up times.
pub fn empirical_h(sample: &CensoredSample) -> StepFunction {
    let n = sample.len() as f64;
    let mut knots: Vec<f64> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    for (i, t) in sample.times().enumerate() {
        let value = (i + 1) as f64 / n;
        match knots.last() {
            Some(&last) if last == t => *values.last_mut().unwrap() = value,
            _ => {
                knots.push(t);
                values.push(value);
            }
        }
    }
    StepFunction {
        knots,
        values,
        value_at_origin: 0.0,
    }
}

/// Estimator of the censoring distribution that never reaches one:
///
/// `G_n(t) = 1 - Π_{i=1}^{k-1} ((n-i+1)/(n-i+2))^{1-Δ_(i)}` on
/// `[T_(k-1), T_(k))`, zero before `T_(1)` and the full product beyond
/// `T_(n)`. Among tied times uncensored observations are ordered first.
pub fn censoring_mp(sample: &CensoredSample) -> StepFunction {
    let mut order: Vec<_> = sample.observations().to_vec();
    // stable: ties keep input order apart from events-first
    order.sort_by(|a, b| a.time.total_cmp(&b.time).then(b.event.cmp(&a.event)));
    let n = order.len() as f64;
    let mut knots: Vec<f64> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut prod = 1.0;
    for (idx, obs) in order.iter().enumerate() {
        let i = (idx + 1) as f64;
        if !obs.event {
            prod *= (n - i + 1.0) / (n - i + 2.0);
        }
        let value = 1.0 - prod;
        match knots.last() {
            Some(&last) if last == obs.time => *values.last_mut().unwrap() = value,
            _ => {
                knots.push(obs.time);
                values.push(value);
            }
        }
    }
    StepFunction {
        knots,
        values,
        value_at_origin: 0.0,
    }
}
