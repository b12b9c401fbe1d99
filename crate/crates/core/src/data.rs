//! Right-censored samples, the lifetime laws used to simulate them, and CSV
//! ingestion.
//!
//! Simulation draws every variate by inverse-CDF from a [`ChaCha8Rng`] seeded
//! with `seed_from_u64(seed)`. Event and censoring times are drawn alternately
//! from the same stream, so a `(spec, seed)` pair always yields the same
//! sample. Monte Carlo replications use the seed `base_seed + index`, which
//! gives every replication its own independent stream regardless of how the
//! work is scheduled across threads.

use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One follow-up time `T = min(X, C)` with its indicator `Δ = 1{X ≤ C}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CensoredObservation {
    pub time: f64,
    /// `true` when the event was observed (uncensored).
    pub event: bool,
}

impl CensoredObservation {
    pub fn new(time: f64, event: bool) -> Result<Self> {
        if !time.is_finite() || time < 0.0 {
            return Err(Error::Config(format!(
                "observation time must be finite and non-negative, got {time}"
            )));
        }
        Ok(Self { time, event })
    }
}

/// A non-empty sample of censored observations sorted by time.
///
/// Sorting is stable: observations sharing a time keep their input order.
#[derive(Debug, Clone, PartialEq)]
pub struct CensoredSample {
    observations: Vec<CensoredObservation>,
}

impl CensoredSample {
    pub fn new(mut observations: Vec<CensoredObservation>) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::EmptySample);
        }
        for (i, obs) in observations.iter().enumerate() {
            if !obs.time.is_finite() || obs.time < 0.0 {
                return Err(Error::Row {
                    row: i + 1,
                    message: format!("invalid time {}", obs.time),
                });
            }
        }
        observations.sort_by(|a, b| a.time.total_cmp(&b.time));
        Ok(Self { observations })
    }

    /// Builds a sample from `(time, event)` pairs.
    pub fn from_pairs<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, bool)>,
    {
        Self::new(
            pairs
                .into_iter()
                .map(|(time, event)| CensoredObservation { time, event })
                .collect(),
        )
    }

    pub fn observations(&self) -> &[CensoredObservation] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.observations.iter().map(|o| o.time)
    }

    pub fn max_time(&self) -> f64 {
        self.observations[self.len() - 1].time
    }

    pub fn min_time(&self) -> f64 {
        self.observations[0].time
    }

    /// Number of uncensored observations.
    pub fn events(&self) -> usize {
        self.observations.iter().filter(|o| o.event).count()
    }

    /// Fraction of censored observations.
    pub fn censoring_fraction(&self) -> f64 {
        1.0 - self.events() as f64 / self.len() as f64
    }

    /// Largest observed time not exceeding `limit`, if any.
    pub fn last_time_before(&self, limit: f64) -> Option<f64> {
        let idx = self.observations.partition_point(|o| o.time <= limit);
        (idx > 0).then(|| self.observations[idx - 1].time)
    }
}

/// Lifetime distributions that can be sampled by inverse CDF.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum Law {
    Weibull {
        shape: f64,
        scale: f64,
    },
    Uniform {
        lower: f64,
        upper: f64,
    },
    /// Exponential with the given mean, conditioned on `[0, upper]`.
    TruncatedExponential {
        mean: f64,
        upper: f64,
    },
}

impl Law {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        match *self {
            Law::Weibull { shape, scale } => {
                if !ok(shape) || !ok(scale) {
                    return Err(Error::Config(format!(
                        "Weibull parameters must be positive, got shape={shape}, scale={scale}"
                    )));
                }
            }
            Law::Uniform { lower, upper } => {
                if !lower.is_finite() || lower < 0.0 || !upper.is_finite() || lower >= upper {
                    return Err(Error::Config(format!(
                        "Uniform requires 0 <= a < b, got a={lower}, b={upper}"
                    )));
                }
            }
            Law::TruncatedExponential { mean, upper } => {
                if !ok(mean) || !ok(upper) {
                    return Err(Error::Config(format!(
                        "truncated exponential parameters must be positive, got mean={mean}, upper={upper}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Right end point of the support (infinite for the Weibull law).
    pub fn support_end(&self) -> f64 {
        match *self {
            Law::Weibull { .. } => f64::INFINITY,
            Law::Uniform { upper, .. } => upper,
            Law::TruncatedExponential { upper, .. } => upper,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match *self {
            Law::Weibull { shape, scale } => -(-(x / scale).powf(shape)).exp_m1(),
            Law::Uniform { lower, upper } => ((x - lower) / (upper - lower)).clamp(0.0, 1.0),
            Law::TruncatedExponential { mean, upper } => {
                if x >= upper {
                    1.0
                } else {
                    (-x / mean).exp_m1() / (-upper / mean).exp_m1()
                }
            }
        }
    }

    pub fn survival(&self, x: f64) -> f64 {
        match *self {
            Law::Weibull { shape, scale } if x > 0.0 => (-(x / scale).powf(shape)).exp(),
            Law::TruncatedExponential { mean, upper } if x > 0.0 && x < upper => {
                ((-x / mean).exp() - (-upper / mean).exp()) / -(-upper / mean).exp_m1()
            }
            _ => 1.0 - self.cdf(x),
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        self.density_derivative(x, 0)
    }

    /// `order`-th derivative of the density (order 0, 1 or 2) inside the
    /// support; zero outside it.
    pub fn density_derivative(&self, x: f64, order: u8) -> f64 {
        assert!(order <= 2, "density derivatives are available up to order 2");
        if x < 0.0 || x > self.support_end() {
            return 0.0;
        }
        match *self {
            Law::Weibull { .. } => {
                let s = self.survival(x);
                let l0 = self.hazard_derivative(x, 0);
                match order {
                    0 => l0 * s,
                    1 => (self.hazard_derivative(x, 1) - l0 * l0) * s,
                    _ => {
                        let l1 = self.hazard_derivative(x, 1);
                        let l2 = self.hazard_derivative(x, 2);
                        (l2 - 3.0 * l0 * l1 + l0 * l0 * l0) * s
                    }
                }
            }
            Law::Uniform { lower, upper } => {
                if x < lower || order > 0 {
                    0.0
                } else {
                    1.0 / (upper - lower)
                }
            }
            Law::TruncatedExponential { mean, upper } => {
                let f = (-x / mean).exp() / (mean * -(-upper / mean).exp_m1());
                f * (-1.0 / mean).powi(order as i32)
            }
        }
    }

    pub fn hazard(&self, x: f64) -> f64 {
        self.hazard_derivative(x, 0)
    }

    /// `order`-th derivative of the hazard rate `f/(1-F)` (order 0, 1 or 2).
    pub fn hazard_derivative(&self, x: f64, order: u8) -> f64 {
        assert!(order <= 2, "hazard derivatives are available up to order 2");
        match *self {
            Law::Weibull { shape: k, scale: s } => {
                let z = x / s;
                match order {
                    0 => k / s * z.powf(k - 1.0),
                    1 => k * (k - 1.0) / (s * s) * z.powf(k - 2.0),
                    _ => k * (k - 1.0) * (k - 2.0) / (s * s * s) * z.powf(k - 3.0),
                }
            }
            Law::Uniform { lower, upper } => {
                if x < lower {
                    return 0.0;
                }
                let r = upper - x;
                match order {
                    0 => 1.0 / r,
                    1 => 1.0 / (r * r),
                    _ => 2.0 / (r * r * r),
                }
            }
            Law::TruncatedExponential { mean: m, upper } => {
                let w = ((x - upper) / m).exp();
                let q = 1.0 - w;
                match order {
                    0 => 1.0 / (m * q),
                    1 => w / (m * m * q * q),
                    _ => w * (1.0 + w) / (m * m * m * q * q * q),
                }
            }
        }
    }

    /// Draws one variate by inverse CDF.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        match *self {
            Law::Weibull { shape, scale } => scale * (-(-u).ln_1p()).powf(1.0 / shape),
            Law::Uniform { lower, upper } => lower + (upper - lower) * u,
            Law::TruncatedExponential { mean, upper } => {
                // F^{-1}(u) = -mean * ln(1 - u (1 - e^{-upper/mean}))
                -mean * (u * (-upper / mean).exp_m1()).ln_1p()
            }
        }
    }
}

/// A simulation scenario: independent event and censoring laws plus sample
/// size and seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub event_law: Law,
    pub censor_law: Law,
    pub n: usize,
    pub seed: u64,
}

impl ScenarioSpec {
    /// Weibull(3, 1) events censored by Uniform(0, 1.3): the increasing-hazard
    /// scenario.
    pub fn weibull_hazard(n: usize, seed: u64) -> Self {
        Self {
            event_law: Law::Weibull { shape: 3.0, scale: 1.0 },
            censor_law: Law::Uniform { lower: 0.0, upper: 1.3 },
            n,
            seed,
        }
    }

    /// Exponential(mean 1) events and exponential(mean 2) censoring, both
    /// truncated to `[0, 5]`: the decreasing-density scenario.
    pub fn truncexp_density(n: usize, seed: u64) -> Self {
        Self {
            event_law: Law::TruncatedExponential { mean: 1.0, upper: 5.0 },
            censor_law: Law::TruncatedExponential { mean: 2.0, upper: 5.0 },
            n,
            seed,
        }
    }

    /// Looks up a built-in scenario by its CLI name.
    pub fn named(name: &str, n: usize, seed: u64) -> Result<Self> {
        match name {
            "weibull-hazard" => Ok(Self::weibull_hazard(n, seed)),
            "truncexp-density" => Ok(Self::truncexp_density(n, seed)),
            other => Err(Error::Config(format!(
                "unknown scenario '{other}' (expected weibull-hazard or truncexp-density)"
            ))),
        }
    }

    pub fn with_n(self, n: usize) -> Self {
        Self { n, ..self }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        self.event_law.validate()?;
        self.censor_law.validate()?;
        if self.n == 0 {
            return Err(Error::Config("sample size must be positive".into()));
        }
        Ok(())
    }

    /// `1 - H(x) = (1 - F(x)) (1 - G(x))`.
    pub fn follow_up_survival(&self, x: f64) -> f64 {
        self.event_law.survival(x) * self.censor_law.survival(x)
    }

    /// Distribution function `H` of the follow-up time.
    pub fn follow_up_cdf(&self, x: f64) -> f64 {
        1.0 - self.follow_up_survival(x)
    }

    /// End point of the support of `H`.
    pub fn follow_up_end(&self) -> f64 {
        self.event_law.support_end().min(self.censor_law.support_end())
    }

    /// Probability that an observation is uncensored, `∫ g(c) F(c) dc`,
    /// by composite Simpson quadrature against the censoring density.
    pub fn uncensored_probability(&self) -> f64 {
        let end = self.censor_law.support_end();
        let start = match self.censor_law {
            Law::Uniform { lower, .. } => lower,
            _ => 0.0,
        };
        let end = if end.is_finite() { end } else { 50.0 };
        let m = 20_000;
        let h = (end - start) / m as f64;
        let g = |c: f64| self.censor_law.density(c) * self.event_law.cdf(c);
        let mut acc = g(start) + g(end);
        for i in 1..m {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * g(start + i as f64 * h);
        }
        acc * h / 3.0
    }
}

/// Draws `spec.n` censored observations.
pub fn generate(spec: &ScenarioSpec) -> Result<CensoredSample> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let observations = (0..spec.n)
        .map(|_| {
            let x = spec.event_law.sample(&mut rng);
            let c = spec.censor_law.sample(&mut rng);
            CensoredObservation {
                time: x.min(c),
                event: x <= c,
            }
        })
        .collect();
    CensoredSample::new(observations)
}

/// Quantile `H^{-1}(p)` of the follow-up time, by bisection to an absolute
/// tolerance of 1e-10.
pub fn quantile(spec: &ScenarioSpec, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Config(format!("quantile level must lie in (0, 1), got {p}")));
    }
    spec.event_law.validate()?;
    spec.censor_law.validate()?;
    let mut lo = 0.0;
    let mut hi = spec.follow_up_end();
    if !hi.is_finite() {
        hi = 1.0;
        while spec.follow_up_cdf(hi) < p {
            hi *= 2.0;
        }
    }
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if spec.follow_up_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Reads a `time,event` CSV file. See [`read_csv_from`].
pub fn read_csv(path: impl AsRef<Path>) -> Result<CensoredSample> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_csv_from(file)
}

/// Parses two-column `time,event` records. A `time,event` header line is
/// skipped when present; rows are numbered by their line in the input.
pub fn read_csv_from<R: Read>(reader: R) -> Result<CensoredSample> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut observations = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Row {
            row: idx + 1,
            message: e.to_string(),
        })?;
        let row = record.position().map_or(idx + 1, |p| p.line() as usize);
        if idx == 0
            && record.len() == 2
            && record[0].eq_ignore_ascii_case("time")
            && record[1].eq_ignore_ascii_case("event")
        {
            continue;
        }
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != 2 {
            return Err(Error::Row {
                row,
                message: format!("expected 2 columns, found {}", record.len()),
            });
        }
        let time: f64 = record[0].parse().map_err(|_| Error::Row {
            row,
            message: format!("cannot parse time '{}'", &record[0]),
        })?;
        if !time.is_finite() || time < 0.0 {
            return Err(Error::Row {
                row,
                message: format!("time must be finite and non-negative, got {time}"),
            });
        }
        let event = match &record[1] {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::Row {
                    row,
                    message: format!("event must be 0 or 1, got '{other}'"),
                })
            }
        };
        observations.push(CensoredObservation { time, event });
    }
    CensoredSample::new(observations)
}

/// Writes the sample as `time,event` CSV with a header line. Times use the
/// shortest representation that parses back to the same `f64`.
pub fn write_csv<W: Write>(sample: &CensoredSample, mut out: W) -> Result<()> {
    let io = |e: std::io::Error| Error::Io(e.to_string());
    writeln!(out, "time,event").map_err(io)?;
    for obs in sample.observations() {
        writeln!(out, "{:?},{}", obs.time, u8::from(obs.event)).map_err(io)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_rows_are_sorted() {
        let s = read_csv_from("1.0,1\n0.5,0\n".as_bytes()).unwrap();
        let pairs: Vec<_> = s.observations().iter().map(|o| (o.time, o.event)).collect();
        assert_eq!(pairs, vec![(0.5, false), (1.0, true)]);
    }

    #[test]
    fn csv_negative_time_names_row() {
        let err = read_csv_from("-1.0,1\n".as_bytes()).unwrap_err();
        match err {
            Error::Row { row, .. } => assert_eq!(row, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_empty_file() {
        let err = read_csv_from("".as_bytes()).unwrap_err();
        assert_eq!(err.to_string(), "empty sample");
    }

    #[test]
    fn csv_header_and_crlf() {
        let s = read_csv_from("time,event\r\n2,1\r\n1,0\r\n".as_bytes()).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.min_time(), 1.0);
    }

    #[test]
    fn csv_bad_event_and_malformed_rows() {
        let err = read_csv_from("1.0,1\n2.0,2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Row { row: 2, .. }), "{err:?}");
        let err = read_csv_from("1.0,1\nabc,0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Row { row: 2, .. }), "{err:?}");
        let err = read_csv_from("1.0,1,3\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Row { row: 1, .. }), "{err:?}");
    }

    #[test]
    fn missing_file() {
        assert!(matches!(read_csv("/definitely/not/here.csv"), Err(Error::Io(_))));
    }

    #[test]
    fn ties_keep_input_order() {
        let s = CensoredSample::from_pairs([(1.0, false), (0.5, true), (1.0, true)]).unwrap();
        let ev: Vec<_> = s.observations().iter().map(|o| o.event).collect();
        assert_eq!(ev, vec![true, false, true]);
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = ScenarioSpec::weibull_hazard(200, 99);
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        assert_ne!(generate(&spec).unwrap(), generate(&spec.with_seed(100)).unwrap());
    }

    #[test]
    fn late_censoring_leaves_everything_uncensored() {
        let spec = ScenarioSpec {
            censor_law: Law::Uniform {
                lower: 10.0,
                upper: 11.0,
            },
            ..ScenarioSpec::weibull_hazard(100, 3)
        };
        let s = generate(&spec).unwrap();
        assert!(s.observations().iter().all(|o| o.event));
    }

    #[test]
    fn invalid_laws_are_rejected() {
        let bad = ScenarioSpec {
            censor_law: Law::Uniform { lower: 2.0, upper: 1.0 },
            ..ScenarioSpec::weibull_hazard(10, 0)
        };
        assert!(matches!(generate(&bad), Err(Error::Config(_))));
        let bad = ScenarioSpec {
            event_law: Law::Weibull {
                shape: -1.0,
                scale: 1.0,
            },
            ..ScenarioSpec::weibull_hazard(10, 0)
        };
        assert!(generate(&bad).is_err());
        assert!(generate(&ScenarioSpec::weibull_hazard(0, 0)).is_err());
        assert!(ScenarioSpec::named("nope", 10, 0).is_err());
    }

    #[test]
    fn quantile_near_zero_is_zero() {
        let spec = ScenarioSpec::weibull_hazard(1, 0);
        assert!(quantile(&spec, 1e-12).unwrap() < 1e-3);
        assert!(quantile(&spec, 0.0).is_err());
        assert!(quantile(&spec, 1.0).is_err());
    }

    #[test]
    fn hazard_closed_forms_match_finite_differences() {
        let laws = [
            Law::Weibull { shape: 3.0, scale: 1.0 },
            Law::TruncatedExponential { mean: 1.0, upper: 5.0 },
            Law::Uniform { lower: 0.0, upper: 2.0 },
        ];
        let h = 1e-4;
        for law in laws {
            for &x in &[0.3, 0.7, 1.1] {
                let hz = |t: f64| law.density(t) / law.survival(t);
                assert!((law.hazard(x) - hz(x)).abs() < 1e-10 * (1.0 + hz(x)));
                let d1 = (hz(x + h) - hz(x - h)) / (2.0 * h);
                let d2 = (hz(x + h) - 2.0 * hz(x) + hz(x - h)) / (h * h);
                assert!((law.hazard_derivative(x, 1) - d1).abs() < 1e-5 * (1.0 + d1.abs()));
                assert!((law.hazard_derivative(x, 2) - d2).abs() < 1e-4 * (1.0 + d2.abs()));
                let f = |t: f64| law.density(t);
                let fd2 = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
                assert!((law.density_derivative(x, 2) - fd2).abs() < 1e-4 * (1.0 + fd2.abs()));
            }
        }
    }
}
