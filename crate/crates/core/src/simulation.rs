//! Monte Carlo harness: interval coverage studies, the convergence rate of
//! the monotone envelope and consistency sweeps.
//!
//! Replication `i` draws its sample from seed `base_seed + i`, so results do
//! not depend on how replications are spread over worker threads.

use rayon::prelude::*;
use serde::Serialize;

use crate::data::{generate, quantile, ScenarioSpec};
use crate::error::{Error, Result};
use crate::inference::{confidence_interval, FitContext, Method, SmoothCiOptions, Target};
use crate::isotonic::{sup_distance, Direction};
use crate::kernel::Triweight;
use crate::smoothing::{smooth_estimate, Bandwidth, SmoothingMode};

/// Level of the follow-up distribution at which the data are truncated.
pub const TRUNCATION_LEVEL: f64 = 0.9;

/// Right end of the fits: the last observation not exceeding the `p`-quantile
/// of the follow-up distribution, or the last observation overall when `p`
/// is `None`.
pub fn truncation_limit(scenario: &ScenarioSpec, level: Option<f64>) -> Result<f64> {
    match level {
        Some(p) => quantile(scenario, p),
        None => Ok(f64::INFINITY),
    }
}

/// Failure fraction above which a report row is flagged.
pub const FAILURE_WARNING_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudySpec {
    pub scenario: ScenarioSpec,
    pub target: Target,
    /// Monotonicity of the density; ignored for the hazard.
    pub direction: Direction,
    pub methods: Vec<Method>,
    pub x0_points: Vec<f64>,
    pub n_grid: Vec<usize>,
    pub replications: usize,
    pub alpha: f64,
    pub base_seed: u64,
    /// Bandwidth constant for the smoothed intervals.
    pub c: f64,
    pub options: SmoothCiOptions,
    /// Follow-up quantile level at which fits are truncated; `None` fits up
    /// to the last observation.
    pub truncation: Option<f64>,
    /// Worker threads; `None` uses rayon's default pool.
    pub workers: Option<usize>,
}

impl StudySpec {
    /// Hazard study at `x0 = 0.5` on the Weibull scenario.
    pub fn hazard_study(replications: usize, base_seed: u64) -> Self {
        Self {
            scenario: ScenarioSpec::weibull_hazard(100, base_seed),
            target: Target::Hazard,
            direction: Direction::Increasing,
            methods: Method::ALL.to_vec(),
            x0_points: vec![0.5],
            n_grid: vec![100, 500, 1000, 5000],
            replications,
            alpha: 0.05,
            base_seed,
            c: 1.2,
            options: SmoothCiOptions::default(),
            truncation: None,
            workers: None,
        }
    }

    /// Density study at `x0 = 1` on the truncated-exponential scenario.
    pub fn density_study(replications: usize, base_seed: u64) -> Self {
        Self {
            scenario: ScenarioSpec::truncexp_density(100, base_seed),
            target: Target::Density,
            direction: Direction::Decreasing,
            methods: Method::ALL.to_vec(),
            x0_points: vec![1.0],
            n_grid: vec![100, 500, 1000, 5000, 10000],
            replications,
            alpha: 0.05,
            base_seed,
            c: 5.14,
            options: SmoothCiOptions::default(),
            truncation: None,
            workers: None,
        }
    }

    /// Preset by number: 1 is the hazard study, 2 the density study.
    pub fn table(number: u8, replications: usize, base_seed: u64) -> Result<Self> {
        match number {
            1 => Ok(Self::hazard_study(replications, base_seed)),
            2 => Ok(Self::density_study(replications, base_seed)),
            other => Err(Error::Config(format!("unknown table {other} (expected 1 or 2)"))),
        }
    }

    /// Same study over an `x0` grid at a single sample size.
    pub fn sweep(mut self, x0_points: Vec<f64>, n: usize) -> Self {
        self.x0_points = x0_points;
        self.n_grid = vec![n];
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        if self.n_grid.is_empty() || self.n_grid.contains(&0) {
            return Err(Error::Config("sample sizes must be positive".into()));
        }
        if self.methods.is_empty() || self.x0_points.is_empty() {
            return Err(Error::Config("need at least one method and one point".into()));
        }
        let end = self.scenario.follow_up_end();
        if let Some(&x) = self.x0_points.iter().find(|&&x| !(x > 0.0 && x < end)) {
            return Err(Error::Config(format!("x0 = {x} is not interior to (0, {end})")));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        Ok(())
    }

    /// True value of the target at `x`.
    pub fn truth(&self, x: f64) -> f64 {
        match self.target {
            Target::Hazard => self.scenario.event_law.hazard(x),
            Target::Density => self.scenario.event_law.density(x),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageRow {
    pub method: Method,
    pub target: Target,
    pub n: usize,
    pub x0: f64,
    pub average_length: f64,
    pub coverage: f64,
    pub failures: usize,
    pub replications: usize,
}

impl CoverageRow {
    pub fn failure_fraction(&self) -> f64 {
        self.failures as f64 / self.replications as f64
    }

    pub fn needs_warning(&self) -> bool {
        self.failure_fraction() > FAILURE_WARNING_FRACTION
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub rows: Vec<CoverageRow>,
}

impl CoverageReport {
    pub fn row(&self, method: Method, n: usize, x0: f64) -> Option<&CoverageRow> {
        self.rows.iter().find(|r| r.method == method && r.n == n && r.x0 == x0)
    }

    /// Human-readable warnings for rows with too many failed replications.
    pub fn warnings(&self) -> Vec<String> {
        self.rows
            .iter()
            .filter(|r| r.needs_warning())
            .map(|r| {
                format!(
                    "{} n={} x0={}: {} of {} replications failed",
                    r.method.name(),
                    r.n,
                    r.x0,
                    r.failures,
                    r.replications
                )
            })
            .collect()
    }
}

/// Interval outcome of one replication: `Some((length, covered))`, or `None`
/// when the interval could not be computed.
type Outcome = Option<(f64, bool)>;

fn with_pool<T: Send>(workers: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(job()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
            Ok(pool.install(job))
        }
    }
}

fn replicate(spec: &StudySpec, n: usize, limit: f64, index: usize) -> Vec<Outcome> {
    let seed = spec.base_seed.wrapping_add(index as u64);
    let scenario = spec.scenario.with_n(n).with_seed(seed);
    let slots = spec.methods.len() * spec.x0_points.len();
    let ctx = generate(&scenario).and_then(|sample| FitContext::truncated(&sample, spec.target, spec.direction, limit));
    let ctx = match ctx {
        Ok(ctx) => ctx,
        Err(_) => return vec![None; slots],
    };
    let mut out = Vec::with_capacity(slots);
    for &method in &spec.methods {
        for &x0 in &spec.x0_points {
            let truth = spec.truth(x0);
            out.push(
                confidence_interval(&ctx, &Triweight, method, x0, spec.c, spec.alpha, &spec.options)
                    .ok()
                    .filter(|ci| ci.lower.is_finite() && ci.upper.is_finite())
                    .map(|ci| (ci.length(), ci.contains(truth))),
            );
        }
    }
    out
}

/// Runs every `(method, n, x0)` cell of the study.
pub fn run_study(spec: &StudySpec) -> Result<CoverageReport> {
    spec.validate()?;
    let limit = truncation_limit(&spec.scenario, spec.truncation)?;
    for &x in &spec.x0_points {
        if !spec.truth(x).is_finite() {
            return Err(Error::Config(format!("true value unavailable at x0 = {x}")));
        }
    }
    let mut rows = Vec::new();
    for &n in &spec.n_grid {
        let outcomes: Vec<Vec<Outcome>> = with_pool(spec.workers, || {
            (0..spec.replications)
                .into_par_iter()
                .map(|i| replicate(spec, n, limit, i))
                .collect()
        })?;
        let mut slot = 0;
        for &method in &spec.methods {
            for &x0 in &spec.x0_points {
                let (mut len_sum, mut covered, mut ok, mut failures) = (0.0, 0usize, 0usize, 0usize);
                for rep in &outcomes {
                    match rep[slot] {
                        Some((len, hit)) => {
                            len_sum += len;
                            ok += 1;
                            covered += usize::from(hit);
                        }
                        None => failures += 1,
                    }
                }
                let (average_length, coverage) = if ok == 0 {
                    (f64::NAN, f64::NAN)
                } else {
                    (len_sum / ok as f64, covered as f64 / ok as f64)
                };
                rows.push(CoverageRow {
                    method,
                    target: spec.target,
                    n,
                    x0,
                    average_length,
                    coverage,
                    failures,
                    replications: spec.replications,
                });
                slot += 1;
            }
        }
    }
    Ok(CoverageReport { rows })
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len();
    if m == 0 {
        return f64::NAN;
    }
    if m % 2 == 1 {
        values[m / 2]
    } else {
        0.5 * (values[m / 2 - 1] + values[m / 2])
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeRate {
    /// `(n, median sup distance)`.
    pub points: Vec<(usize, f64)>,
    pub slope: f64,
}

/// Median over replications of the sup distance between the cumulative
/// estimator and its monotone envelope on `[0, H^{-1}(0.9)]`, per `n`. The
/// envelope is taken over the whole observation range so that the
/// measurement interval stays away from its free end.
pub fn envelope_rate_study(
    scenario: &ScenarioSpec,
    target: Target,
    direction: Direction,
    n_grid: &[usize],
    replications: usize,
    base_seed: u64,
) -> Result<EnvelopeRate> {
    if n_grid.len() < 3 || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("n grid must be increasing with at least 3 points".into()));
    }
    if replications == 0 {
        return Err(Error::Config("replications must be at least 1".into()));
    }
    let limit = quantile(scenario, TRUNCATION_LEVEL)?;
    let mut points = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let distances: Result<Vec<f64>> = (0..replications)
            .into_par_iter()
            .map(|i| {
                let sample = generate(&scenario.with_n(n).with_seed(base_seed.wrapping_add(i as u64)))?;
                let ctx = FitContext::truncated(&sample, target, direction, f64::INFINITY)?;
                let fit = &ctx.grenander;
                sup_distance(&fit.cumulative, &fit.envelope, (0.0, limit.min(ctx.end)))
            })
            .collect();
        points.push((n, median(&mut distances?)));
    }
    let fpoints: Vec<(f64, f64)> = points.iter().map(|&(n, d)| (n as f64, d)).collect();
    Ok(EnvelopeRate {
        slope: log_log_slope(&fpoints),
        points,
    })
}

/// Settings of a consistency sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepSpec {
    pub target: Target,
    pub direction: Direction,
    pub mode: SmoothingMode,
    /// Bandwidth constant; the rate is `n^{-1/5}` for the standard estimator
    /// and `n^{-1/3}` for the boundary-corrected one.
    pub c: f64,
    pub epsilon: f64,
    pub replications: usize,
    pub grid_points: usize,
    pub base_seed: u64,
}

impl SweepSpec {
    pub fn new(target: Target, direction: Direction, mode: SmoothingMode, c: f64, epsilon: f64) -> Self {
        Self {
            target,
            direction,
            mode,
            c,
            epsilon,
            replications: 50,
            grid_points: 200,
            base_seed: 0,
        }
    }

    fn bandwidth(&self, n: usize) -> Result<Bandwidth> {
        let rate = match self.mode {
            SmoothingMode::Standard => 0.2,
            SmoothingMode::BoundaryCorrected => 1.0 / 3.0,
        };
        Bandwidth::from_rate(self.c, n, rate)
    }

    /// Evaluation range for measurement limit `m`: `[ε, m - ε]` for the
    /// standard estimator, `[0, m]` with boundary correction.
    fn range(&self, m: f64) -> (f64, f64) {
        match self.mode {
            SmoothingMode::Standard => (self.epsilon, m - self.epsilon),
            SmoothingMode::BoundaryCorrected => (0.0, m),
        }
    }
}

fn truth(scenario: &ScenarioSpec, target: Target, x: f64) -> f64 {
    match target {
        Target::Hazard => scenario.event_law.hazard(x),
        Target::Density => scenario.event_law.density(x),
    }
}

fn full_fit(scenario: &ScenarioSpec, sweep: &SweepSpec, n: usize, seed: u64) -> Result<FitContext> {
    let sample = generate(&scenario.with_n(n).with_seed(seed))?;
    FitContext::truncated(&sample, sweep.target, sweep.direction, f64::INFINITY)
}

/// Sup over a grid of `|smoothed estimate - truth|` on `[0, H^{-1}(0.9)]`
/// (less `ε` at both ends without boundary correction) for one replication.
/// The estimate itself uses the whole observation range.
pub fn sup_error(scenario: &ScenarioSpec, sweep: &SweepSpec, n: usize, seed: u64) -> Result<f64> {
    let limit = quantile(scenario, TRUNCATION_LEVEL)?;
    let ctx = full_fit(scenario, sweep, n, seed)?;
    let b = sweep.bandwidth(n)?;
    let (lo, hi) = sweep.range(limit.min(ctx.end));
    if !(hi > lo) {
        return Err(Error::Config(format!("empty evaluation range [{lo}, {hi}]")));
    }
    let m = sweep.grid_points.max(2);
    let mut worst: f64 = 0.0;
    for j in 0..m {
        let x = (lo + (hi - lo) * j as f64 / (m - 1) as f64).min(hi);
        let v = ctx.smoothed(&Triweight, b, x, sweep.mode)?;
        worst = worst.max((v - truth(scenario, sweep.target, x)).abs());
    }
    Ok(worst)
}

/// Median sup error per sample size.
pub fn consistency_sweep(scenario: &ScenarioSpec, n_grid: &[usize], sweep: &SweepSpec) -> Result<Vec<(usize, f64)>> {
    if !(sweep.epsilon > 0.0) {
        return Err(Error::Config("epsilon must be positive".into()));
    }
    n_grid
        .iter()
        .map(|&n| {
            let errors: Result<Vec<f64>> = (0..sweep.replications)
                .into_par_iter()
                .map(|i| sup_error(scenario, sweep, n, sweep.base_seed.wrapping_add(i as u64)))
                .collect();
            Ok((n, median(&mut errors?)))
        })
        .collect()
}

/// Median over replications of `|estimate(x) - truth(x)|` at a single point,
/// for comparing smoothing modes near a boundary.
pub fn pointwise_error(scenario: &ScenarioSpec, sweep: &SweepSpec, n: usize, x: f64) -> Result<f64> {
    let errors: Result<Vec<f64>> = (0..sweep.replications)
        .into_par_iter()
        .map(|i| {
            let ctx = full_fit(scenario, sweep, n, sweep.base_seed.wrapping_add(i as u64))?;
            let v = ctx.smoothed(&Triweight, sweep.bandwidth(n)?, x, sweep.mode)?;
            Ok((v - truth(scenario, sweep.target, x)).abs())
        })
        .collect();
    Ok(median(&mut errors?))
}

/// Returns the smoothed estimate on `grid` for one sample, convenient for
/// plotting.
pub fn smoothed_curve_for(
    ctx: &FitContext,
    b: Bandwidth,
    grid: &[f64],
    mode: SmoothingMode,
) -> Result<Vec<(f64, f64)>> {
    grid.iter()
        .map(|&x| smooth_estimate(&ctx.grenander.estimate, &Triweight, b, x, mode, ctx.end).map(|v| (x, v)))
        .collect()
}
