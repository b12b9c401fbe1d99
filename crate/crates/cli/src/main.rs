//! `sgrenander` command-line tool.
//!
//! Every subcommand reads either a built-in scenario (`--scenario`, sampled
//! with `--seed`) or a `time,event` CSV file (`--input`), and writes CSV or
//! JSON to `--output` or stdout. Errors are reported on stderr as a JSON
//! object `{"error": kind, "message": text}`.

// `!(x > y)` is used on purpose to reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use sgrenander::asymptotics::{c_opt_density, c_opt_hazard};
use sgrenander::simulation::{envelope_rate_study, run_study, CoverageReport, StudySpec};
use sgrenander::step::{kaplan_meier, nelson_aalen};
use sgrenander::{
    confidence_interval, generate, read_csv, Bandwidth, CensoredSample, Direction, FitContext, Method, ScenarioSpec,
    SmoothCiOptions, SmoothingMode, Target, Triweight,
};

use output::{round_json, Cell, Format, Table};

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] sgrenander::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{context}: {source}")]
    Io { context: String, source: io::Error },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error("json output: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    fn kind(&self) -> &'static str {
        use sgrenander::Error as E;
        match self {
            CliError::Core(e) => match e {
                E::Config(_) => "config",
                E::EmptySample => "empty_sample",
                E::Row { .. } => "input_row",
                E::Io(_) => "io",
                E::EmptyKnotSet { .. } => "empty_knot_set",
                E::DuplicateVertex(_) => "duplicate_vertex",
                E::OutsideDomain { .. } => "outside_domain",
                E::SingularBoundarySystem(_) => "singular_boundary_system",
                E::NotInterior { .. } => "not_interior",
                E::BiasBandwidthMargin { .. } => "bias_bandwidth_margin",
                E::DerivativeUndefined(_) => "derivative_undefined",
                E::SurvivalZero(_) => "survival_zero",
                E::NoFiniteOptimum => "no_finite_optimum",
                E::UnsupportedAlpha(_) => "unsupported_alpha",
                E::Grid { .. } => "grid",
            },
            CliError::Usage(_) => "usage",
            CliError::Io { .. } => "io",
            CliError::Csv(_) => "csv",
            CliError::Json(_) => "json",
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "sgrenander",
    version,
    about = "Monotone hazard and density estimation from right-censored data"
)]
struct Cli {
    /// Seed for scenario sampling and the base seed of simulations.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Output format; `ci` defaults to json, everything else to csv.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Significant digits of printed floats.
    #[arg(long, global = true, default_value_t = 6)]
    precision: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Cumulative estimator or its Grenander-type estimate.
    Estimate(EstimateArgs),
    /// Kernel-smoothed Grenander-type estimate on a grid.
    Smooth(SmoothArgs),
    /// AMSE-optimal bandwidth constant at a point of a built-in scenario.
    Bandwidth(BandwidthArgs),
    /// Pointwise confidence interval.
    Ci(CiArgs),
    /// Monte Carlo coverage study: preset 1 (hazard) or 2 (density).
    Simulate(SimulateArgs),
    /// Rate of the sup distance between a cumulative estimator and its envelope.
    #[command(name = "kw-rate")]
    EnvelopeRate(EnvelopeRateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TargetArg {
    Hazard,
    Density,
}

impl From<TargetArg> for Target {
    fn from(t: TargetArg) -> Self {
        match t {
            TargetArg::Hazard => Target::Hazard,
            TargetArg::Density => Target::Density,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DirectionArg {
    Increasing,
    Decreasing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Boundary {
    None,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Grenander,
    SgUnder,
    SgBias,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Grenander => Method::GrenanderChernoff,
            MethodArg::SgUnder => Method::SgUndersmooth,
            MethodArg::SgBias => Method::SgBiasEstimate,
        }
    }
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Built-in scenario: weibull-hazard or truncexp-density. Defaults to the
    /// scenario matching the target.
    #[arg(long, conflicts_with = "input")]
    scenario: Option<String>,
    /// CSV file with a `time,event` header.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Sample size drawn from the scenario.
    #[arg(long, default_value_t = 500, conflicts_with = "input")]
    n: usize,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long, value_enum, default_value = "hazard")]
    target: TargetArg,
    /// Monotonicity of the target; the hazard is always increasing and the
    /// density defaults to decreasing.
    #[arg(long, value_enum)]
    direction: Option<DirectionArg>,
    /// Fit only up to the last observation not exceeding this time.
    #[arg(long)]
    end: Option<f64>,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    fit: FitArgs,
    /// Print the Grenander-type estimate (pieces) instead of the cumulative estimator.
    #[arg(long)]
    isotonic: bool,
}

#[derive(Debug, Args)]
struct SmoothArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    fit: FitArgs,
    /// Bandwidth; defaults to `c n^{-1/5}`.
    #[arg(long)]
    bandwidth: Option<f64>,
    /// Bandwidth constant used when `--bandwidth` is absent; 1.2 for the
    /// hazard and 5.14 for the density by default.
    #[arg(long)]
    c: Option<f64>,
    #[arg(long, value_enum, default_value = "none")]
    boundary: Boundary,
    /// Evaluation grid `start:stop:step`; 101 points over the fit range by default.
    #[arg(long)]
    grid: Option<String>,
}

#[derive(Debug, Args)]
struct BandwidthArgs {
    /// Built-in scenario; defaults to the one matching the target.
    #[arg(long)]
    scenario: Option<String>,
    /// Sample size used to turn the constant into a bandwidth.
    #[arg(long, default_value_t = 500)]
    n: usize,
    #[arg(long, value_enum, default_value = "hazard")]
    target: TargetArg,
    #[arg(long)]
    x0: f64,
}

#[derive(Debug, Args)]
struct CiArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    fit: FitArgs,
    #[arg(long, value_enum)]
    method: MethodArg,
    #[arg(long)]
    x0: f64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Bandwidth constant; 1.2 for the hazard and 5.14 for the density by default.
    #[arg(long)]
    c: Option<f64>,
    /// Use boundary-corrected smoothing for the smoothed intervals.
    #[arg(long)]
    boundary_corrected: bool,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    table: u8,
    #[arg(long, default_value_t = 1000)]
    replications: usize,
    /// Worker threads; all cores by default. Results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
    /// Comma-separated sample sizes replacing the table's grid.
    #[arg(long, value_delimiter = ',')]
    n_grid: Option<Vec<usize>>,
    /// Also write an x0 sweep at `--sweep-n` to this file.
    #[arg(long)]
    sweep_output: Option<PathBuf>,
    /// Sweep grid `start:stop:step`.
    #[arg(long)]
    sweep_points: Option<String>,
    #[arg(long, default_value_t = 500)]
    sweep_n: usize,
}

#[derive(Debug, Args)]
struct EnvelopeRateArgs {
    #[arg(long, value_enum, default_value = "hazard")]
    target: TargetArg,
    /// Built-in scenario; defaults to the one matching the target.
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long, value_delimiter = ',', default_value = "100,300,1000,3000,10000")]
    n_grid: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    replications: usize,
}

fn default_scenario(target: Target) -> &'static str {
    match target {
        Target::Hazard => "weibull-hazard",
        Target::Density => "truncexp-density",
    }
}

fn default_c(target: Target) -> f64 {
    match target {
        Target::Hazard => 1.2,
        Target::Density => 5.14,
    }
}

fn load_sample(input: &InputArgs, target: Target, seed: u64) -> CliResult<CensoredSample> {
    match &input.input {
        Some(path) => Ok(read_csv(path)?),
        None => {
            let name = input.scenario.as_deref().unwrap_or(default_scenario(target));
            Ok(generate(&ScenarioSpec::named(name, input.n, seed)?)?)
        }
    }
}

fn direction(fit: &FitArgs) -> CliResult<Direction> {
    match (Target::from(fit.target), fit.direction) {
        (Target::Hazard, Some(DirectionArg::Decreasing)) => Err(CliError::Usage(
            "--direction decreasing conflicts with --target hazard (the hazard is increasing)".into(),
        )),
        (_, Some(DirectionArg::Increasing)) | (Target::Hazard, None) => Ok(Direction::Increasing),
        (Target::Density, _) => Ok(Direction::Decreasing),
    }
}

fn fit_context(input: &InputArgs, fit: &FitArgs, seed: u64) -> CliResult<FitContext> {
    let target = Target::from(fit.target);
    let sample = load_sample(input, target, seed)?;
    let limit = fit.end.unwrap_or(f64::INFINITY);
    Ok(FitContext::truncated(&sample, target, direction(fit)?, limit)?)
}

/// Parses `start:stop:step` into the points `start + i step ≤ stop`.
fn parse_grid(spec: &str) -> CliResult<Vec<f64>> {
    let bad = || CliError::Usage(format!("grid '{spec}' is not of the form start:stop:step"));
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    let [start, stop, step] = parts[..] else {
        return Err(bad());
    };
    if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        return Err(bad());
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|i| output::round_sig(start + i as f64 * step, 12))
        .collect())
}

fn linspace(a: f64, b: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| a + (b - a) * i as f64 / (points - 1) as f64)
        .collect()
}

fn estimate(args: &EstimateArgs, seed: u64) -> CliResult<Table> {
    let target = Target::from(args.fit.target);
    if args.isotonic {
        let ctx = fit_context(&args.input, &args.fit, seed)?;
        let mut table = Table::new(["start", "end", "value"]);
        for (a, b, v) in ctx.grenander.estimate.pieces() {
            table.push(vec![a.into(), b.into(), v.into()]);
        }
        return Ok(table);
    }
    let sample = load_sample(&args.input, target, seed)?;
    let cumulative = match target {
        Target::Hazard => nelson_aalen(&sample),
        Target::Density => kaplan_meier(&sample),
    };
    let limit = args.fit.end.unwrap_or(f64::INFINITY);
    let mut table = Table::new(["time", "value"]);
    let mut last = None;
    for t in sample.times().filter(|&t| t <= limit) {
        if last != Some(t) {
            table.push(vec![t.into(), cumulative.eval(t).into()]);
            last = Some(t);
        }
    }
    Ok(table)
}

fn smooth(args: &SmoothArgs, seed: u64) -> CliResult<Table> {
    let ctx = fit_context(&args.input, &args.fit, seed)?;
    let b = match args.bandwidth {
        Some(b) => Bandwidth::new(b)?,
        None => {
            let c = args.c.unwrap_or(default_c(ctx.target));
            Bandwidth::from_rate(c, ctx.n, 0.2)?
        }
    };
    let mode = match args.boundary {
        Boundary::None => SmoothingMode::Standard,
        Boundary::Linear => SmoothingMode::BoundaryCorrected,
    };
    let grid = match &args.grid {
        Some(g) => parse_grid(g)?,
        None => linspace(0.0, ctx.end, 101),
    };
    let values = sgrenander::simulation::smoothed_curve_for(&ctx, b, &grid, mode)?;
    let mut table = Table::new(["x", "value"]);
    for (x, v) in values {
        table.push(vec![x.into(), v.into()]);
    }
    Ok(table)
}

fn bandwidth(args: &BandwidthArgs) -> CliResult<Table> {
    let target = Target::from(args.target);
    let name = args.scenario.as_deref().unwrap_or(default_scenario(target));
    let scenario = ScenarioSpec::named(name, args.n, 0)?;
    let law = &scenario.event_law;
    let x = args.x0;
    let c = match target {
        Target::Hazard => c_opt_hazard(
            law.hazard(x),
            law.hazard_derivative(x, 2),
            scenario.follow_up_survival(x),
            &Triweight,
        )?,
        Target::Density => c_opt_density(
            law.density(x),
            law.density_derivative(x, 2),
            scenario.censor_law.survival(x),
            &Triweight,
        )?,
    };
    let b = Bandwidth::from_rate(c, args.n, 0.2)?;
    let mut table = Table::new(["target", "x0", "n", "c_opt", "bandwidth"]);
    table.push(vec![
        target.name().into(),
        x.into(),
        args.n.into(),
        c.into(),
        b.get().into(),
    ]);
    Ok(table)
}

fn ci(args: &CiArgs, seed: u64) -> CliResult<(Table, serde_json::Value)> {
    let ctx = fit_context(&args.input, &args.fit, seed)?;
    let options = SmoothCiOptions {
        mode: if args.boundary_corrected {
            SmoothingMode::BoundaryCorrected
        } else {
            SmoothingMode::Standard
        },
        ..SmoothCiOptions::default()
    };
    let c = args.c.unwrap_or(default_c(ctx.target));
    let interval = confidence_interval(&ctx, &Triweight, args.method.into(), args.x0, c, args.alpha, &options)?;
    let mut table = Table::new([
        "method",
        "target",
        "x0",
        "alpha",
        "center",
        "lower",
        "upper",
        "length",
        "bandwidth",
    ]);
    table.push(vec![
        interval.method.name().into(),
        interval.target.name().into(),
        interval.x0.into(),
        interval.alpha.into(),
        interval.center.into(),
        interval.lower.into(),
        interval.upper.into(),
        interval.length().into(),
        interval.bandwidth.unwrap_or(f64::NAN).into(),
    ]);
    let value = json!({
        "method": interval.method.name(),
        "target": interval.target.name(),
        "x0": interval.x0,
        "alpha": interval.alpha,
        "center": interval.center,
        "lower": interval.lower,
        "upper": interval.upper,
        "length": interval.length(),
        "bandwidth": interval.bandwidth,
    });
    Ok((table, value))
}

/// One row per `(n, x0)` with average length and coverage for each method.
fn coverage_table(spec: &StudySpec, report: &CoverageReport) -> Table {
    let mut columns = vec!["n".to_string(), "x0".to_string()];
    for m in &spec.methods {
        let key = m.name().replace('-', "_");
        columns.push(format!("{key}_al"));
        columns.push(format!("{key}_cp"));
    }
    columns.push("failures".into());
    let mut table = Table::new(columns);
    for &n in &spec.n_grid {
        for &x0 in &spec.x0_points {
            let mut row: Vec<Cell> = vec![n.into(), x0.into()];
            let mut failures = 0;
            for &m in &spec.methods {
                match report.row(m, n, x0) {
                    Some(r) => {
                        row.push(r.average_length.into());
                        row.push(r.coverage.into());
                        failures += r.failures;
                    }
                    None => row.extend([Cell::Num(f64::NAN), Cell::Num(f64::NAN)]),
                }
            }
            row.push(failures.into());
            table.push(row);
        }
    }
    table
}

fn run_and_tabulate(spec: &StudySpec) -> CliResult<Table> {
    let report = run_study(spec)?;
    for w in report.warnings() {
        eprintln!("warning: {w}");
    }
    Ok(coverage_table(spec, &report))
}

fn simulate(args: &SimulateArgs, seed: u64, format: Format, digits: usize) -> CliResult<Table> {
    let mut spec = StudySpec::table(args.table, args.replications, seed)?;
    spec.workers = args.workers;
    if let Some(grid) = &args.n_grid {
        spec.n_grid = grid.clone();
    }
    let table = run_and_tabulate(&spec)?;
    if let Some(path) = &args.sweep_output {
        let default_points = if args.table == 1 { "0.1:0.9:0.1" } else { "0.2:2.0:0.2" };
        let points = parse_grid(args.sweep_points.as_deref().unwrap_or(default_points))?;
        let sweep = spec.clone().sweep(points, args.sweep_n);
        let sweep_table = run_and_tabulate(&sweep)?;
        write_table(&sweep_table, Some(path), format, digits)?;
    }
    Ok(table)
}

fn envelope_rate(args: &EnvelopeRateArgs, seed: u64) -> CliResult<Table> {
    let target = Target::from(args.target);
    let name = args.scenario.as_deref().unwrap_or(default_scenario(target));
    let scenario = ScenarioSpec::named(name, 1, seed)?;
    let direction = match target {
        Target::Hazard => Direction::Increasing,
        Target::Density => Direction::Decreasing,
    };
    let rate = envelope_rate_study(&scenario, target, direction, &args.n_grid, args.replications, seed)?;
    let mut table = Table::new(["n", "median_sup_distance", "fitted_slope"]);
    for &(n, d) in &rate.points {
        table.push(vec![n.into(), d.into(), rate.slope.into()]);
    }
    Ok(table)
}

fn open_output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|source| CliError::Io {
                context: format!("cannot create {}", p.display()),
                source,
            })?;
            Ok(Box::new(BufWriter::new(file)))
        }
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn write_json(value: &serde_json::Value, path: Option<&Path>) -> CliResult<()> {
    let mut out = open_output(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out).and_then(|_| out.flush()).map_err(|source| CliError::Io {
        context: "write failed".into(),
        source,
    })
}

fn write_table(table: &Table, path: Option<&Path>, format: Format, digits: usize) -> CliResult<()> {
    match format {
        Format::Csv => Ok(table.write_csv(open_output(path)?, digits)?),
        Format::Json => write_json(&table.to_json(digits), path),
    }
}

fn run(cli: &Cli) -> CliResult<()> {
    if cli.precision == 0 || cli.precision > 17 {
        return Err(CliError::Usage("--precision must lie in 1..=17".into()));
    }
    let digits = cli.precision;
    let out = cli.output.as_deref();
    let csv_default = cli.format.unwrap_or(Format::Csv);
    match &cli.command {
        Command::Estimate(a) => write_table(&estimate(a, cli.seed)?, out, csv_default, digits),
        Command::Smooth(a) => write_table(&smooth(a, cli.seed)?, out, csv_default, digits),
        Command::Bandwidth(a) => write_table(&bandwidth(a)?, out, csv_default, digits),
        Command::Ci(a) => {
            let (table, value) = ci(a, cli.seed)?;
            match cli.format.unwrap_or(Format::Json) {
                Format::Json => write_json(&round_json(value, digits), out),
                Format::Csv => write_table(&table, out, Format::Csv, digits),
            }
        }
        Command::Simulate(a) => {
            let table = simulate(a, cli.seed, csv_default, digits)?;
            write_table(&table, out, csv_default, digits)
        }
        Command::EnvelopeRate(a) => write_table(&envelope_rate(a, cli.seed)?, out, csv_default, digits),
    }
}

fn report_error(kind: &str, message: &str) {
    eprintln!("{}", json!({ "error": kind, "message": message }));
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            report_error("usage", e.render().to_string().trim());
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report_error(e.kind(), &e.to_string());
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("0.1:0.5:0.1").unwrap(), vec![0.1, 0.2, 0.3, 0.4, 0.5]);
        assert_eq!(parse_grid("0.2:2.0:0.2").unwrap().len(), 10);
        assert_eq!(parse_grid("1:1:0.5").unwrap(), vec![1.0]);
        assert!(parse_grid("1:0:0.5").is_err());
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("0:1:0").is_err());
    }

    #[test]
    fn hazard_direction_conflict() {
        let fit = FitArgs {
            target: TargetArg::Hazard,
            direction: Some(DirectionArg::Decreasing),
            end: None,
        };
        assert!(matches!(direction(&fit), Err(CliError::Usage(_))));
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
