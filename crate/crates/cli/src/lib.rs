//! Command orchestration for the `roybounds` binary: configuration, grid specs, dispatch and
//! artifact writing.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use roybounds::bounds::{
    cost_bounds_if, cost_bounds_pf_detailed, estimated_id_tol, random_cost_bounds, testability_if,
    BoundOptions,
};
use roybounds::coverage::{run_coverage, CoverageConfig};
use roybounds::grid::{linspace, quantile_points, EvaluationGrid};
use roybounds::inference::{
    confidence_band, crossing_inference, BandConfig, BandSide, MIN_BOOTSTRAP,
};
use roybounds::io;
use roybounds::kernel::{estimate_tables, silverman_bandwidth};
use roybounds::model::{generate_sample, DgpSpec};
use roybounds::presets;
use roybounds::survival::{cost_survival, survival_rows, tercile_edges};
use roybounds::{Error, Result, Sample};

/// Environment variable overriding the number of worker threads.
pub const THREADS_ENV: &str = "ROYBOUNDS_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Subcommand)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Conditional distribution tables from a sample
    Estimate,
    /// Cost bounds (pointwise, imperfect foresight, random cost)
    Bounds,
    /// One-sided uniform confidence band and cost-survival summaries
    Infer,
    /// Draws a sample from a data-generating process
    Simulate,
    /// Monte Carlo coverage of the confidence band
    Coverage,
}

/// Evaluation-grid specification.
#[derive(Debug, Clone, PartialEq)]
pub enum GridSpec {
    /// `quantiles:N`, empirical quantiles of the data
    Quantiles(usize),
    /// `linspace:a:b:n`
    Linspace(f64, f64, usize),
    /// `values:v1,v2,...`
    Values(Vec<f64>),
    /// `even:N`, evenly spaced over the observed range
    Even(usize),
}

impl FromStr for GridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("invalid grid spec `{s}`"));
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
        let count = |t: &str| match t.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(bad()),
        };
        match kind.trim() {
            "quantiles" => Ok(GridSpec::Quantiles(count(rest)?)),
            "even" => Ok(GridSpec::Even(count(rest)?)),
            "linspace" => {
                let parts: Vec<&str> = rest.split(':').collect();
                if parts.len() != 3 {
                    return Err(bad());
                }
                Ok(GridSpec::Linspace(
                    num(parts[0])?,
                    num(parts[1])?,
                    count(parts[2])?,
                ))
            }
            "values" => Ok(GridSpec::Values(
                rest.split(',').map(num).collect::<Result<_>>()?,
            )),
            _ => Err(bad()),
        }
    }
}

impl GridSpec {
    pub fn resolve(&self, data: &[f64]) -> Result<Vec<f64>> {
        let range = || {
            let lo = data.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if lo.is_finite() && hi > lo {
                Ok((lo, hi))
            } else {
                Err(Error::Config(
                    "data-dependent grid needs at least two distinct values".into(),
                ))
            }
        };
        Ok(match self {
            GridSpec::Quantiles(n) => quantile_points(data, *n),
            GridSpec::Even(n) => {
                let (lo, hi) = range()?;
                linspace(lo, hi, *n)
            }
            GridSpec::Linspace(a, b, n) => linspace(*a, *b, *n),
            GridSpec::Values(v) => v.clone(),
        })
    }

    /// Number of points, where known without data.
    pub fn count(&self) -> usize {
        match self {
            GridSpec::Quantiles(n) | GridSpec::Even(n) | GridSpec::Linspace(_, _, n) => *n,
            GridSpec::Values(v) => v.len(),
        }
    }

    fn is_data_free(&self) -> bool {
        matches!(self, GridSpec::Linspace(..) | GridSpec::Values(_))
    }
}

/// Full run configuration; a JSON file provides it and command-line flags override its fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    /// `None` applies the rule-of-thumb bandwidth.
    pub bandwidth: Option<f64>,
    pub grid_y: String,
    pub grid_z: String,
    pub alpha: f64,
    pub bootstrap: usize,
    pub seed: u64,
    pub epsilon: Option<f64>,
    pub side: BandSide,
    /// Income points entering the critical value; deciles of `Y` when absent.
    pub subset: Option<String>,
    /// Survival bin edges over `z`; terciles of the observed instrument when absent.
    pub z_bins: Option<Vec<f64>>,
    /// Absolute cost levels; 21 points from 0 to the largest band value when absent.
    pub thresholds: Option<Vec<f64>>,
    pub ratio_thresholds: Vec<f64>,
    /// Cost grid for the random-cost bounds; 51 points over `[0, max y − min y]` when absent.
    pub cost_grid: Option<String>,
    pub dgp: Option<DgpSpec>,
    /// `pure_roy`, `quasi_linear` or `isoelastic`, used when `dgp` is absent.
    pub preset: Option<String>,
    pub n: usize,
    pub replications: usize,
    pub tolerance: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: None,
            input: None,
            output: None,
            bandwidth: None,
            grid_y: "quantiles:200".into(),
            grid_z: "even:8".into(),
            alpha: 0.05,
            bootstrap: 200,
            seed: 0,
            epsilon: None,
            side: BandSide::Lower,
            subset: None,
            z_bins: None,
            thresholds: None,
            ratio_thresholds: (0..=10).map(|k| k as f64 * 0.05).collect(),
            cost_grid: None,
            dgp: None,
            preset: None,
            n: 2000,
            replications: 200,
            tolerance: 1e-9,
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    fn command(&self) -> Result<Command> {
        self.command
            .ok_or_else(|| Error::Config("no command given".into()))
    }

    pub fn validate(&self) -> Result<()> {
        let command = self.command()?;
        if self.output.is_none() {
            return Err(Error::Config("an output path is required".into()));
        }
        if matches!(
            command,
            Command::Estimate | Command::Bounds | Command::Infer
        ) && self.input.is_none()
        {
            return Err(Error::Config("an input CSV is required".into()));
        }
        if matches!(command, Command::Simulate | Command::Coverage)
            && self.dgp.is_none()
            && self.preset.is_none()
        {
            return Err(Error::Config("a dgp or preset is required".into()));
        }
        if !(self.alpha > 0.0 && self.alpha <= 0.5) {
            return Err(Error::Config(format!(
                "alpha must lie in (0, 0.5], got {}",
                self.alpha
            )));
        }
        if matches!(command, Command::Infer | Command::Coverage) && self.bootstrap < MIN_BOOTSTRAP {
            return Err(Error::Config(format!(
                "at least {MIN_BOOTSTRAP} bootstrap replications are required, got {}",
                self.bootstrap
            )));
        }
        if let Some(h) = self.bandwidth {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::Config(format!(
                    "bandwidth must be positive, got {h}"
                )));
            }
        }
        if let Some(e) = self.epsilon {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(Error::Config(format!(
                    "epsilon must be non-negative, got {e}"
                )));
            }
        }
        if self.n == 0 || self.replications == 0 {
            return Err(Error::Config(
                "sample size and replication count must be positive".into(),
            ));
        }
        self.grid_y.parse::<GridSpec>()?;
        self.grid_z.parse::<GridSpec>()?;
        if let Some(s) = &self.subset {
            s.parse::<GridSpec>()?;
        }
        if let Some(s) = &self.cost_grid {
            s.parse::<GridSpec>()?;
        }
        Ok(())
    }

    pub fn resolved_dgp(&self) -> Result<DgpSpec> {
        if let Some(d) = &self.dgp {
            return Ok(d.clone());
        }
        match self.preset.as_deref() {
            Some("pure_roy") => Ok(presets::pure_roy_uniform()),
            Some("quasi_linear") => Ok(presets::quasi_linear_lognormal(1.0)),
            Some("isoelastic") => Ok(presets::isoelastic_declining_cost()),
            Some(other) => Err(Error::Config(format!("unknown preset `{other}`"))),
            None => Err(Error::Config("a dgp or preset is required".into())),
        }
    }

    fn band_config(&self) -> BandConfig {
        BandConfig {
            alpha: self.alpha,
            bootstrap: self.bootstrap,
            seed: self.seed,
            side: self.side,
            interpolate: true,
        }
    }
}

/// Flags shared by every subcommand; each overrides the configuration file.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Input CSV with columns y, d, z (optional b_lower)
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Output CSV; a JSON sidecar is written next to it
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Kernel bandwidth (rule of thumb when absent)
    #[arg(long, global = true)]
    pub bandwidth: Option<f64>,
    /// Significance level in (0, 0.5]
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Bootstrap replications (at least 50)
    #[arg(long, global = true)]
    pub bootstrap: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Monotonization increment (default scales with the fiber range)
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    /// Income grid: quantiles:N | linspace:a:b:n | values:v1,v2,... | even:N
    #[arg(long = "grid-y", global = true)]
    pub grid_y: Option<String>,
    /// Instrument grid, same syntax as --grid-y
    #[arg(long = "grid-z", global = true)]
    pub grid_z: Option<String>,
    /// JSON configuration file
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Built-in DGP for simulate and coverage: pure_roy | quasi_linear | isoelastic
    #[arg(long, global = true)]
    pub preset: Option<String>,
    /// Sample size for simulate and coverage
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Monte Carlo replications for coverage
    #[arg(long, global = true)]
    pub replications: Option<usize>,
}

#[derive(Debug, Parser)]
#[command(
    name = "roybounds",
    version,
    about = "Bounds and confidence bands for the cost function of an extended Roy model"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

impl Cli {
    pub fn into_config(self) -> Result<RunConfig> {
        let f = self.flags;
        let mut c = match &f.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        c.command = Some(self.command);
        if f.input.is_some() {
            c.input = f.input;
        }
        if f.output.is_some() {
            c.output = f.output;
        }
        if f.bandwidth.is_some() {
            c.bandwidth = f.bandwidth;
        }
        if f.epsilon.is_some() {
            c.epsilon = f.epsilon;
        }
        if f.preset.is_some() {
            c.preset = f.preset;
        }
        if let Some(v) = f.alpha {
            c.alpha = v;
        }
        if let Some(v) = f.bootstrap {
            c.bootstrap = v;
        }
        if let Some(v) = f.seed {
            c.seed = v;
        }
        if let Some(v) = f.grid_y {
            c.grid_y = v;
        }
        if let Some(v) = f.grid_z {
            c.grid_z = v;
        }
        if let Some(v) = f.n {
            c.n = v;
        }
        if let Some(v) = f.replications {
            c.replications = v;
        }
        Ok(c)
    }
}

/// Result of a successful run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// The crossing test rejected the model.
    Rejected,
}

impl Outcome {
    pub fn exit_code(self) -> u8 {
        match self {
            Outcome::Success => 0,
            Outcome::Rejected => 2,
        }
    }
}

/// `<dir>/<stem><suffix>`
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

pub fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("json")
}

fn output(config: &RunConfig) -> Result<&Path> {
    config
        .output
        .as_deref()
        .ok_or_else(|| Error::Config("an output path is required".into()))
}

fn load(config: &RunConfig) -> Result<Sample> {
    let path = config
        .input
        .as_deref()
        .ok_or_else(|| Error::Config("an input CSV is required".into()))?;
    io::ingest_csv(path)
}

fn data_grid(config: &RunConfig, sample: &Sample) -> Result<EvaluationGrid<f64>> {
    let y = config.grid_y.parse::<GridSpec>()?.resolve(sample.y())?;
    let z = config.grid_z.parse::<GridSpec>()?.resolve(sample.z())?;
    EvaluationGrid::new(y, z)
}

fn bandwidth(config: &RunConfig, sample: &Sample) -> Result<f64> {
    match config.bandwidth {
        Some(h) => Ok(h),
        None => silverman_bandwidth(sample.z()),
    }
}

fn header(config: &RunConfig, resolved: serde_json::Value) -> serde_json::Value {
    json!({ "config": config, "resolved": resolved })
}

pub fn run_command(config: &RunConfig) -> Result<Outcome> {
    config.validate()?;
    match config.command()? {
        Command::Estimate => estimate(config),
        Command::Bounds => bounds(config),
        Command::Infer => infer(config),
        Command::Simulate => simulate(config),
        Command::Coverage => coverage(config),
    }
}

fn estimate(config: &RunConfig) -> Result<Outcome> {
    let out = output(config)?;
    let sample = load(config)?;
    let grid = data_grid(config, &sample)?;
    let h = bandwidth(config, &sample)?;
    let table = estimate_tables(&sample, &grid, h)?;
    let head = header(
        config,
        json!({ "bandwidth": h, "ny": grid.ny(), "nz": grid.nz(), "n": sample.len() }),
    );
    io::write_rows_file(out, Some(&head), &io::table_rows(&table))?;
    io::write_json(&sidecar(out), &json!({ "header": head, "grid": grid }))?;
    Ok(Outcome::Success)
}

fn bounds(config: &RunConfig) -> Result<Outcome> {
    let out = output(config)?;
    let sample = load(config)?;
    sample.require_distinct_z()?;
    let grid = data_grid(config, &sample)?;
    let h = bandwidth(config, &sample)?;
    let b = sample.lower_support_bound();
    let table = estimate_tables(&sample, &grid, h)?;
    let options = BoundOptions::estimated(sample.len(), b);
    let pf = cost_bounds_pf_detailed(&table, &options);
    let curve = cost_bounds_if(&sample, grid.z(), h)?;
    let testability = testability_if(&curve, estimated_id_tol(sample.len()));
    let cost_grid = match &config.cost_grid {
        Some(s) => s.parse::<GridSpec>()?.resolve(sample.y())?,
        None => {
            let y = grid.y();
            linspace(0.0, (y[y.len() - 1] - y[0]).max(f64::MIN_POSITIVE), 51)
        }
    };
    let cost_cdf = random_cost_bounds(&table, &pf.envelopes, &cost_grid, options.id_tol)?;
    let head = header(
        config,
        json!({ "bandwidth": h, "ny": grid.ny(), "nz": grid.nz(), "n": sample.len(), "id_tol": options.id_tol }),
    );
    io::write_rows_file(out, Some(&head), &io::surface_rows(&pf.surface))?;
    io::write_rows_file(
        &sibling(out, "_if.csv"),
        Some(&head),
        &io::if_curve_rows(&curve),
    )?;
    io::write_rows_file(
        &sibling(out, "_cost_cdf.csv"),
        Some(&head),
        &io::cost_cdf_rows(&cost_cdf),
    )?;
    io::write_json(
        &sidecar(out),
        &json!({
            "header": head,
            "crossing": pf.surface.crossing,
            "testability": testability,
            "max_lower": pf.surface.max_lower(),
        }),
    )?;
    Ok(Outcome::Success)
}

fn infer(config: &RunConfig) -> Result<Outcome> {
    let out = output(config)?;
    let sample = load(config)?;
    sample.require_distinct_z()?;
    let grid = data_grid(config, &sample)?;
    let h = bandwidth(config, &sample)?;
    let subset = match &config.subset {
        Some(s) => Some(s.parse::<GridSpec>()?.resolve(sample.y())?),
        None => None,
    };
    let band_config = config.band_config();
    let band = confidence_band(
        &sample,
        &grid,
        h,
        config.epsilon,
        subset.as_deref(),
        &band_config,
    )?;
    let crossing = crossing_inference(
        &sample,
        &grid,
        h,
        config.alpha,
        config.bootstrap,
        config.seed,
    )?;
    let z_bins = match &config.z_bins {
        Some(b) => b.clone(),
        None => tercile_edges(sample.z()),
    };
    let thresholds = match &config.thresholds {
        Some(t) => t.clone(),
        None => {
            let top = band
                .cn
                .values()
                .iter()
                .flatten()
                .copied()
                .fold(0.0, f64::max);
            linspace(0.0, top, 21)
        }
    };
    let survival = cost_survival(
        &band,
        &sample,
        &thresholds,
        &config.ratio_thresholds,
        &z_bins,
    )?;
    let head = header(
        config,
        json!({
            "bandwidth": h,
            "epsilon": band.epsilon,
            "bootstrap": band.bootstrap,
            "alpha": band.alpha,
            "seed": band.seed,
            "subset": band.subset,
            "critical_value": band.critical_value,
            "n": sample.len(),
        }),
    );
    io::write_rows_file(out, Some(&head), &io::band_rows(&band))?;
    io::write_rows_file(
        &sibling(out, "_survival.csv"),
        Some(&head),
        &survival_rows(&survival),
    )?;
    io::write_json(
        &sidecar(out),
        &json!({ "header": head, "band": band, "survival": survival, "crossing": crossing }),
    )?;
    Ok(if crossing.rejected {
        Outcome::Rejected
    } else {
        Outcome::Success
    })
}

fn simulate(config: &RunConfig) -> Result<Outcome> {
    let out = output(config)?;
    let dgp = config.resolved_dgp()?;
    let sample = generate_sample(&dgp, config.n, config.seed)?;
    let head = header(config, json!({ "dgp": dgp, "n": sample.len() }));
    io::write_sample_csv(out, Some(&head), &sample)?;
    io::write_json(&sidecar(out), &json!({ "header": head }))?;
    Ok(Outcome::Success)
}

fn coverage(config: &RunConfig) -> Result<Outcome> {
    let out = output(config)?;
    let dgp = config.resolved_dgp()?;
    let gy: GridSpec = config.grid_y.parse()?;
    let gz: GridSpec = config.grid_z.parse()?;
    let grid = if gy.is_data_free() && gz.is_data_free() {
        EvaluationGrid::new(gy.resolve(&[])?, gz.resolve(&[])?)?
    } else {
        presets::population_grid(&dgp, gy.count(), gz.count(), 0.05, 0.95)?
    };
    let subset = match &config.subset {
        Some(s) => Some(s.parse::<GridSpec>()?.resolve(grid.y())?),
        None => None,
    };
    let cov = CoverageConfig {
        band: config.band_config(),
        bandwidth: config.bandwidth,
        epsilon: config.epsilon,
        subset,
        grid: Some(grid),
        tolerance: config.tolerance,
        ..CoverageConfig::new(dgp, config.n, config.replications, config.seed)
    };
    let report = run_coverage(&cov)?;
    let head = header(
        config,
        json!({ "uniform": report.uniform, "replications": config.replications }),
    );
    let rows: Vec<CoverageRow> = (0..report.grid.nz())
        .flat_map(|iz| (0..report.grid.ny()).map(move |iy| (iy, iz)))
        .map(|(iy, iz)| CoverageRow {
            y: report.grid.y()[iy],
            z: report.grid.z()[iz],
            truth: report.truth.get(iy, iz),
            pointwise: report.pointwise.get(iy, iz),
            covered: report.cells.as_ref().and_then(|c| c.get(iy, iz)),
        })
        .collect();
    io::write_rows_file(out, Some(&head), &rows)?;
    io::write_json(&sidecar(out), &json!({ "header": head, "report": report }))?;
    Ok(Outcome::Success)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub y: f64,
    pub z: f64,
    pub truth: Option<f64>,
    pub pointwise: Option<f64>,
    /// Only for single-replication runs.
    pub covered: Option<bool>,
}

/// Applies the worker-count override, once per process.
pub fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.parse().map_err(|_| {
            Error::Config(format!(
                "{THREADS_ENV} must be a positive integer, got `{v}`"
            ))
        })?;
        if n == 0 {
            return Err(Error::Config(format!("{THREADS_ENV} must be positive")));
        }
        // a second call finds the pool already built
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    Ok(())
}

/// Parses arguments, runs, and maps the outcome to the process exit status.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = configure_threads()
        .and_then(|_| cli.into_config())
        .and_then(|c| run_command(&c));
    match result {
        Ok(outcome) => {
            if outcome == Outcome::Rejected {
                eprintln!("model rejected: the estimated envelopes cross");
            }
            ExitCode::from(outcome.exit_code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_specs() {
        assert_eq!(
            "quantiles:200".parse::<GridSpec>().unwrap(),
            GridSpec::Quantiles(200)
        );
        assert_eq!(
            "linspace:0:1:5".parse::<GridSpec>().unwrap(),
            GridSpec::Linspace(0.0, 1.0, 5)
        );
        assert_eq!(
            "values:0.12,0.13,0.19".parse::<GridSpec>().unwrap(),
            GridSpec::Values(vec![0.12, 0.13, 0.19])
        );
        assert_eq!(
            "even:8"
                .parse::<GridSpec>()
                .unwrap()
                .resolve(&[2.0, 0.0, 7.0])
                .unwrap(),
            linspace(0.0, 7.0, 8)
        );
        for bad in [
            "quantiles",
            "quantiles:0",
            "linspace:0:1",
            "values:a",
            "grid:3",
        ] {
            assert!(bad.parse::<GridSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(
            &path,
            r#"{"alpha": 0.1, "bootstrap": 99, "grid_z": "even:4"}"#,
        )
        .unwrap();
        let cli = Cli::try_parse_from([
            "roybounds",
            "infer",
            "--config",
            path.to_str().unwrap(),
            "--alpha",
            "0.2",
        ])
        .unwrap();
        let c = cli.into_config().unwrap();
        assert_eq!(c.alpha, 0.2);
        assert_eq!(c.bootstrap, 99);
        assert_eq!(c.grid_z, "even:4");
        assert_eq!(c.command, Some(Command::Infer));
    }

    #[test]
    fn validation() {
        let base = RunConfig {
            command: Some(Command::Infer),
            input: Some("x.csv".into()),
            output: Some("o.csv".into()),
            ..RunConfig::default()
        };
        assert!(base.validate().is_ok());
        for bad in [
            RunConfig {
                alpha: 0.0,
                ..base.clone()
            },
            RunConfig {
                alpha: 0.75,
                ..base.clone()
            },
            RunConfig {
                bootstrap: 49,
                ..base.clone()
            },
            RunConfig {
                input: None,
                ..base.clone()
            },
            RunConfig {
                command: Some(Command::Simulate),
                ..base.clone()
            },
            RunConfig {
                grid_y: "nope".into(),
                ..base.clone()
            },
        ] {
            assert!(matches!(bad.validate(), Err(Error::Config(_))), "{bad:?}");
        }
    }

    #[test]
    fn sibling_paths() {
        assert_eq!(
            sibling(Path::new("/tmp/out.csv"), "_if.csv"),
            PathBuf::from("/tmp/out_if.csv")
        );
        assert_eq!(
            sidecar(Path::new("/tmp/out.csv")),
            PathBuf::from("/tmp/out.json")
        );
    }
}
