//! Command-line workflows: `simulate`, `analyze`, `classify`, `conformance`.
//!
//! Exit codes: 0 success, 2 missing input, 3 invalid configuration, 4 domain
//! or model error, 5 conformance deviation. Failures writing artifacts exit
//! with 1.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::analytics::{
    lemma_pgf, marginal_pgf, mean_exit_index, mean_shift_time, phi_functional, LemmaConstants, Marginal,
};
use crate::error::{Axis, Error};
use crate::matrix::{shift_advisor, StrategyMatrix};
use crate::oracle::{
    analytic_bundle, conformance, empirical_bundle, estimate_exits_with, gate_passes, ConformancePlan,
    ConformanceRow, EmpiricalExitSummary, McConfig, Moments,
};
use crate::process::{IntervalDist, IntervalFamily, MarkDist, ModelParams, Thresholds};
use crate::transform::TransformContext;

/// Overrides `output.directory` when set.
pub const OUTPUT_DIR_ENV: &str = "STRATSHIFT_OUTPUT_DIR";

pub const HISTOGRAM_HEADER: [&str; 3] = ["index", "count", "probability"];
pub const CONFORMANCE_HEADER: [&str; 7] = ["quantity", "paper_ref", "analytic", "mc_estimate", "se", "rel_dev", "verdict"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessBlock {
    pub lambda_a: f64,
    pub lambda_b: f64,
    #[serde(default)]
    pub marks_a: MarkDist,
    #[serde(default)]
    pub marks_b: MarkDist,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservationBlock {
    pub family: IntervalFamily,
    /// Mean of the initial interval `tau_0`.
    pub initial_mean: f64,
    /// Mean of the subsequent intervals.
    pub interval_mean: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

fn default_directory() -> PathBuf {
    PathBuf::from("out")
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self {
            directory: default_directory(),
            formats: default_formats(),
        }
    }
}

/// The single JSON document that drives every command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub process: ProcessBlock,
    pub observation: ObservationBlock,
    pub thresholds: Thresholds,
    #[serde(default = "StrategyMatrix::bcg")]
    pub matrix: StrategyMatrix,
    pub simulation: McConfig,
    #[serde(default)]
    pub output: OutputBlock,
    #[serde(default)]
    pub conformance: ConformancePlan,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::MissingInput(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Canonical form with every default filled in.
    pub fn to_normalized_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config is serialisable")
    }

    pub fn params(&self) -> ModelParams {
        let family = self.observation.family;
        ModelParams {
            lambda_a: self.process.lambda_a,
            lambda_b: self.process.lambda_b,
            marks_a: self.process.marks_a,
            marks_b: self.process.marks_b,
            initial: IntervalDist::new(family, self.observation.initial_mean),
            interval: IntervalDist::new(family, self.observation.interval_mean),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let invalid = |field: &str, msg: String| Err(CliError::InvalidConfig(format!("{field}: {msg}")));
        if let Err(e) = self.params().validate() {
            return invalid("process/observation", e.to_string());
        }
        if self.simulation.paths == 0 {
            return invalid("simulation.paths", "must be at least 1".into());
        }
        if self.simulation.horizon == 0 {
            return invalid("simulation.horizon", "must be at least 1".into());
        }
        let finite = match self.matrix.thresholds {
            crate::matrix::ThresholdSpec::Uniform { m, n } => m.is_finite() && n.is_finite(),
            crate::matrix::ThresholdSpec::RowDependent {
                b_threshold,
                a_threshold_low_b,
                a_threshold_high_b,
            } => b_threshold.is_finite() && a_threshold_low_b.is_finite() && a_threshold_high_b.is_finite(),
        };
        if !finite {
            return invalid("matrix.thresholds", "thresholds must be finite".into());
        }
        if let Some(s) = self.matrix.scale {
            if !(s.factor > 0.0 && s.factor.is_finite()) {
                return invalid("matrix.scale.factor", format!("must be positive, got {}", s.factor));
            }
        }
        if let Some(z) = self.conformance.pgf_grid.iter().find(|z| !(0.0..=1.0).contains(*z)) {
            return invalid("conformance.pgf_grid", format!("{z} outside [0, 1]"));
        }
        if let Some(s) = self.conformance.lst_grid.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
            return invalid("conformance.lst_grid", format!("{s} is not a finite nonnegative value"));
        }
        if self.output.formats.is_empty() {
            return invalid("output.formats", "at least one format is required".into());
        }
        Ok(())
    }

    fn writes(&self, f: Format) -> bool {
        self.output.formats.contains(&f)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    MissingInput(String),
    InvalidConfig(String),
    Domain(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::MissingInput(_) => 2,
            CliError::InvalidConfig(_) => 3,
            CliError::Domain(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::MissingInput(m) => write!(f, "missing input: {m}"),
            CliError::InvalidConfig(m) => write!(f, "invalid config: {m}"),
            CliError::Domain(m) => write!(f, "{m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "stratshift", version, about = "Strategy-shift timing for threshold strategy matrices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate exit records; write index histograms and a moment summary.
    Simulate { config: PathBuf },
    /// Evaluate the closed forms; write an analytic report.
    Analyze { config: PathBuf },
    /// Print the matrix region of a position.
    Classify(ClassifyArgs),
    /// Compare closed forms with simulation; exit 5 on any deviation.
    Conformance { config: PathBuf },
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    pub config: PathBuf,
    /// Relative market share (mapped through the matrix scale).
    #[arg(long, requires = "growth", conflicts_with_all = ["a", "b"], allow_hyphen_values = true)]
    pub share: Option<f64>,
    /// Market growth rate in percent.
    #[arg(long, requires = "share", allow_hyphen_values = true)]
    pub growth: Option<f64>,
    /// Level of decision parameter A.
    #[arg(long, requires = "b", allow_hyphen_values = true)]
    pub a: Option<f64>,
    /// Level of decision parameter B.
    #[arg(long, requires = "a", allow_hyphen_values = true)]
    pub b: Option<f64>,
}

/// Rounds to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

/// Text form with at most 12 significant digits; empty for missing values.
pub fn fmt_num(x: Option<f64>) -> String {
    match x {
        None => String::new(),
        Some(v) if v.is_nan() => "NaN".into(),
        Some(v) => format!("{}", round_sig(v)),
    }
}

fn num(x: f64) -> Value {
    let r = round_sig(x);
    serde_json::Number::from_f64(r).map_or(Value::Null, Value::Number)
}

fn output_dir(cfg: &RunConfig, config_path: &Path) -> PathBuf {
    if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV) {
        return PathBuf::from(dir);
    }
    if cfg.output.directory.is_absolute() {
        cfg.output.directory.clone()
    } else {
        config_path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join(&cfg.output.directory)
    }
}

fn write_json(path: &Path, value: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn moments_json(m: &Moments) -> Value {
    json!({ "mean": num(m.mean), "variance": num(m.variance), "se": num(m.se), "n": m.n })
}

pub fn histogram_csv(summary: &EmpiricalExitSummary, axis: Axis) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(HISTOGRAM_HEADER)?;
    for (j, p) in summary.probabilities(axis).into_iter().enumerate() {
        let count = summary.histogram(axis)[j];
        w.write_record([j.to_string(), count.to_string(), fmt_num(Some(p))])?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("utf-8"))
}

pub fn summary_json(summary: &EmpiricalExitSummary, cfg: &RunConfig) -> Value {
    json!({
        "paths": summary.paths,
        "seed": cfg.simulation.seed,
        "horizon": cfg.simulation.horizon,
        "thresholds": { "m": cfg.thresholds.m, "n": cfg.thresholds.n },
        "censored_a": summary.censored_a,
        "censored_b": summary.censored_b,
        "mean_mu": num(summary.mu.mean),
        "se_mu": num(summary.mu.se),
        "mean_nu": num(summary.nu.mean),
        "se_nu": num(summary.nu.se),
        "mu": moments_json(&summary.mu),
        "nu": moments_json(&summary.nu),
        "tau_mu": moments_json(&summary.tau_mu),
        "tau_nu": moments_json(&summary.tau_nu),
        "tau_mu_prev": moments_json(&summary.tau_mu_prev),
        "tau_nu_prev": moments_json(&summary.tau_nu_prev),
    })
}

pub fn conformance_csv(rows: &[ConformanceRow]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CONFORMANCE_HEADER)?;
    for r in rows {
        let analytic = match (&r.analytic, &r.analytic_note) {
            (Some(v), _) => fmt_num(Some(*v)),
            (None, Some(note)) if note.starts_with("singular") => "singular".into(),
            (None, Some(note)) => note.clone(),
            (None, None) => String::new(),
        };
        w.write_record([
            r.quantity.clone(),
            r.paper_ref.clone(),
            analytic,
            fmt_num(Some(r.mc_estimate)),
            fmt_num(Some(r.se)),
            fmt_num(r.rel_dev),
            r.verdict.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("utf-8"))
}

pub fn conformance_json(rows: &[ConformanceRow], passed: bool) -> Value {
    let rows: Vec<Value> = rows
        .iter()
        .map(|r| {
            json!({
                "quantity": r.quantity,
                "paper_ref": r.paper_ref,
                "analytic": r.analytic.map_or(Value::Null, num),
                "analytic_note": r.analytic_note,
                "mc_estimate": num(r.mc_estimate),
                "se": num(r.se),
                "rel_dev": r.rel_dev.map_or(Value::Null, num),
                "verdict": r.verdict.to_string(),
            })
        })
        .collect();
    json!({ "passed": passed, "rows": rows })
}

fn axis_analysis(axis: Axis, params: &ModelParams) -> Value {
    let lambda = match axis {
        Axis::A => params.lambda_a,
        Axis::B => params.lambda_b,
    };
    let (d0, d) = (params.delta0_mean(), params.delta_mean());
    match (mean_exit_index(axis, lambda, d), mean_shift_time(axis, lambda, d0, d)) {
        (Ok(index), Ok(time)) => json!({
            "status": "shift",
            "expected_exit_index": num(index),
            "expected_shift_time": num(time),
            "expected_prior_time": num(time - d),
        }),
        _ => json!({ "status": "no shift predicted" }),
    }
}

fn lemma_section(params: &ModelParams, th: Thresholds, grid: &[f64]) -> Value {
    if !params.is_memoryless() {
        return json!({ "status": "requires memoryless" });
    }
    let constants = match LemmaConstants::new(params) {
        Ok(c) => c,
        Err(e) => return json!({ "status": "error", "message": e.to_string() }),
    };
    let rows = |axis: Axis, level: u64| -> Vec<Value> {
        grid.iter()
            .map(|&w| match lemma_pgf(axis, w, level, &constants) {
                Ok(v) => json!({ "arg": num(w), "value": num(v) }),
                Err(Error::Singular(msg)) => json!({ "arg": num(w), "value": "singular", "note": msg }),
                Err(e) => json!({ "arg": num(w), "value": Value::Null, "note": e.to_string() }),
            })
            .collect()
    };
    json!({
        "status": "evaluated as printed",
        "constants": {
            "alpha_a": num(constants.alpha_a), "beta_a": num(constants.beta_a),
            "alpha0_a": num(constants.alpha0_a), "beta0_a": num(constants.beta0_a),
            "alpha_b": num(constants.alpha_b), "beta_b": num(constants.beta_b),
            "alpha0_b": num(constants.alpha0_b), "beta0_b": num(constants.beta0_b),
            "kappa_a": constants.kappa_a.map_or(json!("singular"), num),
            "kappa_b": constants.kappa_b.map_or(json!("singular"), num),
        },
        "pgf_mu": rows(Axis::A, th.m),
        "pgf_nu": rows(Axis::B, th.n),
    })
}

fn theorem_section(params: &ModelParams, th: Thresholds, grid: &[f64]) -> Result<Value, CliError> {
    let mut small = Vec::new();
    for m in 1..=3u64 {
        for n in 1..=3u64 {
            small.push(json!({
                "m": m, "n": n,
                "phi_neutral": num(phi_functional(m, n, TransformContext::neutral(), params)?),
            }));
        }
    }
    let marginal = |which: Marginal| -> Result<Vec<Value>, CliError> {
        grid.iter()
            .map(|&w| Ok(json!({ "arg": num(w), "value": num(marginal_pgf(which, w, th.m, th.n, params)?) })))
            .collect()
    };
    Ok(json!({
        "levels": { "m": th.m, "n": th.n },
        "phi_small_levels": small,
        "pgf_mu": marginal(Marginal::MuIndex)?,
        "pgf_nu": marginal(Marginal::NuIndex)?,
    }))
}

pub fn analysis_json(cfg: &RunConfig) -> Result<Value, CliError> {
    let params = cfg.params();
    let th = cfg.thresholds;
    let z_grid = [0.0, 0.25, 0.5, 0.75, 1.0];
    Ok(json!({
        "thresholds": { "m": th.m, "n": th.n },
        "axis_a": axis_analysis(Axis::A, &params),
        "axis_b": axis_analysis(Axis::B, &params),
        "lemma": lemma_section(&params, th, &z_grid),
        "theorem": theorem_section(&params, th, &z_grid)?,
    }))
}

fn prepare_dir(cfg: &RunConfig, config_path: &Path) -> Result<PathBuf, CliError> {
    let dir = output_dir(cfg, config_path);
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

pub fn cmd_simulate(config_path: &Path, out: &mut dyn Write) -> Result<i32, CliError> {
    let cfg = RunConfig::load(config_path)?;
    let summary = estimate_exits_with(&cfg.params(), cfg.thresholds, &cfg.simulation)?;
    let dir = prepare_dir(&cfg, config_path)?;
    if cfg.writes(Format::Csv) {
        std::fs::write(dir.join("mu_histogram.csv"), histogram_csv(&summary, Axis::A)?)?;
        std::fs::write(dir.join("nu_histogram.csv"), histogram_csv(&summary, Axis::B)?)?;
    }
    if cfg.writes(Format::Json) {
        write_json(&dir.join("summary.json"), &summary_json(&summary, &cfg))?;
    }
    writeln!(
        out,
        "paths={} mean_mu={} (se {}) mean_nu={} (se {})",
        summary.paths,
        fmt_num(Some(summary.mu.mean)),
        fmt_num(Some(summary.mu.se)),
        fmt_num(Some(summary.nu.mean)),
        fmt_num(Some(summary.nu.se))
    )?;
    Ok(0)
}

pub fn cmd_analyze(config_path: &Path, out: &mut dyn Write) -> Result<i32, CliError> {
    let cfg = RunConfig::load(config_path)?;
    let report = analysis_json(&cfg)?;
    let dir = prepare_dir(&cfg, config_path)?;
    write_json(&dir.join("analysis.json"), &report)?;
    for key in ["axis_a", "axis_b"] {
        writeln!(out, "{key}: {}", report[key])?;
    }
    Ok(0)
}

pub fn cmd_classify(args: &ClassifyArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let cfg = RunConfig::load(&args.config)?;
    let matrix = &cfg.matrix;
    let (a, b) = match (args.share, args.growth, args.a, args.b) {
        (Some(share), Some(growth), _, _) => (matrix.share_scale().apply(share)?, growth),
        (_, _, Some(a), Some(b)) => (a, b),
        _ => return Err(CliError::MissingInput("pass --share/--growth or --a/--b".into())),
    };
    writeln!(out, "{}", matrix.label(matrix.classify(a, b)))?;
    Ok(0)
}

pub fn cmd_conformance(config_path: &Path, out: &mut dyn Write) -> Result<i32, CliError> {
    let cfg = RunConfig::load(config_path)?;
    let params = cfg.params();
    let analytic = analytic_bundle(&params, cfg.thresholds, &cfg.conformance)?;
    let empirical = empirical_bundle(&params, cfg.thresholds, &cfg.conformance, &cfg.simulation)?;
    let rows = conformance(&analytic, &empirical)?;
    let passed = gate_passes(&rows);
    let dir = prepare_dir(&cfg, config_path)?;
    if cfg.writes(Format::Csv) {
        std::fs::write(dir.join("conformance.csv"), conformance_csv(&rows)?)?;
    }
    if cfg.writes(Format::Json) {
        write_json(&dir.join("conformance.json"), &conformance_json(&rows, passed))?;
    }
    for r in &rows {
        writeln!(out, "{:<14} {}", r.verdict.to_string(), r.quantity)?;
    }
    Ok(if passed { 0 } else { 5 })
}

/// Runs one command and returns its exit code; errors are reported on stderr.
pub fn run(cli: &Cli, out: &mut dyn Write) -> i32 {
    let result = match &cli.command {
        Command::Simulate { config } => cmd_simulate(config, out),
        Command::Analyze { config } => cmd_analyze(config, out),
        Command::Classify(args) => cmd_classify(args, out),
        Command::Conformance { config } => cmd_conformance(config, out),
    };
    result.unwrap_or_else(|e| {
        eprintln!("stratshift: {e}");
        e.exit_code()
    })
}

/// Shift advice for the configured matrix and model, as JSON.
pub fn advice_json(cfg: &RunConfig, level_a: f64, level_b: f64) -> Result<Value, CliError> {
    let advice = shift_advisor(level_a, level_b, &cfg.params(), cfg.thresholds, &cfg.matrix)?;
    serde_json::to_value(advice).map_err(|e| CliError::Io(e.to_string()))
}
