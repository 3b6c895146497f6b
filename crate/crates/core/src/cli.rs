//! Command-line front end: configuration, dispatch, and report files.
//!
//! A run is described by a [`RunConfig`], read from a JSON file
//! (`--config`) and/or assembled from flags; flags win over the file and
//! `CONEWATCH_JOBS` wins over `--jobs`. Exit codes: 0 success, 1 I/O failure,
//! 2 invalid input, 3 numerical failure, 4 asserted property violated.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::classifier::{classify_orbit, ClassifierParams};
use crate::cone::{ConeSpec, QuadraticCone};
use crate::cooperativity::{
    empirical_monotonicity, fundamental_cone_invariance, minimal_constant_lambda, smith_lmi_check, InvarianceOptions,
    MonotonicityOptions,
};
use crate::domain::BoxDomain;
use crate::dynamics::{self, find_equilibria};
use crate::error::Error;
use crate::model::{Model, ModelSpec};
use crate::prevalence::{probe_scan, sweep, SweepConfig};
use crate::spectral::{estimate_separation, lyapunov_spectrum, verify_separation, SpectralOptions};
use crate::{seed, zoo};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_ASSERTION: i32 = 4;

const MAX_VIOLATION_ROWS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    ConeInfo,
    CheckCoop,
    Classify,
    Sweep,
    Lyapunov,
    Probe,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::ConeInfo => "cone-info",
            Command::CheckCoop => "check-coop",
            Command::Classify => "classify",
            Command::Sweep => "sweep",
            Command::Lyapunov => "lyapunov",
            Command::Probe => "probe",
        }
    }

    fn stem(self) -> &'static str {
        match self {
            Command::ConeInfo => "cone_info",
            Command::CheckCoop => "check_coop",
            Command::Classify => "classify",
            Command::Sweep => "sweep",
            Command::Lyapunov => "lyapunov",
            Command::Probe => "probe",
        }
    }
}

/// A zoo name or a full model description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelRef {
    Name(String),
    Spec(ModelSpec),
}

impl ModelRef {
    fn zoo_entry(&self) -> Result<Option<zoo::ZooEntry>, Error> {
        match self {
            ModelRef::Name(name) => zoo::get_model(name).map(Some),
            ModelRef::Spec(spec) if spec.kind == crate::model::ModelKind::Builtin => {
                zoo::get_model_with(&spec.name, &spec.params).map(Some)
            }
            ModelRef::Spec(_) => Ok(None),
        }
    }

    fn build(&self) -> Result<Model, Error> {
        match self {
            ModelRef::Name(name) => Ok(zoo::get_model(name)?.model),
            ModelRef::Spec(spec) => spec.build(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoopParams {
    /// Constant λ; defaults to the zoo recommendation, then to a bisection search.
    pub lambda: Option<f64>,
    pub lambda_search_max: f64,
    pub grid_per_axis: usize,
    pub margin: f64,
    pub boundary_samples: usize,
    pub invariance_horizon: f64,
    pub monotonicity_pairs: usize,
    pub monotonicity_horizon: f64,
}

impl Default for CoopParams {
    fn default() -> Self {
        Self {
            lambda: None,
            lambda_search_max: 100.0,
            grid_per_axis: 21,
            margin: crate::cooperativity::DEFAULT_MARGIN,
            boundary_samples: 200,
            invariance_horizon: 20.0,
            monotonicity_pairs: 200,
            monotonicity_horizon: 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyParams {
    pub x0: Option<Vec<f64>>,
    pub horizon: Option<f64>,
    pub classifier: ClassifierParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepParams {
    pub n_points: usize,
    pub horizon: Option<f64>,
    pub classifier: ClassifierParams,
    pub equilibrium_grid: usize,
    pub known_equilibria: Vec<Vec<f64>>,
    /// Exit with status 4 when `fraction_q_union_s` falls below this value.
    pub assert_theorem_a: Option<f64>,
}

impl Default for SweepParams {
    fn default() -> Self {
        Self {
            n_points: 1000,
            horizon: None,
            classifier: ClassifierParams::default(),
            equilibrium_grid: 7,
            known_equilibria: Vec::new(),
            assert_theorem_a: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LyapunovParams {
    pub x0: Option<Vec<f64>>,
    /// Dominant dimension for bundles; defaults to the cone rank.
    pub k: Option<usize>,
    pub horizon: f64,
    pub separation_samples: usize,
    pub spectral: SpectralOptions,
}

impl Default for LyapunovParams {
    fn default() -> Self {
        Self { x0: None, k: None, horizon: 100.0, separation_samples: 200, spectral: SpectralOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeParams {
    pub x: Option<Vec<f64>>,
    pub eps: f64,
    pub m: usize,
    pub horizon: Option<f64>,
    pub classifier: ClassifierParams,
}

impl Default for ProbeParams {
    fn default() -> Self {
        Self { x: None, eps: 0.1, m: 100, horizon: None, classifier: ClassifierParams::default() }
    }
}

/// Full description of one run. Published as `docs/schema.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub model: ModelRef,
    /// Defaults to the zoo recommendation for built-in models.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cone: Option<ConeSpec>,
    #[serde(rename = "box")]
    pub bounds: BoxDomain,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    #[serde(default)]
    pub check_coop: CoopParams,
    #[serde(default)]
    pub classify: ClassifyParams,
    #[serde(default)]
    pub sweep: SweepParams,
    #[serde(default)]
    pub lyapunov: LyapunovParams,
    #[serde(default)]
    pub probe: ProbeParams,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("conewatch-out")
}

impl RunConfig {
    /// Configuration for a zoo model with its default box.
    pub fn for_zoo(command: Command, name: &str) -> Result<Self, Error> {
        let entry = zoo::get_model(name)?;
        Ok(Self {
            command,
            model: ModelRef::Name(name.to_string()),
            cone: None,
            bounds: entry.default_box,
            master_seed: 0,
            output_dir: default_output_dir(),
            jobs: None,
            check_coop: CoopParams::default(),
            classify: ClassifyParams::default(),
            sweep: SweepParams::default(),
            lyapunov: LyapunovParams::default(),
            probe: ProbeParams::default(),
        })
    }

    pub fn from_json(text: &str) -> Result<Self, Error> {
        serde_json::from_str(text).map_err(|e| Error::Validation(format!("config: {e}")))
    }
}

#[derive(Debug, Parser)]
#[command(name = "conewatch", version, about = "Numerical checks for flows monotone with respect to quadratic cones")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Describe a cone: signature, quadratic form, probe subspace.
    ConeInfo(CommonArgs),
    /// Matrix inequality, fundamental-matrix invariance, and monotonicity checks.
    CheckCoop(CommonArgs),
    /// Classify a single orbit.
    Classify(CommonArgs),
    /// Monte Carlo classification sweep over the box.
    Sweep(CommonArgs),
    /// Lyapunov exponents, bundles, and separation.
    Lyapunov(CommonArgs),
    /// Classify points of a probe neighborhood.
    Probe(CommonArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Zoo model name.
    #[arg(long)]
    pub model: Option<String>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (overridden by CONEWATCH_JOBS).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Number of sweep points.
    #[arg(long)]
    pub n: Option<usize>,
    /// Integration horizon.
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Initial or center point, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
    /// Probe radius.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Number of probe points.
    #[arg(long)]
    pub m: Option<usize>,
    /// Dominant dimension for bundle estimates.
    #[arg(long)]
    pub k: Option<usize>,
    /// Constant λ for the matrix inequality.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    /// Fail with exit status 4 if the Q ∪ S fraction is below this threshold.
    #[arg(long = "assert-theorem-A", value_name = "THRESHOLD")]
    pub assert_theorem_a: Option<f64>,
}

impl CliCommand {
    fn split(self) -> (Command, CommonArgs) {
        match self {
            CliCommand::ConeInfo(a) => (Command::ConeInfo, a),
            CliCommand::CheckCoop(a) => (Command::CheckCoop, a),
            CliCommand::Classify(a) => (Command::Classify, a),
            CliCommand::Sweep(a) => (Command::Sweep, a),
            CliCommand::Lyapunov(a) => (Command::Lyapunov, a),
            CliCommand::Probe(a) => (Command::Probe, a),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::StepFailure { .. }
            | Error::BlowUp { .. }
            | Error::DegenerateFrame { .. }
            | Error::JacobianUnavailable(_)
            | Error::GapTooSmall { .. } => EXIT_NUMERICAL,
            _ => EXIT_VALIDATION,
        };
        CliError { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError { code: EXIT_IO, message: format!("i/o error: {e}") }
    }
}

/// Merges the optional config file and flags into one validated config.
pub fn resolve_config(command: Command, args: &CommonArgs, env_jobs: Option<&str>) -> Result<RunConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError { code: EXIT_VALIDATION, message: format!("cannot read {}: {e}", path.display()) })?;
            let mut cfg = RunConfig::from_json(&text)?;
            if cfg.command != command {
                return Err(CliError {
                    code: EXIT_VALIDATION,
                    message: format!("config command `{}` does not match subcommand `{}`", cfg.command.name(), command.name()),
                });
            }
            if let Some(name) = &args.model {
                cfg.model = ModelRef::Name(name.clone());
            }
            cfg
        }
        None => {
            let name = args.model.as_deref().ok_or_else(|| CliError {
                code: EXIT_VALIDATION,
                message: "either --config or --model is required".into(),
            })?;
            RunConfig::for_zoo(command, name)?
        }
    };
    cfg.command = command;
    if let Some(s) = args.seed {
        cfg.master_seed = s;
    }
    if let Some(j) = args.jobs {
        cfg.jobs = Some(j);
    }
    if let Some(text) = env_jobs {
        let j: usize = text
            .trim()
            .parse()
            .map_err(|_| CliError { code: EXIT_VALIDATION, message: format!("CONEWATCH_JOBS must be a count, got `{text}`") })?;
        cfg.jobs = Some(j);
    }
    if cfg.jobs == Some(0) {
        return Err(CliError { code: EXIT_VALIDATION, message: "jobs must be at least 1".into() });
    }
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    if let Some(n) = args.n {
        cfg.sweep.n_points = n;
    }
    if let Some(h) = args.horizon {
        match command {
            Command::Sweep => cfg.sweep.horizon = Some(h),
            Command::Classify => cfg.classify.horizon = Some(h),
            Command::Probe => cfg.probe.horizon = Some(h),
            Command::Lyapunov => cfg.lyapunov.horizon = h,
            Command::CheckCoop => {
                cfg.check_coop.invariance_horizon = h;
                cfg.check_coop.monotonicity_horizon = h;
            }
            Command::ConeInfo => {}
        }
    }
    if let Some(x) = &args.x0 {
        cfg.classify.x0 = Some(x.clone());
        cfg.lyapunov.x0 = Some(x.clone());
        cfg.probe.x = Some(x.clone());
    }
    if let Some(e) = args.eps {
        cfg.probe.eps = e;
    }
    if let Some(m) = args.m {
        cfg.probe.m = m;
    }
    if let Some(k) = args.k {
        cfg.lyapunov.k = Some(k);
    }
    if let Some(l) = args.lambda {
        cfg.check_coop.lambda = Some(l);
    }
    if let Some(a) = args.assert_theorem_a {
        cfg.sweep.assert_theorem_a = Some(a);
    }
    cfg.bounds.validate()?;
    Ok(cfg)
}

/// Artifacts and status of a finished run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub summary: serde_json::Value,
    pub artifacts: Vec<PathBuf>,
    pub log: Vec<String>,
}

struct Context {
    cfg: RunConfig,
    model: Model,
    entry: Option<zoo::ZooEntry>,
    cone: QuadraticCone,
    log: Vec<String>,
    artifacts: Vec<PathBuf>,
}

impl Context {
    fn say(&mut self, line: impl Into<String>) {
        self.log.push(line.into());
    }

    fn stem(&self) -> String {
        format!("{}_{}", self.cfg.command.stem(), self.model.name())
    }

    fn write_json(&mut self, name: &str, value: &serde_json::Value) -> Result<(), CliError> {
        let path = self.cfg.output_dir.join(name);
        let text = serde_json::to_string_pretty(value).map_err(|e| CliError { code: EXIT_IO, message: e.to_string() })?;
        fs::write(&path, text + "\n")?;
        self.artifacts.push(path);
        Ok(())
    }

    fn write_csv(&mut self, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<(), CliError> {
        let path = self.cfg.output_dir.join(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| CliError { code: EXIT_IO, message: e.to_string() })?;
        let io = |e: csv::Error| CliError { code: EXIT_IO, message: e.to_string() };
        w.write_record(header).map_err(io)?;
        for r in rows {
            w.write_record(r).map_err(io)?;
        }
        w.flush()?;
        self.artifacts.push(path);
        Ok(())
    }

    fn default_point(&self) -> Vec<f64> {
        self.entry
            .as_ref()
            .and_then(|e| e.facts.reference_point.clone())
            .unwrap_or_else(|| self.cfg.bounds.lower.iter().zip(&self.cfg.bounds.upper).map(|(a, b)| 0.5 * (a + b)).collect())
    }

    fn default_horizon(&self) -> f64 {
        self.entry.as_ref().map_or(100.0, |e| e.sweep_horizon)
    }

    fn equilibria(&self, grid: usize) -> Vec<Vec<f64>> {
        find_equilibria(self.model.as_ref(), &self.cfg.bounds, grid, 1e-10)
    }
}

/// Executes a resolved configuration, writing artifacts into its output directory.
pub fn execute(cfg: RunConfig, default_jobs: usize) -> Result<RunOutcome, CliError> {
    let jobs = cfg.jobs.unwrap_or(default_jobs).max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError { code: EXIT_IO, message: format!("cannot start worker pool: {e}") })?;
    pool.install(|| execute_inner(cfg, jobs))
}

fn execute_inner(cfg: RunConfig, jobs: usize) -> Result<RunOutcome, CliError> {
    let entry = cfg.model.zoo_entry()?;
    let model = cfg.model.build()?;
    let cone = match (&cfg.cone, &entry) {
        (Some(spec), _) => QuadraticCone::from_spec(spec)?,
        (None, Some(e)) => e.recommended_cone.clone(),
        (None, None) => {
            return Err(CliError { code: EXIT_VALIDATION, message: "config: `cone` is required for polynomial models".into() })
        }
    };
    if model.dim() != cfg.bounds.dim() || cone.dim() != model.dim() {
        return Err(CliError {
            code: EXIT_VALIDATION,
            message: format!(
                "dimension mismatch: model {}, cone {}, box {}",
                model.dim(),
                cone.dim(),
                cfg.bounds.dim()
            ),
        });
    }
    fs::create_dir_all(&cfg.output_dir)?;
    let mut ctx = Context { cfg, model, entry, cone, log: Vec::new(), artifacts: Vec::new() };
    ctx.say(format!(
        "conewatch {} model={} seed={} jobs={jobs}",
        ctx.cfg.command.name(),
        ctx.model.name(),
        ctx.cfg.master_seed
    ));
    let resolved = serde_json::to_value(&ctx.cfg).map_err(|e| CliError { code: EXIT_IO, message: e.to_string() })?;
    ctx.write_json("run_config.json", &resolved)?;

    let result = match ctx.cfg.command {
        Command::ConeInfo => run_cone_info(&mut ctx),
        Command::CheckCoop => run_check_coop(&mut ctx),
        Command::Classify => run_classify(&mut ctx),
        Command::Sweep => run_sweep(&mut ctx),
        Command::Lyapunov => run_lyapunov(&mut ctx),
        Command::Probe => run_probe(&mut ctx),
    };
    let (exit_code, summary) = match result {
        Ok(v) => v,
        Err(e) => {
            ctx.say(format!("error: {}", e.message));
            write_log(&ctx)?;
            return Err(e);
        }
    };
    ctx.say(format!("exit status {exit_code}"));
    let log_path = write_log(&ctx)?;
    ctx.artifacts.push(log_path);
    Ok(RunOutcome { exit_code, summary, artifacts: ctx.artifacts, log: ctx.log })
}

fn write_log(ctx: &Context) -> Result<PathBuf, CliError> {
    let path = ctx.cfg.output_dir.join("conewatch.log");
    let mut text = String::new();
    for line in &ctx.log {
        let _ = writeln!(text, "{line}");
    }
    fs::write(&path, text)?;
    Ok(path)
}

fn to_value<T: Serialize>(v: &T) -> Result<serde_json::Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError { code: EXIT_IO, message: e.to_string() })
}

fn run_cone_info(ctx: &mut Context) -> Result<(i32, serde_json::Value), CliError> {
    let cone = ctx.cone.clone();
    let c = &cone;
    let rows = |m: &nalgebra::DMatrix<f64>| -> Vec<Vec<f64>> { m.row_iter().map(|r| r.iter().copied().collect()).collect() };
    let cols = |m: &nalgebra::DMatrix<f64>| -> Vec<Vec<f64>> { m.column_iter().map(|r| r.iter().copied().collect()).collect() };
    let summary = json!({
        "dim": c.dim(),
        "rank": c.rank(),
        "eigenvalues": c.eigenvalues(),
        "q_matrix": rows(c.q_matrix()),
        "probe_subspace": cols(c.probe_subspace()),
        "tol": c.tol(),
        "complemented": true,
        "spec": c.to_spec(),
    });
    let line = format!("cone: dim {} rank {} eigenvalues {:?}", c.dim(), c.rank(), c.eigenvalues());
    ctx.say(line);
    let samples = c.sample_boundary(32, ctx.cfg.master_seed);
    let header: Vec<String> = (1..=c.dim()).map(|i| format!("v{i}")).chain(["form_value".to_string()]).collect();
    let rows_out: Vec<Vec<String>> = samples
        .iter()
        .map(|v| v.iter().map(|x| x.to_string()).chain([c.form(v).to_string()]).collect())
        .collect();
    let stem = ctx.stem();
    ctx.write_json(&format!("{stem}.json"), &summary)?;
    ctx.write_csv(&format!("{stem}_boundary.csv"), &header, &rows_out)?;
    Ok((EXIT_OK, summary))
}

fn run_check_coop(ctx: &mut Context) -> Result<(i32, serde_json::Value), CliError> {
    let p = ctx.cfg.check_coop.clone();
    let model = ctx.model.clone();
    let points = ctx.cfg.bounds.grid(p.grid_per_axis);
    let mut lambda_note = None;
    let lambda = match p.lambda.or_else(|| ctx.entry.as_ref().and_then(|e| e.recommended_lambda)) {
        Some(l) => l,
        None => {
            match minimal_constant_lambda(&ctx.cone, model.as_ref(), &points, p.margin, 0.0, p.lambda_search_max, 1e-3)? {
                Some(l) => {
                    lambda_note = Some(format!("λ found by bisection on [0, {}]", p.lambda_search_max));
                    l
                }
                None => {
                    lambda_note = Some(format!("no constant λ in [0, {}] passes; reported at λ = 0", p.lambda_search_max));
                    0.0
                }
            }
        }
    };
    let lmi = smith_lmi_check(&ctx.cone, model.as_ref(), &move |_: &[f64]| lambda, &points, p.margin)?;
    let line = format!(
        "matrix inequality at λ = {lambda}: worst eigenvalue {:e} at {:?} over {} points, pass = {}",
        lmi.worst_eigenvalue, lmi.worst_point, lmi.points_checked, lmi.pass
    );
    ctx.say(line);

    let mut rng = seed::item_rng(ctx.cfg.master_seed, 0);
    let (xi, xj) = (ctx.cfg.bounds.sample(&mut rng), ctx.cfg.bounds.sample(&mut rng));
    let inv_opts = InvarianceOptions::default();
    let inv = fundamental_cone_invariance(
        &ctx.cone,
        model.as_ref(),
        &xi,
        &xj,
        p.invariance_horizon,
        p.boundary_samples,
        seed::item_seed(ctx.cfg.master_seed, 1),
        &inv_opts,
    )?;
    let line = format!(
        "fundamental-matrix invariance over {}: {} violations, pass = {}",
        p.invariance_horizon,
        inv.violations.len(),
        inv.pass
    );
    ctx.say(line);

    let mono = empirical_monotonicity(
        &ctx.cone,
        model.as_ref(),
        p.monotonicity_pairs,
        p.monotonicity_horizon,
        seed::item_seed(ctx.cfg.master_seed, 2),
        &ctx.cfg.bounds,
        &MonotonicityOptions::default(),
    )?;
    let line = format!(
        "empirical monotonicity: {} of {} pairs violated ({} integration failures)",
        mono.violations, mono.pairs_tested, mono.integration_failures
    );
    ctx.say(line);

    let pass = lmi.pass && inv.pass && mono.violations == 0;
    let summary = json!({
        "model": model.name(),
        "lambda": lambda,
        "lambda_note": lambda_note,
        "lmi": to_value(&lmi)?,
        "invariance": {
            "pair": [inv.pair.0, inv.pair.1],
            "horizon": inv.horizon,
            "t_skip": inv.t_skip,
            "boundary_samples": inv.boundary_samples,
            "checkpoints": inv.checkpoints,
            "violation_count": inv.violations.len(),
            "first_violation": inv.violations.first(),
            "pass": inv.pass,
        },
        "monotonicity": to_value(&mono)?,
        "pass": pass,
    });
    ctx.say(format!("pass = {pass}"));
    let n = ctx.cone.dim();
    let header: Vec<String> = ["t".to_string()]
        .into_iter()
        .chain((1..=n).map(|i| format!("v{i}")))
        .chain(["form_value".to_string()])
        .collect();
    let rows: Vec<Vec<String>> = inv
        .violations
        .iter()
        .take(MAX_VIOLATION_ROWS)
        .map(|v| {
            [v.t.to_string()]
                .into_iter()
                .chain(v.v.iter().map(|x| x.to_string()))
                .chain([v.form_value.to_string()])
                .collect()
        })
        .collect();
    let stem = ctx.stem();
    ctx.write_json(&format!("{stem}.json"), &summary)?;
    ctx.write_csv(&format!("{stem}_violations.csv"), &header, &rows)?;
    Ok((EXIT_OK, summary))
}

fn classifier_params(base: &ClassifierParams, horizon: Option<f64>, bounds: &BoxDomain) -> Result<ClassifierParams, CliError> {
    let mut p = base.clone().for_box(bounds);
    if let Some(h) = horizon {
        if !(h >= p.tail_window) {
            return Err(CliError {
                code: EXIT_VALIDATION,
                message: format!("horizon {h} must be at least classifier.tail_window {}", p.tail_window),
            });
        }
        p.transient = h - p.tail_window;
    }
    p.validate()?;
    Ok(p)
}

fn run_classify(ctx: &mut Context) -> Result<(i32, serde_json::Value), CliError> {
    let x0 = ctx.cfg.classify.x0.clone().unwrap_or_else(|| ctx.default_point());
    let horizon = ctx.cfg.classify.horizon.or(Some(ctx.default_horizon()));
    let params = classifier_params(&ctx.cfg.classify.classifier, horizon, &ctx.cfg.bounds)?;
    let eq = ctx.equilibria(7);
    let record = classify_orbit(ctx.model.as_ref(), &ctx.cone, &x0, &eq, &params)?;
    let line = format!(
        "x0 {:?}: {} in_Q={} in_S={} period={:?}",
        record.x0,
        record.omega_class.label(),
        record.in_q,
        record.in_s,
        record.omega_class.period()
    );
    ctx.say(line);
    let stem = ctx.stem();
    let summary = json!({ "record": to_value(&record)?, "equilibria": eq });
    ctx.write_json(&format!("{stem}.json"), &summary)?;
    let traj = dynamics::integrate(ctx.model.as_ref(), &x0, record.horizon_used.max(params.horizon()), &params.integrator);
    match traj {
        Ok(t) => {
            let path = ctx.cfg.output_dir.join(format!("{stem}_trajectory.csv"));
            t.write_csv(fs::File::create(&path)?)?;
            ctx.artifacts.push(path);
        }
        Err(e) => ctx.say(format!("trajectory export skipped: {e}")),
    }
    let code = if record.horizon_used == 0.0 { EXIT_NUMERICAL } else { EXIT_OK };
    Ok((code, summary))
}

fn run_sweep(ctx: &mut Context) -> Result<(i32, serde_json::Value), CliError> {
    let sp = ctx.cfg.sweep.clone();
    let cfg = SweepConfig {
        bounds: ctx.cfg.bounds.clone(),
        n_points: sp.n_points,
        master_seed: ctx.cfg.master_seed,
        classifier: sp.classifier.clone(),
        horizon: sp.horizon.or(Some(ctx.default_horizon())),
        equilibrium_grid: sp.equilibrium_grid,
        known_equilibria: sp.known_equilibria.clone(),
    };
    let report = sweep(ctx.model.as_ref(), &ctx.cone, &cfg)?;
    let (json_path, csv_path) = report.write_outputs(&ctx.cfg.output_dir)?;
    ctx.artifacts.push(json_path);
    ctx.artifacts.push(csv_path);
    for w in &report.warnings {
        ctx.say(format!("warning: {w}"));
    }
    ctx.say(format!("counts {:?}", report.counts));
    ctx.say(format!(
        "fraction_Q_union_S = {} ({} of {})",
        report.fraction_q_union_s, report.n_in_q_union_s, report.n_points
    ));
    let summary = to_value(&report.summary())?;
    ctx.say(format!(
        "periodic-orbit check: {} eligible, {} periodic, {} violations",
        summary["pb"]["eligible"],
        summary["pb"]["periodic"],
        report.pb_violations.len()
    ));
    let mut code = EXIT_OK;
    if let Some(threshold) = sp.assert_theorem_a {
        if report.fraction_q_union_s < threshold {
            ctx.say(format!("assertion failed: fraction {} < {threshold}", report.fraction_q_union_s));
            code = EXIT_ASSERTION;
        } else {
            ctx.say(format!("assertion holds: fraction {} >= {threshold}", report.fraction_q_union_s));
        }
    }
    Ok((code, summary))
}

fn run_lyapunov(ctx: &mut Context) -> Result<(i32, serde_json::Value), CliError> {
    let lp = ctx.cfg.lyapunov.clone();
    let x0 = lp.x0.clone().unwrap_or_else(|| ctx.default_point());
    let n = ctx.model.dim();
    let spectrum = lyapunov_spectrum(ctx.model.as_ref(), &x0, n, lp.horizon, &lp.spectral)?;
    ctx.say(format!(
        "exponents {:?} (sum {:.6}, trace average {:.6}, convergence {:e})",
        spectrum.exponents,
        spectrum.sum(),
        spectrum.trace_average,
        spectrum.convergence
    ));
    let k = lp.k.unwrap_or(ctx.cone.rank());
    let (separation, check, note) = match estimate_separation(ctx.model.as_ref(), &x0, k, lp.horizon, &lp.spectral) {
        Ok(est) => {
            let check = verify_separation(&ctx.cone, &est, lp.separation_samples, ctx.cfg.master_seed)?;
            let line = format!(
                "k = {k}: gap {:.6}, E_in_interior = {}, F_misses_cone = {}",
                est.gap, check.e_in_interior, check.f_misses_cone
            );
            ctx.say(line);
            (Some(est), Some(check), None)
        }
        Err(e @ Error::GapTooSmall { .. }) => {
            ctx.say(format!("bundles not estimated: {e}"));
            (None, None, Some(e.to_string()))
        }
        Err(e) => return Err(e.into()),
    };
    let summary = json!({
        "x0": x0,
        "spectrum": to_value(&spectrum)?,
        "k": k,
        "separation": to_value(&separation)?,
        "separation_check": to_value(&check)?,
        "note": note,
    });
    let stem = ctx.stem();
    ctx.write_json(&format!("{stem}.json"), &summary)?;
    let rows: Vec<Vec<String>> = spectrum
        .exponents
        .iter()
        .enumerate()
        .map(|(i, e)| vec![(i + 1).to_string(), e.to_string()])
        .collect();
    ctx.write_csv(&format!("{stem}.csv"), &["index".into(), "exponent".into()], &rows)?;
    Ok((EXIT_OK, summary))
}

fn run_probe(ctx: &mut Context) -> Result<(i32, serde_json::Value), CliError> {
    let pp = ctx.cfg.probe.clone();
    let x = pp.x.clone().unwrap_or_else(|| ctx.default_point());
    let horizon = pp.horizon.or(Some(ctx.default_horizon()));
    let params = classifier_params(&pp.classifier, horizon, &ctx.cfg.bounds)?;
    let eq = ctx.equilibria(7);
    let scan = probe_scan(ctx.model.as_ref(), &ctx.cone, &x, pp.eps, pp.m, ctx.cfg.master_seed, &eq, &params)?;
    ctx.say(format!("probe at {x:?}, eps {}: fraction_in_Q = {}", pp.eps, scan.fraction_in_q));
    ctx.say(scan.note.clone());
    let summary = json!({
        "center": scan.center,
        "eps": scan.eps,
        "m": pp.m,
        "fraction_in_Q": scan.fraction_in_q,
        "note": scan.note,
    });
    let stem = ctx.stem();
    ctx.write_json(&format!("{stem}.json"), &summary)?;
    let path = ctx.cfg.output_dir.join(format!("{stem}.csv"));
    crate::classifier::write_records_csv(&scan.per_point, x.len(), fs::File::create(&path)?)?;
    ctx.artifacts.push(path);
    Ok((EXIT_OK, summary))
}

/// Parses arguments, runs, prints the log, and returns the exit status.
pub fn main_with_args<I, T>(args: I, env_jobs: Option<&str>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    let (command, args) = cli.command.split();
    let default_jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
    let outcome = resolve_config(command, &args, env_jobs).and_then(|cfg| execute(cfg, default_jobs));
    match outcome {
        Ok(o) => {
            for line in &o.log {
                println!("{line}");
            }
            o.exit_code
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

