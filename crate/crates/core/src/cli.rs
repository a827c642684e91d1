//! Command-line front end. Component indices on the command line are 1-based.

use crate::benchmarks::chi::{chi_measure, linear_grid};
use crate::benchmarks::experiment::{
    original_sample, run_data_experiment, run_trm_experiment, simulation_seed,
    DataExperimentConfig, ExperimentConfig,
};
use crate::benchmarks::gumbel::{gumbel_sample, SynthConfig};
use crate::conditional::{
    classify_case, conditional_simulate, validate_rejection_constant, CandidatePool,
    Case1Strategy, CondSimConfig, ConditioningEvent,
};
use crate::error::{Error, Result};
use crate::io::{self, default_headers, read_json, read_matrix, write_atomic, write_json};
use crate::joint::{joint_simulate, simulate_from_diffs, simulate_pipeline, JointSimConfig};
use crate::margins::{self, MarginKind, MarginModel, ThresholdVector};
use crate::mgp::{self, GaussianT, StdMgpSample};
use crate::risk::{self, linreg_baseline, TrmEstimate, VarMethod, VarSpec};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ndarray::{concatenate, Axis};
use std::ffi::OsString;
use std::path::{Path, PathBuf};

pub const DEFAULT_SEED: u64 = 42;
pub const THREADS_ENV: &str = "EXTREMESIM_THREADS";

#[derive(Debug, Parser)]
#[command(name = "extremesim", version, about = "Simulation of multivariate threshold excesses and tail risk estimation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a data set with Student-t margins and a Gumbel copula.
    Synth(SynthArgs),
    /// Fit a margin model to every column.
    Fit(FitArgs),
    /// Map data to the exponential scale and extract threshold excesses.
    Transform(TransformArgs),
    /// Bootstrap joint simulation of standard-scale excess vectors.
    SimulateJoint(SimulateJointArgs),
    /// Simulate one component given the values of the others.
    SimulateCond(SimulateCondArgs),
    /// ES, MES and DCTE on the data, a simulated sample and their union.
    Trm(TrmArgs),
    /// Conditional expectation of one component from conditional simulation.
    Mu(MuArgs),
    /// Replicated experiment on synthetic data, or repeated simulation from a data set.
    Experiment(ExperimentArgs),
    /// Extremal dependence coefficient over a grid of levels.
    Chi(ChiArgs),
    /// Check the rejection sampler against a Gaussian-T model.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Degrees of freedom per column, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub nu: Vec<f64>,
    #[arg(long)]
    pub theta: f64,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    StudentT,
    Empirical,
}

impl From<KindArg> for MarginKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::StudentT => MarginKind::StudentT,
            KindArg::Empirical => MarginKind::Empirical,
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "student-t")]
    pub kind: KindArg,
    /// JSON file with one margin model per column.
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    /// Margin models from `fit`.
    #[arg(long)]
    pub margins: PathBuf,
    #[arg(long, default_value_t = margins::DEFAULT_THRESHOLD_LEVEL)]
    pub threshold_level: f64,
    /// Standard-scale excesses.
    #[arg(short, long)]
    pub output: PathBuf,
    /// Where to store the exponential-scale thresholds (JSON).
    #[arg(long)]
    pub threshold_output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateJointArgs {
    /// Standard-scale excesses.
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    pub m: usize,
    /// Anchor component of the difference vectors.
    #[arg(long, default_value_t = 1)]
    pub q: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Map the draws back to the original scale (needs `--threshold`).
    #[arg(long, requires = "threshold")]
    pub margins: Option<PathBuf>,
    #[arg(long, requires = "margins")]
    pub threshold: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Case1Arg {
    Tilted,
    Subset,
}

#[derive(Debug, Args)]
pub struct CondArgs {
    /// Component to simulate.
    #[arg(long)]
    pub j: usize,
    /// Anchor component; defaults to the first component other than `j`.
    #[arg(long)]
    pub q: Option<usize>,
    /// Conditioning values of the other components in ascending order.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub given: Vec<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub m: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "tilted")]
    pub case1: Case1Arg,
    /// Gaussian kernel bandwidth on the pinned differences; plain bootstrap
    /// when absent.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub max_rejects: usize,
}

#[derive(Debug, Args)]
pub struct SimulateCondArgs {
    /// Standard-scale excesses.
    #[arg(short, long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub cond: CondArgs,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum VarArg {
    Theoretical,
    Empirical,
    GpdTail,
}

impl From<VarArg> for VarMethod {
    fn from(v: VarArg) -> Self {
        match v {
            VarArg::Theoretical => VarMethod::Theoretical,
            VarArg::Empirical => VarMethod::Empirical,
            VarArg::GpdTail => VarMethod::GpdTail,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrmArgs {
    /// Original data.
    #[arg(short, long)]
    pub input: PathBuf,
    /// Simulated sample on the original scale.
    #[arg(long)]
    pub sim: Option<PathBuf>,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value = "theoretical")]
    pub var_method: VarArg,
    /// Margin models, required for theoretical VaR.
    #[arg(long)]
    pub margins: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub target: usize,
    #[arg(long, default_value_t = risk::DEFAULT_GPD_THRESHOLD_LEVEL)]
    pub gpd_threshold_level: f64,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct MuArgs {
    /// Original data.
    #[arg(short, long)]
    pub input: PathBuf,
    /// Margin models; fitted Student-t margins when absent.
    #[arg(long)]
    pub margins: Option<PathBuf>,
    #[arg(long, default_value_t = margins::DEFAULT_THRESHOLD_LEVEL)]
    pub threshold_level: f64,
    /// Conditioning values are given on the original scale.
    #[command(flatten)]
    pub cond: CondArgs,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// JSON configuration; defaults are used for missing fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Observed data set. Switches to repeated simulation from this data.
    #[arg(short, long)]
    pub input: Option<PathBuf>,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Per-cell summary table.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Worker threads; falls back to EXTREMESIM_THREADS.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Directory receiving fitted margins, thresholds, excesses and one
    /// simulated sample.
    #[arg(long)]
    pub keep_intermediates: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ChiArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    /// Levels as `lo:hi:count`.
    #[arg(long, default_value = "0.8:0.999:40")]
    pub grid: String,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Correlations of the Gaussian-T model in row-major upper-triangular order.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub rho: Vec<f64>,
    #[arg(long)]
    pub j: usize,
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub given: Vec<f64>,
    #[arg(long, default_value_t = 50_000)]
    pub m: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// JSON report.
    #[arg(short, long)]
    pub output: PathBuf,
}

/// Parses `argv` (including the program name), runs one sub-command and
/// returns the process exit code: 0 on success, 1 on usage errors and 2 on
/// data or numerical errors.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(CliError::Data(e)) => {
            eprintln!("error [{}]: {e}", e.name());
            2
        }
    }
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Data(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

/// Converts a 1-based command-line index.
fn index(flag: &str, k: usize, d: usize) -> CliResult<usize> {
    if k == 0 || k > d {
        return usage(format!("--{flag} {k} is outside 1..={d}"));
    }
    Ok(k - 1)
}

fn run(cmd: Command) -> CliResult<String> {
    match cmd {
        Command::Synth(a) => synth(a),
        Command::Fit(a) => fit(a),
        Command::Transform(a) => transform(a),
        Command::SimulateJoint(a) => simulate_joint(a),
        Command::SimulateCond(a) => simulate_cond(a),
        Command::Trm(a) => trm(a),
        Command::Mu(a) => mu(a),
        Command::Experiment(a) => experiment(a),
        Command::Chi(a) => chi(a),
        Command::Validate(a) => validate(a),
    }
}

fn summary(rows: usize, path: &Path, seed: Option<u64>) -> String {
    match seed {
        Some(s) => format!("wrote {rows} rows to {} (seed {s})", path.display()),
        None => format!("wrote {rows} rows to {}", path.display()),
    }
}

fn synth(a: SynthArgs) -> CliResult<String> {
    let cfg = SynthConfig {
        nu: a.nu,
        theta: a.theta,
        n: a.n,
        seed: a.seed,
    };
    if let Err(e) = cfg.validate() {
        return usage(e.to_string());
    }
    let x = gumbel_sample(&cfg)?;
    io::write_matrix(&a.output, &default_headers(cfg.d()), x.view())?;
    Ok(summary(x.nrows(), &a.output, Some(a.seed)))
}

fn fit(a: FitArgs) -> CliResult<String> {
    let t = read_matrix(&a.input)?;
    let models = margins::fit_margins(t.data.view(), a.kind.into())?;
    write_json(&a.output, &models)?;
    Ok(format!("fitted {} margins to {}", models.len(), a.output.display()))
}

fn read_models(path: &Path, d: usize) -> CliResult<Vec<MarginModel>> {
    let models: Vec<MarginModel> = read_json(path)?;
    if models.len() != d {
        return Err(Error::DimensionError(format!("{} margin models for {d} columns", models.len())).into());
    }
    for m in &models {
        m.validate()?;
    }
    Ok(models)
}

fn read_excesses(path: &Path) -> CliResult<(Vec<String>, StdMgpSample)> {
    let t = read_matrix(path)?;
    Ok((t.headers, StdMgpSample::new(t.data)?))
}

fn transform(a: TransformArgs) -> CliResult<String> {
    let t = read_matrix(&a.input)?;
    let models = read_models(&a.margins, t.data.ncols())?;
    let exp = margins::to_exponential(t.data.view(), &models).map_err(|e| e.at("transform"))?;
    let u = margins::select_threshold(&exp, a.threshold_level).map_err(|e| e.at("threshold"))?;
    let z = margins::extract_excesses(&exp, &u).map_err(|e| e.at("excesses"))?;
    io::write_matrix(&a.output, &t.headers, z.data.view())?;
    if let Some(p) = &a.threshold_output {
        write_json(p, &u)?;
    }
    Ok(summary(z.n(), &a.output, None))
}

fn simulate_joint(a: SimulateJointArgs) -> CliResult<String> {
    let (headers, z) = read_excesses(&a.input)?;
    let cfg = JointSimConfig {
        m: a.m,
        q: index("q", a.q, z.d())?,
        seed: a.seed,
    };
    if a.m == 0 {
        return usage("--m must be at least 1");
    }
    let sim = joint_simulate(&z, &cfg)?;
    match (&a.margins, &a.threshold) {
        (Some(mp), Some(tp)) => {
            let models = read_models(mp, z.d())?;
            let u: ThresholdVector = read_json(tp)?;
            let x = margins::back_transform(sim.data.view(), &u, &models)?;
            io::write_matrix(&a.output, &headers, x.view())?;
        }
        _ => io::write_matrix(&a.output, &headers, sim.data.view())?,
    }
    Ok(summary(a.m, &a.output, Some(a.seed)))
}

/// Builds the event and sampler settings from 0-based `j`, with `given`
/// already on the standard scale.
fn cond_setup(c: &CondArgs, d: usize, given: Vec<f64>) -> CliResult<(ConditioningEvent, CondSimConfig)> {
    let j = index("j", c.j, d)?;
    let q = match c.q {
        Some(q) => index("q", q, d)?,
        None => ConditioningEvent::default_anchor(j, d),
    };
    if q == j {
        return usage("--q must differ from --j");
    }
    if given.len() + 1 != d {
        return usage(format!("--given needs {} values, got {}", d - 1, given.len()));
    }
    if c.m == 0 {
        return usage("--m must be at least 1");
    }
    let pool = match c.bandwidth {
        None => CandidatePool::Marginal,
        Some(h) if h > 0.0 => CandidatePool::Kernel { bandwidth: h },
        Some(h) => return usage(format!("--bandwidth {h} must be positive")),
    };
    let ev = ConditioningEvent::new(j, q, given)?;
    let cfg = CondSimConfig {
        m: c.m,
        seed: c.seed,
        max_rejects: c.max_rejects,
        case1: match c.case1 {
            Case1Arg::Tilted => Case1Strategy::Tilted,
            Case1Arg::Subset => Case1Strategy::Subset,
        },
        pool,
        ..Default::default()
    };
    Ok((ev, cfg))
}

fn simulate_cond(a: SimulateCondArgs) -> CliResult<String> {
    let (headers, z) = read_excesses(&a.input)?;
    let (ev, cfg) = cond_setup(&a.cond, z.d(), a.cond.given.clone())?;
    let diffs = mgp::differences(&z, ev.q)?;
    let draws = conditional_simulate(&diffs, &ev, &cfg)?;
    io::write_column(&a.output, &headers[ev.j], &draws)?;
    Ok(format!(
        "{} ({})",
        summary(draws.len(), &a.output, Some(cfg.seed)),
        classify_case(&ev)
    ))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

fn trm_row(scope: &str, e: &TrmEstimate) -> Vec<String> {
    vec![
        e.metric.to_string(),
        scope.to_string(),
        fmt_opt(e.value),
        e.n_exceed.to_string(),
        e.sufficient.to_string(),
    ]
}

fn trm_estimates(x: ndarray::ArrayView2<f64>, j: usize, v: &[f64]) -> Result<[TrmEstimate; 3]> {
    let col: Vec<f64> = x.column(j).to_vec();
    Ok([
        risk::es_empirical(&col, v[j]),
        risk::mes_empirical(x, j, v)?,
        risk::dcte_empirical(x, j, v)?,
    ])
}

fn trm(a: TrmArgs) -> CliResult<String> {
    let t = read_matrix(&a.input)?;
    let d = t.data.ncols();
    let j = index("target", a.target, d)?;
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return usage(format!("--alpha {} must lie in (0, 1)", a.alpha));
    }
    let method: VarMethod = a.var_method.into();
    let models = match (&a.margins, method) {
        (Some(p), _) => Some(read_models(p, d)?),
        (None, VarMethod::Theoretical) => return usage("--var-method theoretical needs --margins"),
        (None, _) => None,
    };
    let v = (0..d)
        .map(|k| {
            let spec = match method {
                VarMethod::Theoretical => {
                    VarSpec::theoretical(models.as_ref().expect("checked")[k].clone(), a.alpha)
                }
                VarMethod::Empirical => VarSpec::empirical(a.alpha),
                VarMethod::GpdTail => VarSpec {
                    gpd_threshold_level: Some(a.gpd_threshold_level),
                    ..VarSpec::gpd_tail(a.alpha)
                },
            };
            risk::var(&t.data.column(k).to_vec(), &spec)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut rows: Vec<Vec<String>> = trm_estimates(t.data.view(), j, &v)?
        .iter()
        .map(|e| trm_row("Orig", e))
        .collect();
    if let Some(sp) = &a.sim {
        let s = read_matrix(sp)?;
        if s.data.ncols() != d {
            return Err(Error::DimensionError(format!(
                "simulated sample has {} columns, data has {d}",
                s.data.ncols()
            ))
            .into());
        }
        let ext = concatenate(Axis(0), &[t.data.view(), s.data.view()]).expect("equal widths");
        rows.extend(trm_estimates(s.data.view(), j, &v)?.iter().map(|e| trm_row("Simu", e)));
        rows.extend(trm_estimates(ext.view(), j, &v)?.iter().map(|e| trm_row("Ext", e)));
    }
    let n = rows.len();
    let headers = ["metric", "scope", "value", "n_exceed", "sufficient"];
    write_atomic(&a.output, &io::csv_bytes(&headers, rows)?)?;
    Ok(summary(n, &a.output, None))
}

fn mu(a: MuArgs) -> CliResult<String> {
    let t = read_matrix(&a.input)?;
    let d = t.data.ncols();
    let models = match &a.margins {
        Some(p) => read_models(p, d)?,
        None => margins::fit_margins(t.data.view(), MarginKind::StudentT).map_err(|e| e.at("fit"))?,
    };
    let j = index("j", a.cond.j, d)?;
    if a.cond.given.len() + 1 != d {
        return usage(format!("--given needs {} values, got {}", d - 1, a.cond.given.len()));
    }
    let exp = margins::to_exponential(t.data.view(), &models).map_err(|e| e.at("transform"))?;
    let u = margins::select_threshold(&exp, a.threshold_level).map_err(|e| e.at("threshold"))?;
    let z = margins::extract_excesses(&exp, &u).map_err(|e| e.at("excesses"))?;
    let others: Vec<usize> = (0..d).filter(|&k| k != j).collect();
    let z_given: Vec<f64> = others
        .iter()
        .zip(&a.cond.given)
        .map(|(&k, &x)| models[k].to_exp(x) - u.u[k])
        .collect();
    let (ev, cfg) = cond_setup(&a.cond, d, z_given)?;
    let diffs = mgp::differences(&z, ev.q)?;
    let draws = conditional_simulate(&diffs, &ev, &cfg).map_err(|e| e.at("simulate"))?;
    let x = draws
        .iter()
        .map(|&zj| models[j].from_exp(zj + u.u[j]))
        .collect::<Result<Vec<f64>>>()?;
    let est = risk::mu_estimate(&x);
    let lr = linreg_baseline(t.data.view(), j)?.predict(&a.cond.given)?;
    let headers = ["method", "value", "n", "case"];
    let case = classify_case(&ev).to_string();
    let rows = vec![
        vec!["cond_sim".into(), fmt_opt(est.value), est.n_exceed.to_string(), case.clone()],
        vec!["linreg".into(), lr.to_string(), t.data.nrows().to_string(), case],
    ];
    write_atomic(&a.output, &io::csv_bytes(&headers, rows)?)?;
    Ok(summary(2, &a.output, Some(cfg.seed)))
}

fn threads(arg: Option<usize>) -> CliResult<Option<usize>> {
    if let Some(t) = arg {
        return if t == 0 { usage("--threads must be at least 1") } else { Ok(Some(t)) };
    }
    match std::env::var(THREADS_ENV) {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(t) if t > 0 => Ok(Some(t)),
            _ => usage(format!("{THREADS_ENV}={s} is not a positive integer")),
        },
        Err(_) => Ok(None),
    }
}

fn experiment(a: ExperimentArgs) -> CliResult<String> {
    let threads = threads(a.threads)?;
    match &a.input {
        Some(input) => data_experiment(&a, input, threads),
        None => synthetic_experiment(&a, threads),
    }
}

fn load_config<T: serde::de::DeserializeOwned + Default>(path: &Option<PathBuf>) -> CliResult<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(Error::from)?;
            serde_json::from_str(&text).or_else(|e| usage(format!("--config {}: {e}", p.display())))
        }
    }
}

fn synthetic_experiment(a: &ExperimentArgs, threads: Option<usize>) -> CliResult<String> {
    let mut cfg: ExperimentConfig = load_config(&a.config)?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    cfg.threads = threads.or(cfg.threads);
    if let Err(e) = cfg.validate() {
        return usage(e.to_string());
    }
    let res = run_trm_experiment(&cfg)?;
    let headers = [
        "theta", "alpha", "orig_rep", "sim_rep", "scope", "metric", "value", "n_exceed",
        "sufficient", "reference", "rel_error",
    ];
    let rows = res.rows.iter().map(|r| {
        vec![
            r.theta.to_string(),
            r.alpha.to_string(),
            (r.orig_rep + 1).to_string(),
            r.sim_rep.map_or_else(|| "NA".into(), |s| (s + 1).to_string()),
            r.scope.to_string(),
            r.estimate.metric.to_string(),
            fmt_opt(r.estimate.value),
            r.estimate.n_exceed.to_string(),
            r.estimate.sufficient.to_string(),
            r.reference.to_string(),
            fmt_opt(r.rel_error),
        ]
    });
    write_atomic(&a.output, &io::csv_bytes(&headers, rows)?)?;
    if let Some(p) = &a.summary {
        let headers = [
            "theta", "alpha", "scope", "metric", "count", "mean_n_exceed", "sd_n_exceed",
            "frac_sufficient", "median_rel_error", "iqr_rel_error",
        ];
        let rows = res.summary().into_iter().map(|s| {
            vec![
                s.theta.to_string(),
                s.alpha.to_string(),
                s.scope.to_string(),
                s.metric.to_string(),
                s.count.to_string(),
                s.mean_n_exceed.to_string(),
                s.sd_n_exceed.to_string(),
                s.frac_sufficient.to_string(),
                fmt_opt(s.median_rel_error),
                fmt_opt(s.iqr_rel_error),
            ]
        });
        write_atomic(p, &io::csv_bytes(&headers, rows)?)?;
    }
    if let Some(dir) = &a.keep_intermediates {
        std::fs::create_dir_all(dir).map_err(Error::from)?;
        for (ti, theta) in cfg.thetas.iter().enumerate() {
            let (x, seed) = original_sample(&cfg, ti, 0);
            let truth = SynthConfig { nu: cfg.nu.clone(), theta: *theta, n: cfg.n, seed }.margins();
            let models = match cfg.margins {
                crate::benchmarks::MarginSource::Known => truth,
                crate::benchmarks::MarginSource::FittedStudentT => {
                    margins::fit_margins(x.view(), MarginKind::StudentT)?
                }
            };
            let jc = JointSimConfig { m: cfg.m, q: cfg.anchor_index, seed: simulation_seed(seed, 0) };
            let p = simulate_pipeline(x.view(), &models, cfg.threshold_level, &jc)?;
            let tag = format!("theta{theta}");
            dump_intermediates(dir, &tag, &x, &models, &p.threshold, &p.excesses, &p.original_scale)?;
        }
    }
    Ok(summary(res.rows.len(), &a.output, Some(cfg.seed)))
}

fn dump_intermediates(
    dir: &Path,
    tag: &str,
    x: &ndarray::Array2<f64>,
    models: &[MarginModel],
    u: &ThresholdVector,
    z: &StdMgpSample,
    sim: &ndarray::Array2<f64>,
) -> Result<()> {
    let h = default_headers(x.ncols());
    io::write_matrix(&dir.join(format!("{tag}_data.csv")), &h, x.view())?;
    write_json(&dir.join(format!("{tag}_margins.json")), &models)?;
    write_json(&dir.join(format!("{tag}_threshold.json")), u)?;
    io::write_matrix(&dir.join(format!("{tag}_excesses.csv")), &h, z.data.view())?;
    io::write_matrix(&dir.join(format!("{tag}_sim.csv")), &h, sim.view())
}

fn data_experiment(a: &ExperimentArgs, input: &Path, threads: Option<usize>) -> CliResult<String> {
    let t = read_matrix(input)?;
    let mut cfg: DataExperimentConfig = load_config(&a.config)?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    cfg.threads = threads.or(cfg.threads);
    let (rows, fit) = run_data_experiment(t.data.view(), &cfg)?;
    let headers = ["target", "alpha", "sim_rep", "scope", "metric", "value", "n_exceed", "sufficient"];
    let out = rows.iter().map(|r| {
        vec![
            t.headers[r.target].clone(),
            r.alpha.to_string(),
            r.sim_rep.map_or_else(|| "NA".into(), |s| (s + 1).to_string()),
            r.scope.to_string(),
            r.estimate.metric.to_string(),
            fmt_opt(r.estimate.value),
            r.estimate.n_exceed.to_string(),
            r.estimate.sufficient.to_string(),
        ]
    });
    write_atomic(&a.output, &io::csv_bytes(&headers, out)?)?;
    if let Some(p) = &a.summary {
        write_atomic(p, &data_summary(&rows, &t.headers)?)?;
    }
    if let Some(dir) = &a.keep_intermediates {
        std::fs::create_dir_all(dir).map_err(Error::from)?;
        let diffs = mgp::differences(&fit.excesses, cfg.anchor_index)?;
        let sim = simulate_from_diffs(&diffs, cfg.m, simulation_seed(cfg.seed, 0));
        let xs = margins::back_transform(sim.data.view(), &fit.threshold, &fit.models)?;
        write_json(&dir.join("margins.json"), &fit.models)?;
        write_json(&dir.join("threshold.json"), &fit.threshold)?;
        io::write_matrix(&dir.join("excesses.csv"), &t.headers, fit.excesses.data.view())?;
        io::write_matrix(&dir.join("sim.csv"), &t.headers, xs.view())?;
    }
    Ok(summary(rows.len(), &a.output, Some(cfg.seed)))
}

/// Mean and standard deviation of each metric over simulation replicates.
fn data_summary(rows: &[crate::benchmarks::experiment::DataRow], names: &[String]) -> Result<Vec<u8>> {
    use crate::stats::{mean, sd};
    let mut keys: Vec<(usize, f64, crate::benchmarks::Scope, risk::TrmMetric)> = Vec::new();
    for r in rows {
        let k = (r.target, r.alpha, r.scope, r.estimate.metric);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    let out = keys.into_iter().map(|(target, alpha, scope, metric)| {
        let cell: Vec<_> = rows
            .iter()
            .filter(|r| r.target == target && r.alpha == alpha && r.scope == scope && r.estimate.metric == metric)
            .collect();
        let vals: Vec<f64> = cell.iter().filter_map(|r| r.estimate.value).collect();
        let counts: Vec<f64> = cell.iter().map(|r| r.estimate.n_exceed as f64).collect();
        let all = vals.len() == cell.len();
        vec![
            names[target].clone(),
            alpha.to_string(),
            scope.to_string(),
            metric.to_string(),
            if all { mean(&vals).to_string() } else { "NA".into() },
            if all && vals.len() > 1 { sd(&vals).to_string() } else { "NA".into() },
            mean(&counts).to_string(),
        ]
    });
    let headers = ["target", "alpha", "scope", "metric", "mean", "sd", "mean_n_exceed"];
    io::csv_bytes(&headers, out)
}

/// Parses `lo:hi:count`.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || Error::Parse(format!("grid {s:?} is not lo:hi:count"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if count == 0 || !(lo <= hi) {
        return Err(bad());
    }
    Ok(linear_grid(lo, hi, count))
}

fn chi(a: ChiArgs) -> CliResult<String> {
    let grid = match parse_grid(&a.grid) {
        Ok(g) => g,
        Err(e) => return usage(format!("--grid: {e}")),
    };
    let t = read_matrix(&a.input)?;
    let curve = chi_measure(t.data.view(), &grid)?;
    let rows = curve.iter().map(|(al, c)| vec![al.to_string(), c.to_string()]);
    write_atomic(&a.output, &io::csv_bytes(&["alpha", "chi"], rows)?)?;
    Ok(summary(curve.len(), &a.output, None))
}

fn validate(a: ValidateArgs) -> CliResult<String> {
    let d = a.given.len() + 1;
    if a.rho.len() != d * (d - 1) / 2 {
        return usage(format!("--rho needs {} values for dimension {d}", d * (d - 1) / 2));
    }
    let model = GaussianT::from_pairs(d, &a.rho)?;
    let j = index("j", a.j, d)?;
    let q = match a.q {
        Some(q) => index("q", q, d)?,
        None => ConditioningEvent::default_anchor(j, d),
    };
    if a.m == 0 {
        return usage("--m must be at least 1");
    }
    let ev = ConditioningEvent::new(j, q, a.given)?;
    let law = model.difference_law(q)?;
    let report = validate_rejection_constant(&ev, &law, a.m, a.seed)?;
    write_json(&a.output, &report)?;
    Ok(format!(
        "{}: max weight {:.6}, tv {:.4}, acceptance {:.4}; report in {} (seed {})",
        report.case,
        report.max_weight,
        report.tv,
        report.acceptance_rate,
        a.output.display(),
        a.seed
    ))
}
