//! Replicated experiments on synthetic data: tail risk metrics on original,
//! simulated and extended samples, and conditional expectations from the
//! conditional sampler against linear regression.

use super::gumbel::{gumbel_sample_with, SynthConfig};
use super::reference::{mu_reference, trm_reference, ReferenceValue};
use crate::conditional::{
    classify_case, conditional_simulate, CandidatePool, Case1Strategy, CaseLabel, CondSimConfig,
    ConditioningEvent,
};
use crate::error::{Error, Result, StageExt};
use crate::joint::simulate_from_diffs;
use crate::margins::{self, MarginKind, MarginModel, RiskMatrix};
use crate::mgp::{self, DiffMatrix};
use crate::risk::{self, linreg_baseline, TrmEstimate, TrmMetric, VarMethod, VarSpec};
use crate::rng::{self, derive_indexed};
use crate::stats::{iqr, mean, quantile_sorted, sd, sorted};
use ndarray::{ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Which margins map the data to the exponential scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginSource {
    /// The generating Student-t margins.
    Known,
    /// Student-t margins fitted to each original sample.
    FittedStudentT,
}

/// Grid and replication sizes of a tail risk metric experiment. Component
/// indices are 0-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub nu: Vec<f64>,
    /// Also accepted as a single `theta`.
    #[serde(alias = "theta", deserialize_with = "one_or_many")]
    pub thetas: Vec<f64>,
    #[serde(alias = "alpha", deserialize_with = "one_or_many")]
    pub alphas: Vec<f64>,
    pub n: usize,
    pub m: usize,
    pub r_orig: usize,
    pub r_sim: usize,
    pub seed: u64,
    pub target_index: usize,
    pub anchor_index: usize,
    /// Marginal quantile level of the exponential-scale threshold.
    pub threshold_level: f64,
    pub margins: MarginSource,
    pub var_method: VarMethod,
    pub threads: Option<usize>,
}

fn one_or_many<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(f64),
        Many(Vec<f64>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(x) => vec![x],
        OneOrMany::Many(v) => v,
    })
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            nu: vec![2.0, 3.0, 2.5],
            thetas: vec![1.3, 2.6, 7.3],
            alphas: vec![0.9975, 0.999, 0.9997],
            n: 1500,
            m: 10_000,
            r_orig: 50,
            r_sim: 50,
            seed: 42,
            target_index: 0,
            anchor_index: 0,
            threshold_level: 0.85,
            margins: MarginSource::Known,
            var_method: VarMethod::Theoretical,
            threads: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let d = self.nu.len();
        for &theta in &self.thetas {
            self.synth(theta, 0).validate()?;
        }
        if self.thetas.is_empty() || self.alphas.is_empty() {
            return Err(Error::InvalidConfig("empty theta or alpha grid".into()));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return Err(Error::InvalidConfig(format!("alpha {a} outside (0, 1)")));
        }
        if self.target_index >= d || self.anchor_index >= d {
            return Err(Error::InvalidConfig("target or anchor index out of range".into()));
        }
        if !(self.threshold_level > 0.0 && self.threshold_level < 1.0) {
            return Err(Error::InvalidConfig("threshold level outside (0, 1)".into()));
        }
        if self.n < 2 || self.m == 0 || self.r_orig == 0 {
            return Err(Error::InvalidConfig("n >= 2, m >= 1 and r_orig >= 1 required".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidConfig("threads must be at least 1".into()));
        }
        Ok(())
    }

    fn synth(&self, theta: f64, seed: u64) -> SynthConfig {
        SynthConfig {
            nu: self.nu.clone(),
            theta,
            n: self.n,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scope {
    Orig,
    Simu,
    Ext,
}

impl std::fmt::Display for Scope {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scope::Orig => "Orig",
            Scope::Simu => "Simu",
            Scope::Ext => "Ext",
        })
    }
}

/// One metric estimate in one replication.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub theta: f64,
    pub alpha: f64,
    pub orig_rep: usize,
    /// Simulation replicate; `None` for the original sample.
    pub sim_rep: Option<usize>,
    pub scope: Scope,
    pub estimate: TrmEstimate,
    pub reference: f64,
    pub rel_error: Option<f64>,
}

/// Aggregate over replications for one `(theta, alpha, scope, metric)` cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub theta: f64,
    pub alpha: f64,
    pub scope: Scope,
    pub metric: TrmMetric,
    pub count: usize,
    pub mean_n_exceed: f64,
    pub sd_n_exceed: f64,
    pub frac_sufficient: f64,
    pub median_rel_error: Option<f64>,
    pub iqr_rel_error: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResults {
    pub rows: Vec<ExperimentRow>,
    pub references: Vec<(f64, ReferenceValue)>,
}

const METRICS: [TrmMetric; 3] = [TrmMetric::Es, TrmMetric::Mes, TrmMetric::Dcte];

impl ExperimentResults {
    pub fn summary(&self) -> Vec<SummaryRow> {
        let mut keys: Vec<(f64, f64, Scope, TrmMetric)> = Vec::new();
        for r in &self.rows {
            let k = (r.theta, r.alpha, r.scope, r.estimate.metric);
            if !keys.contains(&k) {
                keys.push(k);
            }
        }
        keys.into_iter()
            .map(|(theta, alpha, scope, metric)| {
                let cell: Vec<&ExperimentRow> = self
                    .rows
                    .iter()
                    .filter(|r| {
                        r.theta == theta
                            && r.alpha == alpha
                            && r.scope == scope
                            && r.estimate.metric == metric
                    })
                    .collect();
                let counts: Vec<f64> = cell.iter().map(|r| r.estimate.n_exceed as f64).collect();
                let errs: Vec<f64> = cell.iter().filter_map(|r| r.rel_error).collect();
                let (median, spread) = if errs.is_empty() {
                    (None, None)
                } else {
                    (Some(quantile_sorted(&sorted(&errs), 0.5)), Some(iqr(&errs)))
                };
                SummaryRow {
                    theta,
                    alpha,
                    scope,
                    metric,
                    count: cell.len(),
                    mean_n_exceed: mean(&counts),
                    sd_n_exceed: sd(&counts),
                    frac_sufficient: errs.len() as f64 / cell.len() as f64,
                    median_rel_error: median,
                    iqr_rel_error: spread,
                }
            })
            .collect()
    }

    pub fn cell(&self, theta: f64, alpha: f64, scope: Scope, metric: TrmMetric) -> Option<SummaryRow> {
        self.summary().into_iter().find(|s| {
            s.theta == theta && s.alpha == alpha && s.scope == scope && s.metric == metric
        })
    }
}

/// Runs `f` on a pool with the requested number of threads (or the global
/// pool when `None`).
pub(crate) fn with_threads<T: Send, F: FnOnce() -> T + Send>(threads: Option<usize>, f: F) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::InvalidConfig(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// Running sums of the target over the three conditioning sets.
#[derive(Debug, Clone, Copy, Default)]
struct Sums {
    es: (f64, usize),
    mes: (f64, usize),
    dcte: (f64, usize),
}

impl Sums {
    fn get(&self, m: TrmMetric) -> (f64, usize) {
        match m {
            TrmMetric::Es => self.es,
            TrmMetric::Mes => self.mes,
            TrmMetric::Dcte => self.dcte,
            TrmMetric::Mu => unreachable!("MU is not a joint-sample metric"),
        }
    }

    fn estimate(&self, m: TrmMetric) -> TrmEstimate {
        let (s, n) = self.get(m);
        TrmEstimate {
            metric: m,
            value: (n > 0).then(|| s / n as f64),
            n_exceed: n,
            sufficient: n > 0,
        }
    }

    fn plus(&self, o: &Sums) -> Sums {
        let add = |a: (f64, usize), b: (f64, usize)| (a.0 + b.0, a.1 + b.1);
        Sums {
            es: add(self.es, o.es),
            mes: add(self.mes, o.mes),
            dcte: add(self.dcte, o.dcte),
        }
    }
}

fn sums_from_estimates(es: &TrmEstimate, mes: &TrmEstimate, dcte: &TrmEstimate) -> Sums {
    let f = |e: &TrmEstimate| (e.value.unwrap_or(0.0) * e.n_exceed as f64, e.n_exceed);
    Sums {
        es: f(es),
        mes: f(mes),
        dcte: f(dcte),
    }
}

/// Metric sums over simulated standard-scale rows, evaluated on the
/// exponential scale and back-transforming only the target of selected rows.
///
/// `X_k >= v_k` is equivalent to `Z_k >= -ln(1 - F_k(v_k)) - u_k` because
/// the back-transform is increasing.
fn simulated_sums(
    z: ArrayView2<f64>,
    zstar: &[f64],
    j: usize,
    u_j: f64,
    model_j: &MarginModel,
) -> Result<Sums> {
    let d = z.ncols();
    let mut s = Sums::default();
    for r in z.axis_iter(Axis(0)) {
        let es_hit = r[j] > zstar[j];
        let others = (0..d).filter(|&k| k != j).all(|k| r[k] >= zstar[k]);
        let all = others && r[j] >= zstar[j];
        if es_hit || others {
            let x = model_j.from_exp(r[j] + u_j)?;
            if es_hit {
                s.es.0 += x;
                s.es.1 += 1;
            }
            if others {
                s.mes.0 += x;
                s.mes.1 += 1;
            }
            if all {
                s.dcte.0 += x;
                s.dcte.1 += 1;
            }
        }
    }
    Ok(s)
}

/// The same sums computed by back-transforming every simulated row.
pub fn simulated_estimates_full(
    z: ArrayView2<f64>,
    threshold: &margins::ThresholdVector,
    models: &[MarginModel],
    var: &[f64],
    j: usize,
) -> Result<[TrmEstimate; 3]> {
    let x = margins::back_transform(z, threshold, models)?;
    let col: Vec<f64> = x.column(j).to_vec();
    Ok([
        risk::es_empirical(&col, var[j]),
        risk::mes_empirical(x.view(), j, var)?,
        risk::dcte_empirical(x.view(), j, var)?,
    ])
}

/// [`simulated_estimates_full`] through the exponential-scale shortcut used
/// by the experiment.
pub fn simulated_estimates_lazy(
    z: ArrayView2<f64>,
    threshold: &margins::ThresholdVector,
    models: &[MarginModel],
    var: &[f64],
    j: usize,
) -> Result<[TrmEstimate; 3]> {
    let zstar: Vec<f64> = models
        .iter()
        .zip(var)
        .zip(&threshold.u)
        .map(|((m, &v), &u)| -m.sf(v).ln() - u)
        .collect();
    let s = simulated_sums(z, &zstar, j, threshold.u[j], &models[j])?;
    Ok(METRICS.map(|m| s.estimate(m)))
}

/// Original-scale VaR vector for one sample.
fn var_vector(
    x: ArrayView2<f64>,
    truth: &[MarginModel],
    method: VarMethod,
    alpha: f64,
) -> Result<Vec<f64>> {
    (0..x.ncols())
        .map(|k| {
            let spec = match method {
                VarMethod::Theoretical => VarSpec::theoretical(truth[k].clone(), alpha),
                VarMethod::Empirical => VarSpec::empirical(alpha),
                VarMethod::GpdTail => VarSpec::gpd_tail(alpha),
            };
            risk::var(&x.column(k).to_vec(), &spec)
        })
        .collect()
}

/// Original data set `rep` for the `theta_idx`-th copula parameter, with the
/// seed it was drawn from.
pub fn original_sample(cfg: &ExperimentConfig, theta_idx: usize, rep: usize) -> (RiskMatrix, u64) {
    let seed = derive_indexed(cfg.seed, &format!("experiment/orig/{theta_idx}"), rep as u64);
    let synth = cfg.synth(cfg.thetas[theta_idx], seed);
    (gumbel_sample_with(&synth, &mut rng::stream(seed, "synth/gumbel")), seed)
}

/// Seed of simulation replicate `rep` from an original sample's seed.
pub fn simulation_seed(orig_seed: u64, rep: usize) -> u64 {
    derive_indexed(orig_seed, "experiment/sim", rep as u64)
}

struct OrigTask {
    theta_idx: usize,
    rep: usize,
}

fn run_orig(
    cfg: &ExperimentConfig,
    task: &OrigTask,
    refs: &[(f64, f64, TrmMetric, f64)],
) -> Result<Vec<ExperimentRow>> {
    let theta = cfg.thetas[task.theta_idx];
    let j = cfg.target_index;
    let (x, orig_seed) = original_sample(cfg, task.theta_idx, task.rep);
    let truth = cfg.synth(theta, orig_seed).margins();
    let models = match cfg.margins {
        MarginSource::Known => truth.clone(),
        MarginSource::FittedStudentT => margins::fit_margins(x.view(), MarginKind::StudentT).stage("fit")?,
    };
    let exp = margins::to_exponential(x.view(), &models).stage("transform")?;
    let threshold = margins::select_threshold(&exp, cfg.threshold_level).stage("threshold")?;
    let excesses = margins::extract_excesses(&exp, &threshold).stage("excesses")?;
    let diffs: DiffMatrix = mgp::differences(&excesses, cfg.anchor_index)?;

    let reference = |alpha: f64, m: TrmMetric| {
        refs.iter()
            .find(|r| r.0 == theta && r.1 == alpha && r.2 == m)
            .map(|r| r.3)
            .expect("reference computed for every cell")
    };
    let row = |alpha: f64, sim_rep: Option<usize>, scope: Scope, e: TrmEstimate| {
        let reference = reference(alpha, e.metric);
        ExperimentRow {
            theta,
            alpha,
            orig_rep: task.rep,
            sim_rep,
            scope,
            estimate: e,
            reference,
            rel_error: e.value.map(|v| (v - reference) / reference),
        }
    };

    let mut rows = Vec::new();
    let mut per_alpha = Vec::new();
    for &alpha in &cfg.alphas {
        let v = var_vector(x.view(), &truth, cfg.var_method, alpha).stage("var")?;
        let col: Vec<f64> = x.column(j).to_vec();
        let es = risk::es_empirical(&col, v[j]);
        let mes = risk::mes_empirical(x.view(), j, &v)?;
        let dcte = risk::dcte_empirical(x.view(), j, &v)?;
        for e in [es, mes, dcte] {
            rows.push(row(alpha, None, Scope::Orig, e));
        }
        let zstar: Vec<f64> = models
            .iter()
            .zip(&v)
            .zip(&threshold.u)
            .map(|((m, &vk), &u)| -m.sf(vk).ln() - u)
            .collect();
        per_alpha.push((alpha, zstar, sums_from_estimates(&es, &mes, &dcte)));
    }
    for s in 0..cfg.r_sim {
        let sim_seed = simulation_seed(orig_seed, s);
        let sim = simulate_from_diffs(&diffs, cfg.m, sim_seed);
        for (alpha, zstar, orig_sums) in &per_alpha {
            let ss = simulated_sums(sim.data.view(), zstar, j, threshold.u[j], &models[j])?;
            let ext = ss.plus(orig_sums);
            for m in METRICS {
                rows.push(row(*alpha, Some(s), Scope::Simu, ss.estimate(m)));
                rows.push(row(*alpha, Some(s), Scope::Ext, ext.estimate(m)));
            }
        }
    }
    Ok(rows)
}

/// Replicated comparison of tail risk metric estimates on original,
/// simulated and extended samples. Output order does not depend on the
/// number of worker threads.
pub fn run_trm_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResults> {
    cfg.validate()?;
    let j = cfg.target_index;
    let mut references = Vec::new();
    let mut flat = Vec::new();
    for &theta in &cfg.thetas {
        let synth = cfg.synth(theta, 0);
        for &alpha in &cfg.alphas {
            for m in METRICS {
                let r = if cfg.nu.len() == 3 || m == TrmMetric::Es {
                    trm_reference(&synth, m, alpha, j).stage("reference")?
                } else {
                    return Err(Error::DimensionError(
                        "MES/DCTE references are available for d = 3 only".into(),
                    ));
                };
                flat.push((theta, alpha, m, r.value));
                references.push((theta, r));
            }
        }
    }
    let tasks: Vec<OrigTask> = (0..cfg.thetas.len())
        .flat_map(|theta_idx| (0..cfg.r_orig).map(move |rep| OrigTask { theta_idx, rep }))
        .collect();
    let chunks: Vec<Result<Vec<ExperimentRow>>> = with_threads(cfg.threads, || {
        tasks.par_iter().map(|t| run_orig(cfg, t, &flat)).collect()
    })?;
    let mut rows = Vec::new();
    for c in chunks {
        rows.extend(c?);
    }
    Ok(ExperimentResults { rows, references })
}

// ---------------------------------------------------------------------------
// Observed data

/// Settings for repeated joint simulation from one observed data set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataExperimentConfig {
    #[serde(alias = "alpha", deserialize_with = "one_or_many")]
    pub alphas: Vec<f64>,
    pub margin_kind: MarginKind,
    pub threshold_level: f64,
    pub var_method: VarMethod,
    pub m: usize,
    pub r_sim: usize,
    pub seed: u64,
    pub anchor_index: usize,
    /// Target components; all components when empty.
    pub targets: Vec<usize>,
    pub threads: Option<usize>,
}

impl Default for DataExperimentConfig {
    fn default() -> Self {
        DataExperimentConfig {
            alphas: vec![0.9975, 0.999, 0.9997],
            margin_kind: MarginKind::StudentT,
            threshold_level: margins::DEFAULT_THRESHOLD_LEVEL,
            var_method: VarMethod::Theoretical,
            m: 10_000,
            r_sim: 100,
            seed: 42,
            anchor_index: 0,
            targets: Vec::new(),
            threads: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DataRow {
    pub target: usize,
    pub alpha: f64,
    pub sim_rep: Option<usize>,
    pub scope: Scope,
    pub estimate: TrmEstimate,
}

/// Fitted pieces of a data experiment, kept for inspection.
#[derive(Debug, Clone)]
pub struct DataFit {
    pub models: Vec<MarginModel>,
    pub threshold: margins::ThresholdVector,
    pub excesses: mgp::StdMgpSample,
}

/// Fits margins, extracts excesses and estimates ES/MES/DCTE on the data and
/// on `r_sim` simulated samples mapped back to the original scale.
pub fn run_data_experiment(
    x: ArrayView2<f64>,
    cfg: &DataExperimentConfig,
) -> Result<(Vec<DataRow>, DataFit)> {
    let d = x.ncols();
    if cfg.anchor_index >= d {
        return Err(Error::IndexError { index: cfg.anchor_index, dim: d });
    }
    if let Some(&t) = cfg.targets.iter().find(|&&t| t >= d) {
        return Err(Error::IndexError { index: t, dim: d });
    }
    if cfg.m == 0 {
        return Err(Error::InvalidConfig("m must be at least 1".into()));
    }
    let targets: Vec<usize> = if cfg.targets.is_empty() {
        (0..d).collect()
    } else {
        cfg.targets.clone()
    };
    let models = margins::fit_margins(x, cfg.margin_kind).stage("fit")?;
    let exp = margins::to_exponential(x, &models).stage("transform")?;
    let threshold = margins::select_threshold(&exp, cfg.threshold_level).stage("threshold")?;
    let excesses = margins::extract_excesses(&exp, &threshold).stage("excesses")?;
    let diffs = mgp::differences(&excesses, cfg.anchor_index)?;

    let mut vars = Vec::with_capacity(cfg.alphas.len());
    for &alpha in &cfg.alphas {
        vars.push(var_vector(x, &models, cfg.var_method, alpha).stage("var")?);
    }
    let estimates = |s: ArrayView2<f64>, j: usize, v: &[f64]| -> Result<[TrmEstimate; 3]> {
        let col: Vec<f64> = s.column(j).to_vec();
        Ok([
            risk::es_empirical(&col, v[j]),
            risk::mes_empirical(s, j, v)?,
            risk::dcte_empirical(s, j, v)?,
        ])
    };

    let mut rows = Vec::new();
    let mut orig_sums = Vec::new();
    for (alpha, v) in cfg.alphas.iter().zip(&vars) {
        for &j in &targets {
            let e = estimates(x, j, v)?;
            orig_sums.push(sums_from_estimates(&e[0], &e[1], &e[2]));
            for est in e {
                rows.push(DataRow { target: j, alpha: *alpha, sim_rep: None, scope: Scope::Orig, estimate: est });
            }
        }
    }
    let sims: Vec<Result<Vec<DataRow>>> = with_threads(cfg.threads, || {
        (0..cfg.r_sim)
            .into_par_iter()
            .map(|s| {
                let sim = simulate_from_diffs(&diffs, cfg.m, simulation_seed(cfg.seed, s));
                let xs = margins::back_transform(sim.data.view(), &threshold, &models)
                    .stage("back-transform")?;
                let mut out = Vec::new();
                let mut k = 0;
                for (alpha, v) in cfg.alphas.iter().zip(&vars) {
                    for &j in &targets {
                        let e = estimates(xs.view(), j, v)?;
                        let ext = sums_from_estimates(&e[0], &e[1], &e[2]).plus(&orig_sums[k]);
                        k += 1;
                        for (est, m) in e.into_iter().zip(METRICS) {
                            let row = |scope, estimate| DataRow { target: j, alpha: *alpha, sim_rep: Some(s), scope, estimate };
                            out.push(row(Scope::Simu, est));
                            out.push(row(Scope::Ext, ext.estimate(m)));
                        }
                    }
                }
                Ok(out)
            })
            .collect()
    })?;
    for s in sims {
        rows.extend(s?);
    }
    Ok((rows, DataFit { models, threshold, excesses }))
}

// ---------------------------------------------------------------------------
// Conditional expectation experiment

/// Where the conditioning vector `x_{-j}` is placed in each original sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "level", rename_all = "snake_case")]
pub enum ConditioningPoint {
    /// Empirical marginal quantile of each conditioning column.
    Quantile(f64),
    /// Sample maximum of each conditioning column.
    Max,
}

impl std::fmt::Display for ConditioningPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConditioningPoint::Quantile(p) => write!(f, "q{p}"),
            ConditioningPoint::Max => f.write_str("max"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MuExperimentConfig {
    pub nu: Vec<f64>,
    pub theta: f64,
    pub n: usize,
    pub m: usize,
    pub r_orig: usize,
    pub r_sim: usize,
    pub seed: u64,
    pub target_index: usize,
    pub anchor_index: usize,
    pub threshold_level: f64,
    pub points: Vec<ConditioningPoint>,
    pub case1: Case1Strategy,
    pub pool: CandidatePool,
    pub threads: Option<usize>,
}

impl Default for MuExperimentConfig {
    fn default() -> Self {
        MuExperimentConfig {
            nu: vec![2.0, 3.0, 2.5],
            theta: 2.6,
            n: 1500,
            m: 10_000,
            r_orig: 50,
            r_sim: 10,
            seed: 42,
            target_index: 1,
            anchor_index: 0,
            threshold_level: 0.85,
            points: vec![
                ConditioningPoint::Quantile(0.975),
                ConditioningPoint::Quantile(0.99),
                ConditioningPoint::Max,
            ],
            case1: Case1Strategy::Tilted,
            pool: CandidatePool::Marginal,
            threads: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MuRow {
    pub orig_rep: usize,
    pub point: ConditioningPoint,
    pub case: CaseLabel,
    pub reference: f64,
    pub cond_sim: f64,
    pub linreg: f64,
}

impl MuRow {
    pub fn cond_sim_error(&self) -> f64 {
        (self.cond_sim - self.reference).abs()
    }

    pub fn linreg_error(&self) -> f64 {
        (self.linreg - self.reference).abs()
    }
}

fn run_mu_orig(cfg: &MuExperimentConfig, rep: usize) -> Result<Vec<MuRow>> {
    let j = cfg.target_index;
    let q = cfg.anchor_index;
    let seed = derive_indexed(cfg.seed, "mu/orig", rep as u64);
    let synth = SynthConfig {
        nu: cfg.nu.clone(),
        theta: cfg.theta,
        n: cfg.n,
        seed,
    };
    let x = gumbel_sample_with(&synth, &mut rng::stream(seed, "synth/gumbel"));
    let models = synth.margins();
    let exp = margins::to_exponential(x.view(), &models)?;
    let threshold = margins::select_threshold(&exp, cfg.threshold_level)?;
    let excesses = margins::extract_excesses(&exp, &threshold)?;
    let diffs = mgp::differences(&excesses, q)?;
    let lr = linreg_baseline(x.view(), j)?;
    let others: Vec<usize> = (0..cfg.nu.len()).filter(|&k| k != j).collect();

    let mut rows = Vec::new();
    for (pi, point) in cfg.points.iter().enumerate() {
        let x_minus_j: Vec<f64> = others
            .iter()
            .map(|&k| {
                let col = sorted(&x.column(k).to_vec());
                match point {
                    ConditioningPoint::Quantile(p) => quantile_sorted(&col, *p),
                    ConditioningPoint::Max => col[col.len() - 1],
                }
            })
            .collect();
        let reference = mu_reference(&synth, j, &x_minus_j)?.value;
        let z_minus_j: Vec<f64> = others
            .iter()
            .zip(&x_minus_j)
            .map(|(&k, &xv)| models[k].to_exp(xv) - threshold.u[k])
            .collect();
        let ev = ConditioningEvent::new(j, q, z_minus_j)?;
        let mut estimates = Vec::with_capacity(cfg.r_sim);
        for s in 0..cfg.r_sim {
            let cs = CondSimConfig {
                m: cfg.m,
                seed: derive_indexed(seed, &format!("mu/sim/{pi}"), s as u64),
                case1: cfg.case1,
                pool: cfg.pool,
                ..Default::default()
            };
            let z = conditional_simulate(&diffs, &ev, &cs)?;
            let xs = z
                .iter()
                .map(|&zj| models[j].from_exp(zj + threshold.u[j]))
                .collect::<Result<Vec<f64>>>()?;
            estimates.push(risk::mu_estimate(&xs).value.expect("m >= 1"));
        }
        rows.push(MuRow {
            orig_rep: rep,
            point: *point,
            case: classify_case(&ev),
            reference,
            cond_sim: mean(&estimates),
            linreg: lr.predict(&x_minus_j)?,
        });
    }
    Ok(rows)
}

/// Compares conditional-simulation estimates of `E[X_j | X_{-j} = x_{-j}]`
/// and linear-regression predictions against the exact value.
pub fn run_mu_experiment(cfg: &MuExperimentConfig) -> Result<Vec<MuRow>> {
    if cfg.nu.len() != 3 {
        return Err(Error::DimensionError("the conditional expectation reference needs d = 3".into()));
    }
    if cfg.target_index >= 3 || cfg.anchor_index >= 3 || cfg.target_index == cfg.anchor_index {
        return Err(Error::InvalidConfig("bad target or anchor index".into()));
    }
    if cfg.r_sim == 0 || cfg.m == 0 {
        return Err(Error::InvalidConfig("r_sim and m must be positive".into()));
    }
    let chunks: Vec<Result<Vec<MuRow>>> = with_threads(cfg.threads, || {
        (0..cfg.r_orig)
            .into_par_iter()
            .map(|r| run_mu_orig(cfg, r))
            .collect()
    })?;
    let mut rows = Vec::new();
    for c in chunks {
        rows.extend(c?);
    }
    Ok(rows)
}

/// Mean absolute errors `(conditional simulation, linear regression)` at one
/// conditioning point.
pub fn mu_mean_abs_errors(rows: &[MuRow], point: ConditioningPoint) -> (f64, f64) {
    let sel: Vec<&MuRow> = rows.iter().filter(|r| r.point == point).collect();
    let cs: Vec<f64> = sel.iter().map(|r| r.cond_sim_error()).collect();
    let lr: Vec<f64> = sel.iter().map(|r| r.linreg_error()).collect();
    (mean(&cs), mean(&lr))
}
