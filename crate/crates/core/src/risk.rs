//! Value at Risk and empirical tail risk metrics.

use crate::error::{Error, Result};
use crate::margins::MarginModel;
use crate::stats::optim::nelder_mead;
use crate::stats::{quantile_sorted, sorted};
use nalgebra::{DMatrix, DVector};
use ndarray::{ArrayView2, Axis};
use serde::{Deserialize, Serialize};

/// Default empirical quantile level of the GPD tail threshold.
pub const DEFAULT_GPD_THRESHOLD_LEVEL: f64 = 0.9;
const MIN_GPD_EXCEEDANCES: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarMethod {
    Theoretical,
    Empirical,
    GpdTail,
}

/// How to compute a VaR at confidence level `alpha` (tail probability
/// `1 - alpha`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarSpec {
    pub method: VarMethod,
    pub alpha: f64,
    pub model: Option<MarginModel>,
    pub gpd_threshold_level: Option<f64>,
}

impl VarSpec {
    pub fn theoretical(model: MarginModel, alpha: f64) -> Self {
        VarSpec {
            method: VarMethod::Theoretical,
            alpha,
            model: Some(model),
            gpd_threshold_level: None,
        }
    }

    pub fn empirical(alpha: f64) -> Self {
        VarSpec {
            method: VarMethod::Empirical,
            alpha,
            model: None,
            gpd_threshold_level: None,
        }
    }

    pub fn gpd_tail(alpha: f64) -> Self {
        VarSpec {
            method: VarMethod::GpdTail,
            alpha,
            model: None,
            gpd_threshold_level: Some(DEFAULT_GPD_THRESHOLD_LEVEL),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::DomainError(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        match self.method {
            VarMethod::Theoretical if self.model.is_none() => Err(Error::InvalidConfig(
                "theoretical VaR needs a margin model".into(),
            )),
            VarMethod::GpdTail => match self.gpd_threshold_level {
                Some(l) if l > 0.0 && l < 1.0 => Ok(()),
                Some(l) => Err(Error::DomainError(format!("GPD threshold level {l} outside (0, 1)"))),
                None => Err(Error::InvalidConfig("GPD VaR needs a threshold level".into())),
            },
            _ => Ok(()),
        }
    }
}

/// Generalised Pareto fit to exceedances `y > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GpdFit {
    pub sigma: f64,
    pub gamma: f64,
    pub log_likelihood: f64,
}

fn gpd_nll(y: &[f64], sigma: f64, gamma: f64) -> f64 {
    if !(sigma > 0.0) {
        return f64::INFINITY;
    }
    let n = y.len() as f64;
    if gamma.abs() < 1e-9 {
        return n * sigma.ln() + y.iter().sum::<f64>() / sigma;
    }
    let mut s = 0.0;
    for &v in y {
        let t = 1.0 + gamma * v / sigma;
        if t <= 0.0 {
            return f64::INFINITY;
        }
        s += t.ln();
    }
    n * sigma.ln() + (1.0 + 1.0 / gamma) * s
}

/// Maximum-likelihood GPD fit by Nelder–Mead on `(ln sigma, gamma)`.
pub fn fit_gpd(y: &[f64]) -> Result<GpdFit> {
    if y.len() < MIN_GPD_EXCEEDANCES {
        return Err(Error::InsufficientTail(y.len()));
    }
    let mean = crate::stats::mean(y);
    let var = crate::stats::sd(y).powi(2);
    // Method-of-moments start, valid for gamma < 1/2.
    let g0 = (0.5 * (1.0 - mean * mean / var)).clamp(-0.4, 0.45);
    let s0 = (mean * (1.0 - g0)).max(1e-8);
    let r = nelder_mead(
        |p| gpd_nll(y, p[0].exp(), p[1]),
        &[s0.ln(), g0],
        &[0.2, 0.1],
        1e-12,
        5000,
    );
    if !r.value.is_finite() {
        return Err(Error::NonConvergence("GPD likelihood not finite".into()));
    }
    Ok(GpdFit {
        sigma: r.x[0].exp(),
        gamma: r.x[1],
        log_likelihood: -r.value,
    })
}

/// VaR of `sample` according to `spec`.
pub fn var(sample: &[f64], spec: &VarSpec) -> Result<f64> {
    spec.validate()?;
    let alpha = spec.alpha;
    match spec.method {
        VarMethod::Theoretical => spec.model.as_ref().expect("validated").quantile(alpha),
        VarMethod::Empirical => {
            if sample.is_empty() {
                return Err(Error::InsufficientData("empty sample".into()));
            }
            Ok(quantile_sorted(&sorted(sample), alpha))
        }
        VarMethod::GpdTail => {
            if sample.is_empty() {
                return Err(Error::InsufficientData("empty sample".into()));
            }
            let s = sorted(sample);
            let u = quantile_sorted(&s, spec.gpd_threshold_level.expect("validated"));
            let y: Vec<f64> = s.iter().filter(|&&v| v > u).map(|v| v - u).collect();
            let fit = fit_gpd(&y)?;
            let pu = y.len() as f64 / s.len() as f64;
            let r = (1.0 - alpha) / pu;
            Ok(if fit.gamma.abs() < 1e-9 {
                u - fit.sigma * r.ln()
            } else {
                u + fit.sigma / fit.gamma * (r.powf(-fit.gamma) - 1.0)
            })
        }
    }
}

// ---------------------------------------------------------------------------
// Empirical metrics

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrmMetric {
    #[serde(rename = "ES")]
    Es,
    #[serde(rename = "MES")]
    Mes,
    #[serde(rename = "DCTE")]
    Dcte,
    #[serde(rename = "MU")]
    Mu,
}

impl std::fmt::Display for TrmMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TrmMetric::Es => "ES",
            TrmMetric::Mes => "MES",
            TrmMetric::Dcte => "DCTE",
            TrmMetric::Mu => "MU",
        })
    }
}

/// A metric value with the size of the sample it was averaged over. `value`
/// is `None` exactly when the conditioning set is empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrmEstimate {
    pub metric: TrmMetric,
    pub value: Option<f64>,
    pub n_exceed: usize,
    pub sufficient: bool,
}

impl TrmEstimate {
    fn from_sum(metric: TrmMetric, sum: f64, n: usize) -> Self {
        TrmEstimate {
            metric,
            value: (n > 0).then(|| sum / n as f64),
            n_exceed: n,
            sufficient: n > 0,
        }
    }
}

/// Mean of the values strictly above `v`.
pub fn es_empirical(x: &[f64], v: f64) -> TrmEstimate {
    let (s, n) = x
        .iter()
        .filter(|&&a| a > v)
        .fold((0.0, 0), |(s, n), &a| (s + a, n + 1));
    TrmEstimate::from_sum(TrmMetric::Es, s, n)
}

fn conditional_mean(
    metric: TrmMetric,
    x: ArrayView2<f64>,
    j: usize,
    v: &[f64],
    include_target: bool,
) -> Result<TrmEstimate> {
    let d = x.ncols();
    if j >= d {
        return Err(Error::IndexError { index: j, dim: d });
    }
    if v.len() != d {
        return Err(Error::DimensionError(format!("{} VaR values for {d} columns", v.len())));
    }
    let (mut s, mut n) = (0.0, 0);
    for r in x.axis_iter(Axis(0)) {
        let hit = (0..d)
            .filter(|&k| include_target || k != j)
            .all(|k| r[k] >= v[k]);
        if hit {
            s += r[j];
            n += 1;
        }
    }
    Ok(TrmEstimate::from_sum(metric, s, n))
}

/// Mean of column `j` over rows where every other column is at or above its VaR.
pub fn mes_empirical(x: ArrayView2<f64>, j: usize, v: &[f64]) -> Result<TrmEstimate> {
    conditional_mean(TrmMetric::Mes, x, j, v, false)
}

/// Mean of column `j` over rows where every column is at or above its VaR.
pub fn dcte_empirical(x: ArrayView2<f64>, j: usize, v: &[f64]) -> Result<TrmEstimate> {
    conditional_mean(TrmMetric::Dcte, x, j, v, true)
}

/// Mean of conditional draws on the original scale.
pub fn mu_estimate(draws: &[f64]) -> TrmEstimate {
    TrmEstimate::from_sum(TrmMetric::Mu, draws.iter().sum(), draws.len())
}

// ---------------------------------------------------------------------------
// Linear regression baseline

/// Ordinary least squares of one column on the others, with intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinReg {
    pub target: usize,
    /// Intercept followed by the slopes of the other columns in order.
    pub coef: Vec<f64>,
}

impl LinReg {
    pub fn predict(&self, x_minus_j: &[f64]) -> Result<f64> {
        if x_minus_j.len() + 1 != self.coef.len() {
            return Err(Error::DimensionError(format!(
                "{} covariates for {} slopes",
                x_minus_j.len(),
                self.coef.len() - 1
            )));
        }
        Ok(self.coef[0]
            + self.coef[1..]
                .iter()
                .zip(x_minus_j)
                .map(|(b, x)| b * x)
                .sum::<f64>())
    }
}

pub fn linreg_baseline(x: ArrayView2<f64>, j: usize) -> Result<LinReg> {
    let (n, d) = x.dim();
    if j >= d {
        return Err(Error::IndexError { index: j, dim: d });
    }
    if n <= d {
        return Err(Error::InsufficientData(format!("{n} rows for {d} columns")));
    }
    let cols: Vec<usize> = (0..d).filter(|&k| k != j).collect();
    let a = DMatrix::from_fn(n, d, |i, c| if c == 0 { 1.0 } else { x[[i, cols[c - 1]]] });
    let b = DVector::from_fn(n, |i, _| x[[i, j]]);
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > smax * 1e-12) {
        return Err(Error::SingularDesign);
    }
    let beta = svd
        .solve(&b, smax * 1e-12)
        .map_err(|e| Error::NonConvergence(e.to_string()))?;
    Ok(LinReg {
        target: j,
        coef: beta.iter().copied().collect(),
    })
}
