//! Marginal models, the exponential-scale transform and excess extraction.

use crate::error::{Error, Result};
use crate::mgp::StdMgpSample;
use crate::stats::optim::brent_min;
use crate::stats::{quantile_sorted, StdT};
use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

/// Raw observations on the original scale, one column per risk factor.
pub type RiskMatrix = Array2<f64>;

/// CDF values are clamped to `[EPS, 1 - EPS]` before taking logarithms.
pub const CDF_EPS: f64 = 1e-12;

/// Default marginal quantile level for the exponential-scale threshold.
pub const DEFAULT_THRESHOLD_LEVEL: f64 = 0.95;

/// A univariate marginal distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MarginModel {
    StudentT { df: f64, loc: f64, scale: f64 },
    /// Empirical CDF with plotting positions `rank / (n + 1)`.
    Empirical { sample: Vec<f64> },
}

impl MarginModel {
    pub fn student_t(df: f64, loc: f64, scale: f64) -> Result<Self> {
        let m = MarginModel::StudentT { df, loc, scale };
        m.validate()?;
        Ok(m)
    }

    pub fn empirical(sample: &[f64]) -> Result<Self> {
        let m = MarginModel::Empirical {
            sample: crate::stats::sorted(sample),
        };
        m.validate()?;
        Ok(m)
    }

    /// Checks parameter constraints. Deserialised models should be validated
    /// before use.
    pub fn validate(&self) -> Result<()> {
        match self {
            MarginModel::StudentT { df, loc, scale } => {
                if !(df.is_finite() && *df > 0.0) {
                    return Err(Error::DomainError(format!("df must be positive, got {df}")));
                }
                if !(scale.is_finite() && *scale > 0.0) {
                    return Err(Error::DomainError(format!("scale must be positive, got {scale}")));
                }
                if !loc.is_finite() {
                    return Err(Error::DomainError("location must be finite".into()));
                }
            }
            MarginModel::Empirical { sample } => {
                if sample.is_empty() {
                    return Err(Error::InsufficientData("empirical margin needs data".into()));
                }
                if sample.iter().any(|v| !v.is_finite()) {
                    return Err(Error::DomainError("empirical sample must be finite".into()));
                }
                if sample.windows(2).any(|w| w[0] > w[1]) {
                    return Err(Error::DomainError("empirical sample must be sorted".into()));
                }
            }
        }
        Ok(())
    }

    fn std_t(&self) -> Option<(StdT, f64, f64)> {
        match self {
            MarginModel::StudentT { df, loc, scale } => Some((StdT::new(*df), *loc, *scale)),
            MarginModel::Empirical { .. } => None,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            MarginModel::StudentT { df, loc, scale } => StdT::new(*df).cdf((x - loc) / scale),
            MarginModel::Empirical { sample } => {
                let rank = sample.partition_point(|&v| v <= x);
                rank as f64 / (sample.len() as f64 + 1.0)
            }
        }
    }

    /// Survival function `1 - F(x)`, computed without cancellation.
    pub fn sf(&self, x: f64) -> f64 {
        match self {
            MarginModel::StudentT { df, loc, scale } => StdT::new(*df).sf((x - loc) / scale),
            MarginModel::Empirical { sample } => {
                let rank = sample.partition_point(|&v| v <= x);
                let n1 = sample.len() as f64 + 1.0;
                (n1 - rank as f64) / n1
            }
        }
    }

    pub fn pdf(&self, x: f64) -> Option<f64> {
        self.std_t().map(|(t, loc, scale)| t.pdf((x - loc) / scale) / scale)
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::DomainError(format!("probability {p} outside (0, 1)")));
        }
        Ok(match self {
            MarginModel::StudentT { df, loc, scale } => loc + scale * StdT::new(*df).quantile(p),
            MarginModel::Empirical { sample } => quantile_sorted(sample, p),
        })
    }

    /// Quantile at upper-tail probability `q`, i.e. `x` with `sf(x) = q`.
    pub fn quantile_sf(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::DomainError(format!("tail probability {q} outside (0, 1)")));
        }
        Ok(match self {
            MarginModel::StudentT { df, loc, scale } => loc + scale * StdT::new(*df).quantile_sf(q),
            MarginModel::Empirical { sample } => quantile_sorted(sample, 1.0 - q),
        })
    }

    /// Exponential-scale image `-ln(1 - F(x))` with clamping.
    pub fn to_exp(&self, x: f64) -> f64 {
        -self.sf(x).clamp(CDF_EPS, 1.0 - CDF_EPS).ln()
    }

    /// Inverse of [`MarginModel::to_exp`]: `F^{-1}(1 - e^{-w})`.
    pub fn from_exp(&self, w: f64) -> Result<f64> {
        let q = (-w).exp().min(1.0 - CDF_EPS);
        if q <= 0.0 || q.is_nan() {
            return Err(Error::DomainError(format!(
                "exponential-scale value {w} beyond representable tail"
            )));
        }
        self.quantile_sf(q)
    }

    /// Log-likelihood of `x` under the model (Student-t only).
    pub fn log_likelihood(&self, x: &[f64]) -> Option<f64> {
        let (t, loc, scale) = self.std_t()?;
        let ls = scale.ln();
        Some(x.iter().map(|v| t.ln_pdf((v - loc) / scale) - ls).sum())
    }
}

// ---------------------------------------------------------------------------
// Student-t maximum likelihood

const MIN_FIT_SIZE: usize = 30;
const LN_DF_RANGE: (f64, f64) = (-1.2, 6.0);

/// Location and scale maximising the likelihood for fixed `df`, by the EM
/// (iteratively reweighted) recursion, plus the attained log-likelihood.
fn profile_loc_scale(x: &[f64], df: f64, loc0: f64, scale0: f64) -> Result<(f64, f64, f64)> {
    let n = x.len() as f64;
    let (mut loc, mut s2) = (loc0, scale0 * scale0);
    for _ in 0..2000 {
        let (mut sw, mut swx) = (0.0, 0.0);
        for &v in x {
            let w = (df + 1.0) / (df + (v - loc) * (v - loc) / s2);
            sw += w;
            swx += w * v;
        }
        let new_loc = swx / sw;
        let mut ss = 0.0;
        for &v in x {
            let r2 = (v - new_loc) * (v - new_loc);
            ss += (df + 1.0) / (df + r2 / s2) * r2;
        }
        let new_s2 = ss / n;
        if !(new_loc.is_finite() && new_s2.is_finite() && new_s2 > 0.0) {
            return Err(Error::NonConvergence(format!("EM diverged at df = {df}")));
        }
        let done = (new_loc - loc).abs() <= 1e-12 * (1.0 + loc.abs()) + 1e-11 * s2.sqrt()
            && (new_s2 / s2 - 1.0).abs() <= 1e-11;
        loc = new_loc;
        s2 = new_s2;
        if done {
            let m = MarginModel::StudentT {
                df,
                loc,
                scale: s2.sqrt(),
            };
            let ll = m.log_likelihood(x).expect("student-t model");
            return Ok((loc, s2.sqrt(), ll));
        }
    }
    Err(Error::NonConvergence(format!(
        "location/scale iteration did not settle at df = {df}"
    )))
}

/// Maximum-likelihood location-scale Student-t fit.
///
/// The degrees of freedom are found by maximising the profile likelihood over
/// `ln df`: a coarse grid locates the basin and Brent's method refines it.
/// The search starts from `df = 4`, the sample median and `IQR / 1.349`.
pub fn fit_student_t(x: &[f64]) -> Result<MarginModel> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::DomainError("sample contains non-finite values".into()));
    }
    let sorted = crate::stats::sorted(x);
    if sorted.first() == sorted.last() {
        return Err(Error::ConstantSample);
    }
    if x.len() < MIN_FIT_SIZE {
        return Err(Error::InsufficientData(format!(
            "Student-t fit needs at least {MIN_FIT_SIZE} observations, got {}",
            x.len()
        )));
    }
    let med = quantile_sorted(&sorted, 0.5);
    let mut scale0 = (quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25)) / 1.349;
    if scale0 <= 0.0 {
        scale0 = crate::stats::sd(x);
    }
    let start = MarginModel::StudentT {
        df: 4.0,
        loc: med,
        scale: scale0,
    };
    let ll_start = start.log_likelihood(x).expect("student-t model");

    let profile = |ln_df: f64| profile_loc_scale(x, ln_df.exp(), med, scale0);

    let steps = 29;
    let (lo, hi) = LN_DF_RANGE;
    let grid: Vec<f64> = (0..steps)
        .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
        .collect();
    let mut lls = Vec::with_capacity(steps);
    for &g in &grid {
        lls.push(profile(g).map(|r| r.2).unwrap_or(f64::NEG_INFINITY));
    }
    let best = (0..steps)
        .max_by(|&a, &b| lls[a].total_cmp(&lls[b]))
        .expect("non-empty grid");
    if !lls[best].is_finite() {
        return Err(Error::NonConvergence("profile likelihood undefined on the df grid".into()));
    }
    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(steps - 1)];
    let (ln_df, _) = brent_min(
        |g| profile(g).map(|r| -r.2).unwrap_or(f64::INFINITY),
        a,
        b,
        1e-9,
        200,
    );
    let (loc, scale, ll) = profile(ln_df)?;
    let (df, loc, scale, ll) = if ll >= lls[best] {
        (ln_df.exp(), loc, scale, ll)
    } else {
        let (l, s, v) = profile(grid[best])?;
        (grid[best].exp(), l, s, v)
    };
    if ll + 1e-9 * ll.abs() < ll_start {
        return Err(Error::NonConvergence(
            "fitted likelihood below the starting point".into(),
        ));
    }
    MarginModel::student_t(df, loc, scale)
}

/// Fits one model per column.
pub fn fit_margins(data: ArrayView2<f64>, kind: MarginKind) -> Result<Vec<MarginModel>> {
    data.axis_iter(Axis(1))
        .map(|col| {
            let v = col.to_vec();
            match kind {
                MarginKind::StudentT => fit_student_t(&v),
                MarginKind::Empirical => MarginModel::empirical(&v),
            }
        })
        .collect()
}

/// Selector for [`fit_margins`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginKind {
    StudentT,
    Empirical,
}

// ---------------------------------------------------------------------------
// Exponential scale

/// Data on the unit-exponential scale with the models used to get there.
#[derive(Debug, Clone)]
pub struct ExpScaleSample {
    pub data: Array2<f64>,
    pub models: Vec<MarginModel>,
}

/// Per-component thresholds on the exponential scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdVector {
    pub u: Vec<f64>,
    pub level: f64,
}

fn check_models(d: usize, models: &[MarginModel]) -> Result<()> {
    if models.len() != d {
        return Err(Error::DimensionError(format!(
            "{} margin models for {d} columns",
            models.len()
        )));
    }
    models.iter().try_for_each(|m| m.validate())
}

/// `X^E = -ln(1 - F_j(X))` applied column by column.
pub fn to_exponential(data: ArrayView2<f64>, models: &[MarginModel]) -> Result<ExpScaleSample> {
    check_models(data.ncols(), models)?;
    let mut out = data.to_owned();
    for (mut col, m) in out.axis_iter_mut(Axis(1)).zip(models) {
        col.mapv_inplace(|x| m.to_exp(x));
    }
    Ok(ExpScaleSample {
        data: out,
        models: models.to_vec(),
    })
}

/// Empirical `level`-quantile of each exponential-scale column.
pub fn select_threshold(exp: &ExpScaleSample, level: f64) -> Result<ThresholdVector> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::DomainError(format!("threshold level {level} outside (0, 1)")));
    }
    if exp.data.nrows() == 0 {
        return Err(Error::InsufficientData("no rows to threshold".into()));
    }
    let u = exp
        .data
        .axis_iter(Axis(1))
        .map(|c| quantile_sorted(&crate::stats::sorted(&c.to_vec()), level))
        .collect();
    Ok(ThresholdVector { u, level })
}

/// Indices of rows with at least one component strictly above its threshold.
pub fn exceedance_rows(exp: ArrayView2<f64>, u: &ThresholdVector) -> Vec<usize> {
    exp.axis_iter(Axis(0))
        .enumerate()
        .filter(|(_, r)| r.iter().zip(&u.u).any(|(x, t)| x > t))
        .map(|(i, _)| i)
        .collect()
}

/// Multivariate excesses `X^E - u^E` over rows with `X^E` not below `u^E`.
pub fn extract_excesses(exp: &ExpScaleSample, u: &ThresholdVector) -> Result<StdMgpSample> {
    if u.u.len() != exp.data.ncols() {
        return Err(Error::DimensionError(format!(
            "threshold of length {} for {} columns",
            u.u.len(),
            exp.data.ncols()
        )));
    }
    let rows = exceedance_rows(exp.data.view(), u);
    if rows.is_empty() {
        return Err(Error::NoExceedances);
    }
    let mut z = exp.data.select(Axis(0), &rows);
    for mut r in z.axis_iter_mut(Axis(0)) {
        for (v, t) in r.iter_mut().zip(&u.u) {
            *v -= t;
        }
    }
    StdMgpSample::new(z)
}

/// Maps standard-scale rows back to the original scale:
/// `X_j = F_j^{-1}(1 - exp(-(Z_j + u_j)))`.
pub fn back_transform(
    z: ArrayView2<f64>,
    u: &ThresholdVector,
    models: &[MarginModel],
) -> Result<RiskMatrix> {
    check_models(z.ncols(), models)?;
    if u.u.len() != z.ncols() {
        return Err(Error::DimensionError("threshold length mismatch".into()));
    }
    let mut out = z.to_owned();
    for ((mut col, m), t) in out.axis_iter_mut(Axis(1)).zip(models).zip(&u.u) {
        for v in col.iter_mut() {
            *v = m.from_exp(*v + t)?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;

    #[test]
    fn cauchy_cdf_and_quantile() {
        let m = MarginModel::student_t(1.0, 0.0, 1.0).unwrap();
        assert_relative_eq!(m.cdf(0.0), 0.5, epsilon = 1e-15);
        assert_relative_eq!(m.cdf(1.0), 0.75, epsilon = 1e-14);
        assert_relative_eq!(m.quantile(0.75).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn empirical_ranks() {
        let m = MarginModel::empirical(&[4.0, 2.0, 3.0, 1.0]).unwrap();
        assert_relative_eq!(m.cdf(2.0), 0.4);
        let q = m.quantile(0.5).unwrap();
        assert!((2.0..=3.0).contains(&q));
        assert_eq!(m.quantile(m.cdf(3.0)).unwrap(), 3.0);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(MarginModel::student_t(0.0, 0.0, 1.0).is_err());
        assert!(MarginModel::student_t(3.0, 0.0, -1.0).is_err());
        assert!(matches!(
            MarginModel::student_t(3.0, 0.0, 1.0).unwrap().quantile(1.0),
            Err(Error::DomainError(_))
        ));
    }

    #[test]
    fn constant_sample_rejected() {
        assert!(matches!(
            fit_student_t(&[1.0; 5]),
            Err(Error::ConstantSample)
        ));
        let short: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert!(matches!(fit_student_t(&short), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn excess_rows() {
        let exp = ExpScaleSample {
            data: array![[3.1, 2.0, 4.0], [1.0, 2.0, 2.5]],
            models: vec![],
        };
        let u = ThresholdVector {
            u: vec![3.0; 3],
            level: 0.95,
        };
        let z = extract_excesses(&exp, &u).unwrap();
        assert_eq!(z.n(), 1);
        let r = z.data.row(0);
        assert_relative_eq!(r[0], 0.1, epsilon = 1e-15);
        assert_eq!(r[1], -1.0);
        assert_eq!(r[2], 1.0);
    }

    #[test]
    fn json_shape() {
        let m = MarginModel::student_t(3.0, 0.1, 2.0).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"kind":"student_t","df":3.0,"loc":0.1,"scale":2.0}"#);
        let back: MarginModel = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn half_probability_maps_to_ln2() {
        let m = MarginModel::student_t(5.0, 0.0, 1.0).unwrap();
        assert_relative_eq!(m.to_exp(0.0), std::f64::consts::LN_2, epsilon = 1e-14);
    }
}
