//! Standard multivariate generalised Pareto representation.
//!
//! A standard MGP vector is `Z = E + T - max(T)` with `E ~ Exp(1)` independent
//! of `T`. Only differences of `T` are identifiable, and they coincide with
//! differences of `Z`, so a row of differences plus a value of `E` determines
//! `Z` completely.

use crate::error::{Error, Result};
use crate::rng::{self, SimRng};
use crate::stats::ks::{ks_exp1, KsResult};
use nalgebra::{DMatrix, DVector};
use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

/// Excess vectors on the standard MGP scale; every row has a positive maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct StdMgpSample {
    pub data: Array2<f64>,
}

impl StdMgpSample {
    pub fn new(data: Array2<f64>) -> Result<Self> {
        for (i, r) in data.axis_iter(Axis(0)).enumerate() {
            let m = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if !(m > 0.0) || r.iter().any(|v| !v.is_finite()) {
                return Err(Error::DomainError(format!(
                    "row {i} is not a standard MGP excess (max = {m})"
                )));
            }
        }
        Ok(StdMgpSample { data })
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn d(&self) -> usize {
        self.data.ncols()
    }

    /// Row maxima, i.e. the realised values of `E`.
    pub fn row_max(&self) -> Vec<f64> {
        self.data
            .axis_iter(Axis(0))
            .map(|r| r.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .collect()
    }
}

/// Differences `Z_q - Z_k` anchored at component `q` (0-based).
#[derive(Debug, Clone, PartialEq)]
pub struct DiffMatrix {
    pub q: usize,
    pub data: Array2<f64>,
}

impl DiffMatrix {
    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn d(&self) -> usize {
        self.data.ncols()
    }

    /// `Z_r - Z_s` for one row, recovered from the anchored differences.
    pub fn pair(&self, row: usize, r: usize, s: usize) -> f64 {
        self.data[[row, s]] - self.data[[row, r]]
    }
}

/// Marginal GP scale and shape parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MgpParams {
    pub sigma: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl MgpParams {
    pub fn new(sigma: Vec<f64>, gamma: Vec<f64>) -> Result<Self> {
        if sigma.len() != gamma.len() {
            return Err(Error::DimensionError("sigma and gamma lengths differ".into()));
        }
        if sigma.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::DomainError("sigma must be strictly positive".into()));
        }
        if gamma.iter().any(|g| !g.is_finite()) {
            return Err(Error::DomainError("gamma must be finite".into()));
        }
        Ok(MgpParams { sigma, gamma })
    }
}

fn check_index(index: usize, dim: usize) -> Result<()> {
    if index >= dim {
        Err(Error::IndexError { index, dim })
    } else {
        Ok(())
    }
}

/// Difference matrix `Z_q - Z_k` for every row.
pub fn differences(z: &StdMgpSample, q: usize) -> Result<DiffMatrix> {
    differences_of(z.data.view(), q)
}

/// [`differences`] for an unchecked matrix view.
pub fn differences_of(z: ArrayView2<f64>, q: usize) -> Result<DiffMatrix> {
    check_index(q, z.ncols())?;
    let mut data = z.to_owned();
    for mut r in data.axis_iter_mut(Axis(0)) {
        let zq = r[q];
        r.mapv_inplace(|v| zq - v);
    }
    Ok(DiffMatrix { q, data })
}

/// Index of the smallest difference, i.e. the argmax of the implied `T`.
/// Ties go to the smallest index.
fn argmin(delta: &[f64]) -> usize {
    let mut k = 0;
    for (i, &v) in delta.iter().enumerate().skip(1) {
        if v < delta[k] {
            k = i;
        }
    }
    k
}

/// Rebuilds `Z` from `E = e` and one anchored difference row:
/// `Z_j = e + T_j - max T`, so that `max Z = e`.
pub fn reconstruct(e: f64, delta: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; delta.len()];
    reconstruct_into(e, delta, &mut out);
    out
}

/// Allocation-free form of [`reconstruct`].
pub fn reconstruct_into(e: f64, delta: &[f64], out: &mut [f64]) {
    let lo = delta[argmin(delta)];
    for (o, &d) in out.iter_mut().zip(delta) {
        *o = e + (lo - d);
    }
}

/// As [`reconstruct`], but fails when the argmax of `T` is not unique.
pub fn reconstruct_strict(e: f64, delta: &[f64]) -> Result<Vec<f64>> {
    let k = argmin(delta);
    if let Some(t) = (0..delta.len()).find(|&i| i != k && delta[i] == delta[k]) {
        return Err(Error::TieError(k.min(t), k.max(t)));
    }
    Ok(reconstruct(e, delta))
}

/// The indicator sums `D_j = sum_{k != j} Δ^{j,k} prod_{l != k} 1{Δ^{l,k} < 0}`
/// evaluated literally from the pairwise differences of `z`. `Z_j - D_j`
/// equals `max Z` for every `j` when the maximum is unique.
pub fn indicator_sums(z: &[f64]) -> Vec<f64> {
    let d = z.len();
    (0..d)
        .map(|j| {
            (0..d)
                .filter(|&k| k != j)
                .map(|k| {
                    let is_max = (0..d).filter(|&l| l != k).all(|l| z[l] - z[k] < 0.0);
                    if is_max {
                        z[j] - z[k]
                    } else {
                        0.0
                    }
                })
                .sum()
        })
        .collect()
}

/// Reconstruction through the literal indicator-product formula, used as an
/// independent check of [`reconstruct`].
pub fn reconstruct_indicator(e: f64, delta: &[f64]) -> Vec<f64> {
    // Any vector with the right differences works, e.g. -delta.
    let t: Vec<f64> = delta.iter().map(|v| -v).collect();
    indicator_sums(&t)
        .iter()
        .map(|dj| e + dj)
        .collect()
}

/// `Y_j = sigma_j (exp(gamma_j Z_j) - 1) / gamma_j`, with the `gamma -> 0`
/// limit `sigma_j Z_j`.
pub fn standard_to_general(z: ArrayView2<f64>, p: &MgpParams) -> Result<Array2<f64>> {
    if p.sigma.len() != z.ncols() {
        return Err(Error::DimensionError(format!(
            "{} parameters for {} columns",
            p.sigma.len(),
            z.ncols()
        )));
    }
    let mut y = z.to_owned();
    for (j, mut col) in y.axis_iter_mut(Axis(1)).enumerate() {
        let (s, g) = (p.sigma[j], p.gamma[j]);
        col.mapv_inplace(|v| {
            if g.abs() < 1e-10 {
                s * v
            } else {
                s * (g * v).exp_m1() / g
            }
        });
    }
    Ok(y)
}

/// Goodness of fit of the positive part of one standard MGP margin to Exp(1).
pub fn check_positive_margin(col: ArrayView1<f64>) -> Result<KsResult> {
    let pos: Vec<f64> = col.iter().copied().filter(|&v| v > 0.0).collect();
    if pos.len() < 50 {
        return Err(Error::InsufficientData(format!(
            "{} positive entries, need at least 50",
            pos.len()
        )));
    }
    Ok(ks_exp1(&pos))
}

// ---------------------------------------------------------------------------
// Gaussian reference model

/// Standard MGP with `T ~ N(0, corr)`.
#[derive(Debug, Clone)]
pub struct GaussianT {
    corr: DMatrix<f64>,
    chol: DMatrix<f64>,
}

impl GaussianT {
    pub fn new(corr: &Array2<f64>) -> Result<Self> {
        let d = corr.nrows();
        if corr.ncols() != d || d == 0 {
            return Err(Error::DimensionError("correlation matrix must be square".into()));
        }
        for i in 0..d {
            if (corr[[i, i]] - 1.0).abs() > 1e-12 {
                return Err(Error::NotPositiveDefinite);
            }
            for j in 0..i {
                if (corr[[i, j]] - corr[[j, i]]).abs() > 1e-12 {
                    return Err(Error::NotPositiveDefinite);
                }
            }
        }
        let m = DMatrix::from_fn(d, d, |i, j| corr[[i, j]]);
        let chol = m
            .clone()
            .cholesky()
            .ok_or(Error::NotPositiveDefinite)?
            .l();
        Ok(GaussianT { corr: m, chol })
    }

    /// Correlation matrix from the upper-triangle entries in row order,
    /// e.g. `(rho12, rho13, rho23)` for `d = 3`.
    pub fn from_pairs(d: usize, rho: &[f64]) -> Result<Self> {
        if rho.len() != d * (d - 1) / 2 {
            return Err(Error::DimensionError(format!(
                "{} correlations for dimension {d}",
                rho.len()
            )));
        }
        let mut c = Array2::eye(d);
        let mut it = rho.iter();
        for i in 0..d {
            for j in i + 1..d {
                let r = *it.next().expect("length checked");
                c[[i, j]] = r;
                c[[j, i]] = r;
            }
        }
        GaussianT::new(&c)
    }

    pub fn dim(&self) -> usize {
        self.corr.nrows()
    }

    /// Draws `n` rows `E + T - max T`.
    pub fn sample_with(&self, n: usize, rng: &mut SimRng) -> StdMgpSample {
        let d = self.dim();
        let mut data = Array2::zeros((n, d));
        let mut g = DVector::zeros(d);
        for mut row in data.axis_iter_mut(Axis(0)) {
            for v in g.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            let t = &self.chol * &g;
            let e: f64 = rng.sample(Exp1);
            let tmax = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            for (o, tv) in row.iter_mut().zip(t.iter()) {
                *o = e + tv - tmax;
            }
        }
        StdMgpSample { data }
    }

    pub fn sample(&self, n: usize, seed: u64) -> StdMgpSample {
        self.sample_with(n, &mut rng::stream(seed, "gaussian-t"))
    }

    /// Joint law of the differences `T_q - T_k`.
    pub fn difference_law(&self, q: usize) -> Result<GaussianDifferenceLaw> {
        check_index(q, self.dim())?;
        let d = self.dim();
        let others: Vec<usize> = (0..d).filter(|&k| k != q).collect();
        let c = &self.corr;
        let cov = DMatrix::from_fn(others.len(), others.len(), |a, b| {
            let (k, l) = (others[a], others[b]);
            1.0 - c[(q, k)] - c[(q, l)] + c[(k, l)]
        });
        let chol = cov.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
        let ln_det: f64 = chol.l().diagonal().iter().map(|v| 2.0 * v.ln()).sum();
        let prec = chol.inverse();
        let k = others.len() as f64;
        Ok(GaussianDifferenceLaw {
            q,
            d,
            others,
            cov,
            prec,
            ln_norm: -0.5 * (k * (2.0 * std::f64::consts::PI).ln() + ln_det),
        })
    }
}

/// Samples the Gaussian reference model.
pub fn gaussian_t_sampler(corr: &Array2<f64>, n: usize, seed: u64) -> Result<StdMgpSample> {
    Ok(GaussianT::new(corr)?.sample(n, seed))
}

/// Density model for an anchored difference vector.
pub trait DifferenceLaw: Sync {
    fn dim(&self) -> usize;
    fn anchor(&self) -> usize;
    /// Log-density of the full difference vector (entry `anchor` must be 0).
    fn ln_pdf(&self, delta: &[f64]) -> f64;
    /// Draw of coordinate `j` given all other coordinates of `delta`.
    fn sample_conditional(&self, j: usize, delta: &[f64], rng: &mut SimRng) -> f64;
}

/// Multivariate normal law of `(T_q - T_k)_{k != q}`.
#[derive(Debug, Clone)]
pub struct GaussianDifferenceLaw {
    q: usize,
    d: usize,
    others: Vec<usize>,
    cov: DMatrix<f64>,
    prec: DMatrix<f64>,
    ln_norm: f64,
}

impl GaussianDifferenceLaw {
    /// Covariance of the differences, indexed by the non-anchor components in
    /// ascending order.
    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Mean and standard deviation of coordinate `j` given the others.
    pub fn conditional_moments(&self, j: usize, delta: &[f64]) -> (f64, f64) {
        let a = self
            .others
            .iter()
            .position(|&k| k == j)
            .expect("j must differ from the anchor");
        // With precision matrix P: x_a | rest ~ N(-sum_{b != a} P_ab x_b / P_aa, 1 / P_aa).
        let paa = self.prec[(a, a)];
        let s: f64 = self
            .others
            .iter()
            .enumerate()
            .filter(|&(b, _)| b != a)
            .map(|(b, &k)| self.prec[(a, b)] * delta[k])
            .sum();
        (-s / paa, (1.0 / paa).sqrt())
    }
}

impl DifferenceLaw for GaussianDifferenceLaw {
    fn dim(&self) -> usize {
        self.d
    }

    fn anchor(&self) -> usize {
        self.q
    }

    fn ln_pdf(&self, delta: &[f64]) -> f64 {
        let x = DVector::from_iterator(self.others.len(), self.others.iter().map(|&k| delta[k]));
        self.ln_norm - 0.5 * (x.transpose() * &self.prec * &x)[(0, 0)]
    }

    fn sample_conditional(&self, j: usize, delta: &[f64], rng: &mut SimRng) -> f64 {
        let (m, s) = self.conditional_moments(j, delta);
        let g: f64 = rng.sample(StandardNormal);
        m + s * g
    }
}
