//! Student-t margins joined by a Gumbel copula.

use crate::error::{Error, Result};
use crate::margins::{MarginModel, RiskMatrix};
use crate::rng::{self, SimRng};
use crate::stats::StdT;
use ndarray::{Array2, Axis};
use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Parameters of a synthetic data set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    /// Degrees of freedom of each standard Student-t margin.
    pub nu: Vec<f64>,
    pub theta: f64,
    pub n: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_seed() -> u64 {
    42
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta >= 1.0 && self.theta.is_finite()) {
            return Err(Error::InvalidConfig(format!("theta = {} must be >= 1", self.theta)));
        }
        if self.nu.is_empty() || self.nu.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidConfig("every nu must be positive".into()));
        }
        Ok(())
    }

    pub fn d(&self) -> usize {
        self.nu.len()
    }

    /// The standard Student-t margin models.
    pub fn margins(&self) -> Vec<MarginModel> {
        self.nu
            .iter()
            .map(|&df| MarginModel::StudentT {
                df,
                loc: 0.0,
                scale: 1.0,
            })
            .collect()
    }
}

/// Positive stable variate with Laplace transform `exp(-s^alpha)`,
/// `alpha` in (0, 1], by Kanter's representation.
pub fn positive_stable(alpha: f64, rng: &mut SimRng) -> f64 {
    if alpha >= 1.0 {
        return 1.0;
    }
    let u = PI * rng.random::<f64>();
    let w: f64 = rng.sample(Exp1);
    let ln_v = (alpha * u).sin().ln() - u.sin().ln() / alpha
        + (1.0 - alpha) / alpha * (((1.0 - alpha) * u).sin().ln() - w.ln());
    ln_v.exp()
}

/// Copula draws on the `-ln U` scale, which keeps full precision for `U`
/// close to one. Row `i` is `((E_i1 / V_i)^{1/θ}, ..., (E_id / V_i)^{1/θ})`.
pub fn gumbel_log_uniforms(d: usize, theta: f64, n: usize, rng: &mut SimRng) -> Array2<f64> {
    let a = 1.0 / theta;
    let mut w = Array2::zeros((n, d));
    for mut row in w.axis_iter_mut(Axis(0)) {
        let v = positive_stable(a, rng);
        for x in row.iter_mut() {
            let e: f64 = rng.sample(Exp1);
            *x = (e / v).powf(a);
        }
    }
    w
}

/// Synthetic data set: Gumbel copula with standard Student-t margins.
pub fn gumbel_sample(cfg: &SynthConfig) -> Result<RiskMatrix> {
    cfg.validate()?;
    let mut rng = rng::stream(cfg.seed, "synth/gumbel");
    Ok(gumbel_sample_with(cfg, &mut rng))
}

/// [`gumbel_sample`] drawing from a caller-supplied generator.
pub fn gumbel_sample_with(cfg: &SynthConfig, rng: &mut SimRng) -> RiskMatrix {
    let mut x = gumbel_log_uniforms(cfg.d(), cfg.theta, cfg.n, rng);
    let dists: Vec<StdT> = cfg.nu.iter().map(|&v| StdT::new(v)).collect();
    for mut row in x.axis_iter_mut(Axis(0)) {
        for (v, t) in row.iter_mut().zip(&dists) {
            // U = exp(-w), so the survival probability is 1 - exp(-w).
            *v = t.quantile_sf(-(-*v).exp_m1());
        }
    }
    x
}

// ---------------------------------------------------------------------------
// Copula function and derivatives

/// Gumbel copula `C(y) = exp(-(Σ (-ln y_i)^θ)^{1/θ})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GumbelCopula {
    pub theta: f64,
}

impl GumbelCopula {
    pub fn new(theta: f64) -> Result<Self> {
        if !(theta >= 1.0 && theta.is_finite()) {
            return Err(Error::DomainError(format!("theta = {theta} must be >= 1")));
        }
        Ok(GumbelCopula { theta })
    }

    fn to_w(y: &[f64]) -> Result<Vec<f64>> {
        y.iter()
            .map(|&v| {
                if v > 0.0 && v <= 1.0 {
                    Ok(-v.ln())
                } else {
                    Err(Error::DomainError(format!("copula argument {v} outside (0, 1]")))
                }
            })
            .collect()
    }

    fn s(&self, w: &[f64]) -> f64 {
        w.iter().map(|&x| if x > 0.0 { x.powf(self.theta) } else { 0.0 }).sum()
    }

    pub fn cdf(&self, y: &[f64]) -> Result<f64> {
        Ok(self.cdf_w(&Self::to_w(y)?))
    }

    /// Copula value from `w_i = -ln y_i`.
    pub fn cdf_w(&self, w: &[f64]) -> f64 {
        (-self.s(w).powf(1.0 / self.theta)).exp()
    }

    /// `∂C/∂y_i` from `w_i = -ln y_i`.
    pub fn partial_w(&self, w: &[f64], i: usize) -> f64 {
        let th = self.theta;
        let s = self.s(w);
        if s == 0.0 {
            return 1.0;
        }
        let wi = w[i];
        if wi == 0.0 {
            // y_i = 1: the derivative is zero unless theta = 1.
            return if th == 1.0 { (-s).exp() } else { 0.0 };
        }
        let a = 1.0 / th;
        (-s.powf(a) + (a - 1.0) * s.ln() + (th - 1.0) * wi.ln() + wi).exp()
    }

    pub fn partial(&self, y: &[f64], i: usize) -> Result<f64> {
        Ok(self.partial_w(&Self::to_w(y)?, i))
    }

    /// Log copula density from `w_i = -ln y_i` (all `w_i > 0`).
    pub fn ln_density_w(&self, w: &[f64]) -> f64 {
        let d = w.len();
        let th = self.theta;
        let a = 1.0 / th;
        let s = self.s(w);
        let poly = psi_derivative_poly(d, a);
        let p: f64 = poly.iter().map(|&(c, e)| c * s.powf(e)).sum();
        let tail: f64 = w.iter().map(|&x| (th - 1.0) * x.ln() + x).sum();
        -s.powf(a) + p.abs().ln() + d as f64 * th.ln() + tail
    }

    pub fn density(&self, y: &[f64]) -> Result<f64> {
        let w = Self::to_w(y)?;
        if w.contains(&0.0) {
            return Ok(0.0);
        }
        Ok(self.ln_density_w(&w).exp())
    }
}

/// Coefficients and exponents `(c, e)` with `ψ^{(k)}(s) = ψ(s) Σ c s^e` for
/// `ψ(s) = exp(-s^a)`, from `P_{k+1} = P_k' - a s^{a-1} P_k`.
pub fn psi_derivative_poly(k: usize, a: f64) -> Vec<(f64, f64)> {
    let mut p: Vec<(f64, f64)> = vec![(1.0, 0.0)];
    for _ in 0..k {
        let mut next: Vec<(f64, f64)> = Vec::new();
        let mut add = |c: f64, e: f64| {
            if c == 0.0 {
                return;
            }
            match next.iter_mut().find(|t| (t.1 - e).abs() < 1e-12) {
                Some(t) => t.0 += c,
                None => next.push((c, e)),
            }
        };
        for &(c, e) in &p {
            add(c * e, e - 1.0);
            add(-a * c, e + a - 1.0);
        }
        next.retain(|t| t.0 != 0.0);
        p = next;
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn independence_is_product() {
        let c = GumbelCopula::new(1.0).unwrap();
        assert_relative_eq!(c.cdf(&[0.5, 0.5, 0.5]).unwrap(), 0.125, epsilon = 1e-15);
        assert_relative_eq!(c.density(&[0.3, 0.6, 0.2]).unwrap(), 1.0, epsilon = 1e-13);
    }

    #[test]
    fn unit_argument_drops_dimension() {
        let c = GumbelCopula::new(2.6).unwrap();
        assert_relative_eq!(
            c.cdf(&[0.3, 1.0, 0.7]).unwrap(),
            c.cdf(&[0.3, 0.7]).unwrap(),
            epsilon = 1e-15
        );
        assert!(c.cdf(&[0.0, 0.5]).is_err());
        assert!(GumbelCopula::new(0.5).is_err());
    }

    #[test]
    fn comonotone_limit() {
        // On the diagonal C(y, y, y) = y^(3^(1/θ)), which tends to y.
        let c = GumbelCopula::new(200.0).unwrap();
        let want = 0.4f64.powf(3f64.powf(1.0 / 200.0));
        assert_relative_eq!(c.cdf(&[0.4, 0.4, 0.4]).unwrap(), want, max_relative = 1e-14);
        assert!((want - 0.4).abs() < 3e-3);
    }

    #[test]
    fn third_derivative_closed_form() {
        let a = 0.4;
        let p = psi_derivative_poly(3, a);
        let s: f64 = 1.7;
        let got: f64 = p.iter().map(|&(c, e)| c * s.powf(e)).sum();
        let want = -a.powi(3) * s.powf(3.0 * a - 3.0) + 3.0 * a * a * (a - 1.0) * s.powf(2.0 * a - 3.0)
            - a * (a - 1.0) * (a - 2.0) * s.powf(a - 3.0);
        assert_relative_eq!(got, want, max_relative = 1e-13);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let c = GumbelCopula::new(2.6).unwrap();
        let y = [0.55, 0.8, 0.7];
        let h = 1e-6;
        let mut yp = y;
        let mut ym = y;
        yp[0] += h;
        ym[0] -= h;
        let fd = (c.cdf(&yp).unwrap() - c.cdf(&ym).unwrap()) / (2.0 * h);
        assert_relative_eq!(c.partial(&y, 0).unwrap(), fd, max_relative = 1e-7);

        // Third mixed difference of C.
        let h = 1e-3;
        let mut fd3 = 0.0;
        for s0 in [-1.0, 1.0] {
            for s1 in [-1.0, 1.0] {
                for s2 in [-1.0, 1.0] {
                    let p = [y[0] + s0 * h, y[1] + s1 * h, y[2] + s2 * h];
                    fd3 += s0 * s1 * s2 * c.cdf(&p).unwrap();
                }
            }
        }
        fd3 /= 8.0 * h * h * h;
        assert_relative_eq!(c.density(&y).unwrap(), fd3, max_relative = 1e-5);
    }

    #[test]
    fn stable_at_unit_index_is_one() {
        let mut r = rng::stream(1, "t");
        assert_eq!(positive_stable(1.0, &mut r), 1.0);
    }
}
