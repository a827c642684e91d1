//! Exact reference values for the synthetic Gumbel/Student-t model.

use super::gumbel::{GumbelCopula, SynthConfig};
use crate::error::{Error, Result};
use crate::risk::TrmMetric;
use crate::stats::quad::{integrate_line, integrate_upper, QuadOptions};
use crate::stats::StdT;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefMethod {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceValue {
    pub metric: TrmMetric,
    pub alpha: f64,
    pub value: f64,
    pub method: RefMethod,
    /// Absolute error estimate (0 for closed forms).
    pub error: f64,
}

const REL_TOL: f64 = 1e-6;

fn opts(rel: f64) -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-15,
        rel_tol: rel,
        max_intervals: 8000,
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::DomainError(format!("alpha {alpha} outside (0, 1)")))
    }
}

/// Expected shortfall of a standard Student-t at confidence `alpha`:
/// `s(t_α) (ν + t_α²) / ((ν - 1)(1 - α))` with `s` the density and `t_α` the
/// `alpha`-quantile.
pub fn es_student_closed(nu: f64, alpha: f64) -> Result<ReferenceValue> {
    if !(nu > 1.0) {
        return Err(Error::DomainError(format!("ES needs nu > 1, got {nu}")));
    }
    check_alpha(alpha)?;
    let t = StdT::new(nu);
    let ta = t.quantile(alpha);
    let value = t.pdf(ta) * (nu + ta * ta) / ((nu - 1.0) * (1.0 - alpha));
    Ok(ReferenceValue {
        metric: TrmMetric::Es,
        alpha,
        value,
        method: RefMethod::ClosedForm,
        error: 0.0,
    })
}

/// Location-scale version `loc + scale * ES_standard`.
pub fn es_student_closed_ls(nu: f64, loc: f64, scale: f64, alpha: f64) -> Result<ReferenceValue> {
    let mut r = es_student_closed(nu, alpha)?;
    r.value = loc + scale * r.value;
    Ok(r)
}

/// The same expected shortfall by direct quadrature of `∫_{VaR}^∞ x f(x) dx / (1 - α)`.
pub fn es_student_quadrature(nu: f64, alpha: f64) -> Result<ReferenceValue> {
    if !(nu > 1.0) {
        return Err(Error::DomainError(format!("ES needs nu > 1, got {nu}")));
    }
    check_alpha(alpha)?;
    let t = StdT::new(nu);
    let ta = t.quantile(alpha);
    let q = integrate_upper(|x| x * t.pdf(x), ta, opts(1e-12))?;
    Ok(ReferenceValue {
        metric: TrmMetric::Es,
        alpha,
        value: q.value / (1.0 - alpha),
        method: RefMethod::Quadrature,
        error: q.error / (1.0 - alpha),
    })
}

fn check_trivariate(cfg: &SynthConfig, j: usize) -> Result<()> {
    cfg.validate()?;
    if cfg.d() != 3 {
        return Err(Error::DimensionError(format!(
            "reference formulas need d = 3, got {}",
            cfg.d()
        )));
    }
    if j >= 3 {
        return Err(Error::IndexError { index: j, dim: 3 });
    }
    Ok(())
}

/// `-ln F(x)` computed from the survival function.
fn neg_ln_cdf(t: &StdT, x: f64) -> f64 {
    if x <= 0.0 {
        -t.cdf(x).ln()
    } else {
        -(-t.sf(x)).ln_1p()
    }
}

/// `P(U_k > α, U_l > α | U_j = y)` for the two components other than `j`,
/// from `w = -ln y`. The copula is exchangeable, so argument order is free.
fn joint_exceed_given(c: &GumbelCopula, w: f64, wa: f64) -> f64 {
    let both = c.partial_w(&[w, wa, wa], 0);
    let one = c.partial_w(&[w, wa, 0.0], 0);
    (1.0 - 2.0 * one + both).max(0.0)
}

/// `E[X_j | X_k >= VaR_k, X_l >= VaR_l]` for the other two components.
pub fn mes_reference(cfg: &SynthConfig, alpha: f64, j: usize) -> Result<ReferenceValue> {
    check_trivariate(cfg, j)?;
    check_alpha(alpha)?;
    let c = GumbelCopula::new(cfg.theta)?;
    let t = StdT::new(cfg.nu[j]);
    let wa = -alpha.ln();
    let g = |x: f64| x * t.pdf(x) * joint_exceed_given(&c, neg_ln_cdf(&t, x), wa);
    let q = integrate_line(g, 0.0, opts(REL_TOL * 1e-2))?;
    let denom = 1.0 - 2.0 * alpha + c.cdf_w(&[wa, wa]);
    Ok(ReferenceValue {
        metric: TrmMetric::Mes,
        alpha,
        value: q.value / denom,
        method: RefMethod::Quadrature,
        error: q.error / denom,
    })
}

/// `E[X_j | X >= VaR]` with every component at or above its VaR.
pub fn dcte_reference(cfg: &SynthConfig, alpha: f64, j: usize) -> Result<ReferenceValue> {
    check_trivariate(cfg, j)?;
    check_alpha(alpha)?;
    let c = GumbelCopula::new(cfg.theta)?;
    let t = StdT::new(cfg.nu[j]);
    let wa = -alpha.ln();
    let v = t.quantile(alpha);
    let g = |x: f64| x * t.pdf(x) * joint_exceed_given(&c, neg_ln_cdf(&t, x), wa);
    let q = integrate_upper(g, v, opts(REL_TOL * 1e-2))?;
    // P(all three above alpha) by inclusion-exclusion.
    let psi = 1.0 - 3.0 * alpha + 3.0 * c.cdf_w(&[wa, wa]) - c.cdf_w(&[wa, wa, wa]);
    Ok(ReferenceValue {
        metric: TrmMetric::Dcte,
        alpha,
        value: q.value / psi,
        method: RefMethod::Quadrature,
        error: q.error / psi,
    })
}

/// `E[X_j | X_{-j} = x_{-j}]` from the copula density. `x_minus_j` lists the
/// other components in ascending order.
pub fn mu_reference(cfg: &SynthConfig, j: usize, x_minus_j: &[f64]) -> Result<ReferenceValue> {
    check_trivariate(cfg, j)?;
    if x_minus_j.len() != 2 {
        return Err(Error::DimensionError("x_minus_j must have 2 entries".into()));
    }
    let c = GumbelCopula::new(cfg.theta)?;
    let t = StdT::new(cfg.nu[j]);
    let others: Vec<usize> = (0..3).filter(|&k| k != j).collect();
    let w_other: Vec<f64> = others
        .iter()
        .zip(x_minus_j)
        .map(|(&k, &x)| neg_ln_cdf(&StdT::new(cfg.nu[k]), x))
        .collect();
    let ln_dens = |x: f64| {
        let mut w = [0.0; 3];
        w[j] = neg_ln_cdf(&t, x);
        w[others[0]] = w_other[0];
        w[others[1]] = w_other[1];
        c.ln_density_w(&w) + t.ln_pdf(x)
    };
    // Centre the integration on the mode, found on a quantile grid.
    let mut best = (f64::NEG_INFINITY, 0.0);
    for i in 1..2000 {
        let x = t.quantile(i as f64 / 2000.0);
        let l = ln_dens(x);
        if l > best.0 {
            best = (l, x);
        }
    }
    let (offset, centre) = best;
    if !offset.is_finite() {
        return Err(Error::IntegrationFailure("conditional density vanishes".into()));
    }
    let f = |x: f64| {
        let l = ln_dens(x) - offset;
        if l.is_finite() {
            l.exp()
        } else {
            0.0
        }
    };
    let den = integrate_line(f, centre, opts(REL_TOL * 1e-2))?;
    let num = integrate_line(|x| x * f(x), centre, opts(REL_TOL * 1e-2))?;
    let value = num.value / den.value;
    Ok(ReferenceValue {
        metric: TrmMetric::Mu,
        alpha: f64::NAN,
        value,
        method: RefMethod::Quadrature,
        error: (num.error + value.abs() * den.error) / den.value,
    })
}

/// Reference for `metric` at level `alpha` for component `j`.
pub fn trm_reference(
    cfg: &SynthConfig,
    metric: TrmMetric,
    alpha: f64,
    j: usize,
) -> Result<ReferenceValue> {
    match metric {
        TrmMetric::Es => es_student_closed(cfg.nu[j], alpha),
        TrmMetric::Mes => mes_reference(cfg, alpha, j),
        TrmMetric::Dcte => dcte_reference(cfg, alpha, j),
        TrmMetric::Mu => Err(Error::InvalidConfig("use mu_reference for MU".into())),
    }
}
