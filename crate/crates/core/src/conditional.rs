//! Conditional simulation of one standard MGP component given the others.
//!
//! Given `Z_{-j} = z_{-j}`, the target is `Z_j = z_q - Δ^{q,j}`, and the law
//! of `Δ^{q,j}` is the law of the difference along the `j` axis tilted by
//! `exp(-max z)`. Writing `z* = max z_{-j}` and `δ* = z_q - z*`, the tilt is
//!
//! * `z* > 0`, `z* = z_q`: `1` for `δ > 0`, `e^δ` otherwise;
//! * `z* > 0`, `z* ≠ z_q`: `e^δ` for `δ < δ*`, `e^{δ*}` otherwise;
//! * `z* ≤ 0`: `e^δ` for `δ < z_q`, `0` otherwise (the vector must have a
//!   positive maximum, which can only come from `Z_j`).
//!
//! All tilts are bounded by one, so bootstrapped differences can be accepted
//! with probability equal to the tilt.

use crate::error::{Error, Result};
use crate::mgp::{DiffMatrix, DifferenceLaw};
use crate::rng::{self, SimRng};
use crate::stats::quad::{integrate_with, QuadOptions};
use ndarray::Axis;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// The observed components `z_{-j}`, listed in ascending component order
/// with `j` skipped, and the anchor `q` (both 0-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditioningEvent {
    pub j: usize,
    pub q: usize,
    pub z_minus_j: Vec<f64>,
}

impl ConditioningEvent {
    pub fn new(j: usize, q: usize, z_minus_j: Vec<f64>) -> Result<Self> {
        let d = z_minus_j.len() + 1;
        if j >= d {
            return Err(Error::IndexError { index: j, dim: d });
        }
        if q >= d {
            return Err(Error::IndexError { index: q, dim: d });
        }
        if j == q {
            return Err(Error::InvalidConfig(format!(
                "anchor {q} must differ from the target component"
            )));
        }
        if z_minus_j.iter().any(|v| !v.is_finite()) {
            return Err(Error::DomainError("conditioning values must be finite".into()));
        }
        Ok(ConditioningEvent { j, q, z_minus_j })
    }

    /// Anchor used when none is given: the first component, or the third
    /// (the last when `d = 2`) when the target is the first.
    pub fn default_anchor(j: usize, d: usize) -> usize {
        if j == 0 {
            2.min(d - 1)
        } else {
            0
        }
    }

    pub fn d(&self) -> usize {
        self.z_minus_j.len() + 1
    }

    /// Observed value of component `k != j`.
    pub fn z(&self, k: usize) -> f64 {
        assert_ne!(k, self.j, "component j is not observed");
        if k < self.j {
            self.z_minus_j[k]
        } else {
            self.z_minus_j[k - 1]
        }
    }

    pub fn z_q(&self) -> f64 {
        self.z(self.q)
    }

    pub fn z_star(&self) -> f64 {
        self.z_minus_j
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn delta_star(&self) -> f64 {
        self.z_q() - self.z_star()
    }

    /// Full anchored difference vector with the observed coordinates pinned
    /// at `z_q - z_k` and coordinate `j` set to `delta_j`.
    pub fn delta_vector(&self, delta_j: f64) -> Vec<f64> {
        let zq = self.z_q();
        (0..self.d())
            .map(|k| if k == self.j { delta_j } else { zq - self.z(k) })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseLabel {
    Case1,
    Case2,
    Case3,
}

impl std::fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let n = match self {
            CaseLabel::Case1 => 1,
            CaseLabel::Case2 => 2,
            CaseLabel::Case3 => 3,
        };
        write!(f, "case{n}")
    }
}

pub fn classify_case(ev: &ConditioningEvent) -> CaseLabel {
    let zs = ev.z_star();
    if zs > 0.0 {
        if zs == ev.z_q() {
            CaseLabel::Case1
        } else {
            CaseLabel::Case2
        }
    } else {
        CaseLabel::Case3
    }
}

/// Acceptance weight of a candidate difference `delta`.
pub fn tilt_weight(case: CaseLabel, delta: f64, ev: &ConditioningEvent) -> f64 {
    match case {
        CaseLabel::Case1 => {
            if delta > 0.0 {
                1.0
            } else {
                delta.exp()
            }
        }
        CaseLabel::Case2 => {
            let ds = ev.delta_star();
            if delta < ds {
                delta.exp()
            } else {
                ds.exp()
            }
        }
        CaseLabel::Case3 => {
            if delta < ev.z_q() {
                delta.exp()
            } else {
                0.0
            }
        }
    }
}

/// Supremum of [`tilt_weight`] over the real line.
pub fn tilt_supremum(case: CaseLabel, ev: &ConditioningEvent) -> f64 {
    match case {
        CaseLabel::Case1 => 1.0,
        CaseLabel::Case2 => ev.delta_star().exp(),
        CaseLabel::Case3 => ev.z_q().exp(),
    }
}

// ---------------------------------------------------------------------------
// Sampler

/// How Case 1 events are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Case1Strategy {
    /// Rejection from all rows with the Case 1 tilt.
    Tilted,
    /// Plain bootstrap from rows whose maximum over the observed components
    /// sits at the anchor.
    Subset,
}

/// Where candidate differences are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CandidatePool {
    /// Uniform bootstrap of the `j`-th difference over all rows.
    Marginal,
    /// Bootstrap weighted by a Gaussian kernel in the observed differences
    /// other than the anchor, so candidates come from rows whose pinned
    /// coordinates resemble the event. Identical to `Marginal` when `d = 2`.
    Kernel { bandwidth: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CondSimConfig {
    pub m: usize,
    pub seed: u64,
    /// Candidate draws allowed per accepted value.
    pub max_rejects: usize,
    pub case1: Case1Strategy,
    pub pool: CandidatePool,
    /// Below this many subset rows, [`Case1Strategy::Subset`] falls back to
    /// the tilted sampler when `subset_fallback` is set.
    pub min_subset: usize,
    pub subset_fallback: bool,
}

impl Default for CondSimConfig {
    fn default() -> Self {
        CondSimConfig {
            m: 10_000,
            seed: 42,
            max_rejects: 10_000,
            case1: Case1Strategy::Tilted,
            pool: CandidatePool::Marginal,
            min_subset: 20,
            subset_fallback: true,
        }
    }
}

/// Weighted index sampler over rows (inverse CDF on cumulative weights).
struct WeightedRows {
    cum: Vec<f64>,
}

impl WeightedRows {
    fn draw(&self, rng: &mut SimRng) -> usize {
        let total = *self.cum.last().expect("non-empty");
        let u = rng.random::<f64>() * total;
        self.cum.partition_point(|&c| c <= u).min(self.cum.len() - 1)
    }
}

fn kernel_rows(diffs: &DiffMatrix, ev: &ConditioningEvent, h: f64) -> Result<Option<WeightedRows>> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidConfig(format!("kernel bandwidth {h} must be positive")));
    }
    let pinned: Vec<(usize, f64)> = (0..ev.d())
        .filter(|&k| k != ev.j && k != ev.q)
        .map(|k| (k, ev.z_q() - ev.z(k)))
        .collect();
    if pinned.is_empty() {
        return Ok(None);
    }
    let d2: Vec<f64> = diffs
        .data
        .axis_iter(Axis(0))
        .map(|r| pinned.iter().map(|&(k, t)| (r[k] - t).powi(2)).sum::<f64>())
        .collect();
    let dmin = d2.iter().copied().fold(f64::INFINITY, f64::min);
    let mut cum = Vec::with_capacity(d2.len());
    let (mut acc, mut acc2) = (0.0, 0.0);
    for v in &d2 {
        let w = (-(v - dmin) / (2.0 * h * h)).exp();
        acc += w;
        acc2 += w * w;
        cum.push(acc);
    }
    let ess = acc * acc / acc2;
    if ess < 100.0 {
        log::warn!("kernel candidate pool has effective size {ess:.1}; consider a wider bandwidth");
    }
    Ok(Some(WeightedRows { cum }))
}

/// Runs the accept/reject loop with candidates from `draw`, returning
/// accepted differences.
fn rejection_loop<F: FnMut(&mut SimRng) -> f64>(
    case: CaseLabel,
    ev: &ConditioningEvent,
    m: usize,
    max_rejects: usize,
    rng: &mut SimRng,
    mut draw: F,
) -> Result<(Vec<f64>, usize)> {
    let mut out = Vec::with_capacity(m);
    let mut candidates = 0usize;
    for _ in 0..m {
        let mut tries = 0;
        loop {
            if tries == max_rejects {
                return Err(Error::RejectBudgetExceeded(max_rejects));
            }
            tries += 1;
            let delta = draw(rng);
            let w = tilt_weight(case, delta, ev);
            if w > 1.0 + 1e-12 {
                return Err(Error::DominationViolated(w));
            }
            if rng.random::<f64>() < w {
                out.push(delta);
                break;
            }
        }
        candidates += tries;
    }
    Ok((out, candidates))
}

/// Draws `m` differences `Δ^{q,j}` from their conditional law given the event.
pub fn conditional_differences(
    diffs: &DiffMatrix,
    ev: &ConditioningEvent,
    cfg: &CondSimConfig,
) -> Result<Vec<f64>> {
    if cfg.m == 0 {
        return Err(Error::InvalidConfig("m must be at least 1".into()));
    }
    if diffs.d() != ev.d() {
        return Err(Error::DimensionError(format!(
            "differences have {} columns, event has dimension {}",
            diffs.d(),
            ev.d()
        )));
    }
    if diffs.q != ev.q {
        return Err(Error::InvalidConfig(format!(
            "differences anchored at {} but event uses anchor {}",
            diffs.q, ev.q
        )));
    }
    if diffs.n() == 0 {
        return Err(Error::InsufficientData("no difference rows".into()));
    }
    let case = classify_case(ev);
    let j = ev.j;
    let mut rng = rng::stream(cfg.seed, "cond/sample");
    let col: Vec<f64> = diffs.data.column(j).to_vec();

    if case == CaseLabel::Case1 && cfg.case1 == Case1Strategy::Subset {
        let subset: Vec<f64> = diffs
            .data
            .axis_iter(Axis(0))
            .filter(|r| (0..ev.d()).filter(|&k| k != j).all(|k| r[k] >= 0.0))
            .map(|r| r[j])
            .collect();
        if subset.len() >= cfg.min_subset || (!cfg.subset_fallback && !subset.is_empty()) {
            return Ok((0..cfg.m)
                .map(|_| subset[rng.random_range(0..subset.len())])
                .collect());
        }
        if !cfg.subset_fallback {
            return Err(Error::EmptySubset);
        }
        log::warn!(
            "case 1 subset has {} rows (< {}); using the tilted sampler",
            subset.len(),
            cfg.min_subset
        );
    }

    let weighted = match cfg.pool {
        CandidatePool::Marginal => None,
        CandidatePool::Kernel { bandwidth } => kernel_rows(diffs, ev, bandwidth)?,
    };
    let n = col.len();
    let (out, _) = match weighted {
        Some(w) => rejection_loop(case, ev, cfg.m, cfg.max_rejects, &mut rng, |r| {
            col[w.draw(r)]
        })?,
        None => rejection_loop(case, ev, cfg.m, cfg.max_rejects, &mut rng, |r| {
            col[r.random_range(0..n)]
        })?,
    };
    Ok(out)
}

/// Draws `m` values of `Z_j` given `Z_{-j} = z_{-j}`.
pub fn conditional_simulate(
    diffs: &DiffMatrix,
    ev: &ConditioningEvent,
    cfg: &CondSimConfig,
) -> Result<Vec<f64>> {
    let zq = ev.z_q();
    Ok(conditional_differences(diffs, ev, cfg)?
        .into_iter()
        .map(|d| zq - d)
        .collect())
}

// ---------------------------------------------------------------------------
// Reference density

/// Normalised conditional density of `Δ^{q,j}` for a known difference law.
pub struct ConditionalDensity<'a, L: DifferenceLaw + ?Sized> {
    ev: ConditioningEvent,
    case: CaseLabel,
    law: &'a L,
    offset: f64,
    norm: f64,
    breaks: Vec<f64>,
}

const SUPPORT: (f64, f64) = (-40.0, 40.0);

impl<'a, L: DifferenceLaw + ?Sized> ConditionalDensity<'a, L> {
    pub fn new(ev: &ConditioningEvent, law: &'a L) -> Result<Self> {
        if law.dim() != ev.d() || law.anchor() != ev.q {
            return Err(Error::DimensionError(
                "difference law does not match the conditioning event".into(),
            ));
        }
        let case = classify_case(ev);
        let mut breaks = vec![0.0];
        match case {
            CaseLabel::Case2 => breaks.push(ev.delta_star()),
            CaseLabel::Case3 => breaks.push(ev.z_q()),
            CaseLabel::Case1 => {}
        }
        // Locate the bulk on a grid to scale the integrand and split there.
        let mut dens = ConditionalDensity {
            ev: ev.clone(),
            case,
            law,
            offset: 0.0,
            norm: 1.0,
            breaks: vec![],
        };
        let (lo, hi) = SUPPORT;
        let steps = 1600;
        let mut best = (f64::NEG_INFINITY, 0.0);
        for i in 0..=steps {
            let x = lo + (hi - lo) * i as f64 / steps as f64;
            let w = tilt_weight(case, x, ev);
            if w > 0.0 {
                let l = w.ln() + law.ln_pdf(&ev.delta_vector(x));
                if l > best.0 {
                    best = (l, x);
                }
            }
        }
        if !best.0.is_finite() {
            return Err(Error::IntegrationFailure(
                "conditional density vanishes on the support".into(),
            ));
        }
        dens.offset = best.0;
        breaks.push(best.1);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        dens.breaks = breaks;
        let q = integrate_with(
            |x| dens.unnormalised(x),
            lo,
            hi,
            &dens.breaks,
            QuadOptions {
                abs_tol: 1e-300,
                rel_tol: 1e-8,
                max_intervals: 4000,
            },
        )?;
        if !(q.value > 0.0 && q.value.is_finite()) {
            return Err(Error::IntegrationFailure(format!(
                "normaliser is {}",
                q.value
            )));
        }
        dens.norm = q.value;
        Ok(dens)
    }

    pub fn case(&self) -> CaseLabel {
        self.case
    }

    pub fn event(&self) -> &ConditioningEvent {
        &self.ev
    }

    /// Tilted density, scaled so its maximum on the grid is about one.
    pub fn unnormalised(&self, delta: f64) -> f64 {
        let w = tilt_weight(self.case, delta, &self.ev);
        if w == 0.0 {
            return 0.0;
        }
        (w.ln() + self.law.ln_pdf(&self.ev.delta_vector(delta)) - self.offset).exp()
    }

    pub fn pdf(&self, delta: f64) -> f64 {
        self.unnormalised(delta) / self.norm
    }

    /// Probability of `[a, b]`.
    pub fn mass(&self, a: f64, b: f64) -> Result<f64> {
        let (lo, hi) = SUPPORT;
        let (a, b) = (a.max(lo), b.min(hi));
        if a >= b {
            return Ok(0.0);
        }
        let q = integrate_with(
            |x| self.unnormalised(x),
            a,
            b,
            &self.breaks,
            QuadOptions {
                abs_tol: 1e-14 * self.norm,
                rel_tol: 1e-10,
                max_intervals: 4000,
            },
        )?;
        Ok(q.value / self.norm)
    }

    /// Interval outside which the density is below `1e-3` of its peak.
    pub fn bulk_range(&self) -> (f64, f64) {
        let (lo, hi) = SUPPORT;
        let steps = 8000;
        let xs = (0..=steps).map(|i| lo + (hi - lo) * i as f64 / steps as f64);
        let keep: Vec<f64> = xs.filter(|&x| self.unnormalised(x) > 1e-3).collect();
        match (keep.first(), keep.last()) {
            (Some(&a), Some(&b)) if b > a => (a, b),
            _ => (lo, hi),
        }
    }
}

/// Evaluates the normalised conditional density at one point.
pub fn conditional_density<L: DifferenceLaw + ?Sized>(
    delta: f64,
    ev: &ConditioningEvent,
    law: &L,
) -> Result<f64> {
    Ok(ConditionalDensity::new(ev, law)?.pdf(delta))
}

/// Total variation between the `bins`-bin histogram of `draws` (differences)
/// and the density. Bins span the bulk of the density; the mass on either
/// side enters as two extra cells.
pub fn histogram_tv<L: DifferenceLaw + ?Sized>(
    draws: &[f64],
    dens: &ConditionalDensity<'_, L>,
    bins: usize,
) -> Result<f64> {
    let (a, b) = dens.bulk_range();
    let width = (b - a) / bins as f64;
    let mut counts = vec![0usize; bins + 2];
    for &x in draws {
        let cell = if x < a {
            0
        } else if x >= b {
            bins + 1
        } else {
            1 + (((x - a) / width) as usize).min(bins - 1)
        };
        counts[cell] += 1;
    }
    let n = draws.len() as f64;
    let mut probs = Vec::with_capacity(bins + 2);
    probs.push(dens.mass(f64::NEG_INFINITY, a)?);
    for i in 0..bins {
        probs.push(dens.mass(a + i as f64 * width, a + (i + 1) as f64 * width)?);
    }
    probs.push(dens.mass(b, f64::INFINITY)?);
    Ok(0.5
        * counts
            .iter()
            .zip(&probs)
            .map(|(&c, &p)| (c as f64 / n - p).abs())
            .sum::<f64>())
}

/// Outcome of [`validate_rejection_constant`].
#[derive(Debug, Clone, Serialize)]
pub struct RejectionReport {
    pub case: CaseLabel,
    /// Largest acceptance weight seen on the evaluation grid.
    pub max_weight: f64,
    /// Analytic supremum of the acceptance weight.
    pub sup_weight: f64,
    pub acceptance_rate: f64,
    /// Histogram total variation of the accepted draws against the density.
    pub tv: f64,
    pub m: usize,
}

/// Checks that the acceptance weights never exceed one on `[-20, 20]` and that
/// rejection sampling with exact proposals from the difference law reproduces
/// the conditional density.
pub fn validate_rejection_constant<L: DifferenceLaw + ?Sized>(
    ev: &ConditioningEvent,
    law: &L,
    m: usize,
    seed: u64,
) -> Result<RejectionReport> {
    let case = classify_case(ev);
    let mut grid: Vec<f64> = (0..=40_000).map(|i| -20.0 + i as f64 * 1e-3).collect();
    grid.extend([0.0, ev.delta_star(), ev.z_q()]);
    let mut max_weight: f64 = 0.0;
    for &x in &grid {
        let w = tilt_weight(case, x, ev);
        if w > 1.0 + 1e-12 {
            return Err(Error::DominationViolated(w));
        }
        max_weight = max_weight.max(w);
    }
    let dens = ConditionalDensity::new(ev, law)?;
    let base = ev.delta_vector(0.0);
    let mut rng = rng::stream(seed, "cond/validate");
    let (draws, candidates) = rejection_loop(case, ev, m, usize::MAX, &mut rng, |r| {
        law.sample_conditional(ev.j, &base, r)
    })?;
    let tv = histogram_tv(&draws, &dens, 50)?;
    Ok(RejectionReport {
        case,
        max_weight,
        sup_weight: tilt_supremum(case, ev),
        acceptance_rate: m as f64 / candidates as f64,
        tv,
        m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mgp::GaussianT;

    fn ev(z: &[f64]) -> ConditioningEvent {
        ConditioningEvent::new(1, 0, z.to_vec()).unwrap()
    }

    #[test]
    fn cases_from_figure_points() {
        assert_eq!(classify_case(&ev(&[0.54, 0.31])), CaseLabel::Case1);
        assert_eq!(classify_case(&ev(&[0.24, 0.79])), CaseLabel::Case2);
        assert_eq!(classify_case(&ev(&[-0.42, -0.35])), CaseLabel::Case3);
    }

    #[test]
    fn event_accessors() {
        let e = ev(&[0.24, 0.79]);
        assert_eq!(e.z(0), 0.24);
        assert_eq!(e.z(2), 0.79);
        assert!((e.delta_star() + 0.55).abs() < 1e-15);
        assert_eq!(e.delta_vector(0.7), vec![0.0, 0.7, 0.24 - 0.79]);
        assert!(ConditioningEvent::new(1, 1, vec![0.0, 0.0]).is_err());
        assert_eq!(ConditioningEvent::default_anchor(0, 3), 2);
        assert_eq!(ConditioningEvent::default_anchor(0, 2), 1);
        assert_eq!(ConditioningEvent::default_anchor(2, 3), 0);
    }

    #[test]
    fn case2_boundary_takes_flat_branch() {
        let e = ev(&[0.24, 0.79]);
        let ds = e.delta_star();
        assert_eq!(tilt_weight(CaseLabel::Case2, ds, &e), ds.exp());
        assert_eq!(tilt_weight(CaseLabel::Case2, ds + 5.0, &e), ds.exp());
    }

    #[test]
    fn case3_cut() {
        let e = ev(&[-0.1, -0.3]);
        assert_eq!(tilt_weight(CaseLabel::Case3, 0.2, &e), 0.0);
        assert!(tilt_weight(CaseLabel::Case3, -0.2, &e) > 0.0);
    }

    #[test]
    fn density_normalised_and_cut() {
        let g = GaussianT::from_pairs(3, &[0.6, 0.8, 0.5]).unwrap();
        let law = g.difference_law(0).unwrap();
        for z in [[0.54, 0.31], [0.24, 0.79], [-0.42, -0.35]] {
            let e = ev(&z);
            let d = ConditionalDensity::new(&e, &law).unwrap();
            assert!((d.mass(-40.0, 40.0).unwrap() - 1.0).abs() < 1e-6);
            if d.case() == CaseLabel::Case3 {
                assert_eq!(d.pdf(e.z_q()), 0.0);
                assert_eq!(d.pdf(e.z_q() + 1.0), 0.0);
            }
        }
    }
}
