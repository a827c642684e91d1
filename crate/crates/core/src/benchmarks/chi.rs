//! Rank-based estimate of the extremal dependence coefficient χ.

use crate::error::{Error, Result};
use ndarray::{Array2, ArrayView2, Axis};

/// Per-column ranks scaled to `rank / (n + 1)`.
pub fn pseudo_observations(data: ArrayView2<f64>) -> Array2<f64> {
    let n = data.nrows();
    let mut out = Array2::zeros(data.dim());
    for (k, col) in data.axis_iter(Axis(1)).enumerate() {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
        for (r, &i) in idx.iter().enumerate() {
            out[[i, k]] = (r + 1) as f64 / (n as f64 + 1.0);
        }
    }
    out
}

/// `χ(α) = P(F_1(X_1) > α, ..., F_d(X_d) > α) / (1 - α)` on each grid level.
pub fn chi_measure(data: ArrayView2<f64>, alpha_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    if let Some(a) = alpha_grid.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
        return Err(Error::DomainError(format!("grid level {a} outside (0, 1)")));
    }
    let n = data.nrows();
    if n == 0 {
        return Ok(alpha_grid.iter().map(|&a| (a, 0.0)).collect());
    }
    let u = pseudo_observations(data);
    let row_min: Vec<f64> = u
        .axis_iter(Axis(0))
        .map(|r| r.iter().copied().fold(f64::INFINITY, f64::min))
        .collect();
    Ok(alpha_grid
        .iter()
        .map(|&a| {
            let k = row_min.iter().filter(|&&m| m > a).count();
            (a, k as f64 / n as f64 / (1.0 - a))
        })
        .collect())
}

/// `count` levels evenly spaced from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![lo],
        _ => (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}
