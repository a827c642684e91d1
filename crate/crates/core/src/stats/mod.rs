//! Numerical building blocks shared by the simulation and estimation code.

pub mod kendall;
pub mod ks;
pub mod optim;
pub mod quad;
pub mod student_t;

pub use student_t::StdT;

/// Empirical quantile at level `p` with plotting positions `k / (n + 1)`,
/// linearly interpolated and clamped to the sample range. `sorted` must be
/// sorted ascending and non-empty.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let pos = p * (n as f64 + 1.0);
    if pos <= 1.0 {
        return sorted[0];
    }
    if pos >= n as f64 {
        return sorted[n - 1];
    }
    let lo = pos.floor();
    let frac = pos - lo;
    let i = lo as usize - 1;
    sorted[i] + frac * (sorted[i + 1] - sorted[i])
}

/// Sorted copy of `x` (NaN values last).
pub fn sorted(x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
pub fn sd(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)).sqrt()
}

/// Interquartile range using the same plotting positions as [`quantile_sorted`].
pub fn iqr(x: &[f64]) -> f64 {
    let s = sorted(x);
    quantile_sorted(&s, 0.75) - quantile_sorted(&s, 0.25)
}

/// Upper tail of the chi-square distribution with `k` degrees of freedom.
pub fn chi_square_sf(stat: f64, k: f64) -> f64 {
    if stat <= 0.0 {
        return 1.0;
    }
    statrs::function::gamma::gamma_ur(0.5 * k, 0.5 * stat)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_plotting_positions() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&s, 0.4), 2.0);
        assert_eq!(quantile_sorted(&s, 0.5), 2.5);
        assert_eq!(quantile_sorted(&s, 0.01), 1.0);
        assert_eq!(quantile_sorted(&s, 0.99), 4.0);
    }

    #[test]
    fn chi_square_two_df_is_exponential() {
        assert!((chi_square_sf(3.0, 2.0) - (-1.5_f64).exp()).abs() < 1e-14);
    }
}
