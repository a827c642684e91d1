use extremesim::benchmarks::gumbel::GumbelCopula;
use extremesim::conditional::{classify_case, tilt_weight, ConditioningEvent};
use extremesim::joint::{joint_simulate, JointSimConfig};
use extremesim::margins::{self, MarginModel};
use extremesim::mgp::{
    self, differences_of, indicator_sums, reconstruct, reconstruct_indicator, MgpParams,
    StdMgpSample,
};
use extremesim::risk::{dcte_empirical, es_empirical, mes_empirical, mu_estimate};
use ndarray::Array2;
use proptest::collection::vec;
use proptest::prelude::*;

fn student_t() -> impl Strategy<Value = MarginModel> {
    (1.0f64..20.0, -5.0f64..5.0, 0.1f64..10.0)
        .prop_map(|(df, loc, scale)| MarginModel::student_t(df, loc, scale).unwrap())
}

fn matrix(rows: usize, d: usize) -> impl Strategy<Value = Array2<f64>> {
    vec(-10.0f64..10.0, rows * d).prop_map(move |v| Array2::from_shape_vec((rows, d), v).unwrap())
}

proptest! {
    #[test]
    fn margin_round_trip(m in student_t(), p in 1e-6f64..0.999_999) {
        let x = m.quantile(p).unwrap();
        let back = m.from_exp(m.to_exp(x)).unwrap();
        prop_assert!((back - x).abs() <= 1e-8 * x.abs().max(1e-3), "{x} -> {back}");
    }

    #[test]
    fn exponential_scale_is_increasing(m in student_t(), a in -50.0f64..50.0, h in 1e-3f64..10.0) {
        let inside = |x: f64| {
            let s = m.sf(x);
            s > margins::CDF_EPS && s < 1.0 - margins::CDF_EPS
        };
        // Strict inside the clamped range, flat beyond it.
        if inside(a) && inside(a + h) {
            prop_assert!(m.to_exp(a + h) > m.to_exp(a));
        } else {
            prop_assert!(m.to_exp(a + h) >= m.to_exp(a));
        }
    }

    #[test]
    fn threshold_monotone_in_level(x in matrix(60, 3), a in 0.05f64..0.95, b in 0.05f64..0.95) {
        let models = margins::fit_margins(x.view(), margins::MarginKind::Empirical).unwrap();
        let exp = margins::to_exponential(x.view(), &models).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let ul = margins::select_threshold(&exp, lo).unwrap();
        let uh = margins::select_threshold(&exp, hi).unwrap();
        for (l, h) in ul.u.iter().zip(&uh.u) {
            prop_assert!(l <= h);
        }
    }

    #[test]
    fn back_transform_inverts_excess_extraction(
        df in 1.5f64..10.0,
        x in matrix(80, 2),
        level in 0.5f64..0.95,
    ) {
        let models = vec![MarginModel::student_t(df, 0.0, 1.0).unwrap(); 2];
        let exp = margins::to_exponential(x.view(), &models).unwrap();
        let u = margins::select_threshold(&exp, level).unwrap();
        let rows = margins::exceedance_rows(exp.data.view(), &u);
        let z = margins::extract_excesses(&exp, &u).unwrap();
        let back = margins::back_transform(z.data.view(), &u, &models).unwrap();
        for (i, &r) in rows.iter().enumerate() {
            for k in 0..2 {
                let (a, b) = (back[[i, k]], x[[r, k]]);
                prop_assert!((a - b).abs() <= 1e-8 * b.abs().max(1e-3));
            }
        }
    }

    #[test]
    fn reconstruction_recovers_rows(t in vec(-3.0f64..3.0, 2..6), e in 0.0f64..5.0, q in 0usize..6) {
        let d = t.len();
        let q = q % d;
        let tmax = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let z: Vec<f64> = t.iter().map(|v| e + v - tmax).collect();
        let zm = Array2::from_shape_vec((1, d), z.clone()).unwrap();
        let delta = differences_of(zm.view(), q).unwrap().data.row(0).to_vec();
        let rec = reconstruct(e, &delta);
        for (a, b) in rec.iter().zip(&z) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        let top = rec.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!((top - e).abs() < 1e-12);
        // The literal indicator formula agrees.
        let lit = reconstruct_indicator(e, &delta);
        for (a, b) in lit.iter().zip(&z) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        // Z_j minus the indicator sum is the same for every j and equals the max.
        let sums = indicator_sums(&z);
        for (zj, dj) in z.iter().zip(&sums) {
            prop_assert!((zj - dj - e).abs() < 1e-12);
        }
    }

    #[test]
    fn differences_of_reconstruction(delta_rest in vec(-3.0f64..3.0, 1..5), e in 0.0f64..5.0) {
        let mut delta = vec![0.0];
        delta.extend(delta_rest);
        let z = reconstruct(e, &delta);
        let zm = Array2::from_shape_vec((1, z.len()), z).unwrap();
        let again = differences_of(zm.view(), 0).unwrap().data.row(0).to_vec();
        for (a, b) in again.iter().zip(&delta) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn general_transform_continuous_in_gamma(sigma in 0.1f64..5.0, z in -3.0f64..3.0) {
        let zm = Array2::from_shape_vec((1, 1), vec![z]).unwrap();
        let at = |g: f64| mgp::standard_to_general(zm.view(), &MgpParams::new(vec![sigma], vec![g]).unwrap()).unwrap()[[0, 0]];
        let y0 = at(0.0);
        prop_assert!((y0 - sigma * z).abs() < 1e-12);
        prop_assert!((at(1e-8) - y0).abs() < 1e-6 * sigma.max(1.0));
    }

    #[test]
    fn inclusion_chain_and_monotone_counts(x in matrix(50, 3), j in 0usize..3, v in vec(-5.0f64..5.0, 3), bump in 0.0f64..3.0) {
        let mes = mes_empirical(x.view(), j, &v).unwrap();
        let dcte = dcte_empirical(x.view(), j, &v).unwrap();
        prop_assert!(dcte.n_exceed <= mes.n_exceed);
        // Raising every VaR (a higher confidence level) can only shrink the sets.
        let v2: Vec<f64> = v.iter().map(|a| a + bump).collect();
        let col: Vec<f64> = x.column(j).to_vec();
        prop_assert!(es_empirical(&col, v2[j]).n_exceed <= es_empirical(&col, v[j]).n_exceed);
        prop_assert!(mes_empirical(x.view(), j, &v2).unwrap().n_exceed <= mes.n_exceed);
        prop_assert!(dcte_empirical(x.view(), j, &v2).unwrap().n_exceed <= dcte.n_exceed);
        prop_assert_eq!(mes.value.is_some(), mes.sufficient);
        prop_assert_eq!(mes.sufficient, mes.n_exceed > 0);
    }

    #[test]
    fn translation_equivariance(x in matrix(40, 3), j in 0usize..3, v in vec(-3.0f64..3.0, 3), c in -5.0f64..5.0) {
        let mut y = x.clone();
        y.column_mut(j).mapv_inplace(|a| a + c);
        let mut w = v.clone();
        w[j] += c;
        let col_x: Vec<f64> = x.column(j).to_vec();
        let col_y: Vec<f64> = y.column(j).to_vec();
        let pairs = [
            (es_empirical(&col_x, v[j]), es_empirical(&col_y, w[j])),
            (mes_empirical(x.view(), j, &v).unwrap(), mes_empirical(y.view(), j, &v).unwrap()),
            (dcte_empirical(x.view(), j, &v).unwrap(), dcte_empirical(y.view(), j, &w).unwrap()),
            (mu_estimate(&col_x), mu_estimate(&col_y)),
        ];
        for (a, b) in pairs {
            prop_assert_eq!(a.n_exceed, b.n_exceed);
            if let (Some(p), Some(q)) = (a.value, b.value) {
                prop_assert!((q - p - c).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn comonotone_metrics_coincide(col in vec(-10.0f64..10.0, 5..40), v in -10.0f64..10.0) {
        let n = col.len();
        let x = Array2::from_shape_fn((n, 3), |(i, _)| col[i]);
        let vv = [v; 3];
        let es = es_empirical(&col, v);
        let mes = mes_empirical(x.view(), 0, &vv).unwrap();
        let dcte = dcte_empirical(x.view(), 0, &vv).unwrap();
        prop_assert_eq!(mes.n_exceed, dcte.n_exceed);
        prop_assert_eq!(mes.value, dcte.value);
        // ES uses a strict inequality, so it differs only when some value equals v.
        if !col.contains(&v) {
            prop_assert_eq!(es.value, mes.value);
        }
    }

    #[test]
    fn acceptance_weights_in_unit_interval(z in vec(-3.0f64..3.0, 2), delta in -20.0f64..20.0) {
        let ev = ConditioningEvent::new(1, 0, z).unwrap();
        let case = classify_case(&ev);
        let w = tilt_weight(case, delta, &ev);
        prop_assert!((0.0..=1.0).contains(&w), "{case} weight {w}");
    }

    #[test]
    fn copula_within_frechet_bounds(theta in 1.0f64..20.0, y in vec(0.001f64..1.0, 2..5)) {
        let c = GumbelCopula::new(theta).unwrap().cdf(&y).unwrap();
        let d = y.len() as f64;
        let lower = (y.iter().sum::<f64>() - (d - 1.0)).max(0.0);
        let upper = y.iter().copied().fold(1.0, f64::min);
        prop_assert!(c >= lower - 1e-12 && c <= upper + 1e-12);
    }

    #[test]
    fn joint_simulation_is_deterministic(seed in any::<u64>(), q in 0usize..3) {
        let z = StdMgpSample::new(Array2::from_shape_fn((30, 3), |(i, k)| ((i * 7 + k * 3) % 11) as f64 / 5.0 - 0.5)).unwrap();
        let cfg = JointSimConfig { m: 200, q, seed };
        let a = joint_simulate(&z, &cfg).unwrap();
        let b = joint_simulate(&z, &cfg).unwrap();
        prop_assert_eq!(a.data, b.data);
    }
}
