//! Acceptance criteria. Prints one `[PASS]`/`[FAIL]` line per criterion and
//! exits non-zero when any criterion fails.

use extremesim::benchmarks::experiment::{
    mu_mean_abs_errors, run_mu_experiment, run_trm_experiment, ConditioningPoint,
    ExperimentConfig, ExperimentResults, MuExperimentConfig, Scope,
};
use extremesim::benchmarks::gumbel::{gumbel_log_uniforms, gumbel_sample, SynthConfig};
use extremesim::benchmarks::reference::{
    dcte_reference, es_student_closed, es_student_quadrature, mes_reference,
};
use extremesim::conditional::{
    classify_case, conditional_differences, histogram_tv, CandidatePool, Case1Strategy,
    CondSimConfig, ConditionalDensity, ConditioningEvent,
};
use extremesim::joint::{joint_simulate, JointSimConfig};
use extremesim::margins::{self, MarginModel};
use extremesim::mgp::GaussianT;
use extremesim::risk::TrmMetric;
use extremesim::rng::{derive_indexed, derive_seed, stream};
use extremesim::stats::kendall::kendall_tau;
use extremesim::stats::ks::{ks_exp1, ks_two_sample};
use extremesim::stats::{mean, sd, StdT};
use std::time::{Duration, Instant};

const SEED: u64 = 42;

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: usize, name: &str, limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> bool {
    let t0 = Instant::now();
    let mut o = f();
    let took = t0.elapsed();
    if let Some(l) = limit {
        if took > l {
            o.pass = false;
            o.detail += &format!("; runtime {:.1}s exceeds {:.0}s", took.as_secs_f64(), l.as_secs_f64());
        }
    }
    println!(
        "[{}] {id}. {name}: {} ({:.1}s)",
        if o.pass { "PASS" } else { "FAIL" },
        o.detail,
        took.as_secs_f64()
    );
    o.pass
}

fn gaussian_t(rho: &[f64]) -> GaussianT {
    GaussianT::from_pairs(3, rho).expect("valid correlation")
}

fn c1_marginal_fidelity() -> Outcome {
    let model = gaussian_t(&[0.4, 0.8, 0.1]);
    let mut stats = vec![Vec::new(); 3];
    for s in 0..20u64 {
        let obs = model.sample(2000, derive_indexed(SEED, "c1/obs", s));
        let fresh = model.sample(10_000, derive_indexed(SEED, "c1/fresh", s));
        let cfg = JointSimConfig { m: 10_000, q: 0, seed: derive_indexed(SEED, "c1/sim", s) };
        let sim = joint_simulate(&obs, &cfg).expect("simulation");
        for (k, st) in stats.iter_mut().enumerate() {
            let a = sim.data.column(k).to_vec();
            let b = fresh.data.column(k).to_vec();
            st.push(ks_two_sample(&a, &b).statistic);
        }
    }
    let means: Vec<f64> = stats.iter().map(|v| mean(v)).collect();
    Outcome {
        pass: means.iter().all(|&m| m < 0.05),
        detail: format!("mean KS per margin {:.4?} (< 0.05)", means),
    }
}

fn c2_max_law() -> Outcome {
    let model = gaussian_t(&[0.4, 0.8, 0.1]);
    let obs = model.sample(2000, derive_seed(SEED, "c2/obs"));
    let mut passed = 0;
    for s in 0..100u64 {
        let cfg = JointSimConfig { m: 10_000, q: 0, seed: derive_indexed(SEED, "c2/sim", s) };
        let sim = joint_simulate(&obs, &cfg).expect("simulation");
        if ks_exp1(&sim.row_max()).p_value > 0.01 {
            passed += 1;
        }
    }
    Outcome {
        pass: passed >= 95,
        detail: format!("{passed}/100 seeds pass KS at 1% (>= 95)"),
    }
}

fn c3_conditional_density() -> Outcome {
    let model = gaussian_t(&[0.6, 0.8, 0.5]);
    let law = model.difference_law(0).expect("law");
    let obs = model.sample(1_000_000, derive_seed(SEED, "c3/obs"));
    let diffs = extremesim::mgp::differences(&obs, 0).expect("differences");
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, given) in [[0.54, 0.31], [0.24, 0.79], [-0.42, -0.35]].iter().enumerate() {
        let t0 = Instant::now();
        let ev = ConditioningEvent::new(1, 0, given.to_vec()).expect("event");
        let dens = ConditionalDensity::new(&ev, &law).expect("density");
        let tv = |pool, case1| {
            let cfg = CondSimConfig {
                m: 10_000,
                seed: derive_indexed(SEED, "c3/sim", i as u64),
                pool,
                case1,
                ..Default::default()
            };
            let d = conditional_differences(&diffs, &ev, &cfg).expect("conditional draws");
            histogram_tv(&d, &dens, 50).expect("tv")
        };
        let kernel = tv(CandidatePool::Kernel { bandwidth: 0.05 }, Case1Strategy::Tilted);
        let ok = kernel < 0.05 && t0.elapsed() < Duration::from_secs(60);
        pass &= ok;
        let marginal = tv(CandidatePool::Marginal, Case1Strategy::Tilted);
        let mut part = format!(
            "{} {:?}: TV {kernel:.4} (kernel pool; plain bootstrap {marginal:.4}",
            classify_case(&ev),
            given
        );
        if i == 0 {
            let subset = tv(CandidatePool::Marginal, Case1Strategy::Subset);
            part += &format!(", subset {subset:.4}");
        }
        part += ")";
        parts.push(part);
    }
    Outcome { pass, detail: format!("{} (< 0.05)", parts.join("; ")) }
}

fn experiment(theta: f64, alpha: f64) -> ExperimentResults {
    let cfg = ExperimentConfig {
        thetas: vec![theta],
        alphas: vec![alpha],
        seed: SEED,
        ..Default::default()
    };
    run_trm_experiment(&cfg).expect("experiment")
}

fn c4_exceedance_counts() -> Outcome {
    let (theta, alpha) = (1.3, 0.9975);
    let res = experiment(theta, alpha);
    let count = |scope, metric| res.cell(theta, alpha, scope, metric).expect("cell");
    let es_orig = count(Scope::Orig, TrmMetric::Es);
    let es_simu = count(Scope::Simu, TrmMetric::Es);
    let mes_simu = count(Scope::Simu, TrmMetric::Mes);
    let dcte_simu = count(Scope::Simu, TrmMetric::Dcte);
    // The benchmark pair of joint-exceedance counts is matched to the two
    // metrics without fixing which column is which; the set inclusion puts
    // the smaller count on DCTE.
    let smaller = mes_simu.mean_n_exceed.min(dcte_simu.mean_n_exceed);
    let pass = (2.5..=5.0).contains(&es_orig.mean_n_exceed)
        && (75.0..=100.0).contains(&es_simu.mean_n_exceed)
        && (28.0..=40.0).contains(&smaller);
    Outcome {
        pass,
        detail: format!(
            "ES Orig {:.1} ({:.1}) in [2.5, 5]; ES Simu {:.1} ({:.1}) in [75, 100]; \
             joint-exceedance pair MES {:.1} ({:.1}) / DCTE {:.1} ({:.1}), smaller in [28, 40]",
            es_orig.mean_n_exceed,
            es_orig.sd_n_exceed,
            es_simu.mean_n_exceed,
            es_simu.sd_n_exceed,
            mes_simu.mean_n_exceed,
            mes_simu.sd_n_exceed,
            dcte_simu.mean_n_exceed,
            dcte_simu.sd_n_exceed
        ),
    }
}

fn c5_error_contraction() -> Outcome {
    let (theta, alpha) = (2.6, 0.9997);
    let res = experiment(theta, alpha);
    let mut pass = true;
    let mut parts = Vec::new();
    for m in [TrmMetric::Es, TrmMetric::Mes, TrmMetric::Dcte] {
        let orig = res.cell(theta, alpha, Scope::Orig, m).expect("cell");
        let simu = res.cell(theta, alpha, Scope::Simu, m).expect("cell");
        let contraction = match (orig.iqr_rel_error, simu.iqr_rel_error) {
            (Some(o), Some(s)) => s < o,
            (None, Some(_)) => true,
            _ => false,
        };
        let insufficient = 1.0 - orig.frac_sufficient;
        let na_ok = m == TrmMetric::Es || insufficient > 0.5;
        pass &= contraction && na_ok;
        parts.push(format!(
            "{m}: IQR Orig {} vs Simu {}, Orig NA {:.0}%",
            orig.iqr_rel_error.map_or("NA".into(), |v| format!("{v:.3}")),
            simu.iqr_rel_error.map_or("NA".into(), |v| format!("{v:.3}")),
            100.0 * insufficient
        ));
    }
    Outcome { pass, detail: parts.join("; ") }
}

fn c6_closed_form_es() -> Outcome {
    let mut worst: f64 = 0.0;
    for nu in [2.0, 2.5, 3.0] {
        for alpha in [0.9975, 0.999, 0.9997] {
            let a = es_student_closed(nu, alpha).expect("closed").value;
            let b = es_student_quadrature(nu, alpha).expect("quadrature").value;
            worst = worst.max(((a - b) / b).abs());
        }
    }
    Outcome { pass: worst < 1e-8, detail: format!("max relative difference {worst:.2e} (< 1e-8)") }
}

fn c7_lemma_oracles() -> Outcome {
    let nu = vec![2.0, 3.0, 2.5];
    let alpha: f64 = 0.9975;
    let wa = -alpha.ln();
    let j = 0;
    let t = StdT::new(nu[j]);
    let mut pass = true;
    let mut parts = Vec::new();
    for theta in [1.3, 2.6] {
        let cfg = SynthConfig { nu: nu.clone(), theta, n: 0, seed: 0 };
        let mut rng = stream(derive_seed(SEED, "c7"), &format!("theta{theta}"));
        let w = gumbel_log_uniforms(3, theta, 10_000_000, &mut rng);
        let (mut mes, mut dcte) = (Vec::new(), Vec::new());
        for r in w.rows() {
            if r[1] <= wa && r[2] <= wa {
                let x = t.quantile_sf(-(-r[j]).exp_m1());
                mes.push(x);
                if r[j] <= wa {
                    dcte.push(x);
                }
            }
        }
        let refs = [
            ("MES", &mes, mes_reference(&cfg, alpha, j).expect("reference").value),
            ("DCTE", &dcte, dcte_reference(&cfg, alpha, j).expect("reference").value),
        ];
        for (name, draws, reference) in refs {
            let se = sd(draws) / (draws.len() as f64).sqrt();
            let z = (mean(draws) - reference) / se;
            pass &= z.abs() < 3.0;
            parts.push(format!(
                "theta {theta} {name}: quad {reference:.3} vs MC {:.3} (SE {se:.3}, z {z:+.2})",
                mean(draws)
            ));
        }
    }
    Outcome { pass, detail: parts.join("; ") }
}

fn c8_conditional_expectation() -> Outcome {
    let cfg = MuExperimentConfig { seed: SEED, ..Default::default() };
    let rows = run_mu_experiment(&cfg).expect("mu experiment");
    let mut pass = true;
    let mut parts = Vec::new();
    for p in &cfg.points {
        let (cs, lr) = mu_mean_abs_errors(&rows, *p);
        let checked = matches!(p, ConditioningPoint::Max)
            || matches!(p, ConditioningPoint::Quantile(q) if *q == 0.99);
        if checked {
            pass &= cs < lr;
        }
        parts.push(format!(
            "{p}: MAE conditional simulation {cs:.3} vs regression {lr:.3}{}",
            if checked { "" } else { " (not scored)" }
        ));
    }
    Outcome { pass, detail: parts.join("; ") }
}

fn c9_copula_sanity() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (theta, lo, hi) in [(1.0, -0.02, 0.02), (2.0, 0.48, 0.52)] {
        let x = gumbel_sample(&SynthConfig {
            nu: vec![2.0, 3.0, 2.5],
            theta,
            n: 10_000,
            seed: derive_seed(SEED, "c9"),
        })
        .expect("sample");
        let mut taus = Vec::new();
        for a in 0..3 {
            for b in a + 1..3 {
                taus.push(kendall_tau(&x.column(a).to_vec(), &x.column(b).to_vec()));
            }
        }
        pass &= taus.iter().all(|t| (lo..=hi).contains(t));
        parts.push(format!("theta {theta}: tau {:.4?} in [{lo}, {hi}]", taus));
    }
    Outcome { pass, detail: parts.join("; ") }
}

fn c10_round_trip_and_determinism() -> Outcome {
    // Round trip on exceedance rows with Student-t margins.
    let cfg = SynthConfig { nu: vec![2.0, 3.0, 2.5], theta: 2.6, n: 1500, seed: SEED };
    let x = gumbel_sample(&cfg).expect("sample");
    let models: Vec<MarginModel> = vec![
        MarginModel::student_t(2.0, 0.1, 1.5).unwrap(),
        MarginModel::student_t(3.0, -0.2, 0.8).unwrap(),
        MarginModel::student_t(2.5, 0.0, 1.0).unwrap(),
    ];
    let exp = margins::to_exponential(x.view(), &models).unwrap();
    let u = margins::select_threshold(&exp, 0.95).unwrap();
    let rows = margins::exceedance_rows(exp.data.view(), &u);
    let z = margins::extract_excesses(&exp, &u).unwrap();
    let back = margins::back_transform(z.data.view(), &u, &models).unwrap();
    let mut worst: f64 = 0.0;
    for (i, &r) in rows.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (back[[i, k]], x[[r, k]]);
            worst = worst.max(((a - b) / b).abs());
        }
    }

    // Byte-identical reruns through the command line, across thread counts.
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n).to_string_lossy().into_owned();
    let cfg_path = p("exp.json");
    std::fs::write(&cfg_path, r#"{"thetas": [2.6], "alphas": [0.999], "r_orig": 3, "r_sim": 3, "m": 2000}"#)
        .unwrap();
    let run = |args: &[&str]| {
        std::process::Command::new(env!("CARGO_BIN_EXE_extremesim"))
            .args(args)
            .output()
            .expect("binary runs")
            .status
            .code()
            .unwrap_or(-1)
    };
    let runs = [("a", "1"), ("b", "1"), ("c", "3")];
    let mut codes = Vec::new();
    for (tag, threads) in runs {
        let data = p(&format!("d_{tag}.csv"));
        let exc = p(&format!("z_{tag}.csv"));
        codes.push(run(&[
            "synth", "--nu", "2,3,2.5", "--theta", "2.6", "--n", "1500", "-o", &data,
        ]));
        codes.push(run(&["fit", "-i", &data, "-o", &p(&format!("m_{tag}.json"))]));
        codes.push(run(&[
            "transform", "-i", &data, "--margins", &p(&format!("m_{tag}.json")), "-o", &exc,
        ]));
        codes.push(run(&[
            "simulate-joint", "-i", &exc, "-o", &p(&format!("s_{tag}.csv")),
        ]));
        codes.push(run(&[
            "simulate-cond", "-i", &exc, "--j", "2", "--given", "0.54,0.31", "-o",
            &p(&format!("c_{tag}.csv")),
        ]));
        codes.push(run(&[
            "experiment", "--config", &cfg_path, "--threads", threads, "-o",
            &p(&format!("e_{tag}.csv")),
        ]));
    }
    let read = |n: String| std::fs::read(n).unwrap();
    let identical = ["d", "m", "z", "s", "c", "e"].iter().all(|f| {
        let ext = if *f == "m" { "json" } else { "csv" };
        let a = read(p(&format!("{f}_a.{ext}")));
        a == read(p(&format!("{f}_b.{ext}"))) && a == read(p(&format!("{f}_c.{ext}")))
    });
    let codes_ok = codes.iter().all(|&c| c == 0);
    Outcome {
        pass: worst < 1e-8 && identical && codes_ok,
        detail: format!(
            "round-trip max relative error {worst:.2e} (< 1e-8); reruns byte-identical: {identical}; exit codes ok: {codes_ok}"
        ),
    }
}

fn main() {
    let s = Duration::from_secs;
    let results = [
        report(1, "joint-simulation marginal fidelity", Some(s(30)), c1_marginal_fidelity),
        report(2, "max-component law", Some(s(30)), c2_max_law),
        report(3, "conditional density match", Some(s(180)), c3_conditional_density),
        report(4, "exceedance counts", None, c4_exceedance_counts),
        report(5, "TRM error contraction", None, c5_error_contraction),
        report(6, "closed-form ES oracle", Some(s(1)), c6_closed_form_es),
        report(7, "MES/DCTE quadrature oracles", Some(s(120)), c7_lemma_oracles),
        report(8, "conditional expectation vs regression", None, c8_conditional_expectation),
        report(9, "copula sanity", Some(s(10)), c9_copula_sanity),
        report(10, "round trip and determinism", None, c10_round_trip_and_determinism),
    ];
    let failed = results.iter().filter(|&&p| !p).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
