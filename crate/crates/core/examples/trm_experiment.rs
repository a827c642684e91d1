//! Replicated tail risk metric experiment on Gumbel/Student-t data.
//!
//! `cargo run --release --example trm_experiment -- [theta] [alpha] [r_orig] [r_sim]`

use extremesim::benchmarks::{run_trm_experiment, ExperimentConfig};

fn main() -> extremesim::Result<()> {
    let args: Vec<f64> = std::env::args()
        .skip(1)
        .map(|a| a.parse().expect("numeric argument"))
        .collect();
    let get = |i: usize, d: f64| args.get(i).copied().unwrap_or(d);
    let cfg = ExperimentConfig {
        thetas: vec![get(0, 1.3)],
        alphas: vec![get(1, 0.9975)],
        r_orig: get(2, 10.0) as usize,
        r_sim: get(3, 10.0) as usize,
        ..Default::default()
    };
    let res = run_trm_experiment(&cfg)?;
    for (theta, r) in &res.references {
        println!("reference theta={theta} {:?} alpha={} value={:.4}", r.metric, r.alpha, r.value);
    }
    println!("scope metric  n_exceed(mean sd)  sufficient  median_rel_err  iqr_rel_err");
    for s in res.summary() {
        println!(
            "{:<5} {:<5} {:>8.1} ({:>4.1})  {:>8.2}  {:>12}  {:>10}",
            s.scope.to_string(),
            format!("{:?}", s.metric),
            s.mean_n_exceed,
            s.sd_n_exceed,
            s.frac_sufficient,
            s.median_rel_error.map_or("NA".into(), |v| format!("{v:.4}")),
            s.iqr_rel_error.map_or("NA".into(), |v| format!("{v:.4}")),
        );
    }
    Ok(())
}
