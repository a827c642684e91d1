//! Repeated simulation from an observed data set read from CSV.
//!
//! `cargo run --release --example real_data_pipeline -- [data.csv]`
//!
//! Without an argument a synthetic data set is written to a temporary file
//! and used instead.

use extremesim::benchmarks::experiment::{run_data_experiment, DataExperimentConfig};
use extremesim::benchmarks::{gumbel_sample, Scope, SynthConfig};
use extremesim::io;
use extremesim::stats::{mean, sd};
use std::path::PathBuf;

fn main() -> extremesim::Result<()> {
    let dir = tempfile::tempdir()?;
    let path = match std::env::args().nth(1) {
        Some(p) => PathBuf::from(p),
        None => {
            let p = dir.path().join("data.csv");
            let x = gumbel_sample(&SynthConfig { nu: vec![2.0, 3.0, 2.5], theta: 2.6, n: 1500, seed: 12 })?;
            io::write_matrix(&p, &io::default_headers(3), x.view())?;
            p
        }
    };
    let table = io::read_matrix(&path)?;
    let cfg = DataExperimentConfig { r_sim: 20, targets: vec![0], ..Default::default() };
    let (rows, fit) = run_data_experiment(table.data.view(), &cfg)?;
    println!("{} excess rows above {:?}", fit.excesses.n(), fit.threshold.u);
    for &alpha in &cfg.alphas {
        for scope in [Scope::Orig, Scope::Simu] {
            let sel: Vec<_> = rows.iter().filter(|r| r.alpha == alpha && r.scope == scope).collect();
            for metric in ["ES", "MES", "DCTE"] {
                let vals: Vec<f64> = sel
                    .iter()
                    .filter(|r| r.estimate.metric.to_string() == metric)
                    .filter_map(|r| r.estimate.value)
                    .collect();
                if vals.is_empty() {
                    println!("alpha {alpha} {scope} {metric}: NA");
                } else {
                    println!("alpha {alpha} {scope} {metric}: {:.3} (sd {:.3}, {} values)", mean(&vals), sd(&vals), vals.len());
                }
            }
        }
    }
    Ok(())
}
