//! Joint simulation of threshold excesses and extrapolation past the data.
//!
//! `cargo run --release --example joint_simulation`

use extremesim::benchmarks::{gumbel_sample, SynthConfig};
use extremesim::joint::{simulate_pipeline, JointSimConfig};

fn main() -> extremesim::Result<()> {
    let cfg = SynthConfig { nu: vec![2.0, 3.0, 2.5], theta: 2.6, n: 1500, seed: 5 };
    let x = gumbel_sample(&cfg)?;
    let run = simulate_pipeline(
        x.view(),
        &cfg.margins(),
        0.85,
        &JointSimConfig { m: 10_000, q: 0, seed: 6 },
    )?;
    println!("{} excess rows, {} simulated", run.excesses.n(), run.simulated.n());
    let max = |v: ndarray::ArrayView1<f64>| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for k in 0..x.ncols() {
        let data_max = max(x.column(k));
        let beyond = run.original_scale.column(k).iter().filter(|&&v| v > data_max).count();
        println!(
            "X{}: data max {:8.2}, simulated max {:10.2}, {beyond} draws beyond the data",
            k + 1,
            data_max,
            max(run.original_scale.column(k)),
        );
    }
    Ok(())
}
