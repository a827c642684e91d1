//! Extremal dependence coefficient chi(alpha) for weak and strong dependence.
//!
//! `cargo run --release --example chi_curve`

use extremesim::benchmarks::chi::linear_grid;
use extremesim::benchmarks::{chi_measure, gumbel_sample, SynthConfig};

fn main() -> extremesim::Result<()> {
    let grid = linear_grid(0.8, 0.99, 8);
    let curves = [1.3, 2.6, 7.3]
        .iter()
        .map(|&theta| {
            let cfg = SynthConfig { nu: vec![2.0, 3.0, 2.5], theta, n: 20_000, seed: 11 };
            chi_measure(gumbel_sample(&cfg)?.view(), &grid)
        })
        .collect::<extremesim::Result<Vec<_>>>()?;
    println!("alpha    theta=1.3  theta=2.6  theta=7.3");
    for (i, a) in grid.iter().enumerate() {
        println!("{a:.4}   {:9.4}  {:9.4}  {:9.4}", curves[0][i].1, curves[1][i].1, curves[2][i].1);
    }
    Ok(())
}
