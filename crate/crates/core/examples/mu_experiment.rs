//! Conditional expectation of one component: conditional simulation against
//! a linear regression baseline.
//!
//! `cargo run --release --example mu_experiment -- [r_orig] [bandwidth]`

use extremesim::benchmarks::experiment::mu_mean_abs_errors;
use extremesim::benchmarks::{run_mu_experiment, MuExperimentConfig};
use extremesim::conditional::CandidatePool;

fn main() -> extremesim::Result<()> {
    let mut args = std::env::args().skip(1);
    let r_orig = args.next().map_or(10, |a| a.parse().expect("r_orig"));
    let pool = args.next().map_or(CandidatePool::Marginal, |a| CandidatePool::Kernel {
        bandwidth: a.parse().expect("bandwidth"),
    });
    let cfg = MuExperimentConfig { r_orig, pool, ..Default::default() };
    let rows = run_mu_experiment(&cfg)?;
    println!("point   mean |error| cond_sim   linreg");
    for &point in &cfg.points {
        let (cs, lr) = mu_mean_abs_errors(&rows, point);
        println!("{:<7} {cs:20.4} {lr:8.4}", point.to_string());
    }
    Ok(())
}
