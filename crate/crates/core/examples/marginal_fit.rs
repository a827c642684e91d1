//! Fit Student-t margins, move to the exponential scale and extract excesses.
//!
//! `cargo run --release --example marginal_fit`

use extremesim::benchmarks::{gumbel_sample, SynthConfig};
use extremesim::margins::{self, MarginKind, MarginModel};
use extremesim::mgp::check_positive_margin;

fn main() -> extremesim::Result<()> {
    let cfg = SynthConfig { nu: vec![2.0, 3.0, 2.5], theta: 2.6, n: 1500, seed: 1 };
    let x = gumbel_sample(&cfg)?;
    let models = margins::fit_margins(x.view(), MarginKind::StudentT)?;
    for (k, m) in models.iter().enumerate() {
        if let MarginModel::StudentT { df, loc, scale } = m {
            println!("X{}: df={df:.2} (true {}) loc={loc:.3} scale={scale:.3}", k + 1, cfg.nu[k]);
        }
    }
    let exp = margins::to_exponential(x.view(), &models)?;
    let u = margins::select_threshold(&exp, 0.95)?;
    let z = margins::extract_excesses(&exp, &u)?;
    println!("thresholds on the exponential scale: {:?}", u.u);
    println!("{} of {} rows exceed in at least one component", z.n(), cfg.n);
    for k in 0..z.d() {
        let ks = check_positive_margin(z.data.column(k))?;
        println!("X{}: positive part vs Exp(1), KS p = {:.3}", k + 1, ks.p_value);
    }
    Ok(())
}
