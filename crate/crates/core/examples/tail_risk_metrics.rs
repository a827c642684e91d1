//! ES, MES and DCTE on one data set, one simulated sample and their union,
//! next to the exact values of the generating model.
//!
//! `cargo run --release --example tail_risk_metrics -- [alpha]`

use extremesim::benchmarks::{
    dcte_reference, es_student_closed, gumbel_sample, mes_reference, SynthConfig,
};
use extremesim::joint::{simulate_original_scale, JointSimConfig};
use extremesim::risk::{self, dcte_empirical, es_empirical, mes_empirical, VarSpec};
use ndarray::{concatenate, Axis};

fn main() -> extremesim::Result<()> {
    let alpha: f64 = std::env::args().nth(1).map_or(0.999, |a| a.parse().expect("alpha"));
    let cfg = SynthConfig { nu: vec![2.0, 3.0, 2.5], theta: 2.6, n: 1500, seed: 9 };
    let models = cfg.margins();
    let x = gumbel_sample(&cfg)?;
    let sim = simulate_original_scale(x.view(), &models, 0.85, &JointSimConfig { m: 10_000, q: 0, seed: 10 })?;
    let ext = concatenate(Axis(0), &[x.view(), sim.view()]).expect("equal widths");
    let v = models
        .iter()
        .map(|m| risk::var(&[], &VarSpec::theoretical(m.clone(), alpha)))
        .collect::<extremesim::Result<Vec<f64>>>()?;
    let j = 0;
    println!(
        "exact: ES {:.3}  MES {:.3}  DCTE {:.3}",
        es_student_closed(cfg.nu[j], alpha)?.value,
        mes_reference(&cfg, alpha, j)?.value,
        dcte_reference(&cfg, alpha, j)?.value,
    );
    for (scope, data) in [("Orig", x.view()), ("Simu", sim.view()), ("Ext", ext.view())] {
        let col = data.column(j).to_vec();
        let est = [es_empirical(&col, v[j]), mes_empirical(data, j, &v)?, dcte_empirical(data, j, &v)?];
        print!("{scope:<5}");
        for e in est {
            let val = e.value.map_or("NA".to_string(), |v| format!("{v:.3}"));
            print!("  {}: {val} (n={})", e.metric, e.n_exceed);
        }
        println!();
    }
    Ok(())
}
