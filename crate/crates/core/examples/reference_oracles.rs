//! Exact ES, MES and DCTE of the Gumbel/Student-t model.
//!
//! `cargo run --release --example reference_oracles`

use extremesim::benchmarks::reference::es_student_quadrature;
use extremesim::benchmarks::{dcte_reference, es_student_closed, mes_reference, SynthConfig};

fn main() -> extremesim::Result<()> {
    let nu = vec![2.0, 3.0, 2.5];
    for alpha in [0.9975, 0.999, 0.9997] {
        let closed = es_student_closed(nu[0], alpha)?.value;
        let quad = es_student_quadrature(nu[0], alpha)?.value;
        println!("alpha {alpha}: ES closed form {closed:.6}, quadrature {quad:.6}");
        for theta in [1.3, 2.6, 7.3] {
            let cfg = SynthConfig { nu: nu.clone(), theta, n: 0, seed: 0 };
            println!(
                "  theta {theta}: MES {:.4}  DCTE {:.4}",
                mes_reference(&cfg, alpha, 0)?.value,
                dcte_reference(&cfg, alpha, 0)?.value,
            );
        }
    }
    Ok(())
}
