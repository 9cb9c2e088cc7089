//! How tr G and σ₁(G) vary over the sphere of radius 0.7, HS vs fidelity.
//!
//! cargo run --example loss_landscape

use tomobench::montecarlo::angular_sweep;
use tomobench::tester::six_state_povm;
use tomobench::LossSpec;

fn main() -> tomobench::Result<()> {
    let t = six_state_povm();
    for loss in [LossSpec::hilbert_schmidt(2), LossSpec::fidelity(2)] {
        let rows = angular_sweep(&t, 0.7, &loss, 7, 9)?;
        println!("loss = {}", loss.name());
        for field in ["tr_g", "sigma1_g"] {
            println!("  {field} (rows: theta 0..pi, columns: phi 0..2pi)");
            for line in rows.chunks(9) {
                let cells: Vec<String> = line
                    .iter()
                    .map(|r| format!("{:6.3}", if field == "tr_g" { r.tr_g } else { r.sigma1_g }))
                    .collect();
                println!("  {}", cells.join(" "));
            }
        }
        let (lo, hi) = rows
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r.sigma1_g), hi.max(r.sigma1_g)));
        println!("  sigma1 range [{lo:.4}, {hi:.4}]\n");
    }
    Ok(())
}
