//! Monte Carlo error probability and risk for the six-state tester.
//!
//! cargo run --release --example decay_simulation

use tomobench::montecarlo::run_experiment;
use tomobench::tester::six_state_povm;
use tomobench::{BlochState, EstimatorKind, ExperimentConfig, LossSpec};

fn main() -> tomobench::Result<()> {
    let cfg = ExperimentConfig {
        tester: six_state_povm(),
        state: BlochState::maximally_mixed(2)?,
        loss: LossSpec::hilbert_schmidt(2),
        eps_sq: 0.01,
        n_values: (1..=10).map(|i| 200 * i).collect(),
        repetitions: 10_000,
        seed: 2024,
    };
    for est in [EstimatorKind::Mle, EstimatorKind::Linear] {
        let e = run_experiment(&cfg, est, None)?;
        println!("estimator {est:?}, sigma1 = {}", e.sigma1);
        println!("{:>6} {:>8} {:>10} {:>22} {:>10}", "N", "exceed", "p_hat", "wilson 95%", "N*risk");
        for (p, r) in e.decay.points.iter().zip(&e.risk.rows) {
            println!(
                "{:>6} {:>8} {:>10.2e} [{:>9.2e}, {:>9.2e}] {:>10.4}{}",
                p.n,
                p.exceedances,
                p.p_hat,
                p.wilson_lo,
                p.wilson_hi,
                r.n_times_mean,
                if p.used_in_fit { "" } else { "  (not fitted)" }
            );
        }
        match (e.decay.slope, e.decay.ratio) {
            (Some(slope), Some(ratio)) => println!(
                "slope {slope:.5}, theory {:.5}, ratio {ratio:.3}; risk theory {:.4}\n",
                e.decay.theory_slope, e.risk.theory
            ),
            _ => println!("no slope: {:?}\n", e.decay.note),
        }
    }
    Ok(())
}
