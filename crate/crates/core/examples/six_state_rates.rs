//! Rate report for the six-state tester under each built-in loss.
//!
//! cargo run --example six_state_rates

use tomobench::tester::six_state_povm;
use tomobench::{rate_report, BlochState, LossSpec};

fn main() -> tomobench::Result<()> {
    let t = six_state_povm();
    let states = [
        ("mixed", BlochState::maximally_mixed(2)?),
        ("z 0.7", BlochState::qubit(0.0, 0.0, 0.7)?),
        ("diag 0.7", BlochState::qubit_polar(0.7, 0.9553166181245093, std::f64::consts::FRAC_PI_4)?),
        ("near pure", BlochState::qubit(0.0, 0.6, 0.79)?),
    ];
    let losses = [
        LossSpec::hilbert_schmidt(2),
        LossSpec::trace(2),
        LossSpec::fidelity(2),
        LossSpec::kl(&t),
        LossSpec::euclidean(2),
    ];

    println!("{:<10} {:<10} {:>10} {:>10} {:>12} {:>10}", "state", "loss", "sigma1", "tr G", "1/sigma1", "risk");
    for (label, s) in &states {
        for loss in &losses {
            let r = rate_report(&t, s, loss)?;
            println!(
                "{label:<10} {:<10} {:>10.5} {:>10.5} {:>12.5} {:>10.5}",
                loss.name(),
                r.sigma1,
                r.trace_g,
                r.error_rate_bound,
                r.risk_rate
            );
        }
    }

    // P(Δ > ε²) decays no faster than exp(-N ε² / σ₁).
    let r = rate_report(&t, &states[1].1, &losses[0])?;
    for n in [100, 1000, 10_000] {
        println!("N = {n:>5}: error-probability exponent bound {:.3} at eps^2 = 0.01", n as f64 * 0.01 * r.error_rate_bound);
    }
    Ok(())
}
