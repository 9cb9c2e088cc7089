//! Direct evaluation of the large-deviation rate R_ε by constrained KL
//! minimisation, against its small-ε limit ε²/σ₁(G).
//!
//! cargo run --release --example rate_oracle

use tomobench::rates::{kl_infimum_oracle, rayleigh_identity_check};
use tomobench::tester::six_state_povm;
use tomobench::{rate_report, BlochState, LossSpec};

fn main() -> tomobench::Result<()> {
    let t = six_state_povm();
    for (label, s) in [("s = 0", BlochState::maximally_mixed(2)?), ("s = (0.5,0.3,0)", BlochState::qubit(0.5, 0.3, 0.0)?)] {
        for loss in [LossSpec::hilbert_schmidt(2), LossSpec::fidelity(2)] {
            let limit = rate_report(&t, &s, &loss)?.error_rate_bound;
            println!("{label}, {}: 1/sigma1 = {limit:.6}", loss.name());
            for eps_sq in [1e-2, 1e-3, 1e-4] {
                let r = kl_infimum_oracle(&t, &s, &loss, eps_sq)?;
                println!("  eps^2 = {eps_sq:.0e}  R/eps^2 = {:.6}  gap {:+.2e}", r / eps_sq, r / eps_sq - limit);
            }
        }
    }

    // The same limit as a generalized Rayleigh quotient of F and H.
    let s = BlochState::qubit(0.5, 0.3, 0.0)?;
    let loss = LossSpec::fidelity(2);
    let check = rayleigh_identity_check(&t.fisher_matrix(&s)?.0, &loss.same_point_hessian(&s)?.0, 20_000, 1)?;
    println!("inf a.Fa / a.Ha = {:.8}, 1/sigma1(G) = {:.8}", check.lhs_min, check.rhs);
    Ok(())
}
