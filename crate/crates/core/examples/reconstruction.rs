//! Linear inversion vs maximum likelihood on simulated counts.
//!
//! cargo run --example reconstruction

use tomobench::montecarlo::sample_outcomes;
use tomobench::qstate::hs_distance_sq;
use tomobench::tester::six_state_povm;
use tomobench::{linear_estimate, mle_estimate, BlochState, Frequencies};

fn main() -> tomobench::Result<()> {
    let t = six_state_povm();
    let truth = BlochState::qubit_polar(0.95, 0.4, 1.1)?;
    println!("truth {:?}", truth.coords());
    println!("{:>6} {:>30} {:>9} {:>30} {:>10} {:>5}", "N", "linear", "phys", "mle", "HS(mle)", "iter");
    for n in [10, 30, 100, 1000, 10_000] {
        let f = sample_outcomes(&t, &truth, n, 7)?;
        let lin = linear_estimate(&t, &f)?;
        let ml = mle_estimate(&t, &f)?;
        let err = hs_distance_sq(&BlochState::new(2, ml.s_hat.clone())?, &truth)?;
        println!(
            "{n:>6} {:>30} {:>9} {:>30} {err:>10.2e} {:>5}",
            fmt(&lin.s_hat),
            lin.physical,
            fmt(&ml.s_hat),
            ml.iterations
        );
    }

    // All counts on z-up: the linear estimate leaves the ball, the MLE sits on it.
    let f = Frequencies::new(vec![0, 0, 0, 0, 60, 0])?;
    println!("all z-up: linear {} mle {}", fmt(&linear_estimate(&t, &f)?.s_hat), fmt(&mle_estimate(&t, &f)?.s_hat));
    Ok(())
}

fn fmt(s: &[f64]) -> String {
    let parts: Vec<String> = s.iter().map(|x| format!("{x:+.4}")).collect();
    format!("({})", parts.join(", "))
}
