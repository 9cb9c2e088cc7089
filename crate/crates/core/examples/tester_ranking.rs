//! Ranking testers by expected, averaged and worst-case σ₁(G).
//!
//! cargo run --release --example tester_ranking

use tomobench::montecarlo::{average_performance, worst_case_performance, PointMass, UniformBall, WorstCaseGrid};
use tomobench::tester::{six_state_povm, Tester};
use tomobench::{BlochState, LossSpec};

/// Six-state tester with the z axis measured `bias` times as often.
fn biased(bias: f64) -> tomobench::Result<Tester> {
    let base = six_state_povm();
    let norm = 2.0 + bias;
    let weights = [1.0, 1.0, 1.0, 1.0, bias, bias].map(|w| 3.0 * w / norm);
    let elements = base
        .elements()
        .iter()
        .zip(weights)
        .map(|(e, w)| tomobench::HermitianMatrix::new(e.matrix() * num_complex::Complex64::new(w, 0.0)))
        .collect::<tomobench::Result<Vec<_>>>()?;
    Tester::new(elements)
}

fn main() -> tomobench::Result<()> {
    let loss = LossSpec::hilbert_schmidt(2);
    let grid = WorstCaseGrid::default();
    let expected = BlochState::maximally_mixed(2)?;
    println!("{:<12} {:>10} {:>16} {:>12}", "tester", "at s=0", "ball average", "worst case");
    for (name, t) in [("six-state", six_state_povm()), ("z x2", biased(2.0)?), ("z x0.5", biased(0.5)?)] {
        // A point mass at the expected state reduces to the plain rate report.
        let at_mean = average_performance(&t, &loss, &PointMass(expected.clone()), 1, 0)?.mean;
        let avg = average_performance(&t, &loss, &UniformBall::qubit(), 4000, 1)?;
        let worst = worst_case_performance(&t, &loss, &grid)?;
        println!("{name:<12} {at_mean:>10.4} {:>9.4} ± {:.4} {:>12.4}", avg.mean, avg.std_err, worst.value);
    }
    println!("smaller sigma1 means faster error-probability decay");
    Ok(())
}
