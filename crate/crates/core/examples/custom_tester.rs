//! Load a tester from JSON, write it back, and evaluate a qutrit tester.
//!
//! cargo run --example custom_tester

use tomobench::tester::{z_projective, Tester};
use tomobench::{rate_report, BlochState, LossSpec};

const TRINE_PLUS_Z: &str = r#"{
  "dim": 2,
  "elements": [
    {"re": [[0.25, 0.0], [0.0, 0.0]]},
    {"re": [[0.0, 0.0], [0.0, 0.25]]},
    {"re": [[0.25, 0.25], [0.25, 0.25]]},
    {"re": [[0.25, -0.125], [-0.125, 0.25]], "im": [[0.0, -0.21650635094610965], [0.21650635094610965, 0.0]]},
    {"re": [[0.25, -0.125], [-0.125, 0.25]], "im": [[0.0, 0.21650635094610965], [-0.21650635094610965, 0.0]]}
  ]
}"#;

fn main() -> tomobench::Result<()> {
    let t = Tester::from_json(TRINE_PLUS_Z)?;
    let s = BlochState::qubit(0.1, 0.2, -0.3)?;
    let (complete, rank) = t.informational_completeness();
    println!("trine + z: {} outcomes, complete {complete}, rank {rank}", t.num_outcomes());
    println!("  probabilities {:?}", t.probabilities(&s)?.0);
    let r = rate_report(&t, &s, &LossSpec::hilbert_schmidt(2))?;
    println!("  HS: sigma1 {:.4}, tr G {:.4}", r.sigma1, r.trace_g);

    println!("z-projective as JSON:\n{}", serde_json::to_string(&z_projective().to_json())?);

    match Tester::from_json(r#"{"dim": 2, "elements": [{"re": [[1, 0], [0, 0.5]]}]}"#) {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => println!("accepted an incomplete POVM"),
    }

    // Qutrit HS and fidelity Hessians come from finite differences.
    let t3 = qutrit_tester()?;
    let s3 = BlochState::new(3, vec![0.1, 0.0, -0.05, 0.0, 0.02, 0.0, 0.1, -0.05])?;
    for loss in [LossSpec::hilbert_schmidt(3), LossSpec::fidelity(3), LossSpec::kl(&t3)] {
        let r = rate_report(&t3, &s3, &loss)?;
        println!("qutrit {:<9} sigma1 {:.4} tr G {:.4}", loss.name(), r.sigma1, r.trace_g);
    }
    Ok(())
}

/// The four mutually unbiased qutrit bases, each measured with probability 1/4.
fn qutrit_tester() -> tomobench::Result<Tester> {
    use nalgebra::{DMatrix, DVector};
    use num_complex::Complex64;
    let w = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
    let mut elements = Vec::new();
    for b in 0..4usize {
        for k in 0..3usize {
            let v = if b == 0 {
                DVector::from_fn(3, |i, _| if i == k { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) })
            } else {
                DVector::from_fn(3, |i, _| w.powu((k * i + (b - 1) * i * i) as u32) / 3f64.sqrt())
            };
            let m: DMatrix<Complex64> = &v * v.adjoint() * Complex64::new(0.25, 0.0);
            elements.push(tomobench::HermitianMatrix::new((&m + m.adjoint()) * Complex64::new(0.5, 0.0))?);
        }
    }
    Tester::new(elements)
}
