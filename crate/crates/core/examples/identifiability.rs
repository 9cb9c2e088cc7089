//! Informational completeness, Fisher rank, and what happens when a loss
//! cares about a direction the tester cannot see.
//!
//! cargo run --example identifiability

use nalgebra::DMatrix;
use num_complex::Complex64;
use tomobench::tester::{parameter_count, six_state_povm, z_projective, TomographyKind};
use tomobench::{rate_report, BlochState, HermitianMatrix, LossSpec, ScalarFunctional, Tester};

/// Tetrahedral (SIC) qubit POVM: the minimal informationally complete tester.
fn tetrahedron() -> tomobench::Result<Tester> {
    let dirs = [
        [0.0, 0.0, 1.0],
        [2f64.sqrt() * 2.0 / 3.0, 0.0, -1.0 / 3.0],
        [-(2f64.sqrt()) / 3.0, (2.0f64 / 3.0).sqrt(), -1.0 / 3.0],
        [-(2f64.sqrt()) / 3.0, -(2.0f64 / 3.0).sqrt(), -1.0 / 3.0],
    ];
    let c = |re: f64, im: f64| Complex64::new(re / 4.0, im / 4.0);
    let elements = dirs
        .iter()
        .map(|[x, y, z]| HermitianMatrix::new(DMatrix::from_row_slice(2, 2, &[c(1.0 + z, 0.0), c(*x, -y), c(*x, *y), c(1.0 - z, 0.0)])))
        .collect::<tomobench::Result<Vec<_>>>()?;
    Tester::new(elements)
}

fn main() -> tomobench::Result<()> {
    let s = BlochState::qubit(0.2, -0.1, 0.3)?;
    for (name, t) in [("six-state", six_state_povm()), ("tetrahedron", tetrahedron()?), ("z-projective", z_projective())] {
        let (complete, rank) = t.informational_completeness();
        let f = t.fisher_matrix(&s)?;
        println!("{name:<13} outcomes {} complete {complete:<5} w-rank {rank} Fisher rank {}", t.num_outcomes(), f.rank());
    }

    // z-projective sees only s_z: fine for a functional of s_z, not for HS.
    let t = z_projective();
    let g = LossSpec::scalar_functional(ScalarFunctional::coordinate(2, 3), 2);
    println!("z-projective, g = s3: 1/sigma1 = {:.4}", rate_report(&t, &s, &g)?.error_rate_bound);
    match rate_report(&t, &s, &LossSpec::hilbert_schmidt(2)) {
        Err(e) => println!("z-projective, HS loss: {e} (exit code {})", e.exit_code()),
        Ok(r) => println!("unexpected rate {}", r.sigma1),
    }

    println!("parameters to estimate for d = 2:");
    for kind in ["state", "process", "povm", "instrument"] {
        let k: TomographyKind = kind.parse()?;
        println!("  {kind:<10} {}", parameter_count(k, 2, 6)?);
    }
    Ok(())
}
