//! Statistical evaluation of quantum-tomography testers.
//!
//! A *tester* is the POVM used in a tomography experiment. For a true state
//! `s` (generalized Bloch vector) and a loss `Δ`, the crate computes the
//! Fisher matrix `F_s`, the same-point Hessian `H_s` of the loss, and the
//! modified information matrix `G_s = √H_s F_s⁻¹ √H_s`. The largest
//! eigenvalue of `G_s` sets the exponential decay rate of the error
//! probability `P(Δ(ŝ_N, s) > ε²) ≈ exp(-ε² N / σ₁(G_s))`, and its trace
//! sets the risk `E[Δ] ≈ tr G_s / 2N` of an efficient estimator.
//!
//! The [`montecarlo`] module checks both predictions by simulating
//! tomography with maximum-likelihood reconstruction.

pub mod cli;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod loss;
pub mod montecarlo;
pub mod qstate;
pub mod rates;
pub mod tester;

pub use error::{Result, TomoError};

pub use loss::{hessian_sqrt, HesseMatrix, LossKind, LossSpec, ScalarFunctional};

pub use montecarlo::{DecayRecord, EstimatorKind, Experiment, ExperimentConfig, RiskTable};
pub use qstate::{BlochState, GeneratorBasis, HermitianMatrix};
pub use estimators::{linear_estimate, mle_estimate, Estimate, EstimateMethod, Frequencies};
pub use rates::{g_matrix, pseudo_inverse, rate_report, RateReport};
pub use tester::{FisherMatrix, ProbabilityVector, Tester};
