//! Linear-inversion and maximum-likelihood reconstruction.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Result, TomoError};
use crate::linalg::{self, hermitian_eigen};
use crate::loss::kl_divergence;
use crate::qstate::{is_physical, GeneratorBasis, HermitianMatrix};
use crate::tester::{Tester, RANK_TOL};

/// Outcome counts from `N` trials.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Frequencies {
    counts: Vec<u64>,
    total: u64,
}

impl Frequencies {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(TomoError::validation("total", "no trials recorded"));
        }
        Ok(Self { counts, total })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// `f_N(x) = N_x / N`.
    pub fn relative(&self) -> Vec<f64> {
        let n = self.total as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimateMethod {
    Linear,
    Mle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub s_hat: Vec<f64>,
    /// `ρ(s_hat)` is positive semidefinite.
    pub physical: bool,
    pub method: EstimateMethod,
    pub iterations: usize,
    /// `K(f ‖ p_{s_hat})`; infinite when `p_{s_hat}` misses observed outcomes.
    pub kl: f64,
    /// Linear only: `Tr[ρ Π_x] = f(x)` is solved exactly (zero residual).
    pub consistent: bool,
    /// The tester is not informationally complete; the minimum-norm optimum
    /// is returned.
    pub non_unique: bool,
}

fn relative_checked(t: &Tester, q: &[f64]) -> Result<()> {
    check_dim(t.num_outcomes(), q.len())?;
    let sum: f64 = q.iter().sum();
    if q.iter().any(|&x| x < 0.0 || !x.is_finite()) || (sum - 1.0).abs() > 1e-10 {
        return Err(TomoError::validation(
            "frequencies",
            "relative frequencies must be nonnegative and sum to 1",
        ));
    }
    Ok(())
}

/// Least-squares solution of `v + W s = f` (minimum norm when `W` is rank
/// deficient). Unphysical solutions are flagged, not rejected.
pub fn linear_estimate(t: &Tester, f: &Frequencies) -> Result<Estimate> {
    linear_estimate_from_relative(t, &f.relative())
}

pub fn linear_estimate_from_relative(t: &Tester, q: &[f64]) -> Result<Estimate> {
    relative_checked(t, q)?;
    let w = t.w_matrix();
    let rhs = DVector::from_iterator(q.len(), q.iter().zip(t.v()).map(|(f, v)| f - v));
    let svd = w.clone().svd(true, true);
    let cut = RANK_TOL * svd.singular_values.max();
    let s = svd
        .solve(&rhs, cut)
        .map_err(|e| TomoError::validation("linear_solve", e))?;
    let s_hat: Vec<f64> = s.iter().copied().collect();
    let residual = (&w * &s - &rhs).amax();
    let physical = is_physical(t.dim(), &s_hat);
    let p = t.probs_raw(&s_hat);
    let kl = if p.iter().all(|&x| x >= 0.0) {
        kl_divergence(q, &p)
    } else {
        f64::INFINITY
    };
    let (complete, _) = t.informational_completeness();
    Ok(Estimate {
        s_hat,
        physical,
        method: EstimateMethod::Linear,
        iterations: 0,
        kl,
        consistent: residual < 1e-10,
        non_unique: !complete,
    })
}

/// Stopping and step controls for the projected-gradient MLE.
#[derive(Debug, Clone, Copy)]
pub struct MleOptions {
    pub max_iterations: usize,
    /// Stop once the objective improves by less than this.
    pub min_improvement: f64,
    /// Stop once the projected gradient `P(s − ∇) − s` is this small (sup norm).
    pub step_tol: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            max_iterations: 5000,
            min_improvement: 1e-16,
            step_tol: 1e-11,
        }
    }
}

/// Maximizes the likelihood over the state set, i.e. minimizes `K(f ‖ p_s)`.
pub fn mle_estimate(t: &Tester, f: &Frequencies) -> Result<Estimate> {
    mle_estimate_from_relative(t, &f.relative())
}

pub fn mle_estimate_from_relative(t: &Tester, q: &[f64]) -> Result<Estimate> {
    relative_checked(t, q)?;
    let fit = mle_fit(t, q, MleOptions::default())?;
    if !fit.converged {
        return Err(TomoError::NonConvergence {
            iterations: fit.estimate.iterations,
            objective: fit.estimate.kl,
        });
    }
    Ok(fit.estimate)
}

pub(crate) struct MleFit {
    pub estimate: Estimate,
    pub converged: bool,
}

/// Spectral projected gradient (Barzilai–Borwein step, monotone Armijo
/// backtracking) on `K(q ‖ p_s)`.
pub(crate) fn mle_fit(t: &Tester, q: &[f64], opts: MleOptions) -> Result<MleFit> {
    let dim = t.dim();
    let k = t.k();
    let (complete, _) = t.informational_completeness();
    let objective = |s: &[f64]| kl_divergence(q, &t.probs_raw(s));
    let gradient = |s: &[f64]| -> Vec<f64> {
        let p = t.probs_raw(s);
        let mut g = vec![0.0; k];
        for ((qx, px), w) in q.iter().zip(&p).zip(t.w()) {
            if *qx > 0.0 {
                let c = qx / px;
                for (ga, wa) in g.iter_mut().zip(w) {
                    *ga -= c * wa;
                }
            }
        }
        g
    };
    let basis = if dim > 2 { Some(GeneratorBasis::new(dim)?) } else { None };
    let project = |s: &[f64]| -> Vec<f64> { project_state(dim, basis.as_ref(), s) };

    let lin = linear_estimate_from_relative(t, q)?;
    let mut s = project(&lin.s_hat);
    let mut fs = objective(&s);
    if !fs.is_finite() || !lin.physical {
        // Pull toward the maximally mixed state until every observed outcome
        // has positive probability.
        let mut shrink = 0.9;
        let start = s.clone();
        loop {
            s = start.iter().map(|x| x * shrink).collect();
            fs = objective(&s);
            if fs.is_finite() || shrink < 1e-6 {
                break;
            }
            shrink *= 0.5;
        }
        if !fs.is_finite() {
            s = vec![0.0; k];
            fs = objective(&s);
        }
        if !fs.is_finite() {
            return Err(TomoError::validation(
                "frequencies",
                "observed outcome has zero probability for every state",
            ));
        }
    }

    let mut g = gradient(&s);
    let ginf = g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut lambda = if ginf > 0.0 { (1.0 / ginf).clamp(1e-10, 1e10) } else { 1.0 };
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iterations {
        iterations += 1;
        let stationarity = sup_norm_step(&project, &s, &g, 1.0);
        if stationarity < opts.step_tol {
            converged = true;
            break;
        }
        let trial: Vec<f64> = s.iter().zip(&g).map(|(x, gx)| x - lambda * gx).collect();
        let d: Vec<f64> = project(&trial).iter().zip(&s).map(|(p, x)| p - x).collect();
        let slope = linalg::dot(&g, &d);
        let mut alpha = 1.0;
        let mut next = None;
        for _ in 0..60 {
            let cand: Vec<f64> = s.iter().zip(&d).map(|(x, dx)| x + alpha * dx).collect();
            let fc = objective(&cand);
            if fc.is_finite() && fc <= fs + 1e-4 * alpha * slope {
                next = Some((cand, fc));
                break;
            }
            alpha *= 0.5;
        }
        let Some((s_new, f_new)) = next else {
            // No representable decrease left along the projected direction.
            converged = stationarity < 1e-7;
            break;
        };
        let g_new = gradient(&s_new);
        let sk: Vec<f64> = s_new.iter().zip(&s).map(|(a, b)| a - b).collect();
        let yk: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = linalg::dot(&sk, &yk);
        let step = sk.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        lambda = if sy > 0.0 {
            (linalg::norm_sq(&sk) / sy).clamp(1e-10, 1e10)
        } else {
            let ginf = g_new.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if ginf > 0.0 { (1.0 / ginf).clamp(1e-10, 1e10) } else { 1.0 }
        };
        let improvement = fs - f_new;
        s = s_new;
        fs = f_new;
        g = g_new;
        if improvement < opts.min_improvement && (alpha == 1.0 || step < opts.step_tol) {
            converged = true;
            break;
        }
    }

    if !complete {
        let rowspace = min_norm_projection(t, &s);
        if is_physical(dim, &rowspace) {
            s = rowspace;
            fs = objective(&s);
        }
    }
    Ok(MleFit {
        estimate: Estimate {
            physical: true,
            s_hat: s,
            method: EstimateMethod::Mle,
            iterations,
            kl: fs,
            consistent: true,
            non_unique: !complete,
        },
        converged,
    })
}

/// `‖P(s − λg) − s‖_∞`.
fn sup_norm_step(project: &impl Fn(&[f64]) -> Vec<f64>, s: &[f64], g: &[f64], lambda: f64) -> f64 {
    let trial: Vec<f64> = s.iter().zip(g).map(|(x, gx)| x - lambda * gx).collect();
    project(&trial)
        .iter()
        .zip(s)
        .fold(0.0f64, |m, (p, x)| m.max((p - x).abs()))
}

/// Component of `s` in the span of `{w_x}`; flat likelihood directions removed.
fn min_norm_projection(t: &Tester, s: &[f64]) -> Vec<f64> {
    let w = t.w_matrix();
    let p = linalg::range_projector(&(w.transpose() * &w), RANK_TOL);
    (p * DVector::from_column_slice(s)).iter().copied().collect()
}

/// Euclidean projection of a Bloch vector onto the state set. Qubits shrink
/// radially into the unit ball; larger dimensions project the spectrum of
/// `ρ(s)` onto the probability simplex.
pub(crate) fn project_state(dim: usize, basis: Option<&GeneratorBasis>, s: &[f64]) -> Vec<f64> {
    if dim == 2 {
        let r = linalg::norm_sq(s).sqrt();
        return if r > 1.0 { s.iter().map(|x| x / r).collect() } else { s.to_vec() };
    }
    let owned;
    let basis = match basis {
        Some(b) => b,
        None => {
            owned = GeneratorBasis::new(dim).expect("dim >= 2");
            &owned
        }
    };
    let rho = basis.density_raw(s);
    let (values, vectors) = hermitian_eigen(&rho);
    if values[0] >= 0.0 {
        return s.to_vec();
    }
    let clipped = simplex_projection(&values);
    let diag = DMatrix::from_diagonal(&DVector::from_iterator(
        dim,
        clipped.iter().map(|&l| Complex64::new(l, 0.0)),
    ));
    let projected = &vectors * diag * vectors.adjoint();
    let projected = (&projected + projected.adjoint()) * Complex64::new(0.5, 0.0);
    basis.coordinates(&HermitianMatrix::from_raw(projected))
}

/// Projection of `x` onto `{y ≥ 0, Σ y = 1}`.
fn simplex_projection(x: &[f64]) -> Vec<f64> {
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let t = (cumulative - 1.0) / (i + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    x.iter().map(|&v| (v - theta).max(0.0)).collect()
}
