//! Modified information matrix `G_s = √H_s F_s⁺ √H_s` and the decay rates
//! it controls: error probability `~ exp(-ε²N/σ₁(G))`, risk `~ tr G / 2N`.
//!
//! Two numerical oracles live here as well. [`rayleigh_identity_check`]
//! minimizes `a·Aa / a·Ba` by sampling and compares with `1/σ₁(√B A⁺ √B)`;
//! [`kl_infimum_oracle`] computes the large-deviation rate
//! `R(s) = inf { K(p_s' ‖ p_s) : Δ(s', s) > ε² }` directly, whose ratio
//! `R/ε²` tends to `1/σ₁(G)` as `ε → 0`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Result, TomoError};
use crate::linalg::{self, max_eigenvalue, pinv_sym, psd_sqrt, range_projector, symmetrize};
use crate::loss::{kl_divergence, LossSpec};
use crate::qstate::{is_physical, BlochState};
use crate::tester::Tester;

/// Relative eigenvalue cutoff for the Moore–Penrose inverse.
pub const PINV_CUTOFF: f64 = 1e-10;
const SUPPORT_TOL: f64 = 1e-9;

/// Moore–Penrose inverse of a symmetric matrix.
pub fn pseudo_inverse(a: &DMatrix<f64>) -> DMatrix<f64> {
    pinv_sym(a, PINV_CUTOFF)
}

/// Fails unless `supp(big) ⊇ supp(small)`.
fn check_support(big: &DMatrix<f64>, small: &DMatrix<f64>) -> Result<()> {
    let n = big.nrows();
    let complement = DMatrix::identity(n, n) - range_projector(big, PINV_CUTOFF);
    let leak = (&complement * small * &complement).amax();
    let scale = small.amax();
    if scale > 0.0 && leak > SUPPORT_TOL * scale {
        return Err(TomoError::SupportViolation(format!(
            "loss Hessian has weight {leak:e} outside the Fisher support"
        )));
    }
    Ok(())
}

/// `√H F⁺ √H`, symmetrized.
pub fn g_matrix(fisher: &DMatrix<f64>, hesse: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_dim(fisher.nrows(), hesse.nrows())?;
    check_support(fisher, hesse)?;
    let root = psd_sqrt(hesse, 1e-8)?;
    Ok(symmetrize(&(&root * pseudo_inverse(fisher) * &root)))
}

/// `tr[H F⁺] / 2`, computed without forming `G`.
pub fn risk_rate_direct(fisher: &DMatrix<f64>, hesse: &DMatrix<f64>) -> f64 {
    0.5 * (hesse * pseudo_inverse(fisher)).trace()
}

mod row_major {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, ser: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
        rows.serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<DMatrix<f64>, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(de)?;
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(serde::de::Error::custom("ragged matrix"));
        }
        Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    #[serde(with = "row_major")]
    pub fisher: DMatrix<f64>,
    #[serde(with = "row_major")]
    pub hesse: DMatrix<f64>,
    #[serde(with = "row_major")]
    pub g_matrix: DMatrix<f64>,
    /// Largest eigenvalue of `G`.
    pub sigma1: f64,
    pub trace_g: f64,
    /// `1/σ₁(G)`: error-probability exponent per unit `ε² N`.
    pub error_rate_bound: f64,
    /// `tr G / 2`: risk coefficient of `1/N`.
    pub risk_rate: f64,
}

pub fn rate_report(tester: &Tester, s: &BlochState, loss: &LossSpec) -> Result<RateReport> {
    check_dim(tester.dim(), loss.dim())?;
    let fisher = tester.fisher_matrix(s)?.0;
    let hesse = loss.same_point_hessian(s)?.0;
    if hesse.amax() == 0.0 {
        return Err(TomoError::validation(
            "nonzero_hessian",
            "loss has a vanishing same-point Hessian",
        ));
    }
    let g = g_matrix(&fisher, &hesse)?;
    let sigma1 = max_eigenvalue(&g);
    let trace_g = g.trace();
    Ok(RateReport {
        fisher,
        hesse,
        g_matrix: g,
        sigma1,
        trace_g,
        error_rate_bound: 1.0 / sigma1,
        risk_rate: 0.5 * trace_g,
    })
}

/// `1 / (2 ∇g·F⁺∇g)`: error exponent for estimating a scalar `g(s)`.
pub fn scalar_functional_rate(tester: &Tester, s: &BlochState, grad_g: &[f64]) -> Result<f64> {
    check_dim(tester.k(), grad_g.len())?;
    if grad_g.iter().all(|&x| x == 0.0) {
        return Err(TomoError::ZeroGradient);
    }
    let fisher = tester.fisher_matrix(s)?.0;
    let grad = DVector::from_column_slice(grad_g);
    check_support(&fisher, &(&grad * grad.transpose()))?;
    let quad = (grad.transpose() * pseudo_inverse(&fisher) * &grad)[(0, 0)];
    Ok(1.0 / (2.0 * quad))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayleighCheck {
    /// Sampled-and-refined minimum of `a·Aa / a·Ba`.
    pub lhs_min: f64,
    /// `1/σ₁(√B A⁺ √B)`.
    pub rhs: f64,
}

/// Compares `inf_{a ∉ ker B} a·Aa / a·Ba` (random directions plus local
/// descent on the sphere) with its closed form `1/σ₁(√B A⁺ √B)`.
pub fn rayleigh_identity_check(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    samples: usize,
    seed: u64,
) -> Result<RayleighCheck> {
    check_dim(a.nrows(), b.nrows())?;
    check_support(a, b)?;
    let n = a.nrows();
    let b_scale = b.amax();
    let quotient = |v: &DVector<f64>| -> Option<f64> {
        let den = v.dot(&(b * v));
        (den > 1e-12 * b_scale * v.norm_squared()).then(|| v.dot(&(a * v)) / den)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Vec<(f64, DVector<f64>)> = Vec::new();
    const KEEP: usize = 5;
    for _ in 0..samples {
        let v = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        let v: DVector<f64> = v.normalize();
        if let Some(q) = quotient(&v) {
            if best.len() < KEEP || q < best[best.len() - 1].0 {
                best.push((q, v));
                best.sort_by(|x, y| x.0.total_cmp(&y.0));
                best.truncate(KEEP);
            }
        }
    }
    if best.is_empty() {
        return Err(TomoError::validation("nonzero_b", "B vanishes on every sample"));
    }

    let mut lhs_min = f64::INFINITY;
    for (mut q, mut v) in best {
        let mut step = 0.1;
        for _ in 0..5000 {
            let bv = b * &v;
            let den = v.dot(&bv);
            let grad = (a * &v - &bv * q) * (2.0 / den);
            let grad = &grad - &v * v.dot(&grad);
            if grad.norm() < 1e-14 {
                break;
            }
            let mut accepted = false;
            while step > 1e-16 {
                let cand = (&v - &grad * step).normalize();
                match quotient(&cand) {
                    Some(qc) if qc < q => {
                        q = qc;
                        v = cand;
                        step *= 2.0;
                        accepted = true;
                        break;
                    }
                    _ => step *= 0.5,
                }
            }
            if !accepted {
                break;
            }
        }
        lhs_min = lhs_min.min(q);
    }

    let root_b = psd_sqrt(b, 1e-8)?;
    let rhs = 1.0 / max_eigenvalue(&symmetrize(&(&root_b * pseudo_inverse(a) * &root_b)));
    Ok(RayleighCheck { lhs_min, rhs })
}

/// Search controls for [`kl_infimum_oracle_with`].
#[derive(Debug, Clone, Copy)]
pub struct OracleOptions {
    /// Initial directions (Fibonacci sphere for `k = 3`, seeded Gaussian otherwise).
    pub directions: usize,
    /// Best directions passed to local refinement.
    pub refine_starts: usize,
    /// Coordinate-descent sweeps per refinement.
    pub sweeps: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            directions: 10_000,
            refine_starts: 8,
            sweeps: 200,
        }
    }
}

/// `R(s) = inf { K(p_s' ‖ p_s) : s' valid, Δ(s', s) > ε² }`.
pub fn kl_infimum_oracle(tester: &Tester, s: &BlochState, loss: &LossSpec, eps_sq: f64) -> Result<f64> {
    kl_infimum_oracle_with(tester, s, loss, eps_sq, OracleOptions::default())
}

/// Along each ray `s + t u` the divergence grows with `t`, so the ray-wise
/// infimum sits at the first crossing of `Δ = ε²`; the crossing is located
/// by bracketing and bisection, and the objective is then minimized over
/// directions `u`.
pub fn kl_infimum_oracle_with(
    tester: &Tester,
    s: &BlochState,
    loss: &LossSpec,
    eps_sq: f64,
    opts: OracleOptions,
) -> Result<f64> {
    check_dim(tester.dim(), s.dim())?;
    check_dim(tester.dim(), loss.dim())?;
    if eps_sq.is_nan() || eps_sq <= 0.0 {
        return Err(TomoError::validation("eps_sq", "threshold must be positive"));
    }
    if !s.is_interior() {
        return Err(TomoError::BoundaryState("oracle needs an interior state".into()));
    }
    let base = s.coords();
    let dim = s.dim();
    let k = base.len();
    let p_true = tester.probs_raw(base);

    let at = |u: &[f64], t: f64| -> Vec<f64> { base.iter().zip(u).map(|(b, x)| b + t * x).collect() };
    let objective = |u: &[f64]| -> Option<f64> {
        let t = first_crossing(|t| {
            let y = at(u, t);
            is_physical(dim, &y).then(|| loss.evaluate_raw(&y, base))
        }, eps_sq)?;
        Some(kl_divergence(&tester.probs_raw(&at(u, t)), &p_true))
    };

    let dirs = directions(k, opts.directions);
    let mut scored: Vec<(f64, Vec<f64>)> = dirs
        .into_iter()
        .filter_map(|u| objective(&u).map(|v| (v, u)))
        .collect();
    if scored.is_empty() {
        return Err(TomoError::EmptyConstraintSet(format!(
            "no valid state has loss above ε² = {eps_sq:e}"
        )));
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    scored.truncate(opts.refine_starts.max(1));

    let mut best = f64::INFINITY;
    for (mut val, mut u) in scored {
        let mut step = 0.05;
        for _ in 0..opts.sweeps {
            let mut improved = false;
            for a in 0..k {
                for sign in [1.0, -1.0] {
                    let mut cand = u.clone();
                    cand[a] += sign * step;
                    let norm = linalg::norm_sq(&cand).sqrt();
                    cand.iter_mut().for_each(|x| *x /= norm);
                    if let Some(v) = objective(&cand) {
                        if v < val {
                            val = v;
                            u = cand;
                            improved = true;
                        }
                    }
                }
            }
            if !improved {
                step *= 0.5;
                if step < 1e-9 {
                    break;
                }
            }
        }
        best = best.min(val);
    }
    Ok(best)
}

/// Smallest `t > 0` with `loss(t) > threshold`, where `loss` returns `None`
/// outside the state space. Returns the feasible end of the final bracket.
fn first_crossing(loss: impl Fn(f64) -> Option<f64>, threshold: f64) -> Option<f64> {
    let mut lo = 0.0;
    let mut t = 1e-3 * threshold.sqrt();
    let (mut lo_b, mut hi_b) = loop {
        match loss(t) {
            Some(v) if v > threshold => break (lo, t),
            Some(_) => {
                lo = t;
                t *= 2.0;
                if t > 1e6 {
                    return None;
                }
            }
            None => {
                // Left the state space: find its edge and see whether the
                // threshold is exceeded before it.
                let (mut a, mut b) = (lo, t);
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    if loss(m).is_some() {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                return match loss(a) {
                    Some(v) if v > threshold => bisect(&loss, threshold, lo, a),
                    _ => None,
                };
            }
        }
    };
    for _ in 0..200 {
        let m = 0.5 * (lo_b + hi_b);
        if m <= lo_b || m >= hi_b {
            break;
        }
        match loss(m) {
            Some(v) if v > threshold => hi_b = m,
            _ => lo_b = m,
        }
    }
    Some(hi_b)
}

fn bisect(loss: &impl Fn(f64) -> Option<f64>, threshold: f64, mut lo: f64, mut hi: f64) -> Option<f64> {
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi {
            break;
        }
        match loss(m) {
            Some(v) if v > threshold => hi = m,
            _ => lo = m,
        }
    }
    Some(hi)
}

/// Unit directions in `R^k`: a Fibonacci lattice when `k = 3`, seeded
/// Gaussian draws otherwise.
pub(crate) fn directions(k: usize, n: usize) -> Vec<Vec<f64>> {
    if k == 3 {
        return fibonacci_sphere(n);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_d1e5);
    (0..n)
        .map(|_| {
            let v: Vec<f64> = (0..k).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = linalg::norm_sq(&v).sqrt();
            v.into_iter().map(|x| x / norm).collect()
        })
        .collect()
}

pub(crate) fn fibonacci_sphere(n: usize) -> Vec<Vec<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            vec![r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}
