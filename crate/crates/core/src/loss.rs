//! Loss functions on parameter space and their same-point Hessians
//! `H_s = ∇'∇' Δ(s', s)|_{s'=s}`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Result, TomoError};
use crate::linalg::{self, psd_sqrt, symmetrize};
use crate::qstate::{self, param_dim, BlochState};
use crate::tester::Tester;

type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A smooth scalar function `g(s)` with its gradient. As a loss it gives
/// `Δ(s, s') = |g(s) − g(s')|²`.
#[derive(Clone)]
pub struct ScalarFunctional {
    name: String,
    value: ScalarFn,
    gradient: GradFn,
}

impl ScalarFunctional {
    pub fn new(
        name: impl Into<String>,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            value: Arc::new(value),
            gradient: Arc::new(gradient),
        }
    }

    /// `g(s) = s_index` (zero-based index; named `s<index+1>`).
    pub fn coordinate(index: usize, k: usize) -> Self {
        Self::new(
            format!("s{}", index + 1),
            move |s| s[index],
            move |_| {
                let mut g = vec![0.0; k];
                g[index] = 1.0;
                g
            },
        )
    }

    /// `g(s) = ‖s‖²`, a purity proxy (`Tr ρ² = 1/d + ‖s‖²/2`).
    pub fn purity() -> Self {
        Self::new("purity", linalg::norm_sq, |s| s.iter().map(|x| 2.0 * x).collect())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn value(&self, s: &[f64]) -> f64 {
        (self.value)(s)
    }

    pub fn gradient(&self, s: &[f64]) -> Vec<f64> {
        (self.gradient)(s)
    }
}

impl fmt::Debug for ScalarFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarFunctional").field("name", &self.name).finish()
    }
}

#[derive(Debug, Clone)]
pub enum LossKind {
    /// `¼‖s − s'‖²`.
    HilbertSchmidt,
    /// `¼ (Tr|ρ − ρ'|)²`.
    Trace,
    /// `1 − f(s, s')²`.
    Fidelity,
    /// `K(p_s ‖ p_s')` for the attached tester.
    Kl(Arc<Tester>),
    /// `‖s − s'‖²`.
    Euclidean,
    ScalarFunctional(ScalarFunctional),
}

#[derive(Debug, Clone)]
pub struct LossSpec {
    kind: LossKind,
    dim: usize,
}

impl LossSpec {
    pub fn new(kind: LossKind, dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(TomoError::validation("dim", format!("dimension {dim} < 2")));
        }
        if let LossKind::Kl(t) = &kind {
            check_dim(dim, t.dim())?;
        }
        Ok(Self { kind, dim })
    }

    pub fn hilbert_schmidt(dim: usize) -> Self {
        Self::new(LossKind::HilbertSchmidt, dim).expect("dim >= 2")
    }

    pub fn trace(dim: usize) -> Self {
        Self::new(LossKind::Trace, dim).expect("dim >= 2")
    }

    pub fn fidelity(dim: usize) -> Self {
        Self::new(LossKind::Fidelity, dim).expect("dim >= 2")
    }

    pub fn euclidean(dim: usize) -> Self {
        Self::new(LossKind::Euclidean, dim).expect("dim >= 2")
    }

    pub fn kl(tester: &Tester) -> Self {
        Self {
            kind: LossKind::Kl(Arc::new(tester.clone())),
            dim: tester.dim(),
        }
    }

    pub fn scalar_functional(g: ScalarFunctional, dim: usize) -> Self {
        Self::new(LossKind::ScalarFunctional(g), dim).expect("dim >= 2")
    }

    /// Parses `hs | trace | fidelity | kl | euclidean | functional:<name>`
    /// where `<name>` is `purity` or `s<i>` (1-based coordinate).
    pub fn parse(name: &str, tester: &Tester) -> Result<Self> {
        let dim = tester.dim();
        let unknown = || TomoError::Unknown {
            what: "loss",
            name: name.to_string(),
        };
        match name {
            "hs" => Ok(Self::hilbert_schmidt(dim)),
            "trace" => Ok(Self::trace(dim)),
            "fidelity" => Ok(Self::fidelity(dim)),
            "kl" => Ok(Self::kl(tester)),
            "euclidean" => Ok(Self::euclidean(dim)),
            _ => {
                let f = name.strip_prefix("functional:").ok_or_else(unknown)?;
                if f == "purity" {
                    return Ok(Self::scalar_functional(ScalarFunctional::purity(), dim));
                }
                let k = param_dim(dim);
                let i: usize = f
                    .strip_prefix('s')
                    .and_then(|i| i.parse().ok())
                    .filter(|&i| (1..=k).contains(&i))
                    .ok_or_else(unknown)?;
                Ok(Self::scalar_functional(ScalarFunctional::coordinate(i - 1, k), dim))
            }
        }
    }

    pub fn kind(&self) -> &LossKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self) -> String {
        match &self.kind {
            LossKind::HilbertSchmidt => "hs".into(),
            LossKind::Trace => "trace".into(),
            LossKind::Fidelity => "fidelity".into(),
            LossKind::Kl(_) => "kl".into(),
            LossKind::Euclidean => "euclidean".into(),
            LossKind::ScalarFunctional(g) => format!("functional:{}", g.name()),
        }
    }

    /// `Δ(s, s')`. The KL kind returns `+∞` when `p_s'(x) = 0 < p_s(x)`.
    pub fn evaluate(&self, s: &BlochState, s_prime: &BlochState) -> Result<f64> {
        check_dim(self.dim, s.dim())?;
        check_dim(self.dim, s_prime.dim())?;
        Ok(self.evaluate_raw(s.coords(), s_prime.coords()))
    }

    /// Same as [`evaluate`](Self::evaluate) on bare coordinate vectors, which
    /// need not describe physical states (linear-inversion estimates).
    pub fn evaluate_raw(&self, s: &[f64], s_prime: &[f64]) -> f64 {
        match &self.kind {
            LossKind::HilbertSchmidt => qstate::hs_raw(s, s_prime),
            LossKind::Trace => qstate::trace_raw(self.dim, s, s_prime),
            LossKind::Fidelity => (1.0 - qstate::fidelity_sq_raw(self.dim, s, s_prime)).max(0.0),
            LossKind::Euclidean => 4.0 * qstate::hs_raw(s, s_prime),
            LossKind::Kl(t) => kl_divergence(&t.probs_raw(s), &t.probs_raw(s_prime)),
            LossKind::ScalarFunctional(g) => {
                let diff = g.value(s) - g.value(s_prime);
                diff * diff
            }
        }
    }

    /// Same-point Hessian at an interior state. Closed forms where known,
    /// central finite differences otherwise.
    pub fn same_point_hessian(&self, s: &BlochState) -> Result<HesseMatrix> {
        check_dim(self.dim, s.dim())?;
        if !s.is_interior() {
            return Err(TomoError::BoundaryState(format!(
                "Hessian requested at non-interior state (min eigenvalue {:e})",
                s.min_eigenvalue()
            )));
        }
        let k = param_dim(self.dim);
        let x = s.coords();
        let h = match &self.kind {
            LossKind::HilbertSchmidt => DMatrix::identity(k, k) * 0.5,
            LossKind::Trace if self.dim == 2 => DMatrix::identity(k, k) * 0.5,
            LossKind::Fidelity if self.dim == 2 => {
                let v = DVector::from_column_slice(x);
                (DMatrix::identity(k, k) + &v * v.transpose() / (1.0 - s.norm_sq())) * 0.5
            }
            LossKind::Euclidean => DMatrix::identity(k, k) * 2.0,
            LossKind::Kl(t) => t.fisher_matrix(s)?.0,
            LossKind::ScalarFunctional(g) => {
                let grad = DVector::from_vec(g.gradient(x));
                &grad * grad.transpose() * 2.0
            }
            LossKind::Trace | LossKind::Fidelity => return self.finite_difference_hessian(s),
        };
        Ok(HesseMatrix(h))
    }

    /// Central second differences of `s' ↦ Δ(s', s)` at `s' = s`, step
    /// `1e-4 · max(1, ‖s‖)`, symmetrized.
    pub fn finite_difference_hessian(&self, s: &BlochState) -> Result<HesseMatrix> {
        check_dim(self.dim, s.dim())?;
        let x = s.coords();
        let k = x.len();
        let h = 1e-4 * s.norm_sq().sqrt().max(1.0);
        let at = |da: (usize, f64), db: (usize, f64)| {
            let mut y = x.to_vec();
            y[da.0] += da.1;
            y[db.0] += db.1;
            self.evaluate_raw(&y, x)
        };
        let centre = self.evaluate_raw(x, x);
        let mut m = DMatrix::zeros(k, k);
        for a in 0..k {
            m[(a, a)] = (at((a, h), (a, 0.0)) - 2.0 * centre + at((a, -h), (a, 0.0))) / (h * h);
            for b in (a + 1)..k {
                let v = (at((a, h), (b, h)) - at((a, h), (b, -h)) - at((a, -h), (b, h))
                    + at((a, -h), (b, -h)))
                    / (4.0 * h * h);
                m[(a, b)] = v;
                m[(b, a)] = v;
            }
        }
        Ok(HesseMatrix(symmetrize(&m)))
    }
}

/// `K(q ‖ p) = Σ q log(q/p)` with `0 log 0 = 0`; `+∞` if `p(x) ≤ 0 < q(x)`.
pub fn kl_divergence(q: &[f64], p: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&qx, &px) in q.iter().zip(p) {
        if qx <= 0.0 {
            continue;
        }
        if px <= 0.0 {
            return f64::INFINITY;
        }
        total += qx * ((qx - px) / px).ln_1p();
    }
    total.max(0.0)
}

/// Symmetric PSD same-point Hessian (dimensionless, `k × k`).
#[derive(Debug, Clone, PartialEq)]
pub struct HesseMatrix(pub DMatrix<f64>);

impl HesseMatrix {
    /// Checks symmetry (1e-12) and eigenvalues ≥ −1e-8.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(TomoError::validation("square", "Hessian must be square"));
        }
        let asym = linalg::max_abs_asymmetry(&m);
        if asym > 1e-12 {
            return Err(TomoError::validation("symmetric", format!("asymmetry {asym:e}")));
        }
        let min = linalg::sym_eigen(&m).0.min();
        if min < -1e-8 {
            return Err(TomoError::validation("psd", format!("eigenvalue {min:e}")));
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// Symmetric PSD square root via eigendecomposition; eigenvalues in
/// `[-1e-8, 0)` clamp to zero.
pub fn hessian_sqrt(h: &HesseMatrix) -> Result<HesseMatrix> {
    psd_sqrt(&h.0, 1e-8).map(HesseMatrix)
}
