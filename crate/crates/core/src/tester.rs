//! POVM testers: outcome probabilities, affine form, Fisher matrix and
//! informational completeness.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Result, TomoError};
use crate::linalg::{self, numerical_rank};
use crate::qstate::{param_dim, BlochState, GeneratorBasis, HermitianMatrix, INTERIOR_TOL};

const POVM_TOL: f64 = 1e-10;
/// Relative singular-value cutoff for span/Fisher rank.
pub const RANK_TOL: f64 = 1e-9;
/// Outcome probabilities at or below this mark a boundary state.
pub const PROB_FLOOR: f64 = 1e-12;

/// A finite POVM together with its affine decomposition
/// `Π_x = v_x I + w_x · σ`, so that `p_s(x) = v_x + s · w_x`.
#[derive(Debug, Clone)]
pub struct Tester {
    dim: usize,
    elements: Vec<HermitianMatrix>,
    v: Vec<f64>,
    w: Vec<Vec<f64>>,
}

impl Tester {
    /// Validates positivity and completeness, then extracts
    /// `v_x = Tr[Π_x]/d` and `(w_x)_α = ½ Tr[Π_x σ_α]`.
    pub fn new(elements: Vec<HermitianMatrix>) -> Result<Self> {
        let Some(first) = elements.first() else {
            return Err(TomoError::validation("nonempty", "POVM has no elements"));
        };
        let dim = first.dim();
        let basis = GeneratorBasis::new(dim)?;
        let mut total = DMatrix::<Complex64>::zeros(dim, dim);
        for (i, e) in elements.iter().enumerate() {
            check_dim(dim, e.dim())?;
            let min = e.eigenvalues()[0];
            if min < -POVM_TOL {
                return Err(TomoError::validation(
                    "element_psd",
                    format!("element {i} has eigenvalue {min:e}"),
                ));
            }
            total += e.matrix();
        }
        let excess = (total - DMatrix::<Complex64>::identity(dim, dim))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if excess > POVM_TOL {
            return Err(TomoError::validation(
                "completeness",
                format!("Σ Π_x deviates from identity by {excess:e}"),
            ));
        }
        let v: Vec<f64> = elements.iter().map(|e| e.trace() / dim as f64).collect();
        let w: Vec<Vec<f64>> = elements
            .iter()
            .map(|e| {
                basis
                    .generators()
                    .iter()
                    .map(|g| 0.5 * e.trace_product(g))
                    .collect()
            })
            .collect();
        let t = Self { dim, elements, v, w };
        t.check_affine()?;
        Ok(t)
    }

    fn check_affine(&self) -> Result<()> {
        let vsum: f64 = self.v.iter().sum();
        if (vsum - 1.0).abs() > POVM_TOL {
            return Err(TomoError::validation("affine_v_sum", format!("Σ v = {vsum}")));
        }
        for a in 0..self.k() {
            let wsum: f64 = self.w.iter().map(|w| w[a]).sum();
            if wsum.abs() > POVM_TOL {
                return Err(TomoError::validation(
                    "affine_w_sum",
                    format!("component {a} of Σ w = {wsum:e}"),
                ));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Parameter-space dimension `d² − 1`.
    pub fn k(&self) -> usize {
        param_dim(self.dim)
    }

    pub fn num_outcomes(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[HermitianMatrix] {
        &self.elements
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn w(&self) -> &[Vec<f64>] {
        &self.w
    }

    /// Same tester with outcomes reordered: outcome `i` of the result is
    /// outcome `perm[i]` of `self`.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self> {
        check_dim(self.num_outcomes(), perm.len())?;
        let mut seen = vec![false; perm.len()];
        for &p in perm {
            if p >= perm.len() || std::mem::replace(&mut seen[p], true) {
                return Err(TomoError::validation("permutation", format!("{perm:?}")));
            }
        }
        Ok(Self {
            dim: self.dim,
            elements: perm.iter().map(|&p| self.elements[p].clone()).collect(),
            v: perm.iter().map(|&p| self.v[p]).collect(),
            w: perm.iter().map(|&p| self.w[p].clone()).collect(),
        })
    }

    /// `v_x + s·w_x` for every outcome, without validity checks.
    pub(crate) fn probs_raw(&self, s: &[f64]) -> Vec<f64> {
        self.v
            .iter()
            .zip(&self.w)
            .map(|(v, w)| v + linalg::dot(w, s))
            .collect()
    }

    pub fn probabilities(&self, s: &BlochState) -> Result<ProbabilityVector> {
        check_dim(self.dim, s.dim())?;
        let p = self.probs_raw(s.coords());
        if let Some((x, &px)) = p.iter().enumerate().find(|(_, &px)| px < -1e-12) {
            return Err(TomoError::validation(
                "probability_nonnegative",
                format!("p({x}) = {px:e}"),
            ));
        }
        Ok(ProbabilityVector(p.into_iter().map(|x| x.max(0.0)).collect()))
    }

    /// `F_s = Σ_x w_x w_xᵀ / p_s(x)` at an interior state.
    pub fn fisher_matrix(&self, s: &BlochState) -> Result<FisherMatrix> {
        check_dim(self.dim, s.dim())?;
        if !s.is_interior() {
            return Err(TomoError::BoundaryState(format!(
                "ρ(s) has eigenvalue {:e} ≤ {INTERIOR_TOL:e}",
                s.min_eigenvalue()
            )));
        }
        self.fisher_raw(s.coords()).map(FisherMatrix)
    }

    pub(crate) fn fisher_raw(&self, s: &[f64]) -> Result<DMatrix<f64>> {
        let k = self.k();
        let mut f = DMatrix::zeros(k, k);
        for (x, (p, w)) in self.probs_raw(s).iter().zip(&self.w).enumerate() {
            if w.iter().all(|&c| c == 0.0) {
                continue;
            }
            if *p <= PROB_FLOOR {
                return Err(TomoError::BoundaryState(format!(
                    "outcome {x} has probability {p:e}"
                )));
            }
            for a in 0..k {
                for b in 0..k {
                    f[(a, b)] += w[a] * w[b] / p;
                }
            }
        }
        Ok(linalg::symmetrize(&f))
    }

    /// Rows `w_x` stacked into an `M × k` matrix.
    pub fn w_matrix(&self) -> DMatrix<f64> {
        let k = self.k();
        DMatrix::from_fn(self.num_outcomes(), k, |x, a| self.w[x][a])
    }

    /// Span rank of `{w_x}`; complete iff it equals `d² − 1`.
    pub fn informational_completeness(&self) -> (bool, usize) {
        let rank = numerical_rank(&self.w_matrix(), RANK_TOL);
        (rank == self.k(), rank)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: TesterJson = serde_json::from_str(text)?;
        raw.into_tester()
    }

    pub fn to_json(&self) -> TesterJson {
        TesterJson {
            dim: self.dim,
            elements: self
                .elements
                .iter()
                .map(|e| {
                    let m = e.matrix();
                    let rows = |f: fn(&Complex64) -> f64| {
                        (0..self.dim)
                            .map(|i| (0..self.dim).map(|j| f(&m[(i, j)])).collect())
                            .collect()
                    };
                    ElementJson {
                        re: rows(|z| z.re),
                        im: rows(|z| z.im),
                    }
                })
                .collect(),
        }
    }
}

/// On-disk tester schema: `{ "dim": d, "elements": [ { "re": [[…]], "im": [[…]] } ] }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TesterJson {
    pub dim: usize,
    pub elements: Vec<ElementJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementJson {
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Vec<Vec<f64>>,
}

impl TesterJson {
    pub fn into_tester(self) -> Result<Tester> {
        let d = self.dim;
        let mut elements = Vec::with_capacity(self.elements.len());
        for (i, e) in self.elements.into_iter().enumerate() {
            let shape_ok = |rows: &Vec<Vec<f64>>| rows.len() == d && rows.iter().all(|r| r.len() == d);
            if !shape_ok(&e.re) {
                return Err(TomoError::validation(
                    "elements.re",
                    format!("element {i}: expected {d}x{d} real part"),
                ));
            }
            if !e.im.is_empty() && !shape_ok(&e.im) {
                return Err(TomoError::validation(
                    "elements.im",
                    format!("element {i}: expected {d}x{d} imaginary part"),
                ));
            }
            let m = DMatrix::from_fn(d, d, |r, c| {
                let im = if e.im.is_empty() { 0.0 } else { e.im[r][c] };
                Complex64::new(e.re[r][c], im)
            });
            elements.push(HermitianMatrix::new(m)?);
        }
        Tester::new(elements)
    }
}

/// Outcome distribution `p_s(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityVector(pub Vec<f64>);

impl ProbabilityVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Per-trial Fisher matrix (symmetric PSD, `k × k`).
#[derive(Debug, Clone, PartialEq)]
pub struct FisherMatrix(pub DMatrix<f64>);

impl FisherMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn rank(&self) -> usize {
        numerical_rank(&self.0, RANK_TOL)
    }
}

/// Projector `(I ± σ)/2` scaled by `weight`, for a unit Bloch axis.
fn axis_projector(axis: [f64; 3], sign: f64, weight: f64) -> HermitianMatrix {
    let s: Vec<f64> = axis.iter().map(|a| sign * a).collect();
    let state = BlochState::new(2, s).expect("unit axis");
    let rho = crate::qstate::to_density(&state).into_inner();
    HermitianMatrix::from_raw(rho.map(|z| z * weight))
}

/// `{⅓|↑_a⟩⟨↑_a|, ⅓|↓_a⟩⟨↓_a|}` for `a = x, y, z`, in that order.
pub fn six_state_povm() -> Tester {
    let mut elements = Vec::with_capacity(6);
    for axis in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] {
        elements.push(axis_projector(axis, 1.0, 1.0 / 3.0));
        elements.push(axis_projector(axis, -1.0, 1.0 / 3.0));
    }
    Tester::new(elements).expect("six-state POVM is valid")
}

/// Projective measurement of σ_z: `{(I+σ_z)/2, (I−σ_z)/2}`.
pub fn z_projective() -> Tester {
    let z = [0.0, 0.0, 1.0];
    Tester::new(vec![axis_projector(z, 1.0, 1.0), axis_projector(z, -1.0, 1.0)])
        .expect("projective POVM is valid")
}

/// Single-outcome POVM `{I}`.
pub fn trivial_povm(dim: usize) -> Result<Tester> {
    Tester::new(vec![HermitianMatrix::new(DMatrix::identity(dim, dim))?])
}

/// Built-in testers selectable by name.
pub fn builtin(name: &str) -> Option<Tester> {
    match name {
        "six-state" => Some(six_state_povm()),
        "z-projective" => Some(z_projective()),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TomographyKind {
    State,
    Process,
    Povm,
    Instrument,
}

impl std::str::FromStr for TomographyKind {
    type Err = TomoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "state" => Ok(Self::State),
            "process" => Ok(Self::Process),
            "povm" => Ok(Self::Povm),
            "instrument" => Ok(Self::Instrument),
            other => Err(TomoError::Unknown {
                what: "tomography kind",
                name: other.to_string(),
            }),
        }
    }
}

/// Number of real parameters to reconstruct: `d²−1` (state), `d⁴−d²`
/// (process), `(M−1)d²` (POVM), `Md⁴−d²` (instrument).
pub fn parameter_count(kind: TomographyKind, d: usize, m: usize) -> Result<usize> {
    if d < 2 {
        return Err(TomoError::validation("dim", format!("dimension {d} < 2")));
    }
    let d2 = d * d;
    match kind {
        TomographyKind::State => Ok(d2 - 1),
        TomographyKind::Process => Ok(d2 * d2 - d2),
        TomographyKind::Povm | TomographyKind::Instrument if m < 1 => Err(TomoError::validation(
            "outcomes",
            "POVM/instrument tomography needs M ≥ 1",
        )),
        TomographyKind::Povm => Ok((m - 1) * d2),
        TomographyKind::Instrument => Ok(m * d2 * d2 - d2),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_qubit<R: Rng>(rng: &mut R, max_r: f64) -> BlochState {
        loop {
            let s: Vec<f64> = (0..3).map(|_| rng.random_range(-max_r..max_r)).collect();
            if linalg::norm_sq(&s) < max_r * max_r {
                return BlochState::new(2, s).unwrap();
            }
        }
    }

    #[test]
    fn six_state_affine_form() {
        let t = six_state_povm();
        assert_eq!(t.num_outcomes(), 6);
        for v in t.v() {
            assert!((v - 1.0 / 6.0).abs() < 1e-15);
        }
        let up_z = &t.w()[4];
        assert!((up_z[2] - 1.0 / 6.0).abs() < 1e-15);
        assert!(up_z[0].abs() < 1e-15 && up_z[1].abs() < 1e-15);
    }

    #[test]
    fn six_state_probabilities() {
        let t = six_state_povm();
        let p = t.probabilities(&BlochState::qubit(0.0, 0.0, 0.0).unwrap()).unwrap();
        assert!(p.as_slice().iter().all(|x| (x - 1.0 / 6.0).abs() < 1e-15));
        let p = t.probabilities(&BlochState::qubit(0.0, 0.0, 0.7).unwrap()).unwrap();
        let want = [1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0, 1.7 / 6.0, 0.05];
        for (a, b) in p.as_slice().iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn probabilities_match_trace_rule() {
        let t = six_state_povm();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..1000 {
            let s = random_qubit(&mut rng, 1.0);
            let rho = crate::qstate::to_density(&s);
            let p = t.probabilities(&s).unwrap();
            assert!((p.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for (e, px) in t.elements().iter().zip(p.as_slice()) {
                assert!((rho.trace_product(e) - px).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fisher_examples() {
        let zero = BlochState::qubit(0.0, 0.0, 0.0).unwrap();
        let f = six_state_povm().fisher_matrix(&zero).unwrap();
        assert!((f.matrix() - DMatrix::identity(3, 3) / 3.0).amax() < 1e-15);

        let f = z_projective().fisher_matrix(&zero).unwrap();
        let want = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.0, 0.0, 1.0]));
        assert!((f.matrix() - want).amax() < 1e-15);
        assert_eq!(f.rank(), 1);

        let pure = BlochState::qubit(0.0, 0.0, 1.0).unwrap();
        assert!(matches!(
            six_state_povm().fisher_matrix(&pure),
            Err(TomoError::BoundaryState(_))
        ));
    }

    #[test]
    fn fisher_matches_log_derivative_definition() {
        // Σ_x p (∂ log p)(∂ log p)ᵀ with ∂ log p by central differences.
        let t = six_state_povm();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let s = random_qubit(&mut rng, 0.9);
            let p = t.probs_raw(s.coords());
            let h = 1e-6;
            let mut grads = vec![vec![0.0; 3]; p.len()];
            for a in 0..3 {
                let mut up = s.coords().to_vec();
                let mut dn = s.coords().to_vec();
                up[a] += h;
                dn[a] -= h;
                let pu = t.probs_raw(&up);
                let pd = t.probs_raw(&dn);
                for x in 0..p.len() {
                    grads[x][a] = (pu[x].ln() - pd[x].ln()) / (2.0 * h);
                }
            }
            let f = t.fisher_matrix(&s).unwrap();
            for a in 0..3 {
                for b in 0..3 {
                    let want: f64 = (0..p.len()).map(|x| p[x] * grads[x][a] * grads[x][b]).sum();
                    assert!((f.matrix()[(a, b)] - want).abs() < 1e-7);
                }
            }
        }
    }

    #[test]
    fn fisher_invariant_under_relabeling() {
        let t = six_state_povm();
        let r = t.relabeled(&[3, 5, 0, 1, 4, 2]).unwrap();
        let s = BlochState::qubit(0.1, -0.3, 0.5).unwrap();
        let a = t.fisher_matrix(&s).unwrap();
        let b = r.fisher_matrix(&s).unwrap();
        assert!((a.matrix() - b.matrix()).amax() < 1e-15);
        assert!(t.relabeled(&[0, 0, 1, 2, 3, 4]).is_err());
    }

    #[test]
    fn completeness_examples() {
        assert_eq!(six_state_povm().informational_completeness(), (true, 3));
        assert_eq!(z_projective().informational_completeness(), (false, 1));
        assert_eq!(trivial_povm(2).unwrap().informational_completeness(), (false, 0));
    }

    #[test]
    fn parameter_counts() {
        use TomographyKind::*;
        assert_eq!(parameter_count(State, 2, 0).unwrap(), 3);
        assert_eq!(parameter_count(Process, 2, 0).unwrap(), 12);
        assert_eq!(parameter_count(Povm, 2, 6).unwrap(), 20);
        assert_eq!(parameter_count(Instrument, 2, 2).unwrap(), 28);
        assert!(parameter_count(Povm, 2, 0).is_err());
        assert!("nope".parse::<TomographyKind>().is_err());
    }

    #[test]
    fn json_roundtrip_and_validation() {
        let t = six_state_povm();
        let text = serde_json::to_string(&t.to_json()).unwrap();
        let back = Tester::from_json(&text).unwrap();
        assert_eq!(back.num_outcomes(), 6);
        for (a, b) in back.w().iter().zip(t.w()) {
            assert!(linalg::norm_sq(&a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>()) < 1e-28);
        }

        let incomplete = r#"{"dim":2,"elements":[{"re":[[1,0],[0,0]],"im":[[0,0],[0,0]]}]}"#;
        assert!(matches!(
            Tester::from_json(incomplete),
            Err(TomoError::Validation { invariant: "completeness", .. })
        ));
        let negative = r#"{"dim":2,"elements":[{"re":[[1.5,0],[0,1]]},{"re":[[-0.5,0],[0,0]]}]}"#;
        assert!(matches!(
            Tester::from_json(negative),
            Err(TomoError::Validation { invariant: "element_psd", .. })
        ));
        let missing = r#"{"dim":2,"elements":[{"im":[[0,0],[0,0]]}]}"#;
        let msg = Tester::from_json(missing).unwrap_err().to_string();
        assert!(msg.contains("re"), "{msg}");
    }
}
