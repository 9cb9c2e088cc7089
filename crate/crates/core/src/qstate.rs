//! Generalized Bloch parametrization of density operators and the distances
//! used as tomographic losses.
//!
//! A state of a `d`-level system is written `ρ(s) = I/d + ½ Σ_α s_α σ_α`
//! where `{σ_α}` are the `k = d² − 1` traceless Hermitian generators with
//! `Tr[σ_α σ_β] = 2δ_αβ`. For `d = 2` these are the Pauli matrices in the
//! order `(σ_x, σ_y, σ_z)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Result, TomoError};
use crate::linalg::{self, hermitian_eigen, hermitian_eigenvalues};

const HERMITIAN_TOL: f64 = 1e-12;
/// Eigenvalues of `ρ(s)` may dip this far below zero and still count as PSD.
pub const PSD_TOL: f64 = 1e-10;
/// A state is interior when every eigenvalue of `ρ(s)` exceeds this.
pub const INTERIOR_TOL: f64 = 1e-8;

/// Complex Hermitian `d×d` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(DMatrix<Complex64>);

impl HermitianMatrix {
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        if !m.is_square() || m.nrows() < 1 {
            return Err(TomoError::validation(
                "square",
                format!("{}x{} matrix", m.nrows(), m.ncols()),
            ));
        }
        let n = m.nrows();
        for i in 0..n {
            for j in i..n {
                if (m[(i, j)] - m[(j, i)].conj()).norm() > HERMITIAN_TOL {
                    return Err(TomoError::validation(
                        "hermitian",
                        format!("entry ({i},{j}) differs from conjugate of ({j},{i})"),
                    ));
                }
            }
        }
        Ok(Self(m))
    }

    /// Caller guarantees Hermiticity (used for matrices built from a basis).
    pub(crate) fn from_raw(m: DMatrix<Complex64>) -> Self {
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// Ascending real eigenvalues.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.0)
    }

    /// `Tr[A B]` for Hermitian `A` and `B` (real).
    pub fn trace_product(&self, other: &HermitianMatrix) -> f64 {
        self.0
            .iter()
            .zip(other.0.transpose().iter())
            .map(|(a, b)| (a * b).re)
            .sum()
    }
}

/// Traceless Hermitian generators of SU(d), normalized to `Tr[σ_α σ_β] = 2δ_αβ`.
///
/// Generalized Gell-Mann construction: symmetric off-diagonal generators
/// first, then antisymmetric, then diagonal.
#[derive(Debug, Clone)]
pub struct GeneratorBasis {
    dim: usize,
    sigma: Vec<HermitianMatrix>,
}

impl GeneratorBasis {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(TomoError::validation("dim", format!("dimension {dim} < 2")));
        }
        let zero = Complex64::new(0.0, 0.0);
        let mut sigma = Vec::with_capacity(dim * dim - 1);
        for j in 0..dim {
            for l in (j + 1)..dim {
                let mut m = DMatrix::from_element(dim, dim, zero);
                m[(j, l)] = Complex64::new(1.0, 0.0);
                m[(l, j)] = Complex64::new(1.0, 0.0);
                sigma.push(HermitianMatrix(m));
            }
        }
        for j in 0..dim {
            for l in (j + 1)..dim {
                let mut m = DMatrix::from_element(dim, dim, zero);
                m[(j, l)] = Complex64::new(0.0, -1.0);
                m[(l, j)] = Complex64::new(0.0, 1.0);
                sigma.push(HermitianMatrix(m));
            }
        }
        for l in 1..dim {
            let c = (2.0 / (l * (l + 1)) as f64).sqrt();
            let mut m = DMatrix::from_element(dim, dim, zero);
            for j in 0..l {
                m[(j, j)] = Complex64::new(c, 0.0);
            }
            m[(l, l)] = Complex64::new(-c * l as f64, 0.0);
            sigma.push(HermitianMatrix(m));
        }
        Ok(Self { dim, sigma })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of real parameters, `d² − 1`.
    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    pub fn generators(&self) -> &[HermitianMatrix] {
        &self.sigma
    }

    /// `I/d + ½ Σ s_α σ_α` without any validity check.
    pub(crate) fn density_raw(&self, s: &[f64]) -> DMatrix<Complex64> {
        let d = self.dim;
        let mut m = DMatrix::from_diagonal_element(d, d, Complex64::new(1.0 / d as f64, 0.0));
        for (x, g) in s.iter().zip(&self.sigma) {
            m += g.0.map(|z| z * (0.5 * x));
        }
        m
    }

    /// `s_α = Tr[ρ σ_α]`.
    pub(crate) fn coordinates(&self, rho: &HermitianMatrix) -> Vec<f64> {
        self.sigma.iter().map(|g| rho.trace_product(g)).collect()
    }
}

/// Number of Bloch parameters for a `d`-level system.
pub fn param_dim(dim: usize) -> usize {
    dim * dim - 1
}

/// A valid density operator in Bloch coordinates: `ρ(s)` is positive
/// semidefinite (eigenvalues ≥ −1e-10).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlochState {
    dim: usize,
    s: Vec<f64>,
}

impl BlochState {
    pub fn new(dim: usize, s: Vec<f64>) -> Result<Self> {
        if dim < 2 {
            return Err(TomoError::validation("dim", format!("dimension {dim} < 2")));
        }
        check_dim(param_dim(dim), s.len())?;
        if s.iter().any(|x| !x.is_finite()) {
            return Err(TomoError::validation("finite", "non-finite Bloch coordinate"));
        }
        let min = min_density_eigenvalue(dim, &s);
        if min < -PSD_TOL {
            return Err(TomoError::validation(
                "psd",
                format!("ρ(s) has eigenvalue {min:e}"),
            ));
        }
        Ok(Self { dim, s })
    }

    /// Qubit state from its Bloch vector.
    pub fn qubit(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::new(2, vec![x, y, z])
    }

    /// Qubit state `r (sinθ cosφ, sinθ sinφ, cosθ)`.
    pub fn qubit_polar(r: f64, theta: f64, phi: f64) -> Result<Self> {
        Self::qubit(
            r * theta.sin() * phi.cos(),
            r * theta.sin() * phi.sin(),
            r * theta.cos(),
        )
    }

    /// Maximally mixed state of dimension `dim`.
    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        Self::new(dim, vec![0.0; param_dim(dim.max(2))])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coords(&self) -> &[f64] {
        &self.s
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.s
    }

    pub fn norm_sq(&self) -> f64 {
        linalg::norm_sq(&self.s)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_density_eigenvalue(self.dim, &self.s)
    }

    /// All eigenvalues of `ρ(s)` above [`INTERIOR_TOL`].
    pub fn is_interior(&self) -> bool {
        self.min_eigenvalue() > INTERIOR_TOL
    }
}

/// Smallest eigenvalue of `ρ(s)` for an arbitrary coordinate vector.
pub fn min_density_eigenvalue(dim: usize, s: &[f64]) -> f64 {
    if dim == 2 {
        0.5 * (1.0 - linalg::norm_sq(s).sqrt())
    } else {
        let basis = GeneratorBasis::new(dim).expect("dim >= 2");
        hermitian_eigenvalues(&basis.density_raw(s))[0]
    }
}

/// Whether `ρ(s)` is positive semidefinite within [`PSD_TOL`].
pub fn is_physical(dim: usize, s: &[f64]) -> bool {
    s.iter().all(|x| x.is_finite()) && min_density_eigenvalue(dim, s) >= -PSD_TOL
}

pub fn to_density(state: &BlochState) -> HermitianMatrix {
    let basis = GeneratorBasis::new(state.dim).expect("validated dim");
    HermitianMatrix(basis.density_raw(&state.s))
}

pub fn from_density(rho: &HermitianMatrix) -> Result<BlochState> {
    let tr = rho.trace();
    if (tr - 1.0).abs() > 1e-10 {
        return Err(TomoError::validation("unit_trace", format!("trace {tr}")));
    }
    let basis = GeneratorBasis::new(rho.dim())?;
    BlochState::new(rho.dim(), basis.coordinates(rho))
}

fn same_dim(a: &BlochState, b: &BlochState) -> Result<()> {
    check_dim(a.dim, b.dim)
}

/// `¼‖s − s'‖²`, i.e. `½ Tr[(ρ − ρ')²]` under this basis normalization.
pub fn hs_distance_sq(a: &BlochState, b: &BlochState) -> Result<f64> {
    same_dim(a, b)?;
    Ok(hs_raw(&a.s, &b.s))
}

pub(crate) fn hs_raw(a: &[f64], b: &[f64]) -> f64 {
    0.25 * a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>()
}

/// Unnormalized `Tr[(ρ − ρ')²]`, equal to `½‖s − s'‖²`.
pub fn hs_trace_sq(a: &BlochState, b: &BlochState) -> Result<f64> {
    same_dim(a, b)?;
    let diff = to_density(a).0 - to_density(b).0;
    Ok((&diff * &diff).trace().re)
}

/// `¼ (Tr|ρ − ρ'|)²`.
pub fn trace_distance_sq(a: &BlochState, b: &BlochState) -> Result<f64> {
    same_dim(a, b)?;
    Ok(trace_raw(a.dim, &a.s, &b.s))
}

pub(crate) fn trace_raw(dim: usize, a: &[f64], b: &[f64]) -> f64 {
    let basis = GeneratorBasis::new(dim).expect("dim >= 2");
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let m = basis.density_raw(&diff)
        - DMatrix::from_diagonal_element(dim, dim, Complex64::new(1.0 / dim as f64, 0.0));
    let t: f64 = hermitian_eigenvalues(&m).iter().map(|l| l.abs()).sum();
    0.25 * t * t
}

/// Squared fidelity. Qubits use the closed form
/// `½(1 + s·s' + √((1−‖s‖²)(1−‖s'‖²)))`; larger dimensions go through
/// [`fidelity_sq_general`].
pub fn fidelity_sq(a: &BlochState, b: &BlochState) -> Result<f64> {
    same_dim(a, b)?;
    Ok(fidelity_sq_raw(a.dim, &a.s, &b.s))
}

pub(crate) fn fidelity_sq_raw(dim: usize, a: &[f64], b: &[f64]) -> f64 {
    if dim == 2 {
        let radial = ((1.0 - linalg::norm_sq(a)) * (1.0 - linalg::norm_sq(b))).max(0.0);
        (0.5 * (1.0 + linalg::dot(a, b) + radial.sqrt())).clamp(0.0, 1.0)
    } else {
        general_fidelity_sq(dim, a, b)
    }
}

/// `(Tr √(√ρ ρ' √ρ))²` by eigendecomposition, any dimension.
pub fn fidelity_sq_general(a: &BlochState, b: &BlochState) -> Result<f64> {
    same_dim(a, b)?;
    Ok(general_fidelity_sq(a.dim, &a.s, &b.s))
}

fn general_fidelity_sq(dim: usize, a: &[f64], b: &[f64]) -> f64 {
    let basis = GeneratorBasis::new(dim).expect("dim >= 2");
    let rho = basis.density_raw(a);
    let sigma = basis.density_raw(b);
    let root = hermitian_sqrt(&rho);
    let inner = &root * sigma * &root;
    let inner = (&inner + inner.adjoint()) * Complex64::new(0.5, 0.0);
    let t: f64 = hermitian_eigenvalues(&inner)
        .iter()
        .map(|l| l.max(0.0).sqrt())
        .sum();
    (t * t).clamp(0.0, 1.0)
}

fn hermitian_sqrt(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let (values, vectors) = hermitian_eigen(m);
    let roots = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        values.len(),
        values.iter().map(|l| Complex64::new(l.max(0.0).sqrt(), 0.0)),
    ));
    &vectors * roots * vectors.adjoint()
}

/// `1 − f(s, s')²`.
pub fn fidelity_loss(a: &BlochState, b: &BlochState) -> Result<f64> {
    Ok((1.0 - fidelity_sq(a, b)?).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state<R: Rng>(rng: &mut R, dim: usize, max_r: f64) -> BlochState {
        let k = param_dim(dim);
        loop {
            let s: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
            let s: Vec<f64> = s.iter().map(|x| x * max_r).collect();
            if let Ok(st) = BlochState::new(dim, s) {
                return st;
            }
        }
    }

    #[test]
    fn generators_are_orthonormal_and_traceless() {
        for d in 2..=4 {
            let b = GeneratorBasis::new(d).unwrap();
            assert_eq!(b.len(), d * d - 1);
            for (i, g) in b.generators().iter().enumerate() {
                assert!(g.trace().abs() < 1e-12);
                for (j, h) in b.generators().iter().enumerate() {
                    let want = if i == j { 2.0 } else { 0.0 };
                    assert!((g.trace_product(h) - want).abs() < 1e-12, "d={d} {i} {j}");
                }
            }
        }
    }

    #[test]
    fn qubit_basis_is_pauli_xyz() {
        let b = GeneratorBasis::new(2).unwrap();
        let g = b.generators();
        let c = |re: f64, im: f64| Complex64::new(re, im);
        assert_eq!(g[0].matrix()[(0, 1)], c(1.0, 0.0));
        assert_eq!(g[1].matrix()[(0, 1)], c(0.0, -1.0));
        assert_eq!(g[2].matrix()[(0, 0)], c(1.0, 0.0));
        assert_eq!(g[2].matrix()[(1, 1)], c(-1.0, 0.0));
    }

    #[test]
    fn density_examples() {
        let mixed = to_density(&BlochState::qubit(0.0, 0.0, 0.0).unwrap());
        assert!((mixed.matrix()[(0, 0)].re - 0.5).abs() < 1e-15);
        assert!(mixed.matrix()[(0, 1)].norm() < 1e-15);

        let up = to_density(&BlochState::qubit(0.0, 0.0, 1.0).unwrap());
        assert!((up.matrix()[(0, 0)].re - 1.0).abs() < 1e-15);
        assert!(up.matrix()[(1, 1)].norm() < 1e-15);

        let ev = to_density(&BlochState::qubit(0.7, 0.0, 0.0).unwrap()).eigenvalues();
        assert!((ev[0] - 0.15).abs() < 1e-12);
        assert!((ev[1] - 0.85).abs() < 1e-12);
    }

    #[test]
    fn from_density_examples() {
        let c = |x: f64| Complex64::new(x, 0.0);
        let m = DMatrix::from_row_slice(2, 2, &[c(0.85), c(0.0), c(0.0), c(0.15)]);
        let s = from_density(&HermitianMatrix::new(m).unwrap()).unwrap();
        let want = [0.0, 0.0, 0.7];
        for (a, b) in s.coords().iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
        let bad = DMatrix::from_row_slice(2, 2, &[c(0.8), c(0.0), c(0.0), c(0.3)]);
        assert!(matches!(
            from_density(&HermitianMatrix::new(bad).unwrap()),
            Err(TomoError::Validation { invariant: "unit_trace", .. })
        ));
        let nh = DMatrix::from_row_slice(2, 2, &[c(0.5), c(0.1), c(0.0), c(0.5)]);
        assert!(HermitianMatrix::new(nh).is_err());
    }

    #[test]
    fn roundtrip_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for i in 0..1000 {
            let d = 2 + i % 3;
            let st = random_state(&mut rng, d, if d == 2 { 0.6 } else { 0.25 });
            let rho = to_density(&st);
            assert!((rho.trace() - 1.0).abs() < 1e-12);
            let back = from_density(&rho).unwrap();
            for (a, b) in st.coords().iter().zip(back.coords()) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn invalid_states_rejected() {
        assert!(BlochState::qubit(0.8, 0.8, 0.0).is_err());
        assert!(matches!(
            BlochState::new(2, vec![0.0; 4]),
            Err(TomoError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn distance_examples() {
        let z = BlochState::qubit(0.0, 0.0, 0.0).unwrap();
        let x = BlochState::qubit(0.2, 0.0, 0.0).unwrap();
        assert!((hs_distance_sq(&z, &x).unwrap() - 0.01).abs() < 1e-15);
        assert!((hs_trace_sq(&z, &x).unwrap() - 0.02).abs() < 1e-15);
        assert_eq!(hs_distance_sq(&x, &x).unwrap(), 0.0);

        let up = BlochState::qubit(0.0, 0.0, 1.0).unwrap();
        let down = BlochState::qubit(0.0, 0.0, -1.0).unwrap();
        assert!((trace_distance_sq(&up, &down).unwrap() - 1.0).abs() < 1e-12);
        assert!(fidelity_sq(&up, &down).unwrap().abs() < 1e-15);

        let p = BlochState::qubit(0.0, 0.0, 0.7).unwrap();
        let f = 0.5 * (1.0 + 0.51f64.sqrt());
        assert!((fidelity_sq(&z, &p).unwrap() - f).abs() < 1e-14);
        assert!((fidelity_loss(&z, &p).unwrap() - 0.142_929_3).abs() < 1e-6);
        assert!((fidelity_sq(&p, &p).unwrap() - 1.0).abs() < 1e-14);

        let q = BlochState::new(3, vec![0.0; 8]).unwrap();
        assert!(hs_distance_sq(&z, &q).is_err());
    }

    #[test]
    fn qubit_trace_equals_hs_and_closed_fidelity_matches_general() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let a = random_state(&mut rng, 2, 0.99);
            let b = random_state(&mut rng, 2, 0.99);
            let hs = hs_distance_sq(&a, &b).unwrap();
            assert!((trace_distance_sq(&a, &b).unwrap() - hs).abs() < 1e-10);
            assert!((hs_trace_sq(&a, &b).unwrap() - 2.0 * hs).abs() < 1e-12);
            let f = fidelity_sq(&a, &b).unwrap();
            assert!((fidelity_sq_general(&a, &b).unwrap() - f).abs() < 1e-8);
        }
    }

    #[test]
    fn pseudo_distance_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for i in 0..200 {
            let d = if i % 4 == 0 { 3 } else { 2 };
            let r = if d == 2 { 0.95 } else { 0.3 };
            let a = random_state(&mut rng, d, r);
            let b = random_state(&mut rng, d, r);
            type Dist = fn(&BlochState, &BlochState) -> Result<f64>;
            let fns: [Dist; 3] = [hs_distance_sq, trace_distance_sq, fidelity_loss];
            for f in fns {
                let ab = f(&a, &b).unwrap();
                assert!(ab > 0.0);
                assert!((ab - f(&b, &a).unwrap()).abs() < 1e-9);
                assert!(f(&a, &a).unwrap().abs() < 1e-9);
            }
        }
    }
}
