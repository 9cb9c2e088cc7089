#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use tomobench::{BlochState, HermitianMatrix, Tester};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Uniform in the qubit ball of radius `r_max`.
pub fn random_qubit(rng: &mut ChaCha8Rng, r_max: f64) -> BlochState {
    let g = gaussian_vec(rng, 3);
    let n = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    let r = r_max * rng.random::<f64>().cbrt();
    BlochState::qubit(r * g[0] / n, r * g[1] / n, r * g[2] / n).unwrap()
}

/// Random interior state of a d-level system: Gaussian Bloch vector shrunk
/// until the minimum density eigenvalue is at least `margin`.
pub fn random_state(rng: &mut ChaCha8Rng, dim: usize, margin: f64) -> BlochState {
    let k = dim * dim - 1;
    let mut s = gaussian_vec(rng, k);
    let scale = rng.random::<f64>();
    for x in &mut s {
        *x *= scale;
    }
    loop {
        if tomobench::qstate::min_density_eigenvalue(dim, &s) >= margin {
            return BlochState::new(dim, s).unwrap();
        }
        for x in &mut s {
            *x *= 0.8;
        }
    }
}

pub fn random_psd(rng: &mut ChaCha8Rng, n: usize, rank: usize, ridge: f64) -> DMatrix<f64> {
    let x: DMatrix<f64> = DMatrix::from_fn(n, rank, |_, _| StandardNormal.sample(rng));
    &x * x.transpose() + DMatrix::identity(n, n) * ridge
}

fn herm(m: DMatrix<Complex64>) -> HermitianMatrix {
    let h = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
    HermitianMatrix::new(h).unwrap()
}

fn random_ket(rng: &mut ChaCha8Rng, dim: usize) -> DVector<Complex64> {
    DVector::from_fn(dim, |_, _| Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
}

fn random_unitary(rng: &mut ChaCha8Rng, dim: usize) -> DMatrix<Complex64> {
    let z = DMatrix::from_fn(dim, dim, |_, _| Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)));
    z.qr().q()
}

/// `m` random rank-one effects, renormalised by `S^{-1/2}` so they sum to I.
pub fn random_ic_tester(rng: &mut ChaCha8Rng, dim: usize, m: usize) -> Tester {
    let raw: Vec<DMatrix<Complex64>> = (0..m)
        .map(|_| {
            let v = random_ket(rng, dim);
            &v * v.adjoint()
        })
        .collect();
    let total = raw.iter().fold(DMatrix::zeros(dim, dim), |acc, a| acc + a);
    let eig = nalgebra::SymmetricEigen::new(total);
    let inv_sqrt = DMatrix::from_diagonal(&DVector::from_iterator(
        dim,
        eig.eigenvalues.iter().map(|&l| Complex64::new(1.0 / l.sqrt(), 0.0)),
    ));
    let t = &eig.eigenvectors * inv_sqrt * eig.eigenvectors.adjoint();
    Tester::new(raw.iter().map(|a| herm(&t * a * &t)).collect()).unwrap()
}

/// Qubit tester whose Bloch directions lie in a random line (`rank = 1`)
/// or plane (`rank = 2`): pairs `α_j (I ± u_j·σ)/2`.
pub fn random_planar_qubit_tester(rng: &mut ChaCha8Rng, rank: usize, pairs: usize) -> Tester {
    assert!((1..=2).contains(&rank));
    let a = gaussian_vec(rng, 3);
    let b = gaussian_vec(rng, 3);
    let weights: Vec<f64> = (0..pairs).map(|_| 0.2 + rng.random::<f64>()).collect();
    let wsum: f64 = weights.iter().sum();
    let mut elements = Vec::new();
    for &w in &weights {
        let (ca, cb) = if rank == 1 { (1.0, 0.0) } else { (StandardNormal.sample(rng), StandardNormal.sample(rng)) };
        let u: Vec<f64> = (0..3).map(|i| ca * a[i] + cb * b[i]).collect();
        let n = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        let len = 0.3 + 0.7 * rng.random::<f64>();
        for sign in [1.0, -1.0] {
            let (x, y, z) = (sign * len * u[0] / n, sign * len * u[1] / n, sign * len * u[2] / n);
            let m = DMatrix::from_row_slice(
                2,
                2,
                &[
                    Complex64::new(1.0 + z, 0.0),
                    Complex64::new(x, -y),
                    Complex64::new(x, y),
                    Complex64::new(1.0 - z, 0.0),
                ],
            ) * Complex64::new(0.5 * w / wsum, 0.0);
            elements.push(herm(m));
        }
    }
    Tester::new(elements).unwrap()
}

/// Effects diagonal in one random basis; their span has rank `dim − 1`.
pub fn random_commuting_tester(rng: &mut ChaCha8Rng, dim: usize, m: usize) -> Tester {
    let u = random_unitary(rng, dim);
    let c: Vec<Vec<f64>> = (0..m).map(|_| (0..dim).map(|_| 0.1 + rng.random::<f64>()).collect()).collect();
    let elements = (0..m)
        .map(|i| {
            let diag = DVector::from_iterator(
                dim,
                (0..dim).map(|k| Complex64::new(c[i][k] / c.iter().map(|row| row[k]).sum::<f64>(), 0.0)),
            );
            herm(&u * DMatrix::from_diagonal(&diag) * u.adjoint())
        })
        .collect();
    Tester::new(elements).unwrap()
}

/// Six-state outcome probabilities, order x+, x−, y+, y−, z+, z−.
pub fn six_state_probs(s: &[f64]) -> Vec<f64> {
    s.iter().flat_map(|&a| [(1.0 + a) / 6.0, (1.0 - a) / 6.0]).collect()
}

pub fn kl(q: &[f64], p: &[f64]) -> f64 {
    q.iter()
        .zip(p)
        .filter(|(qx, _)| **qx > 0.0)
        .map(|(qx, px)| qx * (qx / px).ln())
        .sum()
}

/// Qubit fidelity `F²` between Bloch vectors.
pub fn qubit_fidelity_sq(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let ra: f64 = a.iter().map(|x| x * x).sum();
    let rb: f64 = b.iter().map(|x| x * x).sum();
    0.5 * (1.0 + dot + ((1.0 - ra) * (1.0 - rb)).max(0.0).sqrt())
}

/// Central-difference Hessian in the first argument at `x`.
pub fn fd_hessian(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> DMatrix<f64> {
    let n = x.len();
    let at = |di: usize, si: f64, dj: usize, sj: f64| {
        let mut y = x.to_vec();
        y[di] += si * h;
        y[dj] += sj * h;
        f(&y)
    };
    DMatrix::from_fn(n, n, |i, j| {
        (at(i, 1.0, j, 1.0) - at(i, 1.0, j, -1.0) - at(i, -1.0, j, 1.0) + at(i, -1.0, j, -1.0)) / (4.0 * h * h)
    })
}

pub fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax() / b.amax().max(1e-300)
}
