//! Simulated tomography: iid trials, reconstruction, empirical error
//! probabilities and risks, and averaged / worst-case tester scores.
//!
//! Every random draw comes from a ChaCha8 stream keyed by
//! `(seed, N)` with the run index as stream id, so results do not depend on
//! how runs are scheduled across threads.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Result, TomoError};
use crate::estimators::{linear_estimate, mle_fit, Frequencies, MleOptions};
use crate::linalg;
use crate::loss::LossSpec;
use crate::qstate::{param_dim, BlochState};
use crate::rates::{self, rate_report};
use crate::tester::Tester;

/// z-value of the 95% Wilson score interval.
const WILSON_Z: f64 = 1.96;
/// Fit only N whose exceedance count lies in `[MIN_EVENTS, R − MIN_EVENTS]`.
const MIN_EVENTS: usize = 10;

/// Counter-based generator for `(seed, n, stream)`.
pub fn stream_rng(seed: u64, n: u64, stream: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&n.to_le_bytes());
    key[16..].copy_from_slice(b"tomobench:trials");
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}

/// Multinomial draw of `n` outcomes from `probs` via conditional binomials.
pub fn sample_counts<R: RngCore>(probs: &[f64], n: u64, rng: &mut R) -> Vec<u64> {
    let mut counts = vec![0u64; probs.len()];
    let mut remaining = n;
    let mut mass = 1.0;
    let last = probs.len().saturating_sub(1);
    for (x, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if x == last {
            counts[x] = remaining;
            break;
        }
        let ratio = if mass > 0.0 { (p.max(0.0) / mass).clamp(0.0, 1.0) } else { 0.0 };
        let c = Binomial::new(remaining, ratio).expect("ratio in [0,1]").sample(rng);
        counts[x] = c;
        remaining -= c;
        mass -= p.max(0.0);
    }
    counts
}

/// `N` iid trials of `tester` on `s`, deterministic in `seed`.
pub fn sample_outcomes(tester: &Tester, s: &BlochState, n: u64, seed: u64) -> Result<Frequencies> {
    if n == 0 {
        return Err(TomoError::validation("n", "need at least one trial"));
    }
    let probs = tester.probabilities(s)?;
    let mut rng = stream_rng(seed, n, 0);
    Frequencies::new(sample_counts(probs.as_slice(), n, &mut rng))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Mle,
    Linear,
}

impl std::str::FromStr for EstimatorKind {
    type Err = TomoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mle" => Ok(Self::Mle),
            "linear" => Ok(Self::Linear),
            other => Err(TomoError::Unknown {
                what: "estimator",
                name: other.into(),
            }),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub tester: Tester,
    pub state: BlochState,
    pub loss: LossSpec,
    /// Threshold on the loss (loss units, i.e. `ε²`).
    pub eps_sq: f64,
    pub n_values: Vec<u64>,
    pub repetitions: usize,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        check_dim(self.tester.dim(), self.state.dim())?;
        check_dim(self.tester.dim(), self.loss.dim())?;
        if self.eps_sq.is_nan() || self.eps_sq <= 0.0 {
            return Err(TomoError::validation("eps_sq", "must be positive"));
        }
        if self.n_values.is_empty() || self.n_values[0] == 0 {
            return Err(TomoError::validation("n_values", "need positive trial counts"));
        }
        if self.n_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(TomoError::validation("n_values", "must be strictly increasing"));
        }
        if self.repetitions == 0 {
            return Err(TomoError::validation("repetitions", "must be at least 1"));
        }
        if !self.state.is_interior() {
            return Err(TomoError::BoundaryState("true state must be interior".into()));
        }
        Ok(())
    }
}

/// Result of one simulated tomography run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOutcome {
    pub loss: f64,
    pub physical: bool,
    pub converged: bool,
}

/// Reconstructs from one frequency vector and scores it against the truth.
pub fn run_once(cfg: &ExperimentConfig, estimator: EstimatorKind, f: &Frequencies) -> Result<RunOutcome> {
    let truth = cfg.state.coords();
    let (s_hat, physical, converged) = match estimator {
        EstimatorKind::Linear => {
            let e = linear_estimate(&cfg.tester, f)?;
            (e.s_hat, e.physical, true)
        }
        EstimatorKind::Mle => {
            let fit = mle_fit(&cfg.tester, &f.relative(), MleOptions::default())?;
            (fit.estimate.s_hat, true, fit.converged)
        }
    };
    Ok(RunOutcome {
        loss: cfg.loss.evaluate_raw(&s_hat, truth),
        physical,
        converged,
    })
}

fn run_batch(cfg: &ExperimentConfig, estimator: EstimatorKind, n: u64) -> Result<Vec<RunOutcome>> {
    let probs = cfg.tester.probabilities(&cfg.state)?;
    (0..cfg.repetitions as u64)
        .into_par_iter()
        .map(|run| {
            let mut rng = stream_rng(cfg.seed, n, run);
            let f = Frequencies::new(sample_counts(probs.as_slice(), n, &mut rng))?;
            run_once(cfg, estimator, &f)
        })
        .collect()
}

fn in_pool<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(job()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| TomoError::validation("threads", e.to_string()))?;
            Ok(pool.install(job))
        }
    }
}

/// 95% Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: usize, n: usize) -> (f64, f64) {
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayPoint {
    pub n: u64,
    pub exceedances: usize,
    pub p_hat: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
    pub used_in_fit: bool,
}

/// Empirical `P(Δ(ŝ_N, s) > ε²)` against `N`, with the fitted exponential
/// decay rate and its theoretical value `−ε²/σ₁(G)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRecord {
    pub eps_sq: f64,
    pub repetitions: usize,
    pub points: Vec<DecayPoint>,
    /// Slope of `log p̂` per trial; `None` with fewer than 3 fit points.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub theory_slope: f64,
    pub ratio: Option<f64>,
    /// `N` with no exceedances.
    pub censored: Vec<u64>,
    pub note: Option<String>,
}

fn decay_record(cfg: &ExperimentConfig, sigma1: f64, per_n: &[(u64, Vec<RunOutcome>)]) -> DecayRecord {
    let r = cfg.repetitions;
    let mut points = Vec::with_capacity(per_n.len());
    let mut censored = Vec::new();
    for (n, runs) in per_n {
        let exceed = runs.iter().filter(|o| o.loss > cfg.eps_sq).count();
        if exceed == 0 {
            censored.push(*n);
        }
        let (lo, hi) = wilson_interval(exceed, r);
        points.push(DecayPoint {
            n: *n,
            exceedances: exceed,
            p_hat: exceed as f64 / r as f64,
            wilson_lo: lo,
            wilson_hi: hi,
            used_in_fit: exceed >= MIN_EVENTS && exceed + MIN_EVENTS <= r,
        });
    }
    let theory_slope = -cfg.eps_sq / sigma1;
    let fit: Vec<(f64, f64, f64)> = points
        .iter()
        .filter(|p| p.used_in_fit)
        .map(|p| {
            let width = p.wilson_hi.ln() - p.wilson_lo.ln();
            (p.n as f64, p.p_hat.ln(), 1.0 / width)
        })
        .collect();
    let (slope, intercept, note) = if fit.len() >= 3 {
        let (s, i) = weighted_line(&fit);
        (Some(s), Some(i), None)
    } else if censored.len() == points.len() {
        (None, None, Some("every N censored: lower N or raise eps_sq".to_string()))
    } else {
        (
            None,
            None,
            Some(format!(
                "only {} N with {MIN_EVENTS} ≤ exceedances ≤ R−{MIN_EVENTS}: widen the N grid or raise R",
                fit.len()
            )),
        )
    };
    DecayRecord {
        eps_sq: cfg.eps_sq,
        repetitions: r,
        points,
        slope,
        intercept,
        theory_slope,
        ratio: slope.map(|s| s / theory_slope),
        censored,
        note,
    }
}

/// Weighted least-squares line through `(x, y, weight)`; returns (slope, intercept).
fn weighted_line(pts: &[(f64, f64, f64)]) -> (f64, f64) {
    let wsum: f64 = pts.iter().map(|p| p.2).sum();
    let xm = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / wsum;
    let ym = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / wsum;
    let sxy: f64 = pts.iter().map(|p| p.2 * (p.0 - xm) * (p.1 - ym)).sum();
    let sxx: f64 = pts.iter().map(|p| p.2 * (p.0 - xm) * (p.0 - xm)).sum();
    let slope = sxy / sxx;
    (slope, ym - slope * xm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskRow {
    pub n: u64,
    pub mean_loss: f64,
    pub std_err: f64,
    /// `N · mean_loss`, to compare with [`RiskTable::theory`].
    pub n_times_mean: f64,
    pub unphysical: usize,
    pub non_converged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskTable {
    pub rows: Vec<RiskRow>,
    /// `tr[H F⁺] / 2`.
    pub theory: f64,
}

fn risk_table(theory: f64, per_n: &[(u64, Vec<RunOutcome>)]) -> RiskTable {
    let rows = per_n
        .iter()
        .map(|(n, runs)| {
            let r = runs.len() as f64;
            let mean = runs.iter().map(|o| o.loss).sum::<f64>() / r;
            let var = if runs.len() > 1 {
                runs.iter().map(|o| (o.loss - mean).powi(2)).sum::<f64>() / (r - 1.0)
            } else {
                0.0
            };
            RiskRow {
                n: *n,
                mean_loss: mean,
                std_err: (var / r).sqrt(),
                n_times_mean: *n as f64 * mean,
                unphysical: runs.iter().filter(|o| !o.physical).count(),
                non_converged: runs.iter().filter(|o| !o.converged).count(),
            }
        })
        .collect();
    RiskTable { rows, theory }
}

/// Error-probability and risk curves from one shared set of simulated runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub estimator: EstimatorKind,
    pub sigma1: f64,
    pub decay: DecayRecord,
    pub risk: RiskTable,
}

/// Simulates every `(N, run)` pair once and derives both curves. `threads`
/// caps the worker count (`None` uses the global rayon pool).
pub fn run_experiment(
    cfg: &ExperimentConfig,
    estimator: EstimatorKind,
    threads: Option<usize>,
) -> Result<Experiment> {
    cfg.validate()?;
    let report = rate_report(&cfg.tester, &cfg.state, &cfg.loss)?;
    let per_n = in_pool(threads, || {
        cfg.n_values
            .iter()
            .map(|&n| run_batch(cfg, estimator, n).map(|runs| (n, runs)))
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(Experiment {
        estimator,
        sigma1: report.sigma1,
        decay: decay_record(cfg, report.sigma1, &per_n),
        risk: risk_table(report.risk_rate, &per_n),
    })
}

pub fn error_probability_curve(cfg: &ExperimentConfig, estimator: EstimatorKind) -> Result<DecayRecord> {
    run_experiment(cfg, estimator, None).map(|e| e.decay)
}

pub fn risk_curve(cfg: &ExperimentConfig, estimator: EstimatorKind) -> Result<RiskTable> {
    run_experiment(cfg, estimator, None).map(|e| e.risk)
}

/// A probability measure on states to average tester performance over.
pub trait StateMeasure: Sync {
    fn dim(&self) -> usize;
    /// Bloch coordinates of one draw; need not be valid (invalid draws are
    /// skipped and counted).
    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64>;
}

/// Uniform on the radius-`radius` ball in Bloch coordinates.
#[derive(Debug, Clone, Copy)]
pub struct UniformBall {
    pub dim: usize,
    pub radius: f64,
}

impl UniformBall {
    pub fn qubit() -> Self {
        Self { dim: 2, radius: 1.0 }
    }
}

impl StateMeasure for UniformBall {
    fn dim(&self) -> usize {
        self.dim
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let k = param_dim(self.dim);
        let v: Vec<f64> = (0..k).map(|_| StandardNormal.sample(rng)).collect();
        let norm = linalg::norm_sq(&v).sqrt();
        let u: f64 = Uniform::new(0.0, 1.0).expect("valid range").sample(rng);
        let r = self.radius * u.powf(1.0 / k as f64);
        v.into_iter().map(|x| x * r / norm).collect()
    }
}

/// Dirac measure at one state.
#[derive(Debug, Clone)]
pub struct PointMass(pub BlochState);

impl StateMeasure for PointMass {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn sample(&self, _rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.0.coords().to_vec()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Performance {
    pub mean: f64,
    pub std_err: f64,
    pub used: usize,
    pub skipped: usize,
}

/// Monte Carlo estimate of `∫ σ₁(G_s) dμ(s)`.
pub fn average_performance(
    tester: &Tester,
    loss: &LossSpec,
    measure: &dyn StateMeasure,
    n_samples: usize,
    seed: u64,
) -> Result<Performance> {
    check_dim(tester.dim(), measure.dim())?;
    let values: Vec<Option<f64>> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, u64::MAX, i);
            let s = BlochState::new(tester.dim(), measure.sample(&mut rng)).ok()?;
            if !s.is_interior() {
                return None;
            }
            rate_report(tester, &s, loss).ok().map(|r| r.sigma1)
        })
        .collect();
    let used: Vec<f64> = values.iter().flatten().copied().collect();
    if used.is_empty() {
        return Err(TomoError::Degenerate("no interior states drawn".into()));
    }
    let n = used.len() as f64;
    let mean = used.iter().sum::<f64>() / n;
    let var = if used.len() > 1 {
        used.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(Performance {
        mean,
        std_err: (var / n).sqrt(),
        used: used.len(),
        skipped: n_samples - used.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseGrid {
    pub directions: usize,
    pub radii: Vec<f64>,
}

impl Default for WorstCaseGrid {
    fn default() -> Self {
        Self {
            directions: 400,
            radii: (1..=9).map(|i| i as f64 / 10.0).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCase {
    pub value: f64,
    pub state: Vec<f64>,
    /// Best value on the grid before refinement.
    pub grid_value: f64,
    pub skipped: usize,
}

/// `max σ₁(G_s)` over a direction × radius grid, then local ascent from
/// the best grid point inside the largest grid radius.
pub fn worst_case_performance(tester: &Tester, loss: &LossSpec, grid: &WorstCaseGrid) -> Result<WorstCase> {
    let k = tester.k();
    let dim = tester.dim();
    let r_max = grid.radii.iter().copied().fold(0.0, f64::max);
    let score = |s: &[f64]| -> Option<f64> {
        let state = BlochState::new(dim, s.to_vec()).ok()?;
        if !state.is_interior() {
            return None;
        }
        rate_report(tester, &state, loss).ok().map(|r| r.sigma1)
    };

    let mut points = vec![vec![0.0; k]];
    for u in rates::directions(k, grid.directions) {
        for &r in &grid.radii {
            points.push(u.iter().map(|x| x * r).collect());
        }
    }
    let scored: Vec<Option<f64>> = points.par_iter().map(|p| score(p)).collect();
    let skipped = scored.iter().filter(|v| v.is_none()).count();
    let (best_i, grid_value) = scored
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|v| (i, v)))
        .fold(None, |acc: Option<(usize, f64)>, (i, v)| match acc {
            Some((_, b)) if b >= v => acc,
            _ => Some((i, v)),
        })
        .ok_or_else(|| TomoError::Degenerate("loss undefined on the whole grid".into()))?;

    let mut s = points[best_i].clone();
    let mut value = grid_value;
    let mut step = 0.05;
    while step > 1e-10 {
        let mut improved = false;
        for a in 0..k {
            for sign in [1.0, -1.0] {
                let mut cand = s.clone();
                cand[a] += sign * step;
                if linalg::norm_sq(&cand).sqrt() > r_max {
                    continue;
                }
                if let Some(v) = score(&cand) {
                    if v > value {
                        value = v;
                        s = cand;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok(WorstCase {
        value,
        state: s,
        grid_value,
        skipped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub theta: f64,
    pub phi: f64,
    pub tr_g: f64,
    pub sigma1_g: f64,
}

/// `tr G` and `σ₁(G)` on the sphere `‖s‖ = r`, θ ∈ [0, π] and φ ∈ [0, 2π]
/// sampled inclusively (a single point per axis sits at 0).
pub fn angular_sweep(
    tester: &Tester,
    r: f64,
    loss: &LossSpec,
    n_theta: usize,
    n_phi: usize,
) -> Result<Vec<SweepRow>> {
    if tester.dim() != 2 {
        return Err(TomoError::validation("dim", "angular sweep is defined for qubits"));
    }
    if !(r > 0.0 && r < 1.0) {
        return Err(TomoError::validation("radius", format!("need 0 < r < 1, got {r}")));
    }
    if n_theta == 0 || n_phi == 0 {
        return Err(TomoError::validation("grid", "grid needs at least one point per axis"));
    }
    let axis = |n: usize, span: f64| -> Vec<f64> {
        if n == 1 {
            vec![0.0]
        } else {
            (0..n).map(|i| span * i as f64 / (n - 1) as f64).collect()
        }
    };
    let thetas = axis(n_theta, std::f64::consts::PI);
    let phis = axis(n_phi, 2.0 * std::f64::consts::PI);
    let mut rows = Vec::with_capacity(n_theta * n_phi);
    for &theta in &thetas {
        for &phi in &phis {
            let s = BlochState::qubit_polar(r, theta, phi)?;
            let rep = rate_report(tester, &s, loss)?;
            rows.push(SweepRow {
                theta,
                phi,
                tr_g: rep.trace_g,
                sigma1_g: rep.sigma1,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tester::six_state_povm;

    fn config(eps_sq: f64, n_values: Vec<u64>, reps: usize) -> ExperimentConfig {
        ExperimentConfig {
            tester: six_state_povm(),
            state: BlochState::qubit(0.0, 0.0, 0.0).unwrap(),
            loss: LossSpec::hilbert_schmidt(2),
            eps_sq,
            n_values,
            repetitions: reps,
            seed: 42,
        }
    }

    #[test]
    fn sampling_basics() {
        let t = six_state_povm();
        let z = BlochState::qubit(0.0, 0.0, 0.0).unwrap();
        let one = sample_outcomes(&t, &z, 1, 3).unwrap();
        assert_eq!(one.counts().iter().filter(|&&c| c == 1).count(), 1);
        let a = sample_outcomes(&t, &z, 1000, 9).unwrap();
        let b = sample_outcomes(&t, &z, 1000, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.total(), 1000);
        assert!(sample_outcomes(&t, &z, 0, 9).is_err());
    }

    #[test]
    fn large_sample_concentrates() {
        // Binomial sd at N = 6e6, p = 1/6 is 1.5e-4; 1e-3 is ~6.5 sd.
        let t = six_state_povm();
        let z = BlochState::qubit(0.0, 0.0, 0.0).unwrap();
        let f = sample_outcomes(&t, &z, 6_000_000, 1).unwrap();
        for q in f.relative() {
            assert!((q - 1.0 / 6.0).abs() < 1e-3);
        }
    }

    #[test]
    fn wilson_interval_brackets_estimate() {
        let (lo, hi) = wilson_interval(10, 100);
        assert!(lo < 0.1 && hi > 0.1);
        let (lo, hi) = wilson_interval(0, 100);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0);
    }

    #[test]
    fn huge_threshold_censors_everything() {
        let cfg = config(10.0, vec![10, 20, 40], 50);
        let d = error_probability_curve(&cfg, EstimatorKind::Mle).unwrap();
        assert!(d.points.iter().all(|p| p.p_hat == 0.0));
        assert_eq!(d.censored.len(), 3);
        assert!(d.slope.is_none() && d.note.is_some());
    }

    #[test]
    fn config_validation() {
        assert!(config(0.0, vec![10], 1).validate().is_err());
        assert!(config(0.1, vec![10, 10], 1).validate().is_err());
        assert!(config(0.1, vec![10], 0).validate().is_err());
        let mut c = config(0.1, vec![10], 1);
        c.state = BlochState::qubit(0.0, 0.0, 1.0).unwrap();
        assert!(matches!(c.validate(), Err(TomoError::BoundaryState(_))));
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let cfg = config(0.01, vec![100, 200], 200);
        let a = run_experiment(&cfg, EstimatorKind::Mle, Some(1)).unwrap();
        let b = run_experiment(&cfg, EstimatorKind::Mle, Some(4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn exact_frequencies_give_zero_loss() {
        // N p_s(x) is integral for s = (0, 0, 0.4), N = 600.
        let mut cfg = config(0.01, vec![600], 1);
        cfg.state = BlochState::qubit(0.0, 0.0, 0.4).unwrap();
        let f = Frequencies::new(vec![100, 100, 100, 100, 140, 60]).unwrap();
        let o = run_once(&cfg, EstimatorKind::Mle, &f).unwrap();
        assert!(o.loss < 1e-12 && o.converged);
    }

    #[test]
    fn linear_runs_report_unphysical_estimates() {
        let mut cfg = config(0.01, vec![20, 40], 300);
        cfg.state = BlochState::qubit(0.0, 0.0, 0.9).unwrap();
        let e = run_experiment(&cfg, EstimatorKind::Linear, None).unwrap();
        assert!(e.risk.rows[0].unphysical > 0);
    }

    #[test]
    fn average_and_worst_case() {
        let t = six_state_povm();
        let kl = LossSpec::kl(&t);
        let p = average_performance(&t, &kl, &UniformBall::qubit(), 200, 5).unwrap();
        assert!((p.mean - 1.0).abs() < 1e-9 && p.std_err < 1e-9);

        let hs = LossSpec::hilbert_schmidt(2);
        let p = average_performance(&t, &hs, &UniformBall::qubit(), 500, 5).unwrap();
        assert!(p.mean >= 1.0 && p.mean <= 1.5);
        let again = average_performance(&t, &hs, &UniformBall::qubit(), 500, 5).unwrap();
        assert_eq!(p, again);

        let s = BlochState::qubit(0.3, 0.4, 0.5).unwrap();
        let point = average_performance(&t, &hs, &PointMass(s.clone()), 3, 1).unwrap();
        let direct = rate_report(&t, &s, &hs).unwrap().sigma1;
        assert_eq!(point.mean, direct);

        let grid = WorstCaseGrid { directions: 50, radii: vec![0.3, 0.6, 0.9] };
        let w = worst_case_performance(&t, &hs, &grid).unwrap();
        assert!(w.value >= w.grid_value);
        assert!((w.value - 1.5).abs() < 1e-9);
        let w = worst_case_performance(&t, &kl, &grid).unwrap();
        assert!((w.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn sweep_shapes() {
        let t = six_state_povm();
        let rows = angular_sweep(&t, 0.7, &LossSpec::hilbert_schmidt(2), 7, 9).unwrap();
        assert_eq!(rows.len(), 63);
        assert!(rows.iter().all(|r| (r.tr_g - 3.765).abs() < 1e-12));
        let one = angular_sweep(&t, 0.7, &LossSpec::hilbert_schmidt(2), 1, 1).unwrap();
        let s = BlochState::qubit(0.0, 0.0, 0.7).unwrap();
        let rep = rate_report(&t, &s, &LossSpec::hilbert_schmidt(2)).unwrap();
        assert_eq!(one[0].sigma1_g, rep.sigma1);
        assert!(angular_sweep(&t, 1.0, &LossSpec::hilbert_schmidt(2), 2, 2).is_err());
    }
}
