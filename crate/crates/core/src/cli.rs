//! Command-line front end: `eval`, `sweep`, `simulate`, `oracle`, `replay`.
//!
//! Exit codes: 0 success, 2 validation, 3 domain (boundary state, support
//! violation), 4 degenerate experiment (all censored, empty constraint set).

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{Result, TomoError};
use crate::loss::LossSpec;
use crate::montecarlo::{angular_sweep, run_experiment, EstimatorKind, Experiment, ExperimentConfig, SweepRow};
use crate::qstate::BlochState;
use crate::rates::{kl_infimum_oracle, rate_report, RateReport};
use crate::tester::{self, Tester, TesterJson};

pub const THREADS_ENV: &str = "TOMOBENCH_THREADS";

#[derive(Debug, Parser)]
#[command(name = "tomobench", version, about = "Evaluate tomography testers by Fisher-matrix rates and simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rate report (σ₁(G), tr G, error-rate bound, risk rate) at one state.
    Eval(EvalArgs),
    /// tr G and σ₁(G) over θ×φ at fixed Bloch radius, as CSV.
    Sweep(SweepArgs),
    /// Monte Carlo error-probability and risk curves.
    Simulate(SimulateArgs),
    /// Direct KL-infimum rate R for a list of ε² thresholds.
    Oracle(OracleArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Args)]
pub struct StateArgs {
    /// Tester JSON path or built-in alias (six-state, z-projective).
    #[arg(long, default_value = "six-state")]
    pub tester: String,
    /// Comma-separated Bloch coordinates.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "polar")]
    pub state: Option<String>,
    /// Qubit state as R,THETA,PHI.
    #[arg(long, allow_hyphen_values = true)]
    pub polar: Option<String>,
    /// hs | trace | fidelity | kl | euclidean | functional:<name>
    #[arg(long, default_value = "hs")]
    pub loss: String,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub target: StateArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, default_value = "six-state")]
    pub tester: String,
    #[arg(long, default_value_t = 0.7)]
    pub radius: f64,
    #[arg(long, default_value = "hs")]
    pub loss: String,
    /// NTHETAxNPHI grid points.
    #[arg(long, default_value = "37x73")]
    pub grid: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Simulation config JSON; flags override its fields.
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub tester: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub state: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub polar: Option<String>,
    #[arg(long)]
    pub loss: Option<String>,
    #[arg(long)]
    pub eps_sq: Option<f64>,
    /// Comma-separated trial counts.
    #[arg(long)]
    pub n_list: Option<String>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// mle | linear
    #[arg(long)]
    pub estimator: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub target: StateArgs,
    /// Comma-separated ε² thresholds.
    #[arg(long, default_value = "1e-2,1e-3,1e-4")]
    pub eps_sq: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Write outputs here instead of the recorded location.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Where a tester comes from: built-in alias, JSON path, or inline schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TesterSource {
    Named(String),
    Inline(TesterJson),
}

impl TesterSource {
    pub fn load(&self) -> Result<Tester> {
        match self {
            TesterSource::Inline(j) => j.clone().into_tester(),
            TesterSource::Named(name) => match tester::builtin(name) {
                Some(t) => Ok(t),
                None => {
                    let text = fs::read_to_string(name).map_err(|e| {
                        TomoError::validation("tester", format!("{name}: not a built-in alias and unreadable ({e})"))
                    })?;
                    Tester::from_json(&text)
                }
            },
        }
    }
}

/// Serializable simulation setup (the `simulate` config file).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub tester: TesterSource,
    pub state: Vec<f64>,
    pub loss: String,
    pub eps_sq: f64,
    pub n_values: Vec<u64>,
    pub repetitions: usize,
    pub seed: u64,
    #[serde(default = "default_estimator")]
    pub estimator: EstimatorKind,
}

fn default_estimator() -> EstimatorKind {
    EstimatorKind::Mle
}

impl SimulationConfig {
    pub fn build(&self) -> Result<ExperimentConfig> {
        let tester = self.tester.load()?;
        let state = BlochState::new(tester.dim(), self.state.clone())?;
        let loss = LossSpec::parse(&self.loss, &tester)?;
        Ok(ExperimentConfig {
            tester,
            state,
            loss,
            eps_sq: self.eps_sq,
            n_values: self.n_values.clone(),
            repetitions: self.repetitions,
            seed: self.seed,
        })
    }
}

/// Written next to every output; replaying it reproduces the outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub version: String,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    fn new(command: &str, config: serde_json::Value, seed: Option<u64>, outputs: Vec<PathBuf>) -> Self {
        Self {
            command: command.into(),
            config,
            seed,
            version: env!("CARGO_PKG_VERSION").into(),
            outputs,
        }
    }
}

/// Full double precision, '.' decimal separator.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_list<T: std::str::FromStr>(text: &str, field: &'static str) -> Result<Vec<T>> {
    text.split(',')
        .map(|p| p.trim().parse::<T>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| TomoError::validation(field, format!("cannot parse '{text}'")))
}

fn parse_state(tester: &Tester, state: Option<&str>, polar: Option<&str>) -> Result<BlochState> {
    match (state, polar) {
        (_, Some(p)) => {
            let v: Vec<f64> = parse_list(p, "polar")?;
            if v.len() != 3 || tester.dim() != 2 {
                return Err(TomoError::validation("polar", "expects R,THETA,PHI for a qubit tester"));
            }
            BlochState::qubit_polar(v[0], v[1], v[2])
        }
        (Some(s), None) => BlochState::new(tester.dim(), parse_list(s, "state")?),
        (None, None) => BlochState::maximally_mixed(tester.dim()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOutput {
    pub state: Vec<f64>,
    pub loss: String,
    pub informationally_complete: bool,
    pub w_rank: usize,
    pub sigma1: f64,
    pub trace_g: f64,
    pub error_rate_bound: f64,
    pub risk_rate: f64,
    pub report: RateReport,
}

pub fn cmd_eval(target: &StateArgs) -> Result<EvalOutput> {
    let tester = TesterSource::Named(target.tester.clone()).load()?;
    let state = parse_state(&tester, target.state.as_deref(), target.polar.as_deref())?;
    let loss = LossSpec::parse(&target.loss, &tester)?;
    let report = rate_report(&tester, &state, &loss)?;
    let (complete, rank) = tester.informational_completeness();
    Ok(EvalOutput {
        state: state.coords().to_vec(),
        loss: loss.name(),
        informationally_complete: complete,
        w_rank: rank,
        sigma1: report.sigma1,
        trace_g: report.trace_g,
        error_rate_bound: report.error_rate_bound,
        risk_rate: report.risk_rate,
        report,
    })
}

fn to_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_error)?;
    for row in rows {
        w.write_record(&row).map_err(csv_error)?;
    }
    let bytes = w.into_inner().map_err(|e| csv_error(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn csv_error(e: csv::Error) -> TomoError {
    TomoError::Io(std::io::Error::other(e))
}

pub fn sweep_csv(rows: &[SweepRow]) -> Result<String> {
    to_csv(
        &["theta", "phi", "tr_g", "sigma1_g"],
        rows.iter().map(|r| vec![fmt_f64(r.theta), fmt_f64(r.phi), fmt_f64(r.tr_g), fmt_f64(r.sigma1_g)]),
    )
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<Vec<SweepRow>> {
    let tester = TesterSource::Named(args.tester.clone()).load()?;
    let loss = LossSpec::parse(&args.loss, &tester)?;
    let (nt, np) = args
        .grid
        .split_once(['x', 'X'])
        .and_then(|(a, b)| Some((a.parse().ok()?, b.parse().ok()?)))
        .ok_or_else(|| TomoError::validation("grid", format!("expected NTHETAxNPHI, got '{}'", args.grid)))?;
    let rows = angular_sweep(&tester, args.radius, &loss, nt, np)?;
    write_file(&args.out, &sweep_csv(&rows)?)?;
    let manifest = RunManifest::new(
        "sweep",
        serde_json::json!({
            "tester": args.tester, "radius": args.radius, "loss": args.loss, "grid": args.grid,
        }),
        None,
        vec![args.out.clone()],
    );
    write_file(&manifest_path(&args.out), &serde_json::to_string_pretty(&manifest)?)?;
    Ok(rows)
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, contents)?;
    Ok(())
}

pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| TomoError::validation("TOMOBENCH_THREADS", format!("'{v}' is not a positive integer"))),
    }
}

pub fn decay_csv(e: &Experiment) -> Result<String> {
    to_csv(
        &["n", "exceedances", "p_hat", "wilson_lo", "wilson_hi", "used_in_fit"],
        e.decay.points.iter().map(|p| {
            vec![
                p.n.to_string(),
                p.exceedances.to_string(),
                fmt_f64(p.p_hat),
                fmt_f64(p.wilson_lo),
                fmt_f64(p.wilson_hi),
                p.used_in_fit.to_string(),
            ]
        }),
    )
}

pub fn risk_csv(e: &Experiment) -> Result<String> {
    to_csv(
        &["n", "mean_loss", "std_err", "n_times_mean", "theory", "unphysical", "non_converged"],
        e.risk.rows.iter().map(|r| {
            vec![
                r.n.to_string(),
                fmt_f64(r.mean_loss),
                fmt_f64(r.std_err),
                fmt_f64(r.n_times_mean),
                fmt_f64(e.risk.theory),
                r.unphysical.to_string(),
                r.non_converged.to_string(),
            ]
        }),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub config: SimulationConfig,
    pub seed: u64,
    pub experiment: Experiment,
}

fn simulation_config(args: &SimulateArgs) -> Result<SimulationConfig> {
    let mut cfg = match &args.config {
        Some(path) => serde_json::from_str::<SimulationConfig>(&fs::read_to_string(path)?)?,
        None => SimulationConfig {
            tester: TesterSource::Named("six-state".into()),
            state: vec![0.0; 3],
            loss: "hs".into(),
            eps_sq: 0.01,
            n_values: (1..=10).map(|i| 200 * i).collect(),
            repetitions: 10_000,
            seed: 42,
            estimator: EstimatorKind::Mle,
        },
    };
    if let Some(t) = &args.tester {
        cfg.tester = TesterSource::Named(t.clone());
    }
    if args.state.is_some() || args.polar.is_some() {
        let t = cfg.tester.load()?;
        cfg.state = parse_state(&t, args.state.as_deref(), args.polar.as_deref())?.into_coords();
    }
    if let Some(l) = &args.loss {
        cfg.loss = l.clone();
    }
    if let Some(e) = args.eps_sq {
        cfg.eps_sq = e;
    }
    if let Some(n) = &args.n_list {
        cfg.n_values = parse_list(n, "n_list")?;
    }
    if let Some(r) = args.reps {
        cfg.repetitions = r;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(e) = &args.estimator {
        cfg.estimator = e.parse()?;
    }
    Ok(cfg)
}

/// Runs the simulation and writes `decay.csv`, `risk.csv`, `summary.json`
/// and `manifest.json` into `out`. An experiment with no fittable decay
/// slope still writes its files, then reports [`TomoError::Degenerate`].
pub fn cmd_simulate_config(cfg: &SimulationConfig, out: &Path, threads: Option<usize>) -> Result<Experiment> {
    let experiment = run_experiment(&cfg.build()?, cfg.estimator, threads)?;
    fs::create_dir_all(out)?;
    let files = [
        (out.join("decay.csv"), decay_csv(&experiment)?),
        (out.join("risk.csv"), risk_csv(&experiment)?),
        (
            out.join("summary.json"),
            serde_json::to_string_pretty(&SimulationSummary {
                config: cfg.clone(),
                seed: cfg.seed,
                experiment: experiment.clone(),
            })?,
        ),
    ];
    for (path, text) in &files {
        write_file(path, text)?;
    }
    let manifest = RunManifest::new(
        "simulate",
        serde_json::to_value(cfg)?,
        Some(cfg.seed),
        files.iter().map(|(p, _)| p.clone()).collect(),
    );
    write_file(&out.join("manifest.json"), &serde_json::to_string_pretty(&manifest)?)?;
    if experiment.decay.slope.is_none() {
        return Err(TomoError::Degenerate(
            experiment.decay.note.clone().unwrap_or_else(|| "no decay slope".into()),
        ));
    }
    Ok(experiment)
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<Experiment> {
    cmd_simulate_config(&simulation_config(args)?, &args.out, threads_from_env()?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub eps_sq: f64,
    pub rate: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleOutput {
    /// `1/σ₁(G)`, the `ε → 0` limit of `R/ε²`.
    pub limit: f64,
    pub rows: Vec<OracleRow>,
}

pub fn cmd_oracle_values(target: &StateArgs, eps_sq: &[f64]) -> Result<OracleOutput> {
    let tester = TesterSource::Named(target.tester.clone()).load()?;
    let state = parse_state(&tester, target.state.as_deref(), target.polar.as_deref())?;
    let loss = LossSpec::parse(&target.loss, &tester)?;
    let limit = rate_report(&tester, &state, &loss)?.error_rate_bound;
    let rows = eps_sq
        .iter()
        .map(|&e| {
            let rate = kl_infimum_oracle(&tester, &state, &loss, e)?;
            Ok(OracleRow { eps_sq: e, rate, ratio: rate / e })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OracleOutput { limit, rows })
}

pub fn oracle_csv(o: &OracleOutput) -> Result<String> {
    to_csv(
        &["eps_sq", "r_eps", "r_eps_over_eps_sq", "limit"],
        o.rows.iter().map(|r| vec![fmt_f64(r.eps_sq), fmt_f64(r.rate), fmt_f64(r.ratio), fmt_f64(o.limit)]),
    )
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_file(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn replay(args: &ReplayArgs) -> Result<()> {
    let manifest: RunManifest = serde_json::from_str(&fs::read_to_string(&args.manifest)?)?;
    match manifest.command.as_str() {
        "simulate" => {
            let cfg: SimulationConfig = serde_json::from_value(manifest.config)?;
            let out = match &args.out {
                Some(o) => o.clone(),
                None => manifest
                    .outputs
                    .first()
                    .and_then(|p| p.parent())
                    .map(Path::to_path_buf)
                    .unwrap_or_else(|| PathBuf::from(".")),
            };
            let e = cmd_simulate_config(&cfg, &out, threads_from_env()?)?;
            println!("{}", serde_json::to_string_pretty(&e.decay)?);
            Ok(())
        }
        "sweep" => {
            let c = &manifest.config;
            let field = |k: &str| {
                c.get(k)
                    .cloned()
                    .ok_or_else(|| TomoError::validation("manifest.config", format!("missing '{k}'")))
            };
            let args = SweepArgs {
                tester: serde_json::from_value(field("tester")?)?,
                radius: serde_json::from_value(field("radius")?)?,
                loss: serde_json::from_value(field("loss")?)?,
                grid: serde_json::from_value(field("grid")?)?,
                out: args
                    .out
                    .clone()
                    .or_else(|| manifest.outputs.first().cloned())
                    .unwrap_or_else(|| PathBuf::from("sweep.csv")),
            };
            cmd_sweep(&args).map(|_| ())
        }
        other => Err(TomoError::Unknown {
            what: "manifest command",
            name: other.into(),
        }),
    }
}

/// Executes a parsed command line, printing results to stdout.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Eval(args) => {
            let out = cmd_eval(&args.target)?;
            emit(args.out.as_deref(), &(serde_json::to_string_pretty(&out)? + "\n"))
        }
        Command::Sweep(args) => {
            let rows = cmd_sweep(&args)?;
            eprintln!("wrote {} rows to {}", rows.len(), args.out.display());
            Ok(())
        }
        Command::Simulate(args) => {
            let e = cmd_simulate(&args)?;
            println!("{}", serde_json::to_string_pretty(&e.decay)?);
            Ok(())
        }
        Command::Oracle(args) => {
            let eps: Vec<f64> = parse_list(&args.eps_sq, "eps_sq")?;
            let o = cmd_oracle_values(&args.target, &eps)?;
            emit(args.out.as_deref(), &oracle_csv(&o)?)
        }
        Command::Replay(args) => replay(&args),
    }
}
