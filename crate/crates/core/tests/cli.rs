use std::path::Path;
use std::process::{Command, Output};

fn tomobench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tomobench")).args(args).output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn csv_column(path: &Path, name: &str) -> Vec<f64> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let idx = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

#[test]
fn eval_six_state_hs_and_kl() {
    let out = tomobench(&["eval", "--tester", "six-state", "--state", "0,0,0", "--loss", "hs"]);
    assert!(out.status.success());
    let v = json(&out);
    assert!((v["sigma1"].as_f64().unwrap() - 1.5).abs() < 1e-12);
    assert!((v["trace_g"].as_f64().unwrap() - 4.5).abs() < 1e-12);
    assert_eq!(v["informationally_complete"], true);

    let v = json(&tomobench(&["eval", "--state", "0,0,0", "--loss", "kl"]));
    assert!((v["sigma1"].as_f64().unwrap() - 1.0).abs() < 1e-12);

    let v = json(&tomobench(&["eval", "--polar", "0.7,1.5707963267948966,0", "--loss", "fidelity"]));
    assert!((v["trace_g"].as_f64().unwrap() - 4.5).abs() < 1e-9);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"dim": 2, "elements": [{"re": [[1, 0], [0, 1]], "im": [[0, 0]]}]}"#).unwrap();
    let out = tomobench(&["eval", "--tester", bad.to_str().unwrap(), "--state", "0,0,0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("elements.im"));

    let out = tomobench(&["eval", "--state", "0,0,1"]);
    assert_eq!(out.status.code(), Some(3));
    let out = tomobench(&["eval", "--tester", "z-projective", "--state", "0,0,0", "--loss", "hs"]);
    assert_eq!(out.status.code(), Some(3));
    let out = tomobench(&["eval", "--state", "0.9,0.9,0"]);
    assert_eq!(out.status.code(), Some(2));

    let out = tomobench(&["oracle", "--state", "0,0,0", "--eps-sq", "0.5"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty constraint set"));

    let sim = dir.path().join("sim");
    let out = tomobench(&["simulate", "--eps-sq", "2", "--n-list", "10,20,40", "--reps", "50", "--out", sim.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    assert!(sim.join("decay.csv").exists());
}

#[test]
fn sweep_hs_matches_closed_forms() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let out = tomobench(&["sweep", "--radius", "0.7", "--loss", "hs", "--grid", "37x73", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let tr = csv_column(&path, "tr_g");
    assert_eq!(tr.len(), 37 * 73);
    assert!(tr.iter().all(|t| (t - 3.765).abs() < 1e-12));
    let min = csv_column(&path, "sigma1_g").into_iter().fold(f64::INFINITY, f64::min);
    assert!((1.255 - 1e-12..1.255 + 0.02).contains(&min), "{min}");
    assert!(dir.path().join("sweep.csv.manifest.json").exists());

    let single = dir.path().join("one.csv");
    tomobench(&["sweep", "--radius", "0.7", "--loss", "fidelity", "--grid", "1x1", "--out", single.to_str().unwrap()]);
    let v = json(&tomobench(&["eval", "--state", "0,0,0.7", "--loss", "fidelity"]));
    assert!((csv_column(&single, "sigma1_g")[0] - v["sigma1"].as_f64().unwrap()).abs() < 1e-12);
}

#[test]
fn oracle_ratios_approach_limit() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("oracle.csv");
    let out = tomobench(&["oracle", "--state", "0,0,0", "--loss", "hs", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let ratios = csv_column(&path, "r_eps_over_eps_sq");
    assert!((ratios[2] - 2.0 / 3.0).abs() < 0.05 * 2.0 / 3.0);

    let out = tomobench(&["oracle", "--state", "0.2,-0.1,0.3", "--loss", "kl", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let errs: Vec<f64> = csv_column(&path, "r_eps_over_eps_sq").iter().map(|r| (r - 1.0).abs()).collect();
    assert!(errs.iter().all(|e| *e < 1e-3), "{errs:?}");
}

#[test]
fn simulate_config_file_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(
        &config,
        r#"{"tester": "six-state", "state": [0, 0, 0], "loss": "hs", "eps_sq": 0.01,
            "n_values": [4, 100, 200, 300, 400, 500], "repetitions": 2000, "seed": 42, "estimator": "linear"}"#,
    )
    .unwrap();
    let a = dir.path().join("a");
    let out = tomobench(&["simulate", config.to_str().unwrap(), "--out", a.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let unphysical = csv_column(&a.join("risk.csv"), "unphysical");
    assert!(unphysical[0] > 0.0);
    let ratio = json(&out)["ratio"].as_f64().unwrap();
    assert!((0.5..=1.5).contains(&ratio), "{ratio}");

    let b = dir.path().join("b");
    let out = tomobench(&["replay", a.join("manifest.json").to_str().unwrap(), "--out", b.to_str().unwrap()]);
    assert!(out.status.success());
    for f in ["decay.csv", "risk.csv", "summary.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let summary: serde_json::Value = serde_json::from_slice(&std::fs::read(a.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 42);
    assert_eq!(summary["config"]["estimator"], "linear");
}

#[test]
fn bad_thread_env_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_tomobench"))
        .args(["simulate", "--reps", "10", "--n-list", "10,20,30", "--out"])
        .arg(dir.path())
        .env("TOMOBENCH_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
