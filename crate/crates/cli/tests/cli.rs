use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn hgrowth(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hgrowth"))
        .args(args)
        .env_remove("HG_SEED")
        .output()
        .expect("binary runs")
}

fn ok_stdout(args: &[&str]) -> String {
    let out = hgrowth(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(args: &[&str]) -> Value {
    serde_json::from_str(&ok_stdout(args)).unwrap()
}

fn last_row(csv: &str) -> Vec<f64> {
    csv.lines()
        .last()
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect()
}

#[test]
fn solve_examples() {
    let v = json(&[
        "solve",
        "--support",
        "0,0.05",
        "--probs",
        "0.9,0.1",
        "--lambda-x",
        "0.02",
    ]);
    assert!((v["x_star"].as_f64().unwrap() - 0.0330278).abs() < 1e-7);

    let v = json(&[
        "solve",
        "--support",
        "0,0.02",
        "--probs",
        "0.5,0.5",
        "--lambda-x",
        "0.02",
        "--delta",
        "0.014",
    ]);
    assert!((v["g"].as_f64().unwrap() - 1.42e-4).abs() < 1e-6);

    let v = json(&[
        "solve",
        "--support",
        "0.05",
        "--probs",
        "1",
        "--lambda-x",
        "1",
    ]);
    assert_eq!(v["x_star"].as_f64().unwrap(), 0.05);
}

#[test]
fn solve_from_config_with_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("solve.json");
    fs::write(
        &cfg,
        r#"{"support":[0.0,0.02],"probs":[0.5,0.5],"lambda_x":0.5,"delta":0.014}"#,
    )
    .unwrap();
    let v = json(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--lambda-x",
        "0.02",
    ]);
    assert!((v["g"].as_f64().unwrap() - 1.42136e-4).abs() < 1e-9);
}

#[test]
fn lambda_sweep_schema() {
    let csv = ok_stdout(&[
        "solve",
        "--support",
        "0,0.05",
        "--probs",
        "0.9,0.1",
        "--sweep-lambda",
        "1e-4:1:50",
    ]);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("lambda,x_star,mu,r_h_minus_lambda"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 50);
    assert!(rows.windows(2).all(|w| w[1][1] < w[0][1]));
    assert!(rows.iter().all(|r| r[1] > r[2].max(r[3])));
}

#[test]
fn validation_errors_exit_2() {
    for args in [
        vec![
            "solve",
            "--support",
            "0.02,0",
            "--probs",
            "0.5,0.5",
            "--lambda-x",
            "0.02",
        ],
        vec![
            "solve",
            "--support",
            "0,0.02",
            "--probs",
            "0.5,0.6",
            "--lambda-x",
            "0.02",
        ],
        vec![
            "solve",
            "--support",
            "0,0.02",
            "--probs",
            "0.5,0.5",
            "--lambda-x",
            "-1",
        ],
        vec![
            "risk",
            "--support",
            "0,1",
            "--probs",
            "0.5,0.5",
            "--beta",
            "0.5",
            "--lambda-x",
            "0.5",
        ],
        vec!["sim", "--q-high", "1.5"],
    ] {
        let out = hgrowth(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        let err = String::from_utf8(out.stderr).unwrap();
        assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    }
}

#[test]
fn dynamics_examples() {
    let csv = ok_stdout(&[
        "dynamics",
        "--variant",
        "share",
        "--support",
        "0,0.02",
        "--probs",
        "0.5,0.5",
        "--lambda-x",
        "0.02",
        "--t-end",
        "2000",
    ]);
    let last = last_row(&csv);
    let p_high = std::f64::consts::FRAC_1_SQRT_2;
    assert!((last[1] - (1.0 - p_high)).abs() < 1e-6 && (last[2] - p_high).abs() < 1e-6);

    let common = [
        "--support",
        "0,0.02",
        "--probs",
        "0.5,0.5",
        "--delta",
        "0.014",
        "--t-end",
        "500",
    ];
    let mut dynasty = vec![
        "dynamics",
        "--variant",
        "dynasty",
        "--lambda-m",
        "0.01",
        "--lambda-r",
        "0.01",
    ];
    dynasty.extend(common);
    let mut mass = vec!["dynamics", "--variant", "mass", "--lambda-x", "0.02"];
    mass.extend(common);
    assert_eq!(ok_stdout(&dynasty), ok_stdout(&mass));

    let p = "0.29289321881345243,0.70710678118654757";
    let csv = ok_stdout(&[
        "dynamics",
        "--support",
        "0,0.02",
        "--probs",
        "0.5,0.5",
        "--lambda-x",
        "0.02",
        "--p0",
        p,
        "--t-end",
        "100",
    ]);
    for line in csv.lines().skip(1) {
        let row: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert!((row[2] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }
}

#[test]
fn risk_examples() {
    let base = [
        "risk",
        "--support",
        "1,100",
        "--probs",
        "0.99,0.01",
        "--lambda-x",
        "0.5",
    ];
    let at = |beta: &str| {
        let mut a = base.to_vec();
        a.extend(["--beta", beta]);
        json(&a)
    };
    assert_eq!(at("1")["prefers_lottery"], Value::Bool(true));
    let small = at("0.01");
    assert_eq!(small["prefers_lottery"], Value::Bool(false));
    assert!(small["beta_threshold"].as_f64().is_some());

    let v = json(&[
        "risk",
        "--support",
        "4",
        "--probs",
        "1",
        "--beta",
        "0.5",
        "--lambda-x",
        "0.5",
    ]);
    assert_eq!(v["beta_threshold"], Value::Null);
}

fn manifest(path: &Path) -> Value {
    let mut name = path.as_os_str().to_owned();
    name.push(".manifest.json");
    serde_json::from_str(&fs::read_to_string(name).unwrap()).unwrap()
}

#[test]
fn sim_is_deterministic_and_replayable() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let cfg = dir.path().join("baseline.json");
    fs::write(&cfg, r#"{"max_years": 20000, "lambda_m": 0.004}"#).unwrap();
    let args = |out: &Path| {
        vec![
            "sim".to_string(),
            "--config".into(),
            cfg.to_str().unwrap().into(),
            "--max-years".into(),
            "1500".into(),
            "--seed".into(),
            "7".into(),
            "--output".into(),
            out.to_str().unwrap().into(),
        ]
    };
    let run = |out: &Path| {
        let status = Command::new(env!("CARGO_BIN_EXE_hgrowth"))
            .args(args(out))
            .status()
            .unwrap();
        assert!(status.success());
    };
    run(&a);
    run(&b);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let m = manifest(&a);
    assert_eq!(m["command"], "sim");
    assert_eq!(m["seeds"], serde_json::json!([7]));
    assert_eq!(m["params"]["config"]["max_years"], 1500);
    assert_eq!(m["params"]["config"]["lambda_m"], 0.004);
    assert!(m["rng_algorithm"].as_str().unwrap().contains("ChaCha8"));

    let mut mpath = a.as_os_str().to_owned();
    mpath.push(".manifest.json");
    let c = dir.path().join("c.csv");
    let out = hgrowth(&[
        "replay",
        mpath.to_str().unwrap(),
        "--output",
        c.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
    assert!(hgrowth(&["replay", mpath.to_str().unwrap(), "--check"])
        .status
        .success());

    fs::write(&a, "tampered\n").unwrap();
    assert_eq!(
        hgrowth(&["replay", mpath.to_str().unwrap(), "--check"])
            .status
            .code(),
        Some(3)
    );
}

#[test]
fn seed_from_environment() {
    let run = |seed: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_hgrowth"))
            .args(["sim", "--max-years", "200"])
            .env("HG_SEED", seed)
            .output()
            .unwrap();
        assert!(out.status.success());
        out.stdout
    };
    let flag = ok_stdout(&["sim", "--max-years", "200", "--seed", "5"]);
    assert_eq!(run("5"), flag.into_bytes());
    assert_ne!(run("5"), run("6"));
}

#[test]
fn sweep_schema_and_jobs_invariance() {
    let dir = tempfile::tempdir().unwrap();
    let one = dir.path().join("one.csv");
    let four = dir.path().join("four.csv");
    let base = [
        "sweep",
        "--ratios",
        "0.25,1",
        "--runs",
        "3",
        "--max-years",
        "300",
        "--seed",
        "10",
    ];
    for (path, jobs) in [(&one, "1"), (&four, "4")] {
        let mut a = base.to_vec();
        a.extend(["--jobs", jobs, "--output", path.to_str().unwrap()]);
        assert!(hgrowth(&a).status.success());
    }
    let text = fs::read_to_string(&one).unwrap();
    assert_eq!(text, fs::read_to_string(&four).unwrap());
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("ratio,lambda_m,lambda_r,mean_growth,stdev_growth,extinctions,n_runs")
    );
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert!((first[1].parse::<f64>().unwrap() - 0.004).abs() < 1e-15);
    assert!((first[2].parse::<f64>().unwrap() - 0.016).abs() < 1e-15);
    assert_eq!(manifest(&one)["seeds"], serde_json::json!([10, 11, 12]));
}

#[test]
fn precision_flag() {
    let csv = ok_stdout(&["--precision", "4", "sim", "--max-years", "3", "--seed", "1"]);
    let row = csv.lines().nth(1).unwrap();
    let share = row.split(',').nth(2).unwrap();
    assert_eq!(share.split('e').next().unwrap().len(), 5);

    let full = ok_stdout(&["sim", "--max-years", "3", "--seed", "1"]);
    let share = full
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(2)
        .unwrap()
        .to_string();
    assert_eq!(share.split('e').next().unwrap().len(), 18);
}
