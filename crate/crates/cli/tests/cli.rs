use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_atv-copula"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn generate(dir: &Path, name: &str, extra: &[&str]) -> String {
    let path = dir.join(name);
    let path_str = path.to_str().unwrap().to_owned();
    let mut args = vec!["generate", "--out", &path_str];
    args.extend_from_slice(extra);
    let out = run(&args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    path_str
}

#[test]
fn test_reports_json_for_one_statistic() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate(
        dir.path(),
        "d.csv",
        &[
            "--kind", "copula", "--tau", "0.3", "--n", "120", "--seed", "1",
        ],
    );
    let out = run(&["test", &data, "--stat", "ks", "--boot", "50", "--seed", "2"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let json: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["statistic_kind"], "ks");
    assert_eq!(json["n"], 120);
    let p = json["p_value"].as_f64().unwrap();
    assert!(p > 0.0 && p <= 1.0);
}

#[test]
fn several_statistics_give_an_array() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate(
        dir.path(),
        "d.csv",
        &["--kind", "mixture", "--n", "100", "--seed", "3"],
    );
    let out = run(&[
        "test", &data, "--stat", "atv,cvm", "--boot", "20", "--seed", "4", "--K", "200",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let json: Value = serde_json::from_slice(&out.stdout).unwrap();
    let items = json.as_array().unwrap();
    assert_eq!(items.len(), 2);
    assert_eq!(items[0]["statistic_kind"], "atv");
    assert_eq!(items[1]["statistic_kind"], "cvm");
}

#[test]
fn missing_input_is_a_data_error() {
    let out = run(&[
        "test",
        "/nonexistent/sample.csv",
        "--boot",
        "10",
        "--seed",
        "1",
    ]);
    assert_eq!(code(&out), 3);
}

#[test]
fn constant_column_fails_estimation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.csv");
    let rows: String = (0..30)
        .map(|i| format!("1.0,{}\n", i as f64 * 0.37 % 5.0))
        .collect();
    std::fs::write(&path, rows).unwrap();
    let out = run(&[
        "test",
        path.to_str().unwrap(),
        "--family",
        "frank",
        "--estimator",
        "tau",
        "--boot",
        "10",
        "--seed",
        "1",
    ]);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate(
        dir.path(),
        "d.csv",
        &["--kind", "arch", "--n", "50", "--seed", "5"],
    );
    for args in [
        vec!["test", data.as_str(), "--stat", "foo"],
        vec!["test", data.as_str(), "--alpha", "1.5"],
        vec!["test", data.as_str(), "--boot", "0"],
        vec!["test", data.as_str(), "--null", "frank"],
        vec![
            "test",
            data.as_str(),
            "--null",
            "independence",
            "--family",
            "frank",
        ],
        vec!["study", "--scenario", "nope", "--reps", "1"],
        vec![
            "generate", "--kind", "copula", "--family", "clayton", "--tau", "-0.2", "--n", "10",
        ],
        vec!["frobnicate"],
    ] {
        assert_eq!(code(&run(&args)), 2, "{args:?}");
    }
}

#[test]
fn studies_are_reproducible() {
    let args = [
        "study",
        "--scenario",
        "frank-frank",
        "--n",
        "60",
        "--reps",
        "3",
        "--boot",
        "20",
        "--stat",
        "ks,cvm",
        "--seed",
        "11",
    ];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let json: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(json[0]["completed"], 3);
    let table = String::from_utf8_lossy(&a.stderr);
    assert!(table.contains("frank-frank"));
}

#[test]
fn study_writes_its_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let out = run(&[
        "study",
        "--scenario",
        "arch-s",
        "--n",
        "50",
        "--reps",
        "2",
        "--boot",
        "10",
        "--stat",
        "ks",
        "--seed",
        "1",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let written = std::fs::read(&path).unwrap();
    assert_eq!(written, out.stdout);
}

#[test]
fn generate_is_deterministic_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let extra = [
        "--kind", "copula", "--family", "gumbel", "--tau", "0.5", "--n", "100", "--seed", "7",
    ];
    let a = generate(dir.path(), "a.csv", &extra);
    let b = generate(dir.path(), "b.csv", &extra);
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let rows = text
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with(|c: char| c.is_alphabetic()))
        .count();
    assert_eq!(rows, 100);

    let stdout = run(&[
        "generate", "--kind", "copula", "--family", "gumbel", "--tau", "0.5", "--n", "100",
        "--seed", "7",
    ]);
    assert_eq!(String::from_utf8_lossy(&stdout.stdout), text);

    let out = run(&[
        "test",
        &a,
        "--family",
        "gumbel",
        "--estimator",
        "tau",
        "--stat",
        "ks",
        "--boot",
        "20",
        "--seed",
        "1",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let json: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(json["theta_hat"].as_f64().unwrap() > 1.0);
}

#[test]
fn generated_clayton_hits_its_tau() {
    let out = run(&[
        "generate", "--kind", "copula", "--family", "clayton", "--tau", "0.6", "--n", "2000",
        "--seed", "8",
    ]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<(f64, f64)> = text
        .lines()
        .filter_map(|l| {
            let mut it = l.split(',').map(|v| v.trim().parse::<f64>());
            match (it.next(), it.next()) {
                (Some(Ok(a)), Some(Ok(b))) => Some((a, b)),
                _ => None,
            }
        })
        .collect();
    assert_eq!(rows.len(), 2000);
    let mut concordant = 0i64;
    let mut discordant = 0i64;
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let s = (rows[i].0 - rows[j].0) * (rows[i].1 - rows[j].1);
            if s > 0.0 {
                concordant += 1;
            } else if s < 0.0 {
                discordant += 1;
            }
        }
    }
    let tau = (concordant - discordant) as f64 / (concordant + discordant) as f64;
    assert!((tau - 0.6).abs() < 0.1, "{tau}");
}

#[test]
fn unwritable_output_is_a_data_error() {
    let out = run(&[
        "generate",
        "--kind",
        "arch",
        "--n",
        "10",
        "--seed",
        "1",
        "--out",
        "/nonexistent/dir/x.csv",
    ]);
    assert_eq!(code(&out), 3);
}
