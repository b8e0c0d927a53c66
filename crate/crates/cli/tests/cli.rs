use std::path::Path;
use std::process::{Command, Output};

use onerun_cli::experiments::{experiment_pure, PureRow};
use onerun_cli::output::{read_csv, read_jsonl, ResultRow};

fn onerun(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_onerun"))
        .args(args)
        .env_remove("ONERUN_OUT_DIR")
        .output()
        .expect("spawn onerun")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn number(args: &[&str]) -> f64 {
    let o = onerun(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    stdout(&o).trim().parse().expect("a single number")
}

#[test]
fn pvalue_worked_examples() {
    let p = number(&["pvalue", "--m", "100", "--r", "100", "--v", "75", "--eps", "1.0986", "--delta", "0"]);
    assert!((p - 0.553).abs() < 1e-3, "{p}");
    assert_eq!(number(&["pvalue", "--m", "100", "--r", "100", "--v", "0", "--eps", "2", "--delta", "1e-3"]), 1.0);
    let p = number(&["pvalue", "--m", "2", "--r", "2", "--v", "2", "--eps", "0", "--delta", "0.1"]);
    assert!((p - 0.45).abs() < 1e-6, "{p}");
}

#[test]
fn prints_six_significant_digits() {
    let o = onerun(&["epslb", "--m", "100", "--r", "100", "--v", "75", "--delta", "0"]);
    let s = stdout(&o);
    let digits: String = s.trim().chars().filter(|c| c.is_ascii_digit()).collect();
    assert_eq!(digits.trim_start_matches('0').len(), 6, "{s}");
}

#[test]
fn epslb_worked_examples() {
    let e = number(&["epslb", "--m", "100", "--r", "100", "--v", "75", "--delta", "0", "--conf", "0.95"]);
    assert!((e - 0.702).abs() < 1e-3, "{e}");
    let e = number(&["epslb", "--m", "1000", "--r", "100", "--v", "75", "--delta", "1e-4", "--conf", "0.95"]);
    assert!((e - 0.673).abs() < 1e-3, "{e}");
    assert_eq!(number(&["epslb", "--m", "100", "--r", "100", "--v", "50", "--delta", "0"]), 0.0);
}

#[test]
fn exit_codes() {
    assert_eq!(onerun(&["--help"]).status.code(), Some(0));
    assert_eq!(onerun(&["--version"]).status.code(), Some(0));
    // usage: malformed value, missing flag, unknown subcommand, invalid combination
    assert_eq!(onerun(&["pvalue", "--m", "x"]).status.code(), Some(1));
    assert_eq!(onerun(&["pvalue", "--m", "10", "--v", "1"]).status.code(), Some(1));
    assert_eq!(onerun(&["frobnicate"]).status.code(), Some(1));
    let o = onerun(&["pvalue", "--m", "2", "--r", "3", "--v", "2", "--eps", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--help"));
    // m delta > r beta violates the pathological precondition
    let o = onerun(&[
        "pathological-check", "--m", "1000", "--r", "100", "--eps", "1", "--delta", "0.1", "--beta", "0.05",
    ]);
    assert_eq!(o.status.code(), Some(1));
    // runtime: the output directory cannot be created
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("plain-file");
    std::fs::write(&file, "x").unwrap();
    let o = onerun(&["--out", file.to_str().unwrap(), "epslb", "--m", "10", "--r", "10", "--v", "9"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn result_rows_reproduce_from_echoed_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    onerun(&["--out", out, "epslb", "--m", "1000", "--r", "100", "--v", "75", "--delta", "1e-4"]);
    onerun(&["--out", out, "pvalue", "--m", "100", "--r", "100", "--v", "75", "--eps", "1.0986"]);
    let rows: Vec<ResultRow> = read_jsonl(&dir.path().join("results.jsonl")).unwrap();
    assert_eq!(rows.len(), 2);

    let e = &rows[0];
    assert_eq!(e.command, "epslb");
    let conf = e.confidence.unwrap().to_string();
    let mut args = vec!["--out", out, "epslb", "--conf", &conf];
    let flags: Vec<(String, String)> = e.inputs.iter().map(|(k, v)| (format!("--{k}"), v.clone())).collect();
    for (k, v) in &flags {
        args.push(k);
        args.push(v);
    }
    onerun(&args);
    let p = &rows[1];
    let flags: Vec<(String, String)> = p
        .inputs
        .iter()
        .map(|(k, v)| (format!("--{}", k.replace('_', "-")), v.clone()))
        .collect();
    let mut args = vec!["--out", out, "pvalue"];
    for (k, v) in &flags {
        args.push(k);
        args.push(v);
    }
    let o = onerun(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let all: Vec<ResultRow> = read_jsonl(&dir.path().join("results.jsonl")).unwrap();
    assert_eq!(all.len(), 4);
    assert_eq!(all[2].eps_lb, rows[0].eps_lb);
    assert_eq!(all[2].inputs, rows[0].inputs);
    assert_eq!(all[3].p_value, rows[1].p_value);
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_onerun"))
        .args(["experiment-pure", "--eps", "1", "--r-grid", "10,100"])
        .env("ONERUN_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.path().join("pure-rr.csv").exists());
    assert!(dir.path().join("results.jsonl").exists());
}

#[test]
fn pure_table_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let o = onerun(&[
        "--out",
        dir.path().to_str().unwrap(),
        "experiment-pure",
        "--eps",
        "4",
        "--r-grid",
        "10,100,1000,10000",
    ]);
    assert!(o.status.success());
    let back: Vec<PureRow> = read_csv(&dir.path().join("pure-rr.csv")).unwrap();
    assert_eq!(back, experiment_pure(4.0, &[10, 100, 1000, 10_000], 0.95).unwrap());
    let last = back.last().unwrap();
    assert!(last.eps_lb >= 3.86 && last.eps_lb <= 4.0, "{last:?}");
}

fn run_twice(args: &[&str]) -> (Output, Output) {
    (onerun(args), onerun(args))
}

#[test]
fn seeded_commands_are_deterministic() {
    let (a, b) = run_twice(&[
        "pathological-check", "--m", "200", "--r", "50", "--eps", "1", "--delta", "1e-3", "--beta", "0.05",
        "--trials", "2000", "--seed", "11",
    ]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let (a, b) = run_twice(&[
        "simulate", "--mechanism", "gaussian", "--sigma", "2", "--m", "1000", "--k-plus", "50", "--k-minus",
        "50", "--delta", "1e-5", "--trials", "20", "--seed", "5",
    ]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let c = onerun(&[
        "simulate", "--mechanism", "gaussian", "--sigma", "2", "--m", "1000", "--k-plus", "50", "--k-minus",
        "50", "--delta", "1e-5", "--trials", "20", "--seed", "6",
    ]);
    assert_ne!(a.stdout, c.stdout);
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn dpsgd_config_errors_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "a.cfg", "m = 100\nell = 10\nsigma = 1\nlearnig_rate = 0.1\n");
    let o = onerun(&["dpsgd-audit", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("learnig_rate"));
    let cfg = write_config(dir.path(), "b.cfg", "m = 100\nell = ten\nsigma = 1\n");
    let o = onerun(&["dpsgd-audit", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("ell"));
    let cfg = write_config(dir.path(), "c.cfg", "ell = 10\nsigma = 1\n");
    let o = onerun(&["dpsgd-audit", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`m`"));
}

#[test]
fn dpsgd_audit_persists_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "w.cfg",
        "seed = 1\nm = 1000\nell = 100\nsigma = 10\nq = 1\nrepetitions = 3\nk_plus = 50\nk_minus = 50\n",
    );
    let out = dir.path().join("out");
    let o = onerun(&["--out", out.to_str().unwrap(), "dpsgd-audit", &cfg]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let reports: Vec<serde_json::Value> = read_jsonl(&out.join("dpsgd-audit-report.jsonl")).unwrap();
    let upper = reports[0]["theoretical_eps_upper"].as_f64().unwrap();
    assert!((upper - 4.38).abs() < 0.01, "{upper}");
    assert_eq!(reports[0]["spec"]["seed"].as_u64(), Some(1));
    let rows: Vec<ResultRow> = read_jsonl(&out.join("results.jsonl")).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.seed == Some(1) && r.inputs["sigma"] == "10.0"));
}
