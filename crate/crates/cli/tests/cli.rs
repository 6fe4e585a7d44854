use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use freeclt_core::measures::{make_measure, MeasureSpec};
use freeclt_core::pipeline::{cross_check, CltConfig};
use serde_json::Value;
use tempfile::TempDir;

fn specs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../specs")
}

fn spec(name: &str) -> String {
    specs().join(name).display().to_string()
}

fn freeclt(args: &[&str]) -> Output {
    freeclt_env(args, &[])
}

fn freeclt_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_freeclt"));
    cmd.args(args).env_remove("FREECLT_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn density_csv_layout() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("p16.csv");
    let o = freeclt(&[
        "density",
        "--measure",
        &spec("bernoulli.json"),
        "--n",
        "16",
        "--method",
        "biane",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,density");
    assert_eq!(lines.len(), 1202);
    for line in &lines[1..] {
        let (x, p) = line.split_once(',').unwrap();
        for field in [x, p] {
            let mantissa = field.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17, "{field}");
            field.parse::<f64>().unwrap();
        }
    }
}

#[test]
fn density_is_bit_stable_across_thread_counts() {
    let args = ["density", "--measure", &spec("two_atom.json"), "--n", "8", "--method", "subordination"];
    let a = freeclt_env(&args, &[("FREECLT_THREADS", "1")]);
    let b = freeclt_env(&args, &[("FREECLT_THREADS", "4")]);
    let c = freeclt(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn sweep_writes_report_and_tables() {
    let dir = TempDir::new().unwrap();
    let report = dir.path().join("report.json");
    let o = freeclt(&[
        "sweep",
        "--measure",
        &spec("bernoulli.json"),
        "--n",
        "4,8,16,32,64",
        "--p",
        "0.6,1,2",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    let mut keys: Vec<&str> = rows[0].as_object().unwrap().keys().map(String::as_str).collect();
    keys.sort();
    assert_eq!(keys, ["chi", "flags", "gap", "lp", "n", "phi", "sup_dist"]);
    let sup: Vec<f64> = rows.iter().map(|r| r["sup_dist"].as_f64().unwrap()).collect();
    assert!(sup.windows(2).all(|w| w[1] < w[0]), "{sup:?}");
    // the symmetric Bernoulli edge gives sup |p_m - p_gamma| = 1 / (pi sqrt m)
    for (r, n) in sup.iter().zip([4.0_f64, 8.0, 16.0, 32.0, 64.0]) {
        assert!((r - 1.0 / (std::f64::consts::PI * n.sqrt())).abs() < 1e-6, "n={n}: {r}");
    }
    for key in ["0.6", "1", "2"] {
        assert!(rows[4]["lp"][key].as_f64().is_some());
    }
    for n in [4, 8, 16, 32, 64] {
        assert!(dir.path().join(format!("density_n{n}_biane.csv")).exists());
    }
}

#[test]
fn sweep_both_writes_both_routes() {
    let dir = TempDir::new().unwrap();
    let report = dir.path().join("r.json");
    let tables = dir.path().join("tables");
    let o = freeclt(&[
        "sweep",
        "--measure",
        &spec("two_atom.json"),
        "--n",
        "4,16",
        "--method",
        "both",
        "--out",
        report.to_str().unwrap(),
        "--density-dir",
        tables.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for n in [4, 16] {
        for route in ["biane", "subordination"] {
            assert!(tables.join(format!("density_n{n}_{route}.csv")).exists());
        }
    }
}

#[test]
fn compare_matches_library_cross_check() {
    let o = freeclt(&["compare", "--measure", &spec("two_atom.json"), "--n", "4,16"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,discrepancy"));
    let spec = MeasureSpec::from_json(&fs::read_to_string(specs().join("two_atom.json")).unwrap()).unwrap();
    let mu = make_measure(&spec).unwrap();
    for (line, n) in lines.zip([4, 16]) {
        let (k, d) = line.split_once(',').unwrap();
        assert_eq!(k.parse::<usize>().unwrap(), n);
        let expected = cross_check(&mu, n, &CltConfig::default()).unwrap();
        assert_eq!(d.parse::<f64>().unwrap().to_bits(), expected.to_bits());
        assert!(expected < 5e-4);
    }
}

#[test]
fn verify_semicircle_passes() {
    let o = freeclt(&["verify", "--measure", &spec("semicircle.json")]);
    let text = stdout(&o);
    assert_eq!(code(&o), 0, "{text}");
    assert!(text.lines().count() >= 8);
    assert!(text.lines().all(|l| l.starts_with("PASS")), "{text}");
}

#[test]
fn functionals_report_and_divergence_exit() {
    let args = ["functionals", "--measure", &spec("bernoulli.json"), "--n", "2,4", "--p", "1,2"];
    let o = freeclt(&args);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    // the arcsine law at n = 2 has an inverse square root edge
    assert_eq!(v["rows"][0]["phi"], "inf");
    assert_eq!(v["rows"][0]["lp"]["2"], "inf");
    assert!(v["rows"][1]["phi"].as_f64().unwrap().is_finite());

    let mut strict = args.to_vec();
    strict.push("--require-finite");
    assert_eq!(code(&freeclt(&strict)), 3);
}

#[test]
fn invalid_input_exits_with_one() {
    let dir = TempDir::new().unwrap();
    let dup = write(&dir, "dup.json", r#"{"atoms": [{"x": 0, "w": 0.5}, {"x": 0, "w": 0.5}]}"#);
    let raw = write(&dir, "raw.json", r#"{"atoms": [{"x": -2, "w": 0.5}, {"x": 2, "w": 0.5}]}"#);
    let cases: Vec<Vec<&str>> = vec![
        vec!["density", "--measure", &dup, "--n", "4"],
        vec!["density", "--measure", &raw, "--n", "4"],
        vec!["density", "--measure", "/nonexistent.json", "--n", "4"],
        vec!["density", "--measure", &raw],
        vec!["sweep", "--measure", &raw, "--n", "1,4", "--out", "/tmp/x.json"],
        vec!["compare", "--measure", &raw, "--n", "4", "--grid", "1,0,10"],
        vec!["density", "--measure", &raw, "--n", "4", "--tol", "nope=1"],
        vec!["functionals", "--measure", &raw, "--n", "4", "--p", "0.4"],
    ];
    for args in cases {
        let o = freeclt(&args);
        assert_eq!(code(&o), 1, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let bern = spec("bernoulli.json");
    let o = freeclt(&["functionals", "--measure", &bern, "--n", "4", "--p", "0.4"]);
    assert_eq!(code(&o), 1);
    let o = freeclt_env(&["density", "--measure", &bern, "--n", "4"], &[("FREECLT_THREADS", "zero")]);
    assert_eq!(code(&o), 1);
}

#[test]
fn solver_failure_exits_with_two() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "cfg.json", r#"{"max_iterations": 1}"#);
    let o = freeclt(&[
        "density",
        "--measure",
        &spec("two_atom.json"),
        "--n",
        "8",
        "--method",
        "subordination",
        "--config",
        &cfg,
    ]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn standardize_flag_rescales() {
    let dir = TempDir::new().unwrap();
    let m = write(
        &dir,
        "m.json",
        r#"{"atoms": [{"x": -2, "w": 0.5}, {"x": 2, "w": 0.5}], "standardize": true}"#,
    );
    let a = freeclt(&["density", "--measure", &m, "--n", "6"]);
    let b = freeclt(&["density", "--measure", &spec("bernoulli.json"), "--n", "6"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}
