use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn nodembed(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nodembed"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))).unwrap()
}

fn write(dir: &Path, name: &str, contents: &str) {
    fs::write(dir.join(name), contents).unwrap();
}

#[test]
fn embed_then_verify_monomial() {
    let d = TempDir::new().unwrap();
    let o = nodembed(d.path(), &["embed", "monomial", "--c", "2", "--alpha", "3", "--T", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("monomial: "));
    let arch = json(d.path().join("monomial.json"));
    assert_eq!(arch["variant"], "basic");

    let o = nodembed(
        d.path(),
        &["--grid", "0.1:2:32", "verify", "--arch", "monomial.json", "--target", "monomial.target.json"],
    );
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let report = json(d.path().join("report.json"));
    assert!(report["max_err"].as_f64().unwrap() <= 1e-6);
    assert_eq!(report["pass"], true);
    let table = fs::read_to_string(d.path().join("table.csv")).unwrap();
    assert_eq!(table.lines().next(), Some("x1,node1,target1,err"));
    assert_eq!(table.lines().count(), 33);
}

#[test]
fn embed_universal_from_file() {
    let d = TempDir::new().unwrap();
    write(
        d.path(),
        "phi.json",
        r#"{"name": "phi", "n_in": 1, "n_out": 1, "components": ["x0^3 - x0"], "domain": [{"lo": -2, "hi": 2}]}"#,
    );
    let o = nodembed(d.path(), &["embed", "universal", "--phi", "phi.json", "--T", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(json(d.path().join("universal.json"))["variant"], "augmented_with_linear");
    let o = nodembed(d.path(), &["verify", "--arch", "universal.json", "--target", "phi.json"]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
}

#[test]
fn rejected_and_malformed_inputs_exit_three() {
    let d = TempDir::new().unwrap();
    let o = nodembed(d.path(), &["embed", "linear", "--c", "-1"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("no basic neural ODE"));

    write(d.path(), "broken.json", "{\"variant\": ");
    write(d.path(), "t.json", r#"{"name": "t", "n_in": 1, "n_out": 1, "components": ["x0"]}"#);
    let o = nodembed(d.path(), &["--grid", "-1:1:8", "verify", "--arch", "broken.json", "--target", "t.json"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("broken.json"));

    let o = nodembed(d.path(), &["embed", "polynomial"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn zero_field_fails_to_embed_negation() {
    let d = TempDir::new().unwrap();
    write(
        d.path(),
        "zero.json",
        r#"{"variant": "basic", "field": {"name": "f", "n_in": 1, "n_out": 1, "components": ["0"]}, "T": 1, "m": 1}"#,
    );
    write(
        d.path(),
        "neg.json",
        r#"{"name": "t", "n_in": 1, "n_out": 1, "components": ["neg(x0)"], "domain": [{"lo": -1, "hi": 1}]}"#,
    );
    let o = nodembed(d.path(), &["--grid", "-1:1:16", "verify", "--arch", "zero.json", "--target", "neg.json"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert_eq!(json(d.path().join("report.json"))["pass"], false);
}

#[test]
fn diagnose_matches_golden_verdicts() {
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let mut seen = 0;
    for entry in fs::read_dir(golden).unwrap().flatten() {
        let g = json(entry.path());
        let d = TempDir::new().unwrap();
        write(d.path(), "phi.json", &g["phi"].to_string());
        let o = nodembed(d.path(), &["diagnose", "--phi", "phi.json"]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let report = json(d.path().join("diagnosis.json"));
        assert_eq!(report["verdicts"], g["expected"]["verdicts"], "{}", entry.path().display());
        let statuses: Vec<Value> = report["components"].as_array().unwrap().iter().map(|c| c["status"].clone()).collect();
        assert_eq!(Value::Array(statuses), g["expected"]["status"]);
        assert_eq!(!report["recommendation"].is_null(), g["expected"]["recommendation"].as_bool().unwrap());
        let text = stdout(&o);
        assert!(text.contains(&format!("node1: {}", g["expected"]["verdicts"]["node1"].as_str().unwrap())));
        seen += 1;
    }
    assert_eq!(seen, 6);
}

#[test]
fn diagnose_prints_separation_witness_and_is_deterministic() {
    let d = TempDir::new().unwrap();
    write(
        d.path(),
        "phi.json",
        r#"{"name": "phi", "n_in": 1, "n_out": 1, "components": ["neg(x0)"], "domain": [{"lo": -1, "hi": 1}]}"#,
    );
    let o = nodembed(d.path(), &["--cite", "diagnose", "--phi", "phi.json"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("separates x* = 1"), "{text}");
    assert!(text.contains("cite: "));
    let first = fs::read(d.path().join("diagnosis.json")).unwrap();
    nodembed(d.path(), &["--cite", "diagnose", "--phi", "phi.json"]);
    assert_eq!(fs::read(d.path().join("diagnosis.json")).unwrap(), first);
}

#[test]
fn diagnose_with_perturbation() {
    let d = TempDir::new().unwrap();
    write(
        d.path(),
        "phi.json",
        r#"{"name": "phi", "n_in": 1, "n_out": 1, "components": ["x0^3"], "domain": [{"lo": -1, "hi": 1}]}"#,
    );
    let o = nodembed(d.path(), &["--seed", "3", "diagnose", "--phi", "phi.json", "--perturb", "0.5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = json(d.path().join("diagnosis.json"));
    assert_eq!(report["perturbation"]["seed"], 3);
    assert!(report["perturbation"]["a"][0].as_f64().unwrap().abs() <= 0.5);
}

#[test]
fn series_iterative_logarithm_and_certificate() {
    let d = TempDir::new().unwrap();
    write(d.path(), "phi.json", r#"{"N": 4, "coeffs": [0, 1, 1]}"#);
    let o = nodembed(d.path(), &["series", "--phi", "phi.json", "--N", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let coeffs: Vec<f64> =
        json(d.path().join("series.json"))["coeffs"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert_eq!(coeffs, vec![0.0, 0.0, 1.0, -1.0, 1.5]);

    let o = nodembed(d.path(), &["series", "--monomial", "--c", "-3", "--alpha", "5", "--N", "12"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = json(d.path().join("series.json"));
    assert!(s["coeffs"].as_array().unwrap().iter().all(|v| v.as_f64() == Some(0.0)));
    assert_eq!(s["trace"].as_array().unwrap().len(), 13);
}

#[test]
fn flow_matches_exponential() {
    let d = TempDir::new().unwrap();
    write(
        d.path(),
        "f.json",
        r#"{"name": "f", "n_in": 1, "n_out": 1, "components": ["x0"], "domain": [{"lo": 0, "hi": null, "lo_open": true, "positive": true}]}"#,
    );
    let o = nodembed(d.path(), &["flow", "--field", "f.json", "--x", "1", "--t", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let f = json(d.path().join("flow.json"));
    assert!((f["integrated"][0].as_f64().unwrap() - std::f64::consts::E).abs() < 1e-7);
    assert!((f["jabotinsky"].as_f64().unwrap() - std::f64::consts::E).abs() < 1e-8);
}

#[test]
fn suspend_doubling_map() {
    let d = TempDir::new().unwrap();
    write(
        d.path(),
        "torus.json",
        r#"{"phi": {"name": "phi", "n_in": 1, "n_out": 1, "components": ["2*x0"]},
            "phi_inv": {"name": "inv", "n_in": 1, "n_out": 1, "components": ["x0/2"]}, "T": 1}"#,
    );
    let o = nodembed(d.path(), &["suspend", "--torus", "torus.json", "--x", "1", "--s", "3", "--samples", "12"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = json(d.path().join("suspension.json"));
    assert_eq!(s["end"]["x"][0].as_f64(), Some(8.0));
    assert_eq!(s["end"]["r"].as_f64(), Some(0.0));
    assert_eq!(s["end"]["k"], 3);
    let csv = fs::read_to_string(d.path().join("suspension.csv")).unwrap();
    assert_eq!(csv.lines().count(), 14);
}

#[test]
fn trajectory_blow_up_exits_four() {
    let d = TempDir::new().unwrap();
    write(d.path(), "f.json", r#"{"name": "f", "n_in": 1, "n_out": 1, "components": ["x0^2"]}"#);
    let o = nodembed(d.path(), &["trajectory", "--field", "f.json", "--x", "1", "--T", "2"]);
    assert_eq!(o.status.code(), Some(4));
    let t = json(d.path().join("trajectory.json"));
    assert_eq!(t["status"], "blew_up");
    assert!((t["t_star"].as_f64().unwrap() - 1.0).abs() < 1e-3);
    assert!(fs::read_to_string(d.path().join("trajectory.csv")).unwrap().starts_with("t,h1\n"));

    let o = nodembed(d.path(), &["trajectory", "--field", "f.json", "--x", "-1", "--T", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}
