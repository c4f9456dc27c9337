use std::path::Path;
use std::process::{Command, Output};

fn polycond(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polycond")).current_dir(dir).args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = polycond(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn write_config(dir: &Path, body: &str) {
    std::fs::write(dir.join("cfg.json"), body).unwrap();
}

const SMALL: &str = r#"{"shape": {"n": 4, "d": 2}, "master_seed": 9, "trials": 12,
    "eps_grid": [0.01, 0.1, 0.3], "optimizer": {"restarts": 2, "max_iters": 60}}"#;

#[test]
fn gen_then_eval_satisfies_euler() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["gen", "--n", "4", "--d", "3", "--seed", "5", "--out", "sys.json"]);
    let x = "0.3,-0.5,0.7,0.1";
    let out: serde_json::Value =
        serde_json::from_str(&ok(dir.path(), &["eval", "--system", "sys.json", "--x", x, "--dir", x])).unwrap();
    let value = out["value"].as_array().unwrap();
    let deriv = out["derivative"].as_array().unwrap();
    assert_eq!(value.len(), 3);
    for (f, df) in value.iter().zip(deriv) {
        let (f, df) = (f.as_f64().unwrap(), df.as_f64().unwrap());
        assert!((df - 3.0 * f).abs() <= 1e-12 * (1.0 + f.abs()));
    }
}

#[test]
fn binary_tensor_round_trips_through_lmin() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["gen", "--n", "3", "--d", "2", "--kss", "--out", "t.bin"]);
    let out: serde_json::Value =
        serde_json::from_str(&ok(dir.path(), &["lmin", "--system", "t.bin", "--restarts", "2"])).unwrap();
    let v = out["value"].as_f64().unwrap();
    assert!(v.is_finite() && v >= 0.0);
}

#[test]
fn lcd_matches_known_value() {
    let dir = tempfile::tempdir().unwrap();
    let out: serde_json::Value =
        serde_json::from_str(&ok(dir.path(), &["lcd", "--y", "1", "--alpha", "0.4", "--d-max", "2"])).unwrap();
    assert!(out["found"].as_bool().unwrap());
    assert!((out["lcd"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-4);
}

#[test]
fn tail_output_does_not_depend_on_threads() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), SMALL);
    ok(dir.path(), &["--threads", "1", "tail", "--config", "cfg.json", "--out", "one"]);
    let two = tempfile::tempdir().unwrap();
    write_config(two.path(), SMALL);
    ok(two.path(), &["--threads", "3", "tail", "--config", "cfg.json", "--out", "three"]);
    let a = std::fs::read_to_string(dir.path().join("one.csv")).unwrap();
    let b = std::fs::read_to_string(two.path().join("three.csv")).unwrap();
    assert_eq!(a, b);
    assert!(a.starts_with("epsilon,hits,trials,estimate,ci_low,ci_high\n"));
}

#[test]
fn seed_and_trials_flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), SMALL);
    ok(dir.path(), &["tail", "--config", "cfg.json", "--seed", "77", "--trials", "3", "--out", "t"]);
    let side: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("t.json")).unwrap()).unwrap();
    assert_eq!(side["config"]["master_seed"], 77);
    assert_eq!(side["config"]["trials"], 3);
    assert_eq!(side["result"]["trials"], 3);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), r#"{"shape": {"n": 4, "d": 2}}"#);
    assert_eq!(polycond(dir.path(), &["tail", "--config", "cfg.json"]).status.code(), Some(2));
    write_config(dir.path(), SMALL);
    assert_eq!(polycond(dir.path(), &["tail", "--config", "cfg.json", "--trials", "0"]).status.code(), Some(2));
    assert_eq!(polycond(dir.path(), &["gen", "--n", "1", "--d", "2", "--out", "x.json"]).status.code(), Some(2));
    assert_eq!(polycond(dir.path(), &["no-such-command"]).status.code(), Some(2));
}

#[test]
fn uncontrolled_deterministic_part_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["gen", "--n", "4", "--d", "2", "--seed", "1", "--out", "det.json"]);
    // scale every entry up so the deterministic part is far above n^γ
    let mut sys: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("det.json")).unwrap()).unwrap();
    let tensor = sys["rand"].take();
    let mut big = tensor.clone();
    for v in big["data"].as_array_mut().unwrap() {
        *v = serde_json::json!(v.as_f64().unwrap() * 100.0);
    }
    std::fs::write(dir.path().join("big.json"), big.to_string()).unwrap();
    let cfg = SMALL.replacen("\"master_seed\"", "\"det_source\": \"big.json\", \"master_seed\"", 1);
    write_config(dir.path(), &cfg);
    let out = polycond(dir.path(), &["tail", "--config", "cfg.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("γ-controlled"));
}

#[test]
fn example1_writes_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["example1", "--n", "3", "--trials", "4000", "--out", "ex"]);
    let csv = std::fs::read_to_string(dir.path().join("ex.csv")).unwrap();
    assert!(csv.starts_with("quantity,hits,trials,estimate,ci_low,ci_high,exact\n"));
    assert!(dir.path().join("ex.json").exists());
}

#[test]
fn report_data_writes_every_table() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["report-data", "--trials", "4", "--out", "bundle"]);
    for name in ["tail", "events", "compressible", "example1", "opnorm", "small_ball", "tensorization"] {
        for ext in ["csv", "json"] {
            assert!(dir.path().join("bundle").join(format!("{name}.{ext}")).exists(), "{name}.{ext} missing");
        }
    }
}
