use std::path::Path;
use std::process::{Command, Output};

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_renorm-lab"))
        .arg("run")
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn csv_rows(path: &Path) -> (String, Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let head = lines.next().unwrap().to_string();
    let cols = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (head, cols, rows)
}

#[test]
fn clt_error_decreases_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["clt", "--sigma", "0.7", "--Ks", "4,16,64,256"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let (head, cols, rows) = csv_rows(&dir.path().join("clt.csv"));
    assert!(head.starts_with("# renorm-lab ") && head.contains("config-sha256="));
    let e = cols.iter().position(|c| c == "error").unwrap();
    let errors: Vec<f64> = rows.iter().map(|r| r[e].parse().unwrap()).collect();
    assert_eq!(errors.len(), 4);
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
    let svg = std::fs::read_to_string(dir.path().join("clt_error.svg")).unwrap();
    assert!(svg.contains("slope -1/2"));
}

#[test]
fn barthe_wolff_is_reported_not_admissible() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["validate", "--potential", "barthe-wolff"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("validate.json")).unwrap()).unwrap();
    assert_eq!(json["result"]["admissible"], serde_json::Value::Bool(false));
}

#[test]
fn configuration_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["clt", "--potential", "no-such-potential"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["spectrum", "--ns", "7"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["bw-scaling", "--m-grid", "-1,1"]).status.code(), Some(2));
    let bad = Command::new(env!("CARGO_BIN_EXE_renorm-lab"))
        .args(["run", "kernel", "--out"])
        .arg(dir.path())
        .env("RENORM_LSI_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let o = run(dir.path(), &["clt", "--Ks", "4,16,64"]);
        assert_eq!(o.status.code(), Some(0));
        let o = run(dir.path(), &["kernel", "--cases", "20"]);
        assert_eq!(o.status.code(), Some(0));
    }
    for name in ["clt.csv", "clt_error.svg", "kernel.csv"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name} differs");
    }
}

#[test]
fn report_aggregates_and_flags_failures() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["kernel", "--cases", "10"]).status.code(), Some(0));
    assert_eq!(run(dir.path(), &["report"]).status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["result"][0]["suite"], "kernel");
    assert_eq!(report["result"][0]["failed"], 0);

    // an impossible tolerance turns every covariance verdict into a failure
    let cfg = dir.path().join("strict.json");
    std::fs::write(&cfg, r#"{"tolerances": {"covariance": 1e-300, "slack": 1e-300}}"#).unwrap();
    let o = run(dir.path(), &["kernel", "--cases", "10", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(run(dir.path(), &["report"]).status.code(), Some(1));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"command": "clt", "sigma": 0.3, "ks": [4, 16], "seed": 7}"#).unwrap();
    let o = run(dir.path(), &["clt", "--config", cfg.to_str().unwrap(), "--sigma", "-0.5"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let (head, cols, rows) = csv_rows(&dir.path().join("clt.csv"));
    assert!(head.contains("seed=7"));
    let s = cols.iter().position(|c| c == "sigma").unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r[s].parse::<f64>().unwrap() == -0.5));

    std::fs::write(&cfg, r#"{"sigmaa": 0.3}"#).unwrap();
    assert_eq!(run(dir.path(), &["clt", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}
