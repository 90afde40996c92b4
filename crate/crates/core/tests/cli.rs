use std::path::Path;
use std::process::{Command, Output};

use jnp_core::lab::validate_report_json;

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jnp-lab")).args(args).output().unwrap()
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn successful_run_writes_report_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = lab(&[
        "l2g", "--domain", "square", "--function", "quadrant", "--J", "4,5", "--p", "2",
        "--out", out.to_str().unwrap(), "--csv",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_json(&out);
    validate_report_json(&v).unwrap();
    assert_eq!(v["items"].as_array().unwrap().len(), 2);
    assert!(v.get("wall_clock_seconds").is_none());
    let csv = std::fs::read_to_string(out.with_extension("csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("domain,J,function,p,numerator,denominator,ratio,residual,tau,sigma"));
    assert_eq!(lines.count(), 2);
}

#[test]
fn csv_goes_to_stdout_without_out() {
    let o = lab(&["jn", "--domain", "square", "--function", "constant:1", "--J", "3", "--csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("domain,J,function"));
}

#[test]
fn timing_is_opt_in() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = lab(&["jn", "--domain", "square", "--J", "3", "--timing", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(read_json(&out)["wall_clock_seconds"].is_number());
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "pipeline = \"jn\"\ndomain = \"square\"\nJ = 3\np = 2\n").unwrap();
    let out = dir.path().join("r.json");
    let o = lab(&["jn", "--config", cfg.to_str().unwrap(), "--p", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_json(&out);
    assert!(v["items"].as_array().unwrap().iter().all(|i| i["p"] == 3.0));
}

#[test]
fn invalid_config_exits_with_one() {
    let o = lab(&["jn", "--domain", "square", "--p", "0.5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("p[0]"));
    let o = lab(&["jn", "--domain", "blob"]);
    assert_eq!(o.status.code(), Some(1));
    let o = lab(&["jn", "--config", "/nonexistent/cfg.toml"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn invariant_failure_exits_with_two_and_keeps_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = lab(&[
        "necessity-sweep", "--domain", "cusp:2", "--domain", "cusp:2", "--J", "5",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("weak_ratio_increasing_in_k"));
    let v = read_json(&out);
    assert_eq!(v["invariant_failures"][0]["check"], "weak_ratio_increasing_in_k");
}
