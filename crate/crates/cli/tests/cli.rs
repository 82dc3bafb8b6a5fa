use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qfisher(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qfisher"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .env("RUST_LOG", "off")
        .output()
        .unwrap()
}

fn summary(dir: &Path, command: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(format!("{command}.json"))).unwrap()).unwrap()
}

/// Column `name` of a CSV written by the tool.
fn column(path: &Path, name: &str) -> Vec<String> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let idx = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().to_string()).collect()
}

#[test]
fn matched_q_gaussian_saturates() {
    let dir = tempfile::tempdir().unwrap();
    let out = qfisher(dir.path(), &["qcr-check", "--q", "1.5", "--alpha", "2", "--density", "qgauss"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let margins = column(&dir.path().join("qcr.csv"), "margin");
    assert_eq!(margins.len(), 1);
    assert!(margins[0].parse::<f64>().unwrap().abs() < 1e-2);
    let s = summary(dir.path(), "qcr-check");
    for key in ["tool_version", "config_echo", "tolerances"] {
        assert!(s.get(key).is_some(), "{key} missing");
    }
    assert_eq!(s["config_echo"]["q"], serde_json::json!([1.5]));
}

#[test]
fn heat_equation_identity() {
    let dir = tempfile::tempdir().unwrap();
    let out = qfisher(dir.path(), &["debruijn", "--m", "1", "--beta", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let errs = column(&dir.path().join("debruijn.csv"), "rel_err");
    assert!(!errs.is_empty());
    assert!(errs.iter().all(|e| e.parse::<f64>().unwrap() < 1e-2));
    assert!(dir.path().join("snapshot_0001.json").exists());
}

#[test]
fn malformed_config_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    for (i, text) in [r#"{"q": 1.5, "unknown": 3}"#, "{not json", r#"{"q": -1}"#, r#"{"alpha": 0.5}"#].iter().enumerate() {
        let cfg = dir.path().join(format!("bad{i}.json"));
        std::fs::write(&cfg, text).unwrap();
        let out = qfisher(&out_dir, &["qcr-check", "--config", cfg.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(64), "{text}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out_dir.exists(), "{text} produced output");
    }
    // Unknown flags are configuration errors too, not violations.
    assert_eq!(qfisher(&out_dir, &["fisher", "--bogus", "1"]).status.code(), Some(64));
    assert!(!out_dir.exists());
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"command": "uncertainty", "q": 1.1, "points": 2048, "seed": 4}"#).unwrap();
    let out = qfisher(dir.path(), &["uncertainty", "--config", cfg.to_str().unwrap(), "--q", "1.0"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(dir.path(), "uncertainty");
    assert_eq!(s["config_echo"]["q"], 1.0);
    assert_eq!(s["config_echo"]["points"], 2048);
    assert_eq!(s["config_echo"]["seed"], 4);
    assert!((s["lhs"].as_f64().unwrap() * 4.0 * std::f64::consts::PI - 1.0).abs() < 1e-3);
}

#[test]
fn same_seed_gives_identical_csv() {
    let run = |seed: &str| {
        let dir = tempfile::tempdir().unwrap();
        let out = qfisher(
            dir.path(),
            &["qcr-check", "--density", "mixture", "--q", "1.2,0.8", "--alpha", "3,1.5", "--grid-points", "2048", "--seed", seed],
        );
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read(dir.path().join("qcr.csv")).unwrap()
    };
    let a = run("11");
    assert_eq!(a, run("11"));
    assert_ne!(a, run("12"));
    // Rows are sorted by (q, alpha) whatever the order given.
    let text = String::from_utf8(a).unwrap();
    let keys: Vec<(f64, f64)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let v: Vec<f64> = l.split(',').take(2).map(|x| x.parse().unwrap()).collect();
            (v[0], v[1])
        })
        .collect();
    assert_eq!(keys, vec![(0.8, 1.5), (0.8, 3.0), (1.2, 1.5), (1.2, 3.0)]);
}

#[test]
fn other_subcommands_run() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["divergence", "--beta", "1.5"],
        vec!["fisher", "--family", "laplace", "--grid", "2048"],
        vec!["minimize", "--init", "mixture", "--points", "512"],
    ] {
        let out = qfisher(dir.path(), &args);
        assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let s = summary(dir.path(), "divergence");
    assert!(s["monotonicity_margin"].as_f64().unwrap() >= 0.0);
    let f = summary(dir.path(), "fisher");
    assert!(f["matrix"][0][0].as_f64().unwrap() > 0.0);
    assert!(dir.path().join("minimize_density.json").exists());
}

#[test]
fn truncated_density_is_a_violation_in_strict_mode() {
    let dir = tempfile::tempdir().unwrap();
    // A 256-point window of half-width 6.4 clips the Gaussian tail at about
    // 1e-9 of its peak: inside the bound tolerance, above the edge limit.
    let args = ["uncertainty", "--points", "256", "--step", "0.05"];
    assert_eq!(qfisher(dir.path(), &args).status.code(), Some(0));
    let mut strict = args.to_vec();
    strict.push("--strict");
    assert_eq!(qfisher(dir.path(), &strict).status.code(), Some(2));
    assert!(!summary(dir.path(), "uncertainty")["violations"].as_array().unwrap().is_empty());
}
