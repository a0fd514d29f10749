// Copyright 2026 The jcpulse Authors
// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn jcpulse(args: &[&str], cache: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_jcpulse"));
    cmd.args(args).env_remove("JCPULSE_CACHE");
    if let Some(c) = cache {
        cmd.env("JCPULSE_CACHE", c);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, v: &Value) -> String {
    let p = dir.join(name);
    fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p.display().to_string()
}

fn run(command: &str, config: &str, out: &Path, extra: &[&str], cache: Option<&Path>) -> Output {
    let out = out.display().to_string();
    let mut args = vec![command, "--config", config, "--out", &out, "--jobs", "1"];
    args.extend_from_slice(extra);
    jcpulse(&args, cache)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn analytic_config() -> Value {
    json!({
        "schema_version": 1,
        "n_comp": 1,
        "target": {"kind": "haar"},
        "plans": [{"p": 2, "q": 20}, {"p": 2, "q": 40}],
        "seed": 4
    })
}

#[test]
fn malformed_config_reports_the_field_path() {
    let dir = TempDir::new().unwrap();
    let mut cfg = analytic_config();
    cfg["plans"][1]["q"] = json!("many");
    let path = write_config(dir.path(), "bad.json", &cfg);
    let o = run("compile-analytic", &path, &dir.path().join("out"), &[], None);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("plans[1].q"), "{}", stderr(&o));
}

#[test]
fn unknown_fields_and_bad_values_are_config_errors() {
    let dir = TempDir::new().unwrap();
    let mut cfg = analytic_config();
    cfg["target"] = json!({"kind": "haar", "sed": 3});
    let path = write_config(dir.path(), "typo.json", &cfg);
    let o = run("compile-analytic", &path, &dir.path().join("a"), &[], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sed"), "{}", stderr(&o));

    let mut cfg = analytic_config();
    cfg["n_comp"] = json!(0);
    let path = write_config(dir.path(), "range.json", &cfg);
    let o = run("compile-analytic", &path, &dir.path().join("b"), &[], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`n_comp`"), "{}", stderr(&o));

    let mut cfg = analytic_config();
    cfg["schema_version"] = json!(9);
    let path = write_config(dir.path(), "version.json", &cfg);
    let o = run("compile-analytic", &path, &dir.path().join("c"), &[], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("schema_version"), "{}", stderr(&o));

    let o = run("bounds", &dir.path().join("missing.json").display().to_string(), &dir.path().join("d"), &[], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn fixed_seed_gives_identical_results() {
    let dir = TempDir::new().unwrap();
    let path = write_config(dir.path(), "a.json", &analytic_config());
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    for out in [&a, &b] {
        let o = run("compile-analytic", &path, out, &["--seed", "17"], None);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    for f in ["result.json", "program.json", "analytic.csv", "config.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let o = run("compile-analytic", &path, &c, &["--seed", "18"], None);
    assert_eq!(o.status.code(), Some(0));
    assert_ne!(fs::read(a.join("result.json")).unwrap(), fs::read(c.join("result.json")).unwrap());

    let manifest: Value = serde_json::from_slice(&fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 17);
    assert_eq!(manifest["status"], "met");
    let config: Value = serde_json::from_slice(&fs::read(a.join("config.json")).unwrap()).unwrap();
    assert_eq!(config["seed"], 17);
    assert!(manifest["files"]["result.json"].as_str().unwrap().len() == 64);
}

#[test]
fn csv_has_the_common_columns() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({"schema_version": 1, "n_comp": [1, 2], "eta": [1e-4], "q_values": [100, 1000]});
    let path = write_config(dir.path(), "b.json", &cfg);
    let out = dir.path().join("out");
    let o = run("bounds", &path, &out, &[], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["bounds.csv", "t_a.csv"] {
        let text = fs::read_to_string(out.join(f)).unwrap();
        assert_eq!(text.lines().next(), Some("x,y,series,seed"), "{f}");
    }
    let result: Value = serde_json::from_slice(&fs::read(out.join("result.json")).unwrap()).unwrap();
    assert_eq!(result["t_a"].as_array().unwrap().len(), 4);
}

#[test]
fn missed_threshold_exits_one_and_keeps_results() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "schema_version": 1,
        "n_comp": 1,
        "pulses": [{"kind": "carrier", "chi": 1.0, "duration": 0.25}],
        "target": {"kind": "identity"},
        "threshold": 1e-6
    });
    let path = write_config(dir.path(), "s.json", &cfg);
    let out = dir.path().join("out");
    let o = run("simulate", &path, &out, &[], None);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let result: Value = serde_json::from_slice(&fs::read(out.join("result.json")).unwrap()).unwrap();
    assert!(result["error"]["eta"].as_f64().unwrap() > 1e-6);
    let manifest: Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "threshold_not_met");
}

#[test]
fn simulate_reads_a_sequence_file() {
    let dir = TempDir::new().unwrap();
    let seq = json!([{"kind": "carrier", "chi": 1.0, "duration": 1.0}]);
    fs::write(dir.path().join("seq.json"), seq.to_string()).unwrap();
    let cfg = json!({
        "schema_version": 1,
        "n_comp": 1,
        "sequence": "seq.json",
        "target": {"kind": "identity"},
        "threshold": 1e-9
    });
    let path = write_config(dir.path(), "s.json", &cfg);
    let out = dir.path().join("out");
    let o = run("simulate", &path, &out, &[], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let u: Value = serde_json::from_slice(&fs::read(out.join("unitary.json")).unwrap()).unwrap();
    assert_eq!(u["rows"], 4);
}

#[test]
fn v_cache_is_reused_across_runs() {
    let dir = TempDir::new().unwrap();
    let cache = dir.path().join("cache");
    fs::create_dir(&cache).unwrap();
    let cfg = json!({
        "schema_version": 1,
        "cells": [{"family": 1, "n_comp": 2, "n": 2, "n_script": 1}],
        "search": {"m_min": 3, "m_max": 12, "restarts": 4, "max_iters": 500},
        "seed": 1
    });
    let path = write_config(dir.path(), "v.json", &cfg);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let o = run("optimize-v", &path, &a, &[], Some(&cache));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let stored = fs::read(cache.join("vcache.json")).unwrap();
    assert!(!stored.is_empty());

    // A different seed would change the optimisation, so identical output proves a cache hit.
    let o = run("optimize-v", &path, &b, &["--seed", "99"], Some(&cache));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let runs = |d: &Path| -> Value { serde_json::from_slice(&fs::read(d.join("runs.json")).unwrap()).unwrap() };
    assert_eq!(runs(&a), runs(&b));
    assert_eq!(fs::read(cache.join("vcache.json")).unwrap(), stored);
    let manifest: Value = serde_json::from_slice(&fs::read(b.join("manifest.json")).unwrap()).unwrap();
    assert!(manifest["cache"].as_str().unwrap().ends_with("vcache.json"));
}
