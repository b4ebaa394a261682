use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn codesign(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_codesign")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, value: &Value) -> PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, serde_json::to_vec_pretty(value).unwrap()).unwrap();
    path
}

fn small(out: &Path) -> Value {
    json!({
        "space": {"kind": "cell", "seed": 1, "count": 40},
        "hardware": {"seed": 1, "count_per_dataflow": 4, "dataflows": ["KC-P", "YR-P", "X-P"]},
        "proxy": {"index": 0},
        "k": 6,
        "constraints": [{"grid_point": 1}, {"grid_point": 4}, {"grid_point": 5, "resource_budget": 300.0}],
        "output_dir": out
    })
}

fn run_ok(args: &[&str]) -> String {
    let o = codesign(args);
    assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect()
}

#[test]
fn table_is_reused_and_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bundle");
    let cfg = write_config(dir.path(), &small(&out));
    let cfg = cfg.to_str().unwrap();

    run_ok(&["table", "--config", cfg, "--log-level", "warn"]);
    let first = fs::read(out.join("perf_table.csv")).unwrap();
    let accels: Vec<Value> = serde_json::from_slice(&fs::read(out.join("accelerators.json")).unwrap()).unwrap();
    let rows = csv_rows(&out.join("perf_table.csv"));
    assert_eq!(rows.len(), 40 * accels.len());

    let second = codesign(&["table", "--config", cfg]);
    assert!(String::from_utf8_lossy(&second.stderr).contains("reusing"));
    assert_eq!(first, fs::read(out.join("perf_table.csv")).unwrap());

    // a fresh computation in another directory matches byte for byte
    let other = dir.path().join("again");
    run_ok(&["table", "--config", cfg, "--out", other.to_str().unwrap(), "--sequential"]);
    assert_eq!(first, fs::read(other.join("perf_table.csv")).unwrap());

    let manifest: Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert!(manifest["files"]["perf_table.csv"].is_string());
    assert_eq!(manifest["config"]["k"], 6);
}

#[test]
fn single_pair_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b");
    let cfg = json!({
        "space": {"kind": "mobile", "seed": 3, "count": 1},
        "hardware": {"seed": 3, "count_per_dataflow": 1, "dataflows": ["X-P"],
                     "validity": {"kc_divisor": 1, "yr_divisor": 1, "min_noc_per_pe": 0.0}},
        "proxy": {"index": 0},
        "k": 1,
        "output_dir": out
    });
    let cfg = write_config(dir.path(), &cfg);
    run_ok(&["table", "--config", cfg.to_str().unwrap()]);
    assert_eq!(csv_rows(&out.join("perf_table.csv")).len(), 1);
}

#[test]
fn srcc_from_config_and_from_table_agree() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bundle");
    let cfg = write_config(dir.path(), &small(&out));
    run_ok(&["srcc", "--config", cfg.to_str().unwrap()]);
    let table = out.join("perf_table.csv");
    let side = dir.path().join("side");
    run_ok(&["srcc", "--table", table.to_str().unwrap(), "--out", side.to_str().unwrap()]);
    for name in ["srcc_latency.csv", "srcc_energy.csv", "cdf_latency.csv", "cdf_energy.csv"] {
        assert_eq!(fs::read(out.join(name)).unwrap(), fs::read(side.join(name)).unwrap(), "{name}");
    }
    let m = csv_rows(&out.join("srcc_latency.csv"));
    for (i, row) in m.iter().enumerate() {
        assert_eq!(row[i + 1], "1");
        for (j, other) in m.iter().enumerate() {
            assert_eq!(row[j + 1], other[i + 1]);
        }
    }
    let cdf = csv_rows(&out.join("cdf_energy.csv"));
    assert_eq!(cdf.last().unwrap()[1], "1");
}

#[test]
fn incomplete_table_lists_missing_cells() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("t.csv");
    fs::write(&table, "arch_id,accel_id,latency_cycles,energy_nj\n0,a,5,1\n1,a,6,2\n2,a,7,3\n0,b,5,1\n2,b,9,4\n")
        .unwrap();
    let o = codesign(&["srcc", "--table", table.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("(arch 1, accel 1)"));
}

#[test]
fn stage1_and_codesign_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bundle");
    let mut cfg = small(&out);
    cfg["all_proxies"] = json!(true);
    let cfg = write_config(dir.path(), &cfg);
    let cfg = cfg.to_str().unwrap();

    run_ok(&["stage1", "--config", cfg, "--threads", "2"]);
    let sets: Vec<_> = fs::read_dir(out.join("stage1")).unwrap().collect();
    let accels: Vec<Value> = serde_json::from_slice(&fs::read(out.join("accelerators.json")).unwrap()).unwrap();
    assert_eq!(sets.len(), accels.len());
    let first: Value = serde_json::from_slice(&fs::read(out.join("stage1/optimal_set_000.json")).unwrap()).unwrap();
    assert_eq!(first["evaluations"], 40);
    assert!(first["set"]["entries"].as_array().unwrap().len() <= 6);

    let stdout = run_ok(&["codesign", "--config", cfg]);
    assert!(stdout.contains("semi-decoupled"));
    let rows = csv_rows(&out.join("comparison.csv"));
    assert_eq!(rows.len(), 9);
    for row in &rows {
        // evaluations equal the closed form
        assert_eq!(row[5], row[6], "{row:?}");
        if row[1] == "coupled" {
            assert_eq!(row[7], "0");
        }
    }
    let sweep = csv_rows(&out.join("proxy_sweep.csv"));
    assert_eq!(sweep.len(), 3 * accels.len());
    for row in &sweep {
        let gap: f64 = row[11].parse().unwrap_or(0.0);
        assert!(gap >= 0.0);
    }

    let report = run_ok(&["report", "--out", out.to_str().unwrap()]);
    assert!(report.contains("proxy sweep:"));
    assert!(report.contains("comparison.csv ok"));
    assert!(out.join("report.txt").exists());
}

#[test]
fn mixed_plans_are_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bundle");
    let mut cfg = small(&out);
    cfg["space"]["count"] = json!(6);
    cfg["mixed"] = json!({"enabled": true, "plan_count": 12, "plan_seed": 4});
    let cfg = write_config(dir.path(), &cfg);
    run_ok(&["mixed", "--config", cfg.to_str().unwrap()]);
    let plans = fs::read(out.join("mixed/plans.json")).unwrap();
    let parsed: Vec<Value> = serde_json::from_slice(&plans).unwrap();
    assert_eq!(parsed.len(), 12);
    assert_eq!(parsed[0]["segments"].as_array().unwrap().len(), 22);
    assert_eq!(csv_rows(&out.join("mixed/srcc_latency.csv")).len(), 12);
    run_ok(&["mixed", "--config", cfg.to_str().unwrap()]);
    assert_eq!(plans, fs::read(out.join("mixed/plans.json")).unwrap());
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(&dir.path().join("b"));
    cfg["k"] = json!(0);
    cfg["space"]["count"] = json!(0);
    cfg["hardware"]["dataflows"] = json!([]);
    let path = write_config(dir.path(), &cfg);
    let o = codesign(&["table", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    for needle in ["space.count", "dataflows", "k must be", "grid_point"] {
        assert!(err.contains(needle), "{needle} missing from {err}");
    }

    let mut cfg = small(&dir.path().join("b"));
    cfg["proxy"] = json!({"index": 999});
    let path = write_config(dir.path(), &cfg);
    assert_eq!(codesign(&["codesign", "--config", path.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(codesign(&["table"]).status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let cfg = write_config(dir.path(), &small(&blocker.join("sub")));
    let o = codesign(&["table", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}
