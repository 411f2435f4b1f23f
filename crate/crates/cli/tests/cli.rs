use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bipeel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bipeel")).args(args).output().expect("binary runs")
}

fn write_graph(dir: &Path, name: &str, edges: &[(u32, u32)]) -> PathBuf {
    let path = dir.join(name);
    let mut text = String::from("% bip unweighted\n");
    for (u, v) in edges {
        text.push_str(&format!("{u} {v}\n"));
    }
    fs::write(&path, text).unwrap();
    path
}

/// Deterministic 30×30 graph with a spread of wing numbers.
fn medium_graph(dir: &Path) -> PathBuf {
    let mut edges = Vec::new();
    for u in 1..=30u32 {
        for v in 1..=30u32 {
            if (u * 7 + v * 13 + u * v) % 5 < 2 || (u <= 8 && v <= 8) {
                edges.push((u, v));
            }
        }
    }
    write_graph(dir, "medium.txt", &edges)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn count_k22() {
    let dir = TempDir::new().unwrap();
    let g = write_graph(dir.path(), "k22.txt", &[(1, 1), (1, 2), (2, 1), (2, 2)]);
    let out = bipeel(&["count", "--input", s(&g)]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "total=1");
}

#[test]
fn wing_csv_independent_of_partitions() {
    let dir = TempDir::new().unwrap();
    let g = medium_graph(dir.path());
    let mut csvs = Vec::new();
    for p in ["1", "4"] {
        let out = dir.path().join(format!("p{p}.csv"));
        let r = bipeel(&["wing", "--input", s(&g), "--partitions", p, "--workers", "2", "--out", s(&out)]);
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
        csvs.push(fs::read(&out).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
    let base = dir.path().join("base.csv");
    assert!(bipeel(&["wing", "--input", s(&g), "--baseline", "--out", s(&base)]).status.success());
    assert_eq!(fs::read(&base).unwrap(), csvs[0]);
}

fn metrics(dir: &Path, g: &Path, cmd: &[&str], extra: &[&str], name: &str) -> Value {
    let path = dir.join(name);
    let mut args: Vec<&str> = cmd.to_vec();
    args.extend(["--input", s(g), "--partitions", "4", "--workers", "2", "--out", "/dev/null", "--metrics", s(&path)]);
    args.extend(extra);
    let r = bipeel(&args);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap()
}

#[test]
fn unoptimized_runs_do_more_work() {
    let dir = TempDir::new().unwrap();
    let g = medium_graph(dir.path());
    let plain = ["--no-batch", "--no-delete"];
    let d = metrics(dir.path(), &g, &["wing"], &[], "d.json");
    let p = metrics(dir.path(), &g, &["wing"], &plain, "p.json");
    assert!(p["metrics"]["support_updates"].as_u64() >= d["metrics"]["support_updates"].as_u64());
    let d = metrics(dir.path(), &g, &["tip", "--side", "u"], &[], "td.json");
    let p = metrics(dir.path(), &g, &["tip", "--side", "u"], &plain, "tp.json");
    assert!(p["metrics"]["wedges_traversed"].as_u64() >= d["metrics"]["wedges_traversed"].as_u64());
}

#[test]
fn metrics_are_consistent() {
    let dir = TempDir::new().unwrap();
    let g = medium_graph(dir.path());
    let m = &metrics(dir.path(), &g, &["wing"], &[], "m.json")["metrics"];
    let phases: f64 = m["phases"].as_array().unwrap().iter().map(|p| p["seconds"].as_f64().unwrap()).sum();
    let wall = m["wall_time_secs"].as_f64().unwrap();
    assert!((phases - wall).abs() <= 0.05 * wall + 1e-6);
    assert!(m["iterations_rho"].as_u64().unwrap() >= 1);
    assert_eq!(m["per_partition_work"].as_array().unwrap().len() as u64, m["partitions"].as_u64().unwrap());
}

#[test]
fn plan_files_written() {
    let dir = TempDir::new().unwrap();
    let g = medium_graph(dir.path());
    let plan = dir.path().join("plan");
    let r = bipeel(&["tip", "--side", "v", "--input", s(&g), "--partitions", "3", "--out", "/dev/null", "--plan-out", s(&plan)]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let header: Value = serde_json::from_str(&fs::read_to_string(plan.with_extension("json")).unwrap()).unwrap();
    assert_eq!(header["range_bounds"][0], 0);
    let csv = fs::read_to_string(plan.with_extension("csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("entity_id,partition,init_support"));
    let info: Value = serde_json::from_slice(&bipeel(&["info", "--input", s(&g)]).stdout).unwrap();
    assert_eq!(csv.lines().count() as u64, 1 + info["v_count"].as_u64().unwrap());
}

#[test]
fn verify_random_graphs() {
    let r = bipeel(&["verify", "--graphs", "6", "--max-side", "20", "--seed", "3"]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stdout));
}

#[test]
fn errors_exit_nonzero() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "1 2 3\n").unwrap();
    let r = bipeel(&["count", "--input", s(&bad)]);
    assert!(!r.status.success());
    assert!(String::from_utf8_lossy(&r.stderr).contains("line 1"));

    let g = write_graph(dir.path(), "k22.txt", &[(1, 1), (1, 2), (2, 1), (2, 2)]);
    assert!(!bipeel(&["wing", "--input", s(&g), "--partitions", "0"]).status.success());
    assert!(!bipeel(&["wing", "--input", s(&g), "--mem-budget", "1"]).status.success());
    assert!(!bipeel(&["tip", "--input", s(&g)]).status.success());
}
