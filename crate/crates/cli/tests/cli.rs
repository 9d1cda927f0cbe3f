use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ncpart::metrics::TIMING_COLUMNS;
use tempfile::TempDir;

fn ncpart(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ncpart"))
        .args(args)
        .env_remove("NCPART_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn ok(args: &[&str]) -> String {
    let out = ncpart(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    stdout(&out)
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A 4-agent hybrid network written by `graph build`.
fn small_network(dir: &TempDir) -> String {
    let file = dir.path().join("net.txt");
    ok(&["graph", "build", "--network", "random:4,0.6,3", "--out", path(&file)]);
    path(&file).to_string()
}

fn set_sizes(partition_file: &str) -> Vec<usize> {
    let mut sizes: Vec<usize> = partition_file
        .lines()
        .filter(|l| l.starts_with("set "))
        .map(|l| l.split_once(':').unwrap().1.split_whitespace().count())
        .collect();
    sizes.sort_unstable();
    sizes
}

fn meta(partition_file: &str, key: &str) -> Option<f64> {
    partition_file.lines().find_map(|l| l.strip_prefix(key)?.strip_prefix('=')?.parse().ok())
}

/// Drops wall-clock columns so two runs can be compared byte for byte.
fn without_timing(csv: &str, extra: &[&str]) -> String {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap_or_default().split(',').collect();
    let keep: Vec<usize> = (0..header.len())
        .filter(|&i| !TIMING_COLUMNS.contains(&header[i]) && !extra.contains(&header[i]))
        .collect();
    std::iter::once(header.join(","))
        .chain(lines.map(|l| {
            let fields: Vec<&str> = l.split(',').collect();
            keep.iter().map(|&i| fields[i]).collect::<Vec<_>>().join(",")
        }))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn stats_of_the_benchmark() {
    let text = ok(&["graph", "--network", "random-benchmark"]);
    assert!(text.starts_with("50 nodes, 52 edges\n"), "{text}");
    assert!(text.contains("degree histogram:"));
}

#[test]
fn stats_show_the_modular_weight_tiers() {
    let text = ok(&["graph", "stats", "--network", "modular64"]);
    assert!(text.starts_with("64 nodes"));
    assert!(text.contains("weight tiers: 0.001 0.01 0.1"), "{text}");
}

#[test]
fn empty_network_file_is_a_line_one_error() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("empty.txt");
    fs::write(&file, "").unwrap();
    let out = ncpart(&["graph", "--network", path(&file)]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error:") && err.contains("line 1"), "{err}");
}

#[test]
fn unknown_network_and_bad_flags_fail() {
    assert_eq!(ncpart(&["graph", "--network", "no-such-thing"]).status.code(), Some(1));
    // clap usage errors exit with 2 before anything runs
    assert_eq!(ncpart(&["partition", "--network", "modular64", "--method", "kmeans"]).status.code(), Some(2));
    assert_eq!(ncpart(&["partition", "--network", "modular64", "--method", "greedy"]).status.code(), Some(1));
}

#[test]
fn build_output_round_trips() {
    let dir = TempDir::new().unwrap();
    let first = dir.path().join("a.txt");
    let second = dir.path().join("b.txt");
    ok(&["graph", "build", "--network", "random-benchmark", "--out", path(&first)]);
    ok(&["graph", "build", "--network", path(&first), "--out", path(&second)]);
    assert_eq!(fs::read_to_string(&first).unwrap(), fs::read_to_string(&second).unwrap());
    assert_eq!(ok(&["graph", "--network", path(&first)]), ok(&["graph", "--network", "random-benchmark"]));
}

#[test]
fn local_search_finds_the_modules() {
    let text = ok(&["partition", "--network", "modular64", "--method", "bqp-local", "--alpha", "0.05"]);
    assert_eq!(set_sizes(&text), vec![4; 16]);
    assert!(text.starts_with("method=bqp-local\nalpha=0.05\n"), "{text}");
}

#[test]
fn zero_alpha_groups_a_connected_network() {
    let text = ok(&["partition", "--network", "random-benchmark", "--method", "bqp-local", "--alpha", "0"]);
    assert_eq!(set_sizes(&text), vec![50]);
}

#[test]
fn oracle_and_exact_agree() {
    let args = |m| ["partition", "--network", "random:7,0.5,11", "--method", m, "--alpha", "0.3"];
    let oracle = ok(&args("oracle"));
    let exact = ok(&args("bqp-exact"));
    assert_eq!(meta(&oracle, "objective"), meta(&exact, "objective"));
    assert!(meta(&oracle, "objective").is_some());
}

#[test]
fn partition_out_echoes_the_summary() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("p.txt");
    let echo = ok(&["partition", "--network", "modular64", "--method", "modularity", "--out", path(&file)]);
    assert!(echo.contains("objective=") && echo.contains("Q="), "{echo}");
    assert!(fs::read_to_string(&file).unwrap().contains("set 1:"));
}

#[test]
fn grand_coalition_reproduces_the_baseline() {
    let dir = TempDir::new().unwrap();
    let net = small_network(&dir);
    let grand = dir.path().join("grand.txt");
    fs::write(&grand, "set 1: 1 2 3 4\n").unwrap();
    let csv = ok(&["evaluate", "--network", &net, "--partition", path(&grand), "--steps", "3"]);
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!((rows[0][0], rows[1][0]), ("CMPC", "grand"));
    // same stage cost, no loss, no consensus traffic
    assert_eq!(rows[0][2], rows[1][2]);
    assert_eq!(rows[1][3], "0.0000");
    assert_eq!(rows[1][8], "0.0000");
}

#[test]
fn sweep_row_matches_evaluate() {
    let dir = TempDir::new().unwrap();
    let net = small_network(&dir);
    let common = ["--network", net.as_str(), "--method", "bqp-local", "--alpha", "0.5", "--steps", "3"];
    let sweep = ok(&[&["sweep"], &common[..]].concat());
    let eval = ok(&[&["evaluate"], &common[..]].concat());
    let sweep_row: Vec<&str> = sweep.lines().nth(1).unwrap().split(',').collect();
    let eval_rows: Vec<Vec<&str>> = eval.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(sweep.lines().count(), 2);
    assert_eq!(sweep_row[0], eval_rows[1][0]);
    let stage = |r: &[&str]| r[2].parse::<f64>().unwrap();
    let norm: f64 = sweep_row[2].parse().unwrap();
    assert!((norm - stage(&eval_rows[1]) / stage(&eval_rows[0])).abs() < 1e-3);
}

#[test]
fn all_partitions_sweep_covers_bell_four() {
    let dir = TempDir::new().unwrap();
    let net = small_network(&dir);
    let out = dir.path().join("sweep");
    let csv = ok(&["sweep", "--network", &net, "--all-partitions", "--steps", "2", "--out", path(&out)]);
    assert_eq!(csv.lines().count(), 1 + 15);
    assert_eq!(fs::read_to_string(out.join("sweep.csv")).unwrap(), csv);
    assert!(out.join("report.csv").exists());
}

#[test]
fn all_partitions_refuses_large_networks() {
    let out = ncpart(&["sweep", "--network", "random-benchmark", "--all-partitions"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn evaluation_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        ok(&["evaluate", "--network", "random:6,0.5,4", "--method", "bqp-local", "--alpha", "0.05,1", "--steps", "3", "--seed", "9", "--out", path(&out)]);
        out
    };
    let (a, b) = (run("a"), run("b"));
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 7);
    for name in names {
        let read = |d: &Path| fs::read_to_string(d.join(&name)).unwrap();
        assert_eq!(without_timing(&read(&a), &["solve_seconds"]), without_timing(&read(&b), &["solve_seconds"]), "{name:?}");
    }
}

#[test]
fn thread_cap_from_the_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_ncpart"))
        .args(["evaluate", "--network", "random:4,0.6,3", "--method", "bqp-local", "--alpha", "1", "--steps", "2"])
        .env("NCPART_THREADS", "1")
        .output()
        .unwrap();
    assert!(out.status.success());
}
