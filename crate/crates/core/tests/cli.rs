// Copyright 2026 The repnet Authors
// SPDX-License-Identifier: Apache-2.0

use std::process::{Command, Output};

fn repnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_repnet"))
        .args(args)
        .env_remove("REPNET_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn analytic_scalars() {
    let o = repnet(&["analytic", "--quantity", "capacity", "--eta", "0.5"]);
    assert!(o.status.success());
    assert_eq!(data_lines(&stdout(&o)), ["1.0"]);

    let o = repnet(&["analytic", "--quantity", "trials-inf-mem", "--p", "0.5", "--M", "2"]);
    assert_eq!(data_lines(&stdout(&o)), ["2.666667"]);

    let o = repnet(&["analytic", "--quantity", "trials-no-mem", "--p", "0.16237", "--M", "100", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["log10"].as_f64().unwrap() - 78.95).abs() < 0.05);
}

#[test]
fn analytic_pmf_table() {
    let o = repnet(&["analytic", "--quantity", "pmf", "--p", "0.5", "--M", "1", "--n-max", "3"]);
    let text = stdout(&o);
    let lines = data_lines(&text);
    assert_eq!(lines[0], "n,probability");
    assert_eq!(lines.len(), 4);
    let first: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!((first - 0.5).abs() < 1e-15);
}

#[test]
fn validation_failures_exit_two() {
    let o = repnet(&["analytic", "--quantity", "rate", "--p", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`M`"));

    let o = repnet(&["analytic", "--quantity", "capacity", "--eta", "1.5"]);
    assert_eq!(o.status.code(), Some(2));

    let o = repnet(&["simulate", "--topology", "pyramid", "--p", "0.1", "--measure", "N-ab"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--a"));

    let o = repnet(&["table9"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn trial_cap_abort_exits_three() {
    let o = repnet(&[
        "simulate", "--topology", "chain", "--links", "8", "--p", "0.01", "--cutoff", "0", "--measure", "N", "--trial-cap", "50",
        "--replicas", "4",
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn simulate_row_and_replay() {
    let args = [
        "simulate", "--topology", "chain", "--links", "2", "--p", "0.5", "--cutoff", "0", "--measure", "N", "--replicas", "20000", "--seed", "4",
    ];
    let a = stdout(&repnet(&args));
    assert!(a.starts_with("# manifest: {"));
    let lines = data_lines(&a);
    assert!(lines[0].starts_with("topology,nodes,links,p,cutoff,measure"));
    let header: Vec<&str> = lines[0].split(',').collect();
    let row: Vec<&str> = lines[1].split(',').collect();
    let mean: f64 = row[header.iter().position(|h| *h == "mean").unwrap()].parse().unwrap();
    assert!((mean - 4.0).abs() < 0.1);

    let mut with_workers = args.to_vec();
    with_workers.extend(["--workers", "3"]);
    let b = stdout(&repnet(&with_workers));
    assert_eq!(data_lines(&a), data_lines(&b));
}

#[test]
fn workers_from_environment() {
    let args = ["simulate", "--topology", "square", "--size", "6", "--p", "0.5", "--trials", "3", "--measure", "S", "--replicas", "500"];
    let plain = repnet(&args);
    let env = Command::new(env!("CARGO_BIN_EXE_repnet")).args(args).env("REPNET_WORKERS", "2").output().unwrap();
    assert!(env.status.success());
    assert_eq!(data_lines(&stdout(&plain)), data_lines(&stdout(&env)));
    let bad = Command::new(env!("CARGO_BIN_EXE_repnet")).args(args).env("REPNET_WORKERS", "zero").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn table2_contract_and_manifest_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t2.csv");
    let o = repnet(&["table2", "--output", out.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let lines = data_lines(&text);
    assert_eq!(lines[0], "M,L_min_km");
    assert_eq!(lines.len(), 6);
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("t2.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "ok");
    assert_eq!(manifest["points"].as_array().unwrap().len(), 5);
    assert!(manifest["points"][0]["crossing_km"].as_f64().unwrap() > 63.0);
}

#[test]
fn failed_runs_keep_partial_rows_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t2.csv");
    // M = 1 is rejected after the first row has been written.
    let o = repnet(&["table2", "--M", "2,1", "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(data_lines(&text), ["M,L_min_km", "2,63"]);
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("t2.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "failed");
    assert!(manifest["error"].as_str().unwrap().contains("M"));
}

#[test]
fn config_file_supplies_flags() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    std::fs::write(&conf, "# small oracle search\np=0.5\nM=3\nestimator=oracle\n").unwrap();
    let o = repnet(&["table1", "--config", conf.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(data_lines(&stdout(&o)), ["p,M,n_star_min", "0.5,3,6"]);
    // Command-line flags win over the file.
    let o = repnet(&["table1", "--config", conf.to_str().unwrap(), "--M", "2"]);
    assert_eq!(data_lines(&stdout(&o))[1], "0.5,2,5");
}

#[test]
fn dump_edges_round_trips_through_file_topology() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("pyr.txt");
    let o = repnet(&[
        "simulate", "--topology", "pyramid", "--layers", "3", "--p", "0.3", "--measure", "N-ab", "--a", "bottom-center", "--b", "apex",
        "--replicas", "2000", "--dump-edges", edges.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let from_file = repnet(&[
        "simulate", "--topology", "file", "--file", edges.to_str().unwrap(), "--measure", "N-ab", "--a", "4", "--b", "0", "--replicas", "2000",
    ]);
    assert!(from_file.status.success(), "{}", String::from_utf8_lossy(&from_file.stderr));
    let mean = |o: &Output| {
        let text = stdout(o);
        let lines = data_lines(&text);
        let header: Vec<&str> = lines[0].split(',').collect();
        let i = header.iter().position(|h| *h == "mean").unwrap();
        lines[1].split(',').nth(i).unwrap().to_string()
    };
    assert_eq!(mean(&o), mean(&from_file));
}

#[test]
fn figure_headers() {
    let o = repnet(&["fig3", "--l-max-km", "3"]);
    let text = stdout(&o);
    assert_eq!(data_lines(&text)[0], "L_km,M,p,rate,capacity");
    assert_eq!(data_lines(&text).len(), 1 + 3 * 5);

    let o = repnet(&["fig5", "--n", "3", "--cutoff", "1", "--p", "0.5", "--replicas", "200"]);
    let text = stdout(&o);
    assert_eq!(data_lines(&text)[0], "p,n,n_star,mean_fraction,std_error,replicas,exact_fraction");

    let o = repnet(&["fig4", "--panel", "c", "--layers", "3", "--replicas", "100"]);
    assert_eq!(data_lines(&stdout(&o)).len(), 4);

    let o = repnet(&["fig1b", "--M", "2", "--cutoff", "0,1,inf", "--length-km", "10", "--replicas", "100"]);
    let text = stdout(&o);
    let lines = data_lines(&text);
    assert_eq!(lines.len(), 4);
    assert!(lines[2].ends_with("monte-carlo"));
}

#[test]
fn help_exits_zero() {
    let o = repnet(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("table3"));
}
