use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use cpc::generate::{generate_instance, replication_rng};
use cpc::io::{load_instance, save_instance};

fn cpc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpc"))
        .args(args)
        .env_remove("CPC_THREADS")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn write_instance(dir: &Path, name: &str, p: usize, groups: usize, seed: u64) -> String {
    let inst = generate_instance(p, groups, &mut replication_rng(seed, 0)).unwrap();
    let path = dir.join(name);
    save_instance(&inst, &path).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn bench_writes_golden_headers() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.csv");
    let res = cpc(&[
        "bench", "--p", "3", "--groups", "2", "--reps", "2", "--solvers", "mm1,flury",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let records = fs::read(&out).unwrap();
    assert!(records.starts_with(b"rep,solver,elapsed_seconds,iterations,objective,pct_diff\n"));
    assert_eq!(records.iter().filter(|&&b| b == b'\n').count(), 1 + 2 * 2);
    let summary = fs::read(dir.path().join("run.csv.summary.csv")).unwrap();
    assert!(summary.starts_with(b"solver,mean_time,mean_iterations,mean_pct_diff\n"));
}

#[test]
fn bench_json_output_parses() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.json");
    let res = cpc(&[
        "bench", "--p", "3", "--groups", "2", "--reps", "1", "--solvers", "mm4",
        "--format", "json", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0);
    let v: serde_json::Value = serde_json::from_slice(&fs::read(&out).unwrap()).unwrap();
    assert_eq!(v["records"][0]["solver"], "mm4");
    assert_eq!(v["records"][0]["pct_diff"], 0.0);
}

#[test]
fn bench_records_are_deterministic_across_threads() {
    let dir = tempfile::tempdir().unwrap();
    let mut bodies = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(format!("t{threads}.csv"));
        let res = Command::new(env!("CARGO_BIN_EXE_cpc"))
            .args(["bench", "--p", "4", "--groups", "3", "--reps", "5", "--seed", "9", "--out", out.to_str().unwrap()])
            .env("CPC_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(code(&res), 0);
        let mut rdr = csv::Reader::from_path(&out).unwrap();
        let rows: Vec<Vec<String>> = rdr
            .records()
            .map(|r| {
                let r = r.unwrap();
                // drop elapsed_seconds
                r.iter().enumerate().filter(|(i, _)| *i != 2).map(|(_, s)| s.to_owned()).collect()
            })
            .collect();
        bodies.push(rows);
    }
    assert_eq!(bodies[0], bodies[1]);
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let res = Command::new(env!("CARGO_BIN_EXE_cpc"))
        .args(["bench", "--p", "2", "--groups", "1", "--reps", "1", "--out", out.to_str().unwrap()])
        .env("CPC_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(code(&res), 1);
}

#[test]
fn unwritable_output_is_io_error() {
    let res = cpc(&["bench", "--p", "2", "--groups", "1", "--reps", "1", "--out", "/nonexistent/dir/out.csv"]);
    assert_eq!(code(&res), 2);
}

#[test]
fn unknown_solver_and_bad_flags_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let o = out.to_str().unwrap();
    assert_eq!(code(&cpc(&["bench", "--p", "2", "--groups", "1", "--solvers", "newton", "--out", o])), 1);
    assert_eq!(code(&cpc(&["bench", "--p", "two", "--groups", "1", "--out", o])), 1);
    assert_eq!(code(&cpc(&["bench", "--p", "0", "--groups", "1", "--out", o])), 1);
    assert_eq!(code(&cpc(&["--help"])), 0);
}

#[test]
fn solve_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_instance(dir.path(), "inst.json", 4, 3, 1);
    let out = dir.path().join("sol.json");
    for d0 in ["identity", "random"] {
        let res = cpc(&["solve", "--input", &input, "--solver", "flury", "--d0", d0, "--out", out.to_str().unwrap()]);
        assert_eq!(code(&res), 0);
        let v: serde_json::Value = serde_json::from_slice(&fs::read(&out).unwrap()).unwrap();
        assert_eq!(v["solver"], "flury");
        assert_eq!(v["final_D"].as_array().unwrap().len(), 4);
        let trace = v["objective_trace"].as_array().unwrap();
        assert_eq!(trace.len(), v["iterations"].as_u64().unwrap() as usize + 1);
    }
}

#[test]
fn solve_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sol.json");
    let o = out.to_str().unwrap();
    assert_eq!(code(&cpc(&["solve", "--input", "/nonexistent.json", "--solver", "mm1", "--out", o])), 2);
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"p": 2, "G": 1, "W": [[[1, 0], [0, 1]]], "A": [[1, -1]]}"#).unwrap();
    let res = cpc(&["solve", "--input", bad.to_str().unwrap(), "--solver", "mm1", "--out", o]);
    assert_eq!(code(&res), 1);
    assert!(String::from_utf8_lossy(&res.stderr).contains("A_1"));
    let input = write_instance(dir.path(), "inst.json", 3, 2, 4);
    assert_eq!(code(&cpc(&["solve", "--input", &input, "--solver", "mm1", "--tol", "-1", "--out", o])), 1);
    let blocked = dir.path().join("no/such/dir.json");
    assert_eq!(code(&cpc(&["solve", "--input", &input, "--solver", "mm1", "--out", blocked.to_str().unwrap()])), 2);
}

#[test]
fn validate_lists_every_violation() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_instance(dir.path(), "good.json", 3, 2, 2);
    assert_eq!(code(&cpc(&["validate", "--input", &good])), 0);
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"p": 2, "G": 2, "W": [[[1, 0], [0, -1]], [[1, 0], [0, 1]]], "A": [[1, 1], [0, 2]]}"#).unwrap();
    let res = cpc(&["validate", "--input", bad.to_str().unwrap()]);
    assert_eq!(code(&res), 1);
    let text = String::from_utf8_lossy(&res.stdout);
    assert!(text.lines().count() >= 2, "{text}");
    let ragged = dir.path().join("ragged.json");
    fs::write(&ragged, r#"{"p": 2, "G": 1, "W": [[[1, 0]]], "A": [[1, 1]]}"#).unwrap();
    assert_eq!(code(&cpc(&["validate", "--input", ragged.to_str().unwrap()])), 1);
    assert_eq!(code(&cpc(&["validate", "--input", "/nonexistent.json"])), 2);
}

#[test]
fn saved_instances_round_trip_exactly() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..20 {
        let inst = generate_instance(5, 3, &mut replication_rng(seed, 3)).unwrap();
        let path = dir.path().join("i.json");
        save_instance(&inst, &path).unwrap();
        assert_eq!(load_instance(&path).unwrap(), inst);
    }
}

#[test]
fn line_search_stall_exits_three() {
    use cpc_core::{OrthonormalMatrix, SolverConfig, SolverKind};
    // with a vanishing tolerance ALS keeps going until rounding stops the line search
    let cfg = SolverConfig::with_tol(1e-300, 100_000);
    let (inst, seed) = (0..200)
        .map(|seed| (generate_instance(4, 3, &mut replication_rng(seed, 0)).unwrap(), seed))
        .find(|(inst, _)| SolverKind::Als.solve(inst, &OrthonormalMatrix::identity(4), &cfg).unwrap().stalled)
        .expect("some instance stalls");
    let dir = tempfile::tempdir().unwrap();
    let input = write_instance(dir.path(), "inst.json", 4, 3, seed);
    assert_eq!(load_instance(Path::new(&input)).unwrap(), inst);
    let out = dir.path().join("sol.json");
    let res = cpc(&[
        "solve", "--input", &input, "--solver", "als", "--tol", "1e-300", "--max-iter", "100000",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 3);
    let v: serde_json::Value = serde_json::from_slice(&fs::read(&out).unwrap()).unwrap();
    assert_eq!(v["stalled"], true);
    assert_eq!(v["converged"], false);
}
