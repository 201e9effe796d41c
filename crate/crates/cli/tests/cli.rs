use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pcspan"))
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn three_vertex_costs_two() {
    let out = run(&["--mode", "pcs-int", data("three_vertex.json").to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    assert_eq!(v["cost"], "2/1");
    assert_eq!(v["edges"], serde_json::json!([0, 1]));
}

#[test]
fn zero_denominator_is_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(data("three_vertex.json"))
        .unwrap()
        .replacen("\"cost\": 1", "\"cost\": \"3/0\"", 1);
    let p = dir.path().join("bad.json");
    fs::write(&p, text).unwrap();
    let out = run(&["--mode", "pcs-int", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn empty_demands_cost_zero() {
    let dir = tempfile::tempdir().unwrap();
    let mut v: Value = serde_json::from_str(&fs::read_to_string(data("three_vertex.json")).unwrap()).unwrap();
    v["demands"] = serde_json::json!([]);
    let p = dir.path().join("empty.json");
    fs::write(&p, v.to_string()).unwrap();
    let out = run(&["--mode", "pcs-int", p.to_str().unwrap()]);
    assert!(out.status.success());
    let r = json_of(&out);
    assert_eq!(r["cost"], "0/1");
    assert_eq!(r["edges"], serde_json::json!([]));
}

#[test]
fn infeasible_demand_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let mut v: Value = serde_json::from_str(&fs::read_to_string(data("three_vertex.json")).unwrap()).unwrap();
    v["demands"][0]["budget"] = serde_json::json!([1, 1]);
    let p = dir.path().join("inf.json");
    fs::write(&p, v.to_string()).unwrap();
    let out = run(&["--mode", "pcs-int", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn theta_mode_needs_theta() {
    let out = run(&["--mode", "pcs-theta", data("three_vertex.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn written_report_verifies_and_bad_solution_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let inst = data("three_vertex.json");
    let report = dir.path().join("r.json");
    let out = run(&[
        "--mode",
        "pcs-int",
        inst.to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let ok = run(&[
        "--mode",
        "verify",
        inst.to_str().unwrap(),
        "--solution",
        report.to_str().unwrap(),
    ]);
    assert!(ok.status.success());
    assert_eq!(json_of(&ok)["verified"], true);
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"edges": [2]}"#).unwrap();
    let no = run(&[
        "--mode",
        "verify",
        inst.to_str().unwrap(),
        "--solution",
        bad.to_str().unwrap(),
    ]);
    assert_eq!(no.status.code(), Some(4));
}

#[test]
fn gen_is_deterministic_and_feasible() {
    let args = [
        "--mode",
        "gen",
        "--n",
        "6",
        "--k",
        "3",
        "--packing",
        "1",
        "--covering",
        "1",
        "--seed",
        "11",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("g.json");
    fs::write(&p, &a.stdout).unwrap();
    let solved = run(&["--mode", "pcs-int", p.to_str().unwrap()]);
    assert!(solved.status.success(), "{}", String::from_utf8_lossy(&solved.stderr));
}

#[test]
fn gen_rejects_unknown_regime() {
    let out = run(&["--mode", "gen", "--regime", "complex"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solve_report_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("g.json");
    let g = run(&[
        "--mode",
        "gen",
        "--n",
        "7",
        "--k",
        "4",
        "--covering",
        "1",
        "--seed",
        "5",
    ]);
    fs::write(&p, &g.stdout).unwrap();
    let a = run(&["--mode", "pcs-int", p.to_str().unwrap(), "--seed", "42"]);
    let b = run(&["--mode", "pcs-int", p.to_str().unwrap(), "--seed", "42"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn junction_mode_reports_density() {
    let out = run(&["--mode", "junction", data("three_vertex.json").to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(json_of(&out)["density"], "2/1");
}

#[test]
fn rcs_and_hopset_modes_run() {
    let dir = tempfile::tempdir().unwrap();
    let rcs = dir.path().join("rcs.json");
    fs::write(
        &rcs,
        r#"{"n": 4, "edges": [{"u":0,"v":1,"cost":1,"len":1},{"u":1,"v":3,"cost":1,"len":1},
            {"u":0,"v":2,"cost":1,"len":1},{"u":2,"v":3,"cost":1,"len":1}],
            "groups": [[1]], "must_visit": 0,
            "demands": [{"s":0,"t":3,"ctrl":[2,-1]}]}"#,
    )
    .unwrap();
    let out = run(&["--mode", "rcs", rcs.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json_of(&out)["edges"], serde_json::json!([2, 3]));

    let hs = dir.path().join("hs.json");
    fs::write(
        &hs,
        r#"{"n": 4, "beta": 2, "edges": [[0,1,1],[1,2,1],[2,3,1]],
            "demands": [{"s":0,"t":3,"dist":3}]}"#,
    )
    .unwrap();
    let out = run(&["--mode", "hopset", hs.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    assert_eq!(v["verified"], true);
    assert_eq!(v["hopset_size"], 1);
}

#[test]
fn bench_summary_is_stable_and_marks_oracle_rows() {
    let suite = tempfile::tempdir().unwrap();
    for seed in 0..3 {
        let g = run(&["--mode", "gen", "--n", "5", "--k", "2", "--seed", &seed.to_string()]);
        let name = if seed == 0 {
            format!("i{seed}.oracle.json")
        } else {
            format!("i{seed}.json")
        };
        fs::write(suite.path().join(name), &g.stdout).unwrap();
    }
    let out1 = tempfile::tempdir().unwrap();
    let out2 = tempfile::tempdir().unwrap();
    let s = suite.path().to_str().unwrap();
    for (o, w) in [(&out1, "1"), (&out2, "3")] {
        let r = run(&[
            "--mode",
            "bench",
            s,
            "--out",
            o.path().to_str().unwrap(),
            "--workers",
            w,
        ]);
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    }
    for f in ["summary.csv", "summary.json"] {
        assert_eq!(
            fs::read(out1.path().join(f)).unwrap(),
            fs::read(out2.path().join(f)).unwrap()
        );
    }
    let v: Value = serde_json::from_slice(&fs::read(out1.path().join("summary.json")).unwrap()).unwrap();
    let rows = v["instances"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0]["instance"], "i0.oracle.json");
    assert_ne!(rows[0]["ratio"], "unavailable");
    assert_eq!(rows[1]["ratio"], "unavailable");
    assert!(rows.iter().all(|r| r["status"] == "ok"));
    assert!(out1.path().join("timings.csv").exists());
}
