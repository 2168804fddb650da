use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(rel: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(rel)
        .to_string_lossy()
        .into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wiretap"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn prefix(dir: &tempfile::TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn with_suffix(p: &str, s: &str) -> PathBuf {
    PathBuf::from(format!("{p}{s}"))
}

#[test]
fn missing_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "simulate",
        "--config",
        "/nonexistent/cfg.json",
        "--out",
        &prefix(&dir, "x"),
    ]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/cfg.json"));
}

#[test]
fn unknown_flag_exits_2() {
    assert_eq!(code(&run(&["simulate", "--bogus"])), 2);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn malformed_channel_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"schema_version\": 1}").unwrap();
    let o = run(&[
        "region-discrete",
        "--channel",
        bad.to_str().unwrap(),
        "--out",
        &prefix(&dir, "r"),
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn bad_grid_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["region-gaussian", "--grid", "gamma=1", "--out", &prefix(&dir, "g")]);
    assert_eq!(code(&o), 2);
    let o = run(&[
        "region-gaussian",
        "--N1",
        "0.5",
        "--N2",
        "1",
        "--out",
        &prefix(&dir, "g"),
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn infeasible_margin_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = json(data("configs/simulate_binary.json"));
    cfg["margin"] = Value::from(5.0);
    let path = dir.path().join("cfg.json");
    fs::write(&path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let o = run(&[
        "simulate",
        "--config",
        path.to_str().unwrap(),
        "--out",
        &prefix(&dir, "s"),
    ]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn budget_exceeded_exits_4_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let p = prefix(&dir, "e");
    let o = run(&[
        "equivocation",
        "--config",
        &data("configs/equivocation.json"),
        "--budget",
        "10",
        "--out",
        &p,
    ]);
    assert_eq!(code(&o), 4);
    assert!(!with_suffix(&p, ".equivocation.json").exists());
    assert!(!with_suffix(&p, ".manifest.json").exists());
}

#[test]
fn constant_game_value() {
    let dir = tempfile::tempdir().unwrap();
    let p = prefix(&dir, "c");
    let o = run(&["game-minmax", "--game", &data("games/constant.json"), "--out", &p]);
    assert_eq!(code(&o), 0);
    let v = json(with_suffix(&p, ".minmax.json"));
    assert_eq!(v["nu"].as_f64(), Some(3.0));
    assert_eq!(v["schema_version"].as_u64(), Some(1));
}

#[test]
fn zero_trials_report_zeros() {
    let dir = tempfile::tempdir().unwrap();
    let p = prefix(&dir, "z");
    let o = run(&[
        "simulate",
        "--config",
        &data("configs/simulate_binary.json"),
        "--trials",
        "0",
        "--out",
        &p,
    ]);
    assert_eq!(code(&o), 0);
    let v = json(with_suffix(&p, ".report.json"));
    assert_eq!(v["trials"].as_u64(), Some(0));
    assert_eq!(v["joint_error"].as_f64(), Some(0.0));
}

#[test]
fn manifest_records_inputs_and_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let p = prefix(&dir, "cv");
    let cfg = data("configs/covering_above.json");
    let o = run(&[
        "covering",
        "--config",
        &cfg,
        "--trials",
        "5",
        "--threads",
        "2",
        "--out",
        &p,
    ]);
    assert_eq!(code(&o), 0);
    let m = json(with_suffix(&p, ".manifest.json"));
    assert_eq!(m["command"], "covering");
    assert_eq!(m["seed"].as_u64(), Some(11));
    assert_eq!(m["parameters"]["trials"].as_u64(), Some(5));
    let args: Vec<&str> = m["args"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| a.as_str().unwrap())
        .collect();
    assert!(!args.contains(&"--threads"));
    assert!(args.contains(&cfg.as_str()));
    let input = &m["inputs"][0];
    assert_eq!(input["sha256"].as_str().unwrap().len(), 64);
    assert!(Path::new(input["path"].as_str().unwrap()).is_absolute());
    assert!(m["outputs"][0]["path"].as_str().unwrap().ends_with("cv.covering.json"));
}

#[test]
fn rerun_detects_changed_outputs_and_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("params.json");
    fs::write(
        &input,
        serde_json::json!({"P": 1.0, "N1": 1.5, "N2": 1.0, "N3": 2.0, "Q1": 1.0, "Q2": 1.0, "rho": 0.0}).to_string(),
    )
    .unwrap();
    let p = prefix(&dir, "g");
    let grid = "beta=0,0.5,1;alpha1=0,0.5;alpha2=0,0.5";
    let o = run(&[
        "region-gaussian",
        "--params",
        input.to_str().unwrap(),
        "--grid",
        grid,
        "--out",
        &p,
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = with_suffix(&p, ".manifest.json");

    let o = run(&[
        "rerun",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out",
        &prefix(&dir, "again"),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        fs::read(with_suffix(&p, ".region.csv")).unwrap(),
        fs::read(dir.path().join("again.region.csv")).unwrap()
    );

    let mut m = json(&manifest);
    m["outputs"][0]["sha256"] = Value::from("0".repeat(64));
    let tampered = dir.path().join("tampered.json");
    fs::write(&tampered, m.to_string()).unwrap();
    assert_eq!(
        code(&run(&[
            "rerun",
            "--manifest",
            tampered.to_str().unwrap(),
            "--out",
            &prefix(&dir, "t")
        ])),
        1
    );

    fs::write(&input, "{\"P\": 2.0}").unwrap();
    assert_eq!(code(&run(&["rerun", "--manifest", manifest.to_str().unwrap()])), 2);
}

#[test]
fn side_info_csv_shape() {
    let dir = tempfile::tempdir().unwrap();
    let p = prefix(&dir, "s");
    assert_eq!(code(&run(&["side-info", "--alphas", "0,1,1000", "--out", &p])), 0);
    let csv = fs::read_to_string(with_suffix(&p, ".side_info.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "alpha1,rate_bits,capacity_bits");
    assert_eq!(lines.len(), 4);
    assert!(!csv.contains('\r'));
}

#[test]
fn discrete_region_reaches_one_bit() {
    let dir = tempfile::tempdir().unwrap();
    let p = prefix(&dir, "r");
    let o = run(&[
        "region-discrete",
        "--channel",
        &data("channels/noiseless_binary.json"),
        "--aux-sizes",
        "2,2",
        "--budget",
        "2000",
        "--out",
        &p,
    ]);
    assert_eq!(code(&o), 0);
    let csv = fs::read_to_string(with_suffix(&p, ".region.csv")).unwrap();
    let r1 = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().parse::<f64>().unwrap())
        .fold(0.0, f64::max);
    assert!(r1 > 0.98, "{r1}");
    let pol = json(with_suffix(&p, ".policies.json"));
    assert_eq!(pol["result"]["aux_sizes"], serde_json::json!([2, 2]));
}

fn region_csv(p: &str) -> wiretap_core::geometry::RegionPolygon {
    let csv = fs::read_to_string(with_suffix(p, ".region.csv")).unwrap();
    let pts: Vec<[f64; 2]> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            [a.parse().unwrap(), b.parse().unwrap()]
        })
        .collect();
    wiretap_core::geometry::RegionPolygon::hull_of(&pts)
}

#[test]
fn larger_search_budget_contains_smaller() {
    let dir = tempfile::tempdir().unwrap();
    let ch = data("channels/erasure_broadcast.json");
    let (small, large) = (prefix(&dir, "b1"), prefix(&dir, "b1000"));
    for (p, b) in [(&small, "1"), (&large, "1000")] {
        let o = run(&[
            "region-discrete",
            "--channel",
            &ch,
            "--budget",
            b,
            "--refine",
            "0",
            "--seed",
            "5",
            "--out",
            p,
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert!(region_csv(&large).contains_region(&region_csv(&small), 1e-9));
}

#[test]
fn stronger_state_contains_weaker() {
    let dir = tempfile::tempdir().unwrap();
    let (lo, hi) = (prefix(&dir, "q01"), prefix(&dir, "q20"));
    for (p, q) in [(&lo, "0.1"), (&hi, "20")] {
        let o = run(&["region-gaussian", "--Q1", q, "--Q2", q, "--rho", "0", "--out", p]);
        assert_eq!(code(&o), 0);
    }
    assert!(region_csv(&hi).contains_region(&region_csv(&lo), 1e-9));
}

#[test]
fn all_power_to_first_user_leaves_r2_zero() {
    let dir = tempfile::tempdir().unwrap();
    let p = prefix(&dir, "b");
    let o = run(&["region-gaussian", "--grid", "beta=1;alpha2=0", "--out", &p]);
    assert_eq!(code(&o), 0);
    let r = region_csv(&p);
    assert!(r.vertices.iter().all(|v| v[1].abs() <= 1e-12));
    assert!(r.vertices.iter().any(|v| v[0] > 0.0));
}
