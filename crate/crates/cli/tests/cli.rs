mod common;

use common::{bin, check_golden, golden_dir};
use ordinal_irt::io::{read_model_spec, ItemEntry, ModelSpecFile};
use std::fs;
use std::process::Output;

fn run(args: &[&str]) -> Output {
    bin().args(args).current_dir(golden_dir()).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn golden_outputs_are_stable() {
    let problems = check_golden();
    assert!(problems.is_empty(), "{}", problems.join("\n"));
}

#[test]
fn printed_probabilities_match_the_library() {
    let o = run(&["probs", "inputs/sequential.json", "--theta", "-1.5,0,2", "--format", "csv"]);
    assert!(o.status.success());
    let models = read_model_spec(&fs::read_to_string(golden_dir().join("inputs/sequential.json")).unwrap()).unwrap();
    let text = stdout(&o);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("theta,item,p0"));
    let mut rows = 0;
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        let theta: f64 = cells[0].parse().unwrap();
        let model = models.iter().find(|m| m.thresholds().item_id == cells[1]).unwrap();
        let want = model.category_probs(theta).unwrap();
        for (r, p) in want.probs().iter().enumerate() {
            let got: f64 = cells[2 + r].parse().unwrap();
            assert!((got - p).abs() <= 1e-11 * p.abs().max(1e-300) + 1e-300, "{line}: {got} vs {p}");
        }
        rows += 1;
    }
    assert_eq!(rows, 6);
}

#[test]
fn seed_comes_from_the_environment() {
    let args = ["simulate", "inputs/pcm_flat.json", "--theta", "0", "--n", "50"];
    let a = bin().args(args).current_dir(golden_dir()).env("ORDIRT_SEED", "5").output().unwrap();
    let b = run(&[&args[..], &["--seed", "5"]].concat());
    let c = run(&args);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    let bad = bin().args(args).current_dir(golden_dir()).env("ORDIRT_SEED", "x").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn rejection_rate_is_reported() {
    let o = run(&["simulate", "inputs/pcm_flat.json", "--theta", "0", "--n", "200000", "--method", "rejection"]);
    assert!(o.status.success());
    let err = String::from_utf8(o.stderr.clone()).unwrap();
    let rate: f64 = err
        .split_whitespace()
        .filter_map(|w| w.trim_end_matches(|c: char| !c.is_ascii_digit()).parse().ok())
        .find(|x: &f64| *x > 0.0 && *x < 1.0)
        .unwrap_or_else(|| panic!("no rate in {err:?}"));
    assert!((rate - 0.75).abs() < 0.01, "{rate}");
    assert_eq!(stdout(&o).lines().count(), 200_001);
}

#[test]
fn simulate_then_fit_recovers_the_truth() {
    let dir = tempfile::tempdir().unwrap();
    let truth = ModelSpecFile {
        family: "pcm".into(),
        link: "logistic".into(),
        items: [[-1.0, 0.5, 1.2], [0.3, -0.6, 0.9], [0.0, 0.8, -1.1], [1.1, 0.2, -0.3], [-0.4, -1.2, 0.6]]
            .iter()
            .enumerate()
            .map(|(i, d)| ItemEntry { id: format!("item{}", i + 1), deltas: d.to_vec() })
            .collect(),
    };
    let truth_path = dir.path().join("truth.json");
    fs::write(&truth_path, truth.to_json()).unwrap();
    let data = dir.path().join("data.csv");
    let abil = dir.path().join("abil.csv");
    let report = dir.path().join("fit.json");
    let p = |x: &std::path::Path| x.to_str().unwrap().to_string();
    let o = bin()
        .args(["simulate", &p(&truth_path), "--theta-normal", "0,1,2000", "--seed", "9"])
        .args(["--out", &p(&data), "--abilities-out", &p(&abil)])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = bin()
        .args(["fit", &p(&data), "--abilities", &p(&abil), "--truth", &p(&truth_path), "--out", &p(&report)])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    let rmse = v["threshold_rmse"].as_f64().unwrap();
    assert!(rmse < 0.1, "{rmse}");
    assert_eq!(v["metadata"]["k_source"], "model");
    assert!(v["metadata"]["anchor"].is_null());
    let est: Vec<Vec<f64>> = v["thresholds"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| t["deltas"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect())
        .collect();
    let want: Vec<Vec<f64>> = truth.items.iter().map(|i| i.deltas.clone()).collect();
    assert!((threshold_rmse_vec(&est, &want) - rmse).abs() < 1e-9);
}

fn threshold_rmse_vec(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let n: usize = a.iter().map(Vec::len).sum();
    let ss: f64 = a.iter().zip(b).flat_map(|(x, y)| x.iter().zip(y)).map(|(x, y)| (x - y).powi(2)).sum();
    (ss / n as f64).sqrt()
}

#[test]
fn joint_mode_reports_its_anchor() {
    let o = run(&["fit", "inputs/small.csv", "--family", "pcm", "--mode", "joint"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["metadata"]["mode"], "joint");
    assert_eq!(v["metadata"]["anchor"], "mean ability 0");
    assert_eq!(v["metadata"]["k_source"], "data");
}

#[test]
fn verify_reports_every_proposition() {
    let o = run(&["verify", "--prop", "all", "--trials", "5", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 12);
    assert!(v.as_array().unwrap().iter().all(|r| r["passed"] == true));
    assert_eq!(run(&["verify", "--trials", "0"]).status.code(), Some(2));
}

#[test]
fn output_files_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.csv");
    let o = run(&["curves", "inputs/pcm_flat.json", "--grid", "0:0:1", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 4);
    let o = run(&["curves", "inputs/pcm_flat.json", "--grid", "0:0:1", "--out", "/nonexistent/dir/x.csv"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_input_is_a_usage_error() {
    assert_eq!(run(&["probs", "inputs/none.json", "--theta", "0"]).status.code(), Some(2));
    assert_eq!(run(&[]).status.code(), Some(2));
}
