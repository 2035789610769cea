//! Black-box tests of the `symbolic-pt` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use symbolic_pt::glm::sigmoid;
use symbolic_pt::scenario::{latent_utility, read_csv, DEFAULT_TRUE_COEFFS};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_symbolic-pt"));
    cmd.env_remove("SYMBOLIC_PT_OUT");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("symbolic-pt-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn generate(dir: &Path, n: usize, seed: u64) -> PathBuf {
    let out = run(&["generate", "--n", &n.to_string(), "--seed", &seed.to_string(), "--out", s(dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    dir.join("dataset.csv")
}

#[test]
fn generate_writes_header_plus_n_rows_deterministically() {
    let (a, b) = (scratch("gen-a"), scratch("gen-b"));
    let csv_a = generate(&a, 5000, 42);
    let csv_b = generate(&b, 5000, 42);
    let body = std::fs::read_to_string(&csv_a).unwrap();
    assert_eq!(body.lines().count(), 5001);
    assert_eq!(body.lines().next(), Some("id,safe,risky,p,frame,choice"));
    assert_eq!(std::fs::read(&csv_a).unwrap(), std::fs::read(&csv_b).unwrap());
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.join("dataset.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 42);
    assert_eq!(meta["n"], 5000);
}

#[test]
fn usage_errors_exit_one() {
    let dir = scratch("usage");
    assert_eq!(run(&["generate", "--n", "0", "--out", s(&dir)]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["fit", "nonsense", "x.csv"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn fit_symbolic_prints_five_coefficients() {
    let dir = scratch("fit-sym");
    let csv = generate(&dir, 5000, 42);
    let out = run(&["fit", "symbolic", s(&csv), "--out", s(&dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = String::from_utf8(out.stdout).unwrap();
    assert_eq!(table.lines().count(), 6, "{table}");
    let model: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("symbolic.json")).unwrap()).unwrap();
    assert_eq!(model["model"], "symbolic");
    assert_eq!(model["coeffs"].as_array().unwrap().len(), 5);
}

#[test]
fn fit_cpt_is_reproducible() {
    let dir = scratch("fit-cpt");
    let csv = generate(&dir, 2000, 42);
    let mut outputs = Vec::new();
    for tag in ["a", "b"] {
        let out_dir = dir.join(tag);
        let out = run(&["fit", "cpt", s(&csv), "--restarts", "20", "--cpt-seed", "7", "--out", s(&out_dir)]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push((out.stdout, std::fs::read(out_dir.join("cpt.json")).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn fit_rejects_csv_missing_a_column() {
    let dir = scratch("bad-csv");
    let csv = dir.join("bad.csv");
    std::fs::write(&csv, "id,safe,risky,frame,choice\n0,50,100,1,1\n").unwrap();
    let out = run(&["fit", "blackbox", s(&csv), "--out", s(&dir)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
    let missing = run(&["fit", "blackbox", s(&dir.join("absent.csv")), "--out", s(&dir)]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn evaluate_true_model_matches_bayes_rate() {
    let dir = scratch("bayes");
    let csv = generate(&dir, 50_000, 9);
    let out = run(&["fit", "symbolic", s(&csv), "--out", s(&dir)]);
    assert!(out.status.success());

    // Overwrite the fitted coefficients with the generating ones.
    let path = dir.join("symbolic.json");
    let mut model: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    model["coeffs"] = serde_json::json!(DEFAULT_TRUE_COEFFS);
    let truth = dir.join("truth.json");
    std::fs::write(&truth, serde_json::to_string(&model).unwrap()).unwrap();

    let out = run(&["evaluate", s(&truth), s(&csv)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("truth.metrics.json")).unwrap()).unwrap();
    let acc = metrics["accuracy"].as_f64().unwrap();

    let data = read_csv(&csv).unwrap();
    let bayes = data
        .iter()
        .map(|sc| {
            let p = sigmoid(latent_utility(sc, &DEFAULT_TRUE_COEFFS));
            p.max(1.0 - p)
        })
        .sum::<f64>()
        / data.len() as f64;
    assert!((acc - bayes).abs() < 0.01, "accuracy {acc} vs Bayes rate {bayes}");
    assert!((0.75..=0.85).contains(&bayes), "Bayes rate {bayes}");
}

#[test]
fn evaluate_single_class_slice_reports_null_auc() {
    let dir = scratch("one-class");
    let csv = generate(&dir, 3000, 42);
    assert!(run(&["fit", "symbolic", s(&csv), "--out", s(&dir)]).status.success());
    let body = std::fs::read_to_string(&csv).unwrap();
    let mut lines = body.lines();
    let mut slice = format!("{}\n", lines.next().unwrap());
    for l in lines.filter(|l| l.ends_with(",1")) {
        slice.push_str(l);
        slice.push('\n');
    }
    let ones = dir.join("ones.csv");
    std::fs::write(&ones, slice).unwrap();
    let out = run(&["evaluate", s(&dir.join("symbolic.json")), s(&ones), "--out", s(&dir)]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("symbolic.metrics.json")).unwrap()).unwrap();
    assert!(metrics["auc"].is_null());
}

#[test]
fn experiment_writes_the_full_bundle() {
    let dir = scratch("exp");
    let out = run(&["experiment", "--n", "1500", "--restarts", "3", "--svg", "--out", s(&dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in [
        "dataset.csv",
        "train.csv",
        "test.csv",
        "effect_sizes.json",
        "symbolic.json",
        "blackbox.json",
        "cpt.json",
        "table1.csv",
        "reflection.csv",
        "value_curve.csv",
        "weight_curve.csv",
        "report.json",
        "reflection.svg",
    ] {
        assert!(dir.join(f).is_file(), "missing {f}");
    }
    let table = std::fs::read_to_string(dir.join("table1.csv")).unwrap();
    assert_eq!(table.lines().next(), Some("model,accuracy,auc,interpretability"));
    assert_eq!(table.lines().count(), 4);
}

#[test]
fn output_dir_env_var_is_honored() {
    let dir = scratch("env");
    let out = bin()
        .args(["generate", "--n", "10"])
        .env("SYMBOLIC_PT_OUT", &dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.join("dataset.csv").is_file());
}
