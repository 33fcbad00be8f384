//! End-to-end runs of the `prodreg` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use prodreg::cli::data::{load_dataset, save_dataset, Dataset};
use prodreg::cli::report::{reproducible_manifest, Table};
use prodreg::Matrix;

fn prodreg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prodreg"))
        .args(args)
        .env_remove("PRODREG_THREADS")
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SMALL: &str = r#"
name = "small"
replicates = 3
criteria = ["bic", "gic"]

[path]
n_lambda = 30

[[methods]]
transform = { kind = "licm" }

[[methods]]
transform = { kind = "none" }

[[grid]]
model = "M1"
n = 80
p = 40
k = 4
coef = "Dirac"

[[grid]]
model = "M3"
n = 80
p = 40
k = 4
rho = 0.5
coef = "Unif"
"#;

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn simulate_is_byte_identical_across_runs_and_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let mut outputs = Vec::new();
    for (i, jobs) in ["1", "1", "3"].iter().enumerate() {
        let out = dir.path().join(format!("run{i}.csv"));
        let res = prodreg(&["simulate", "--config", path_str(&cfg), "--jobs", jobs, "--out", path_str(&out)]);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
        let manifest = std::fs::read_to_string(out.with_extension("json")).unwrap();
        outputs.push((std::fs::read(&out).unwrap(), reproducible_manifest(&manifest).unwrap()));
    }
    // the manifest records the output path, which differs per run
    for (bytes, manifest) in &outputs[1..] {
        assert_eq!(bytes, &outputs[0].0);
        assert_eq!(manifest["config"], outputs[0].1["config"]);
        assert_eq!(manifest["summary"], outputs[0].1["summary"]);
    }
    let table = Table::read(outputs[0].0.as_slice()).unwrap();
    assert_eq!(table.rows.len(), 2 * 2 * 2);
    assert!(table.rows.iter().all(|r| r.last().unwrap() == "ok"));
}

#[test]
fn roc_is_byte_identical_across_jobs_and_starts_at_origin() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (out, jobs) in [(&a, "1"), (&b, "4")] {
        let res = prodreg(&["roc", "--config", path_str(&cfg), "--jobs", jobs, "--out", path_str(out)]);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let t = Table::load(&a).unwrap();
    assert_eq!(t.get(0, "lambda_index"), Some("0"));
    assert_eq!(t.get(0, "mean_fpr"), Some("0.000000"));
    assert_eq!(t.get(0, "mean_tpr"), Some("0.000000"));
}

#[test]
fn output_tables_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("t.csv");
    let res = prodreg(&["simulate", "--config", path_str(&cfg), "--replicates", "1", "--out", path_str(&out)]);
    assert!(res.status.success());
    let bytes = std::fs::read(&out).unwrap();
    assert_eq!(Table::read(bytes.as_slice()).unwrap().to_bytes().unwrap(), bytes);
}

#[test]
fn empty_grid_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "name = \"empty\"\n[[methods]]\ntransform = { kind = \"none\" }\n");
    let out = dir.path().join("e.csv");
    let res = prodreg(&["simulate", "--config", path_str(&cfg), "--out", path_str(&out)]);
    assert!(res.status.success());
    let t = Table::load(&out).unwrap();
    assert!(t.rows.is_empty());
    assert_eq!(t.header.last().map(String::as_str), Some("status"));
}

#[test]
fn failing_cell_gives_exit_code_one_and_partial_results() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL.replace("transform = { kind = \"licm\" }", "transform = { kind = \"licm\", q = 500 }");
    let cfg = write_config(dir.path(), &text);
    let out = dir.path().join("f.csv");
    let res = prodreg(&["simulate", "--config", path_str(&cfg), "--out", path_str(&out)]);
    assert_eq!(res.status.code(), Some(1));
    let t = Table::load(&out).unwrap();
    let status = t.column("status").unwrap();
    let transform = t.column("transform").unwrap();
    for r in &t.rows {
        if r[transform] == "licm" {
            assert!(r[status].starts_with("error"), "{r:?}");
        } else {
            assert_eq!(r[status], "ok");
        }
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.with_extension("json")).unwrap()).unwrap();
    assert!(!manifest["errors"].as_array().unwrap().is_empty());
    assert!(manifest["timing"]["wall_time_seconds"].is_number());
}

#[test]
fn bad_arguments_give_exit_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let res = prodreg(&["simulate", "--preset", "table99", "--out", path_str(&out)]);
    assert_eq!(res.status.code(), Some(2));
    let res = prodreg(&["simulate", "--preset", "table1", "--transform", "pca", "--out", path_str(&out)]);
    assert_eq!(res.status.code(), Some(2));
}

fn toy_dataset(dir: &Path) -> PathBuf {
    let n = 40;
    let cols: Vec<Vec<f64>> = (0..4)
        .map(|j| (0..n).map(|i| (((i * (j + 3) + j * 7) % 11) as f64) - 5.0 + 0.1 * j as f64).collect())
        .collect();
    let y: Vec<f64> = cols[0].iter().map(|v| 2.0 * v).collect();
    let data = Dataset {
        response_name: "y".into(),
        predictor_names: (1..=4).map(|j| format!("x{j}")).collect(),
        x: Matrix::from_columns(n, &cols).unwrap(),
        y,
    };
    let path = dir.join("toy.csv");
    save_dataset(&path, &data).unwrap();
    path
}

#[test]
fn fit_recovers_exact_toy_relation() {
    let dir = tempfile::tempdir().unwrap();
    let data = toy_dataset(dir.path());
    let out = dir.path().join("fit.csv");
    let res = prodreg(&["fit", "--data", path_str(&data), "--lambda", "1e-6", "--out", path_str(&out)]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let t = Table::load(&out).unwrap();
    assert_eq!(t.get(0, "term"), Some("(intercept)"));
    let terms: Vec<&str> = t.rows.iter().skip(1).map(|r| r[0].as_str()).collect();
    assert_eq!(terms, vec!["x1"]);
    let coef: f64 = t.get(1, "coefficient").unwrap().parse().unwrap();
    assert!((coef - 2.0).abs() < 1e-5, "{coef}");
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.with_extension("json")).unwrap()).unwrap();
    assert_eq!(manifest["summary"]["support"], serde_json::json!(["x1"]));
    assert!(manifest["summary"]["kkt_residual"].as_f64().unwrap() < 1e-6);
}

#[test]
fn prescreen_then_fit_stays_inside_the_screened_set() {
    let dir = tempfile::tempdir().unwrap();
    let inst = prodreg::simgen::generate(
        prodreg::simgen::Model::M1,
        &prodreg::simgen::SimParams {
            n: 100,
            p: 150,
            k: 5,
            rho: None,
            coef_mode: prodreg::simgen::CoefMode::One,
            heteroscedastic: false,
        },
        3,
    )
    .unwrap();
    let data = dir.path().join("sim.csv");
    save_dataset(&data, &prodreg::cli::commands::dataset_from_instance(&inst)).unwrap();

    let screened = dir.path().join("screened.csv");
    let res = prodreg(&["prescreen", "--data", path_str(&data), "--keep", "30", "--out", path_str(&screened)]);
    assert!(res.status.success());
    let kept = load_dataset(&screened, None).unwrap();
    assert_eq!(kept.p(), 30);

    let out = dir.path().join("fit.csv");
    let res = prodreg(&[
        "fit", "--data", path_str(&data), "--prescreen", "30", "--transform", "licm", "--criterion", "bic", "--out",
        path_str(&out),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let t = Table::load(&out).unwrap();
    for r in t.rows.iter().skip(1) {
        assert!(kept.column_index(&r[0]).is_some(), "{} was not screened in", r[0]);
    }
}

#[test]
fn malformed_csv_reports_line_and_cell() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.csv");
    let ragged = dir.path().join("ragged.csv");
    std::fs::write(&ragged, "y,x1,x2\n1,2,3\n4,5\n").unwrap();
    let res = prodreg(&["fit", "--data", path_str(&ragged), "--out", path_str(&out)]);
    assert_eq!(res.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&res.stderr);
    assert!(msg.contains("line 3"), "{msg}");

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "y,x1,x2\n1,2,3\n4,five,6\n").unwrap();
    let res = prodreg(&["fit", "--data", path_str(&bad), "--out", path_str(&out)]);
    assert_eq!(res.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&res.stderr);
    assert!(msg.contains("line 3") && msg.contains("x1") && msg.contains("five"), "{msg}");
}

#[test]
fn diagnose_flags_violations_and_matches_none() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("d.csv");
    let res = prodreg(&["diagnose", "--config", path_str(&cfg), "--out", path_str(&out)]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let t = Table::load(&out).unwrap();
    assert_eq!(t.rows.len(), 4);
    let none = t.rows.iter().position(|r| r[t.column("transform").unwrap()] == "none").unwrap();
    assert_eq!(t.get(none, "value_raw"), t.get(none, "value_prod"));
    for i in 0..t.rows.len() {
        let violated = t.get(i, "violated").unwrap();
        let raw: f64 = t.get(i, "value_raw").unwrap().parse().unwrap();
        let prod: f64 = t.get(i, "value_prod").unwrap().parse().unwrap();
        assert_eq!(violated == "true", raw >= 1.0 || prod >= 1.0, "row {i}");
    }
}

#[test]
fn threads_env_var_mirrors_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("env.csv");
    let res = Command::new(env!("CARGO_BIN_EXE_prodreg"))
        .args(["simulate", "--config", path_str(&cfg), "--replicates", "1", "--out", path_str(&out)])
        .env("PRODREG_THREADS", "2")
        .output()
        .unwrap();
    assert!(res.status.success());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.with_extension("json")).unwrap()).unwrap();
    assert_eq!(manifest["timing"]["jobs"], 2);
}
