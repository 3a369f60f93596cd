use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mvmr::data::write_summary_csv;
use mvmr::{Dataset, RandomSource};
use ndarray::{Array1, Array2};
use rand::Rng;

fn mvmr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mvmr")).args(args).output().expect("run mvmr")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn dataset(p: usize, k: usize, noise: f64, seed: u64) -> Dataset {
    let mut r = RandomSource::new(seed).rng();
    let bx = Array2::from_shape_fn((p, k), |_| r.gen_range(0.02..0.2));
    let theta = Array1::from_shape_fn(k, |c| 0.1 * (c as f64 + 1.0));
    let se_y = Array1::from_shape_fn(p, |_| r.gen_range(0.01..0.02));
    let mut by = bx.dot(&theta);
    for j in 0..p {
        by[j] += noise * se_y[j] * r.gen_range(-1.0..1.0);
    }
    let ids = (0..p).map(|j| format!("rs{}", 1000 + j)).collect();
    Dataset::new(ids, bx, Array2::from_elem((p, k), 0.003), by, se_y).unwrap()
}

fn write(dir: &Path, name: &str, ds: &Dataset) -> PathBuf {
    let path = dir.join(name);
    write_summary_csv(ds, &path).unwrap();
    path
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|rec| rec.unwrap().iter().map(str::to_string).collect()).collect()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn ivw_on_clean_data() {
    let tmp = tempfile::tempdir().unwrap();
    let input = write(tmp.path(), "clean.csv", &dataset(30, 2, 0.0, 1));
    let out = tmp.path().join("out");
    let o = mvmr(&["estimate", "--input", s(&input), "--k", "2", "--methods", "ivw", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = read_csv(&out.join("results.csv"));
    assert_eq!(rows.len(), 2);
    assert_eq!((rows[0][0].as_str(), rows[0][1].as_str()), ("ivw", "1"));
    for row in read_csv(&out.join("diagnostics.csv")) {
        assert!(row[2].parse::<f64>().unwrap().abs() < 1e-12);
    }
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "estimate");
    let digest = manifest["inputs"]["input"]["sha256"].as_str().unwrap();
    assert_eq!(digest.len(), 64);
    assert!(manifest["duration_seconds"].as_f64().unwrap() >= 0.0);
    let n_manifests = fs::read_dir(&out).unwrap().filter(|e| e.as_ref().unwrap().file_name() == "manifest.json").count();
    assert_eq!(n_manifests, 1);
}

#[test]
fn all_methods_on_applied_shape_and_repeatable() {
    let tmp = tempfile::tempdir().unwrap();
    let mut ds = dataset(213, 3, 2.0, 2);
    // a few pleiotropic variants
    let mut by = ds.beta_y().clone();
    for j in [3, 50, 120] {
        by[j] += 10.0 * ds.se_y()[j];
    }
    ds = Dataset::new(ds.variant_ids().to_vec(), ds.beta_x().clone(), ds.se_x().clone(), by, ds.se_y().clone()).unwrap();
    let input = write(tmp.path(), "applied.csv", &ds);
    let run = |dir: &str| {
        let out = tmp.path().join(dir);
        let o = mvmr(&[
            "estimate", "--input", s(&input), "--k", "3", "--methods", "all", "--primary", "1", "--seed", "7",
            "--presso-reps", "200", "--bootstrap", "200", "--out", s(&out),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        out
    };
    let (a, b) = (run("a"), run("b"));
    let results = read_csv(&a.join("results.csv"));
    assert_eq!(results.len(), 18);
    let selection = read_csv(&a.join("lasso_selection.csv"));
    assert_eq!(selection.len(), 213);
    for j in [3, 50, 120] {
        assert_eq!(selection[j][2], "1");
    }
    let flagged: Vec<String> = read_csv(&a.join("diagnostics.csv")).into_iter().filter(|r| r[4] == "1").map(|r| r[0].clone()).collect();
    for j in [3, 50, 120] {
        assert!(flagged.contains(&ds.variant_ids()[j]));
    }
    for f in ["results.csv", "diagnostics.csv", "lasso_selection.csv", "lasso_path.csv", "presso_outliers.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn validation_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.csv");
    fs::write(&bad, "variant_id,beta_x_1,se_x_1,beta_y,se_y\na,1,0,2,1\nb,2,0,2,0\nc,3,0,1,1\n").unwrap();
    let o = mvmr(&["estimate", "--input", s(&bad), "--k", "1", "--methods", "ivw", "--out", s(tmp.path())]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("row 3"), "{}", stderr(&o));

    let good = write(tmp.path(), "good.csv", &dataset(10, 2, 1.0, 3));
    let o = mvmr(&["estimate", "--input", s(&good), "--k", "2", "--bogus"]);
    assert_eq!(code(&o), 2);
    let o = mvmr(&["estimate", "--input", s(&good), "--k", "2", "--primary", "3"]);
    assert_eq!(code(&o), 2);
    let o = mvmr(&["estimate", "--input", s(&good), "--k", "2", "--methods", "ols"]);
    assert_eq!(code(&o), 2);
    let o = mvmr(&["estimate", "--input", s(&good), "--k", "3"]);
    assert_eq!(code(&o), 2);
    let o = mvmr(&["estimate", "--input", "/nonexistent/file.csv", "--k", "2"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn strict_mode_requires_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let input = write(tmp.path(), "d.csv", &dataset(10, 2, 1.0, 4));
    let out = tmp.path().join("o");
    let o = mvmr(&["estimate", "--input", s(&input), "--k", "2", "--methods", "median", "--strict", "--out", s(&out)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--seed"));
    let o = mvmr(&["estimate", "--input", s(&input), "--k", "2", "--methods", "ivw", "--strict", "--out", s(&out)]);
    assert_eq!(code(&o), 0);
    let o = mvmr(&["simulate", "--scenario", "1", "--prop-invalid", "0.1", "--theta-set", "A", "--reps", "1", "--strict"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn method_failure_exit_3_keeps_other_results() {
    let tmp = tempfile::tempdir().unwrap();
    // p = K + 1: PRESSO cannot run, IVW can
    let input = write(tmp.path(), "small.csv", &dataset(3, 2, 1.0, 5));
    let out = tmp.path().join("o");
    let o = mvmr(&["estimate", "--input", s(&input), "--k", "2", "--methods", "ivw,presso", "--out", s(&out)]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("presso"));
    let rows = read_csv(&out.join("results.csv"));
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r[0] == "ivw"));
}

#[test]
fn three_sample_lasso() {
    let tmp = tempfile::tempdir().unwrap();
    let sel = dataset(40, 2, 1.0, 6);
    let mut by = sel.beta_y().clone();
    by[0] += 12.0 * sel.se_y()[0];
    let sel = Dataset::new(sel.variant_ids().to_vec(), sel.beta_x().clone(), sel.se_x().clone(), by, sel.se_y().clone()).unwrap();
    let sel_path = write(tmp.path(), "sel.csv", &sel);
    let est_path = write(tmp.path(), "est.csv", &dataset(40, 2, 1.0, 7));
    let out = tmp.path().join("o");
    let o = mvmr(&[
        "estimate", "--input", s(&est_path), "--selection-input", s(&sel_path), "--k", "2", "--methods", "lasso",
        "--out", s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let selection = read_csv(&out.join("lasso_selection.csv"));
    assert_eq!(selection[0][2], "1");
    let n_valid = selection.iter().filter(|r| r[2] == "0").count();
    let results = read_csv(&out.join("results.csv"));
    assert_eq!(results[0][7], n_valid.to_string());
    let manifest = fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(manifest.contains("selection_input"));
    // selection input without the lasso is a usage error
    let o = mvmr(&["estimate", "--input", s(&est_path), "--selection-input", s(&sel_path), "--k", "2", "--methods", "ivw"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn diagnose_writes_pairs_and_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let exact = write(tmp.path(), "exact.csv", &dataset(25, 3, 0.0, 8));
    let out = tmp.path().join("ivw");
    let o = mvmr(&["diagnose", "--input", s(&exact), "--k", "3", "--method", "ivw", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let pairs: Vec<_> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.starts_with("pairs_"))
        .collect();
    assert_eq!(pairs.len(), 3);
    assert!(out.join("pairs_1_3.csv").exists());
    for row in read_csv(&out.join("residuals.csv")) {
        assert!(row[2].parse::<f64>().unwrap().abs() < 1e-12);
    }

    let ds = dataset(30, 2, 1.0, 9);
    let mut by = ds.beta_y().clone();
    by[4] += 12.0 * ds.se_y()[4];
    let ds = Dataset::new(ds.variant_ids().to_vec(), ds.beta_x().clone(), ds.se_x().clone(), by, ds.se_y().clone()).unwrap();
    let input = write(tmp.path(), "pleio.csv", &ds);
    let out = tmp.path().join("lasso");
    let o = mvmr(&["diagnose", "--input", s(&input), "--k", "2", "--method", "lasso", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let sel: Vec<String> = read_csv(&out.join("lasso_selection.csv")).into_iter().map(|r| r[2].clone()).collect();
    let flags: Vec<String> = read_csv(&out.join("residuals.csv")).into_iter().map(|r| r[4].clone()).collect();
    assert_eq!(sel, flags);
    assert_eq!(flags[4], "1");
}

#[test]
fn simulate_single_rep_and_variants() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("one");
    let o = mvmr(&[
        "simulate", "--scenario", "1", "--prop-invalid", "0.1", "--theta-set", "A", "--reps", "1", "--methods", "ivw,egger",
        "--seed", "3", "--out", s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = read_csv(&out.join("metrics.csv"));
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r[4] == "NA"));
    assert_eq!(read_csv(&out.join("log_mse.csv")).len(), 1);
    assert_eq!(read_csv(&out.join("failures.csv")).len(), 2);

    let out = tmp.path().join("p20");
    let o = mvmr(&[
        "simulate", "--scenario", "2", "--prop-invalid", "0.3", "--theta-set", "B", "--variant", "p20", "--reps", "2",
        "--methods", "ivw", "--target-k", "4", "--out", s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let config = fs::read_to_string(out.join("config.txt")).unwrap();
    assert!(config.contains("p = 20\n"));
    assert!(config.contains("beta_x_high = 0.22\n"));
    let rows = read_csv(&out.join("metrics.csv"));
    assert_eq!(rows[0][0], "2");

    let o = mvmr(&["simulate", "--scenario", "4", "--prop-invalid", "0.1", "--theta-set", "A"]);
    assert_eq!(code(&o), 2);
    let o = mvmr(&["simulate", "--scenario", "1", "--prop-invalid", "0.1", "--theta-set", "C"]);
    assert_eq!(code(&o), 2);
    let o = mvmr(&["simulate", "--scenario", "1", "--prop-invalid", "0.1", "--theta-set", "A", "--target-k", "5", "--reps", "1"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn simulate_config_file_overrides_preset() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cell.txt");
    fs::write(&cfg, "# smaller cell\np = 25\nn = 2000\nn_reps = 2\n").unwrap();
    let out = tmp.path().join("o");
    let o = mvmr(&[
        "simulate", "--scenario", "3", "--prop-invalid", "0.5", "--theta-set", "A", "--config", s(&cfg), "--methods", "ivw",
        "--out", s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(out.join("config.txt")).unwrap();
    assert!(text.contains("p = 25\n") && text.contains("n_reps = 2\n"));
    let manifest = fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"config\""));

    fs::write(&cfg, "colour = blue\n").unwrap();
    let o = mvmr(&["simulate", "--scenario", "1", "--prop-invalid", "0.1", "--theta-set", "A", "--config", s(&cfg)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("colour"));
}

#[test]
fn help_lists_every_flag() {
    let o = mvmr(&["estimate", "--help"]);
    let text = String::from_utf8(o.stdout).unwrap();
    for flag in [
        "--input", "--k", "--methods", "--primary", "--selection-input", "--seed", "--out", "--strict", "--threads",
        "--fixed-effect", "--presso-reps", "--bootstrap",
    ] {
        assert!(text.contains(flag), "{flag}");
    }
    let o = mvmr(&["simulate", "--help"]);
    let text = String::from_utf8(o.stdout).unwrap();
    for flag in ["--scenario", "--prop-invalid", "--theta-set", "--variant", "--reps", "--target-k", "--config"] {
        assert!(text.contains(flag), "{flag}");
    }
}
