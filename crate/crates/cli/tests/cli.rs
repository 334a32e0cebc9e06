use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fuseclust_cli::{reload_objective, FitArtifact, RunConfig};
use serde_json::{json, Value};
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_fuseclust"));
    c.env("FUSECLUST_LOG", "error");
    c
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin().args(args).current_dir(dir).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Simulates into `dir/sim` and returns its config template as JSON.
fn simulated(dir: &Path, scenario: &str, family: &str, seed: &str) -> Value {
    let o = run(
        &["simulate", "--scenario", scenario, "--family", family, "--seed", seed, "--out", "sim"],
        dir,
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    serde_json::from_str(&fs::read_to_string(dir.join("sim/config.json")).unwrap()).unwrap()
}

fn write_config(dir: &Path, name: &str, cfg: &Value) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    p
}

fn small_table(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("data.csv");
    fs::write(&p, body).unwrap();
    p
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

const TOY: &str = "a,b,y\n0.0,0.1,0.0\n0.2,0.0,0.1\n5.0,5.1,3.0\n5.2,4.9,3.1\n9.8,0.2,6.0\n10.1,0.1,6.2\n";

#[test]
fn zero_lambda_keeps_every_point_apart() {
    let tmp = TempDir::new().unwrap();
    small_table(tmp.path(), TOY);
    let cfg = json!({"data": "data.csv", "family": "gaussian", "columns": {"y": "y"},
                     "weights": {"k": 2}, "lambda": {"value": 0.0}, "solver": {"tol_abs": 1e-9, "tol_rel": 1e-8}});
    write_config(tmp.path(), "c.json", &cfg);
    let o = run(&["fit", "--config", "c.json", "--out", "out"], tmp.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let labels = read_csv(&tmp.path().join("out/labels.csv"));
    assert_eq!(labels[0], vec!["label"]);
    let mut ids: Vec<&str> = labels[1..].iter().map(|r| r[0].as_str()).collect();
    ids.sort();
    ids.dedup();
    assert_eq!(ids.len(), 6);
    let art = FitArtifact::load(&tmp.path().join("out/fit.json")).unwrap();
    assert_eq!(art.k, 6);
    assert_eq!(art.family.as_deref(), Some("gaussian"));
}

#[test]
fn weights_file_is_zero_based_edge_list() {
    let tmp = TempDir::new().unwrap();
    small_table(tmp.path(), TOY);
    let cfg = json!({"data": "data.csv", "lambda": {"value": 0.1}, "weights": {"k": 2}});
    write_config(tmp.path(), "c.json", &cfg);
    let o = run(&["fit", "--config", "c.json", "--out", "out"], tmp.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = read_csv(&tmp.path().join("out/weights.csv"));
    assert_eq!(rows[0], vec!["i", "j", "w"]);
    for r in &rows[1..] {
        let (i, j): (usize, usize) = (r[0].parse().unwrap(), r[1].parse().unwrap());
        let w: f64 = r[2].parse().unwrap();
        assert!(i < j && j < 6 && w > 0.0, "{r:?}");
    }
}

#[test]
fn malformed_cell_names_row_and_column() {
    let tmp = TempDir::new().unwrap();
    small_table(tmp.path(), "a,b,y\n0.0,0.1,0.0\n0.2,oops,0.1\n5.0,5.1,3.0\n");
    write_config(tmp.path(), "c.json", &json!({"data": "data.csv", "lambda": {"value": 0.1}}));
    let o = run(&["fit", "--config", "c.json", "--out", "out"], tmp.path());
    assert_eq!(code(&o), 2);
    let msg = stderr(&o);
    assert!(msg.contains("row 2") && msg.contains("column b"), "{msg}");
}

#[test]
fn invalid_response_value_names_row_and_column() {
    let tmp = TempDir::new().unwrap();
    small_table(tmp.path(), "a,b,y\n0.0,0.1,0\n0.2,0.3,1\n5.0,5.1,2\n");
    let cfg = json!({"data": "data.csv", "family": "bernoulli", "columns": {"y": "y"}, "lambda": {"value": 0.1}});
    write_config(tmp.path(), "c.json", &cfg);
    let o = run(&["fit", "--config", "c.json", "--out", "out"], tmp.path());
    assert_eq!(code(&o), 2);
    let msg = stderr(&o);
    assert!(msg.contains("row 3") && msg.contains("column y"), "{msg}");
}

#[test]
fn config_problems_exit_with_one() {
    let tmp = TempDir::new().unwrap();
    small_table(tmp.path(), TOY);
    let cases = [
        json!({"data": "data.csv", "lambda": {"value": 0.1}, "bogus": 1}),
        json!({"data": "data.csv", "mode": "adaptive", "family": "gaussian", "columns": {"y": "y"}}),
        json!({"data": "data.csv", "columns": {"y": "y"}}),
        json!({"data": "data.csv", "columns": {"x": ["nope"]}, "lambda": {"value": 0.1}}),
    ];
    for (i, cfg) in cases.iter().enumerate() {
        let name = format!("c{i}.json");
        write_config(tmp.path(), &name, cfg);
        let o = run(&["fit", "--config", &name, "--out", "out"], tmp.path());
        assert_eq!(code(&o), 1, "case {i}: {}", stderr(&o));
    }
    fs::write(tmp.path().join("broken.json"), "{ not json").unwrap();
    let o = run(&["fit", "--config", "broken.json"], tmp.path());
    assert_eq!(code(&o), 1);
    let o = run(&["fit"], tmp.path());
    assert_eq!(code(&o), 1);
}

#[test]
fn non_convergence_exits_three_and_still_writes() {
    let tmp = TempDir::new().unwrap();
    small_table(tmp.path(), TOY);
    let cfg = json!({"data": "data.csv", "family": "gaussian", "columns": {"y": "y"}, "weights": {"k": 2},
                     "lambda": {"value": 0.5}, "solver": {"max_iter": 2, "tol_abs": 1e-14, "tol_rel": 1e-14}});
    write_config(tmp.path(), "c.json", &cfg);
    let o = run(&["fit", "--config", "c.json", "--out", "out"], tmp.path());
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    for f in ["fit.json", "labels.csv", "heatmap.csv", "weights.csv"] {
        assert!(tmp.path().join("out").join(f).exists(), "{f} missing");
    }
    let art = FitArtifact::load(&tmp.path().join("out/fit.json")).unwrap();
    assert!(!art.report.converged);
}

#[test]
fn ari_of_identical_files_is_one() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("a.csv"), "label\n1\n1\n2\n3\n3\n").unwrap();
    let o = run(&["ari", "a.csv", "a.csv"], tmp.path());
    assert_eq!(code(&o), 0);
    let v: f64 = String::from_utf8_lossy(&o.stdout).trim().parse().unwrap();
    assert_eq!(v, 1.0);
    // Relabelled copy without a header name.
    fs::write(tmp.path().join("b.csv"), "cluster\n7\n7\n4\n0\n0\n").unwrap();
    let o = run(&["ari", "a.csv", "b.csv"], tmp.path());
    let v: f64 = String::from_utf8_lossy(&o.stdout).trim().parse().unwrap();
    assert_eq!(v, 1.0);
}

#[test]
fn path_runs_from_singletons_to_one_cluster() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = simulated(tmp.path(), "s1", "gaussian", "5");
    cfg["lambda"] = json!({"auto": 10});
    write_config(&tmp.path().join("sim"), "p.json", &cfg);
    let o = run(&["path", "--config", "sim/p.json", "--out", "path"], tmp.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = read_csv(&tmp.path().join("path/path.csv"));
    let n = read_csv(&tmp.path().join("sim/labels.csv")).len() - 1;
    assert_eq!(rows[0][..3], ["lambda", "K", "label_1"]);
    assert_eq!(rows[0].len(), n + 2);
    assert_eq!(rows[1][1], n.to_string());
    assert_eq!(rows.last().unwrap()[1], "1");
    let ks: Vec<usize> = rows[1..].iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(ks.windows(2).all(|w| w[1] <= w[0]), "{ks:?}");
}

#[test]
fn simulate_is_byte_deterministic() {
    let tmp = TempDir::new().unwrap();
    for out in ["a", "b"] {
        let o = run(
            &["simulate", "--scenario", "covariate", "--family", "count", "--seed", "11", "--out", out],
            tmp.path(),
        );
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    for f in ["X.csv", "y.csv", "Z.csv", "labels.csv", "data.csv", "config.json"] {
        let a = fs::read(tmp.path().join("a").join(f)).unwrap();
        let b = fs::read(tmp.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs");
    }
    let o = run(
        &["simulate", "--scenario", "covariate", "--family", "count", "--seed", "12", "--out", "c"],
        tmp.path(),
    );
    assert_eq!(code(&o), 0);
    assert_ne!(
        fs::read(tmp.path().join("a/X.csv")).unwrap(),
        fs::read(tmp.path().join("c/X.csv")).unwrap()
    );
}

#[test]
fn saved_fit_reproduces_its_objective() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = simulated(tmp.path(), "s1", "binary", "3");
    cfg["lambda"] = json!({"value": 0.01});
    let cpath = write_config(&tmp.path().join("sim"), "c.json", &cfg);
    let o = run(&["fit", "--config", "sim/c.json", "--out", "fit"], tmp.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = tmp.path().join("fit");
    let art = FitArtifact::load(&out.join("fit.json")).unwrap();
    let cfg = RunConfig::load(&cpath).unwrap();
    let obj = reload_objective(&cfg, &out.join("fit.json"), &out.join("weights.csv")).unwrap();
    assert!((obj - art.objective).abs() <= 1e-9 * art.objective.abs().max(1.0), "{obj} vs {}", art.objective);
}

#[test]
fn seed_flag_overrides_config() {
    let tmp = TempDir::new().unwrap();
    write_config(tmp.path(), "s.json", &json!({"seed": 1, "simulate": {"scenario": "s1", "family": "gaussian"}}));
    let a = run(&["simulate", "--config", "s.json", "--out", "a"], tmp.path());
    let b = run(&["simulate", "--config", "s.json", "--seed", "1", "--out", "b"], tmp.path());
    let c = run(&["simulate", "--config", "s.json", "--seed", "2", "--out", "c"], tmp.path());
    assert!(code(&a) == 0 && code(&b) == 0 && code(&c) == 0);
    let x = |d: &str| fs::read(tmp.path().join(d).join("X.csv")).unwrap();
    assert_eq!(x("a"), x("b"));
    assert_ne!(x("a"), x("c"));
}

#[test]
fn stability_writes_scores_and_a_fit() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = simulated(tmp.path(), "s1", "gaussian", "8");
    cfg["lambda"] = json!({"auto": 8});
    cfg["stability"] = json!({"subsamples": 3});
    write_config(&tmp.path().join("sim"), "c.json", &cfg);
    let o = run(&["stability", "--config", "sim/c.json", "--jobs", "2", "--out", "st"], tmp.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = read_csv(&tmp.path().join("st/stability.csv"));
    assert_eq!(rows[0], ["lambda", "agreement", "K", "eligible", "selected"]);
    assert_eq!(rows.len(), 9);
    assert_eq!(rows[1..].iter().filter(|r| r[4] == "1").count(), 1);
    let art = FitArtifact::load(&tmp.path().join("st/fit.json")).unwrap();
    let s = art.stability.unwrap();
    assert_eq!(art.lambda, s.grid[s.index]);
}

#[test]
fn biclust_writes_both_label_sets_and_a_reordered_heatmap() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = simulated(tmp.path(), "biclust", "gaussian", "2");
    cfg["lambda"] = json!({"clusters": 4});
    write_config(&tmp.path().join("sim"), "c.json", &cfg);
    let o = run(&["biclust", "--config", "sim/c.json", "--out", "bc"], tmp.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = tmp.path().join("bc");
    let rows: Vec<usize> = read_csv(&out.join("labels.csv"))[1..].iter().map(|r| r[0].parse().unwrap()).collect();
    let cols: Vec<usize> = read_csv(&out.join("col_labels.csv"))[1..].iter().map(|r| r[0].parse().unwrap()).collect();
    let heat = read_csv(&out.join("heatmap.csv"));
    assert_eq!(heat.len(), rows.len() + 1);
    assert_eq!(heat[0].len(), cols.len() + 1);
    let order: Vec<usize> = heat[1..].iter().map(|r| r[0].parse().unwrap()).collect();
    let grouped: Vec<usize> = order.iter().map(|&i| rows[i]).collect();
    assert!(grouped.windows(2).all(|w| w[0] <= w[1]));
    let art = FitArtifact::load(&out.join("fit.json")).unwrap();
    assert_eq!(art.k, 4);
    assert!(art.biclust.is_some());
    // A grid is not a valid biclustering fit request.
    cfg["lambda"] = json!({"auto": 5});
    write_config(&tmp.path().join("sim"), "g.json", &cfg);
    let o = run(&["biclust", "--config", "sim/g.json", "--out", "bc2"], tmp.path());
    assert_eq!(code(&o), 1);
}

#[test]
fn adaptive_mode_records_both_stages() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = simulated(tmp.path(), "covariate", "gaussian", "2");
    cfg["lambda"] = json!({"clusters": 3});
    cfg["mode"] = json!("adaptive");
    write_config(&tmp.path().join("sim"), "c.json", &cfg);
    let o = run(&["fit", "--config", "sim/c.json", "--out", "ad"], tmp.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let art = FitArtifact::load(&tmp.path().join("ad/fit.json")).unwrap();
    let ad = art.adaptive.unwrap();
    assert!((0.0..=1.0).contains(&ad.alpha));
    assert_eq!(ad.stage1_k, 3);
    assert_eq!(art.k, 3);
}

#[test]
fn survival_and_multinomial_simulations_load_back() {
    let tmp = TempDir::new().unwrap();
    for (fam, expect) in [("survival", "cox"), ("categorical", "multinomial")] {
        let mut cfg = simulated(tmp.path(), "s1", fam, "6");
        cfg["lambda"] = json!({"value": 0.01});
        write_config(&tmp.path().join("sim"), "c.json", &cfg);
        let o = run(&["fit", "--config", "sim/c.json", "--out", fam], tmp.path());
        assert_eq!(code(&o), 0, "{fam}: {}", stderr(&o));
        let art = FitArtifact::load(&tmp.path().join(fam).join("fit.json")).unwrap();
        assert_eq!(art.family.as_deref(), Some(expect));
    }
}
