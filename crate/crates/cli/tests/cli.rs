use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_mcf");

fn schema(name: &str) -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas").join(format!("{name}.schema.json"));
    serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap()
}

fn assert_valid(name: &str, instance: &Value) {
    let s = schema(name);
    assert!(jsonschema::meta::is_valid(&s), "{name} is not a valid schema");
    let v = jsonschema::validator_for(&s).unwrap();
    let errors: Vec<String> = v.iter_errors(instance).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{name}: {errors:?}\n{instance:#}");
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn ok_json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

/// Runs a failing command, checks the error document and returns it.
fn err_json(args: &[&str], code: i32, kind: &str) -> Value {
    let out = run(args);
    assert_eq!(out.status.code(), Some(code), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_valid("error", &v);
    assert_eq!(v["error"]["kind"], kind, "{v}");
    v
}

fn simulate(dir: &TempDir, model: &str, n: usize, seed: u64) -> PathBuf {
    let path = dir.path().join(format!("{model}-{seed}.csv"));
    let out = run(&[
        "simulate",
        "--model",
        model,
        "--n",
        &n.to_string(),
        "--seed",
        &seed.to_string(),
        "--output",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

fn read_rows(path: &Path) -> Vec<Vec<f64>> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    rdr.records()
        .map(|r| r.unwrap().iter().map(|v| v.parse().unwrap()).collect())
        .collect()
}

fn write_rows(path: &Path, header: &str, rows: &[Vec<f64>]) {
    let mut text = format!("{header}\n");
    for r in rows {
        text.push_str(&r.iter().map(|v| format!("{v:.16e}")).collect::<Vec<_>>().join(","));
        text.push('\n');
    }
    fs::write(path, text).unwrap();
}

fn unit(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

fn axis_angle_deg(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    dot.abs().min(1.0).acos().to_degrees()
}

fn column_means(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len() as f64;
    let d = rows[0].len();
    let mean: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    let se = (0..d)
        .map(|j| (rows.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt())
        .collect();
    (mean, se)
}

#[test]
fn simulate_is_deterministic_and_writes_sidecar() {
    let dir = TempDir::new().unwrap();
    let a = fs::read(simulate(&dir, "skew-normal", 2_000, 1)).unwrap();
    let again = dir.path().join("again.csv");
    let out = run(&["simulate", "--model", "skew-normal", "--n", "2000", "--seed", "1", "--output", again.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(a, fs::read(&again).unwrap());

    let side: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("skew-normal-1.params.json")).unwrap()).unwrap();
    assert_valid("simulate", &side);
    let mu = unit(&side["mu"]);
    assert!((mu[0] - 0.8367).abs() < 5e-4 && (mu[1] + 0.1195).abs() < 5e-4, "{mu:?}");
    assert_eq!(side["n_samples"], 2000);
}

#[test]
fn simulated_gamma_is_centered() {
    let dir = TempDir::new().unwrap();
    let rows = read_rows(&simulate(&dir, "gamma", 20_000, 4));
    assert_eq!(rows.len(), 20_000);
    let (mean, se) = column_means(&rows);
    for (m, s) in mean.iter().zip(&se) {
        assert!(m.abs() <= 3.0 * s, "{m} vs se {s}");
    }
}

#[test]
fn csv_round_trip_preserves_values() {
    let dir = TempDir::new().unwrap();
    let path = simulate(&dir, "gaussian", 500, 2);
    let rows = read_rows(&path);
    let copy = dir.path().join("copy.csv");
    write_rows(&copy, "v1,v2", &rows);
    let again = read_rows(&copy);
    for (a, b) in rows.iter().flatten().zip(again.iter().flatten()) {
        assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
    }
}

#[test]
fn analyze_gaussian_finds_principal_axis() {
    let dir = TempDir::new().unwrap();
    let data = simulate(&dir, "gaussian", 20_000, 3);
    let out = dir.path().join("analysis.json");
    let status = run(&["analyze", "--input", data.to_str().unwrap(), "--radius", "2", "--output", out.to_str().unwrap()]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_valid("analyze", &v);
    assert_eq!(v["radius_mode"], "fixed");
    let maxima = v["maxima"].as_array().unwrap();
    assert_eq!(maxima.len(), 2, "{v:#}");
    for m in maxima {
        assert!(axis_angle_deg(&unit(&m["theta"]), &[1.0, 0.0]) < 5.0, "{m}");
    }

    let profile = PathBuf::from(v["profile_file"].as_str().unwrap());
    let mut rdr = csv::Reader::from_path(&profile).unwrap();
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), ["maximum", "radius", "g", "ess"]);
    assert_eq!(rdr.records().count(), 2 * 65);
}

#[test]
fn analyze_small_radius_matches_pc1() {
    let dir = TempDir::new().unwrap();
    let data = simulate(&dir, "skew-normal", 10_000, 5);
    let v = ok_json(&["analyze", "--input", data.to_str().unwrap(), "--radius", "0.001"]);
    assert_valid("analyze", &v);
    let top = unit(&v["maxima"][0]["theta"]);
    assert!(axis_angle_deg(&top, &unit(&v["pc1"])) < 5.0);
}

#[test]
fn analyze_auto_radius_reports_mode() {
    let dir = TempDir::new().unwrap();
    let data = simulate(&dir, "gamma", 5_000, 6);
    let v = ok_json(&["analyze", "--input", data.to_str().unwrap(), "--auto-radius", "--starts", "8"]);
    assert_valid("analyze", &v);
    assert_eq!(v["radius_mode"], "auto");
    assert!(v["radius_used"].as_f64().unwrap() > 0.0);
    assert!(v["ess"].as_f64().unwrap() >= 10.0);
}

#[test]
fn standardized_input_is_flagged() {
    let dir = TempDir::new().unwrap();
    let rows = read_rows(&simulate(&dir, "skew-normal", 3_000, 7));
    let (mean, _) = column_means(&rows);
    let n = rows.len() as f64;
    let sd: Vec<f64> = (0..2)
        .map(|j| (rows.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n).sqrt())
        .collect();
    let z: Vec<Vec<f64>> = rows.iter().map(|r| (0..2).map(|j| (r[j] - mean[j]) / sd[j]).collect()).collect();
    let path = dir.path().join("z.csv");
    write_rows(&path, "a,b", &z);
    let v = ok_json(&["analyze", "--input", path.to_str().unwrap(), "--radius", "1"]);
    let warnings = v["warnings"].to_string();
    assert!(warnings.contains("standardized") && warnings.contains("lost their validity"), "{warnings}");
}

#[test]
fn constant_column_warns_and_proceeds() {
    let dir = TempDir::new().unwrap();
    let rows: Vec<Vec<f64>> = read_rows(&simulate(&dir, "gaussian", 500, 8))
        .into_iter()
        .map(|r| vec![r[0], r[1], 3.0])
        .collect();
    let path = dir.path().join("c.csv");
    write_rows(&path, "x,y,flat", &rows);
    let v = ok_json(&["analyze", "--input", path.to_str().unwrap(), "--radius", "0.5"]);
    assert_valid("analyze", &v);
    assert!(v["warnings"].to_string().contains("column flat is constant"));
}

#[test]
fn errors_are_structured() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nope.csv");
    err_json(&["analyze", "--input", missing.to_str().unwrap()], 1, "IOError");

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "a,b\n1,2\n3,x\n").unwrap();
    let v = err_json(&["analyze", "--input", bad.to_str().unwrap()], 1, "ParseError");
    assert_eq!(v["error"]["line"], 3);

    err_json(&["analyze"], 2, "UsageError");
    err_json(&["simulate", "--model", "gaussian", "--n", "5", "--output", "x.csv"], 2, "UsageError");

    let data = simulate(&dir, "gaussian", 200, 9);
    err_json(&["analyze", "--input", data.to_str().unwrap(), "--radius", "-1"], 1, "InvalidInput");
    err_json(
        &["tailcheck", "--input", data.to_str().unwrap(), "--theta-a", "0,0", "--theta-b", "1,0"],
        1,
        "DegenerateDirection",
    );
    err_json(
        &["simulate", "--model", "gamma", "--params", "{\"alpha0\": -1}", "--output", "g.csv"],
        1,
        "InvalidParams",
    );
}

#[test]
fn compare_pca_gaussian_and_skew_normal() {
    let dir = TempDir::new().unwrap();
    let g = simulate(&dir, "gaussian", 20_000, 10);
    let v = ok_json(&["compare-pca", "--input", g.to_str().unwrap(), "--radius", "1"]);
    assert_valid("compare-pca", &v);
    assert!(v["min_axis_angle_to_pc1_deg"].as_f64().unwrap() < 5.0);

    let sn = simulate(&dir, "skew-normal", 20_000, 10);
    let v = ok_json(&["compare-pca", "--input", sn.to_str().unwrap(), "--radius", "3"]);
    assert_valid("compare-pca", &v);
    let maxima = v["maxima"].as_array().unwrap();
    let antipodal = maxima.len() == 2 && v["pairwise_angles_deg"][0][1].as_f64().unwrap() > 179.0;
    assert!(!antipodal, "{v:#}");
}

fn laplace_normal(path: &Path, n: usize) {
    use rand::{Rng, SeedableRng};
    use rand_distr::{Distribution, Exp1, StandardNormal};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let e: f64 = Exp1.sample(&mut rng);
            let l = if rng.random::<bool>() { e } else { -e };
            vec![l, StandardNormal.sample(&mut rng)]
        })
        .collect();
    write_rows(path, "laplace,normal", &rows);
}

#[test]
fn tailcheck_reports_dominance() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("ln.csv");
    laplace_normal(&path, 20_000);
    let out = dir.path().join("tail.json");
    let status = run(&[
        "tailcheck",
        "--input",
        path.to_str().unwrap(),
        "--theta-a",
        "1,0",
        "--theta-b",
        "0,1",
        "--radii",
        "0.1,0.3,0.5,0.7,0.9",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_valid("tailcheck", &v);
    assert!(v["z_star"].is_number());
    assert_eq!(v["stable_dominance"], true, "{v:#}");

    let same = ok_json(&["tailcheck", "--input", path.to_str().unwrap(), "--theta-a", "1,0", "--theta-b", "1,0"]);
    assert_valid("tailcheck", &same);
    assert!(same["s_star_estimate"].is_null());
    assert_eq!(same["stable_dominance"], false);
}

#[test]
fn tailcheck_isotropic_has_no_stable_dominance() {
    let dir = TempDir::new().unwrap();
    let path = simulate(&dir, "gaussian", 20_000, 11);
    let rows: Vec<Vec<f64>> = read_rows(&path);
    let (mean, _) = column_means(&rows);
    let n = rows.len() as f64;
    let sd: Vec<f64> = (0..2)
        .map(|j| (rows.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n).sqrt())
        .collect();
    // Whitening each axis of an axis-aligned Gaussian leaves an isotropic one.
    let iso: Vec<Vec<f64>> = rows.iter().map(|r| (0..2).map(|j| r[j] / sd[j]).collect()).collect();
    let iso_path = dir.path().join("iso.csv");
    write_rows(&iso_path, "a,b", &iso);
    let v = ok_json(&[
        "tailcheck",
        "--input",
        iso_path.to_str().unwrap(),
        "--theta-a",
        "1,0",
        "--theta-b",
        "0,1",
        "--radii",
        "0.2,0.4,0.6,0.8,1.0",
    ]);
    assert_valid("tailcheck", &v);
    assert_eq!(v["stable_dominance"], false, "{v:#}");
}
