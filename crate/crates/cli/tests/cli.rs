use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qmc_sphere::harmonic::{phi_sum, z_dim_f64};
use qmc_sphere::io::read_pointset;
use qmc_sphere::optimize::{Objective, ObjectiveKind};
use qmc_sphere::pointgen::{polytope, spiral, Polytope};
use qmc_sphere::quality::{wce, SobolevSpace};
use qmc_sphere::sphere::gamma_d;
use serde_json::Value;
use tempfile::TempDir;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qmc-sphere"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(dir: &Path, args: &[&str]) -> Value {
    let mut full = vec!["--format", "json"];
    full.extend_from_slice(args);
    serde_json::from_str(&ok(dir, &full)).unwrap()
}

fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas")
}

fn validate(v: &Value) {
    let table = v["table"].as_str().expect("envelope names its table");
    let text = std::fs::read_to_string(schema_dir().join(format!("{table}.json"))).unwrap();
    let schema: Value = serde_json::from_str(&text).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(v).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{table}: {errors:?}");
}

fn setup() -> TempDir {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["gen", "--kind", "spiral", "--n", "1024", "-o", "s.txt"]);
    ok(dir.path(), &["gen", "--kind", "polytope", "--polytope", "octahedron", "-o", "oct.txt"]);
    dir
}

#[test]
fn wce_matches_library() {
    let dir = setup();
    let v = json(dir.path(), &["wce", "--kernel", "gd", "--s", "1.5", "s.txt"]);
    let sp = SobolevSpace::gen_distance(2, 1.5).unwrap();
    let expected = wce(&sp, &spiral(1024).unwrap()).unwrap().wce;
    assert_eq!(v["rows"][0]["wce"].as_f64().unwrap(), expected);
    let from_file = wce(&sp, &read_pointset(dir.path().join("s.txt")).unwrap()).unwrap().wce;
    assert_eq!(from_file, expected);
}

#[test]
fn harmonic_cross_check_columns() {
    let dir = setup();
    let v = json(dir.path(), &["wce", "--kernel", "cf", "--ell-max", "2000", "s.txt"]);
    let r = &v["rows"][0];
    let w2 = r["wce"].as_f64().unwrap().powi(2);
    let est = r["harmonic_estimate"].as_f64().unwrap();
    assert!((w2 - est).abs() <= r["refined_bound"].as_f64().unwrap() + 1e-15);
}

#[test]
fn octahedron_design_strength() {
    let dir = setup();
    let v = json(dir.path(), &["design-check", "--t-max", "6", "oct.txt"]);
    // Oracle: first degree whose Phi sum is visibly nonzero.
    let oct = polytope(Polytope::Octahedron);
    let first = (1..=6)
        .find(|&l| phi_sum(l, &oct).unwrap() > 1e-10 * z_dim_f64(2, l))
        .unwrap();
    assert_eq!(v["rows"][0]["strength"].as_u64().unwrap() as usize, first - 1);
    assert_eq!(first - 1, 3);
}

#[test]
fn l2_discrepancy_is_scaled_wce() {
    let dir = setup();
    let d = json(dir.path(), &["disc", "--l2", "s.txt"]);
    let w = json(dir.path(), &["wce", "--kernel", "gd", "--s", "1.5", "s.txt"]);
    let l2 = d["rows"][0]["l2"].as_f64().unwrap();
    let scaled = gamma_d(2).unwrap().sqrt() * w["rows"][0]["wce"].as_f64().unwrap();
    assert!((l2 - scaled).abs() <= 1e-12 * scaled, "{l2} vs {scaled}");
}

#[test]
fn seeded_output_is_reproducible_and_thread_independent() {
    let dir = setup();
    let args = ["--format", "csv", "expect", "--model", "random", "--kernel", "cf", "--n", "20,40", "--trials", "30", "--seed", "5"];
    let a = ok(dir.path(), &args);
    let b = ok(dir.path(), &args);
    let mut one = vec!["--threads", "1"];
    one.extend_from_slice(&args);
    let c = ok(dir.path(), &one);
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert!(a.starts_with("# table=expect-random seed=5\n"));

    let linf = ["disc", "--linf-est", "--extra-centers", "50", "--seed", "2", "s.txt"];
    assert_eq!(ok(dir.path(), &linf), ok(dir.path(), &linf));
}

#[test]
fn auto_seed_is_recorded_and_replays() {
    let dir = setup();
    ok(dir.path(), &["gen", "--kind", "random", "--n", "50", "-o", "r.txt"]);
    let text = std::fs::read_to_string(dir.path().join("r.txt")).unwrap();
    let seed = text
        .lines()
        .find_map(|l| l.split_whitespace().find_map(|f| f.strip_prefix("seed=")))
        .expect("seed recorded in header")
        .to_string();
    let again = ok(dir.path(), &["gen", "--kind", "random", "--n", "50", "--seed", &seed]);
    assert_eq!(again, text);

    let v = json(dir.path(), &["disc", "--l2-direct", "--centers", "1000", "s.txt"]);
    assert!(v["seed"].is_u64());
}

#[test]
fn opt_writes_points_and_reports_value() {
    let dir = setup();
    let v = json(
        dir.path(),
        &["opt", "--objective", "coulomb", "--n", "6", "--restarts", "2", "--seed", "1", "-o", "o.txt"],
    );
    let x = read_pointset(dir.path().join("o.txt")).unwrap();
    assert_eq!(x.len(), 6);
    let obj = Objective::new(ObjectiveKind::Coulomb, 2).unwrap();
    let reported = v["rows"][0]["objective_value"].as_f64().unwrap();
    assert_eq!(obj.value(&x).unwrap(), reported);
    // Regular octahedron: 12 edges at sqrt(2), 3 diagonals at 2, both orders.
    let octa = 2.0 * (12.0 / 2f64.sqrt() + 3.0 / 2.0);
    assert!((reported - octa).abs() < 1e-8);
}

#[test]
fn fit_recovers_sstar_fits() {
    let dir = setup();
    let table = ok(
        dir.path(),
        &["--format", "csv", "sstar", "--family", "spiral,equal-area", "--n", "64,256,1024", "--s-grid", "1.5,4.5", "--table", "wce"],
    );
    std::fs::write(dir.path().join("w.csv"), &table).unwrap();
    let fits = json(dir.path(), &["fit", "--group", "family,s", "w.csv"]);
    let reference = json(
        dir.path(),
        &["sstar", "--family", "spiral,equal-area", "--n", "64,256,1024", "--s-grid", "1.5,4.5", "--table", "fits"],
    );
    let rows = fits["rows"].as_array().unwrap();
    let refs = reference["rows"].as_array().unwrap();
    assert_eq!(rows.len(), refs.len());
    for (f, r) in rows.iter().zip(refs) {
        assert_eq!(f["series"].as_str().unwrap(), format!("family={} s={}", r["family"].as_str().unwrap(), r["s"]));
        assert!((f["beta"].as_f64().unwrap() - r["beta"].as_f64().unwrap()).abs() < 1e-12);
    }
}

#[test]
fn json_outputs_validate_against_schemas() {
    let dir = setup();
    let p = dir.path();
    ok(p, &["opt", "--objective", "log", "--n", "8", "--restarts", "1", "--seed", "1", "-o", "o.txt"]);
    let runs: Vec<Vec<&str>> = vec![
        vec!["wce", "--kernel", "canonical", "--s", "2.5", "s.txt", "oct.txt"],
        vec!["wce", "--kernel", "gd", "--s", "2.5", "--ell-max", "30", "oct.txt"],
        vec!["disc", "--l2", "s.txt"],
        vec!["disc", "--l2-direct", "--centers", "2000", "--seed", "3", "oct.txt"],
        vec!["disc", "--linf-est", "--seed", "3", "oct.txt"],
        vec!["design-check", "--t-max", "4", "oct.txt", "s.txt"],
        vec!["opt", "--objective", "distance", "--s", "1.5", "--n", "10", "--restarts", "2", "--seed", "4", "-o", "d.txt"],
        vec!["opt", "--objective", "kernel", "--kernel", "cf", "--init", "o.txt", "--max-iter", "5", "--seed", "1", "-o", "k.txt"],
        vec!["expect", "--model", "random", "--kernel", "gd", "--s", "2.5", "--n", "10,20,40", "--trials", "10", "--seed", "1"],
        vec!["expect", "--model", "equal-area", "--kernel", "gd", "--s", "1.5", "--n", "16", "--trials", "10", "--seed", "1"],
        vec!["integrate", "--function", "franke", "s.txt"],
        vec!["integrate", "--function", "const", "--family", "random,spiral", "--n", "16,32", "--seed", "9"],
        vec!["sstar", "--family", "random,spiral", "--n", "16,64,256", "--s-grid", "1.5,2.5", "--seed", "2"],
        vec!["sstar", "--family", "equal-area", "--n", "16,64,256", "--s-grid", "1.5", "--table", "fits"],
        vec!["sstar", "--family", "spiral", "--n", "16,64,256", "--s-grid", "1.5", "--table", "wce"],
    ];
    let mut seen = std::collections::BTreeSet::new();
    for args in &runs {
        let v = json(p, args);
        validate(&v);
        seen.insert(v["table"].as_str().unwrap().to_string());
    }
    std::fs::write(p.join("w.csv"), ok(p, &["--format", "csv", "sstar", "--family", "spiral", "--n", "16,64,256", "--s-grid", "1.5", "--table", "wce"])).unwrap();
    let v = json(p, &["fit", "w.csv"]);
    validate(&v);
    seen.insert("fit".into());
    let shipped: std::collections::BTreeSet<String> = std::fs::read_dir(schema_dir())
        .unwrap()
        .map(|e| e.unwrap().path().file_stem().unwrap().to_string_lossy().into_owned())
        .collect();
    assert_eq!(seen, shipped);
}

#[test]
fn schema_rejects_drift() {
    let dir = setup();
    let mut v = json(dir.path(), &["disc", "--l2", "s.txt"]);
    v["rows"][0]["extra"] = Value::from(1);
    let text = std::fs::read_to_string(schema_dir().join("disc-l2.json")).unwrap();
    let validator = jsonschema::validator_for(&serde_json::from_str(&text).unwrap()).unwrap();
    assert!(!validator.is_valid(&v));
}

#[test]
fn exit_codes() {
    let dir = setup();
    let p = dir.path();
    let code = |args: &[&str]| run(p, args).status.code().unwrap();
    let stderr = |args: &[&str]| String::from_utf8(run(p, args).stderr).unwrap();

    assert_eq!(code(&["wce", "--kernel", "gd", "s.txt"]), 2);
    assert!(stderr(&["wce", "--kernel", "gd", "s.txt"]).contains("--s"));
    assert_eq!(code(&["wce", "--kernel", "gd", "--s", "1.0", "s.txt"]), 2);
    assert!(stderr(&["wce", "--kernel", "gd", "--s", "1.0", "s.txt"]).contains("--s"));
    assert_eq!(code(&["nonsense"]), 2);
    assert_eq!(code(&["disc", "s.txt"]), 2);
    assert_eq!(code(&["gen", "--kind", "spiral"]), 2);
    assert!(stderr(&["gen", "--kind", "spiral"]).contains("--n"));
    assert_eq!(code(&["sstar", "--family", "lattice", "--n", "4,8,16"]), 2);
    assert!(stderr(&["sstar", "--family", "lattice", "--n", "4,8,16"]).contains("--family"));

    assert_eq!(code(&["wce", "--s", "1.5", "missing.txt"]), 1);
    assert!(stderr(&["wce", "--s", "1.5", "missing.txt"]).contains("missing.txt"));
    std::fs::write(p.join("bad.txt"), "1 0 0\n0 1 0\n0 1\n").unwrap();
    assert_eq!(code(&["disc", "--l2", "bad.txt"]), 1);
    let msg = stderr(&["disc", "--l2", "bad.txt"]);
    assert!(msg.contains("bad.txt") && msg.contains("line 3"), "{msg}");

    assert_eq!(code(&["--help"]), 0);
}

#[test]
fn constant_integration_is_exact() {
    let dir = setup();
    let v = json(dir.path(), &["integrate", "--function", "const", "--value", "0.7", "s.txt", "oct.txt"]);
    for r in v["rows"].as_array().unwrap() {
        assert_eq!(r["error"].as_f64().unwrap(), 0.0);
    }
}
