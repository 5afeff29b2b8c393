use std::path::Path;
use std::process::{Command, Output};

fn fillscape(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fillscape"))
        .args(args)
        .current_dir(dir)
        .env("FILLSCAPE_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn density_of_the_square() {
    let tmp = tempfile::tempdir().unwrap();
    let norm = write(tmp.path(), "square.json", r#"{"dim": 2, "kind": "polytope", "facets": [[1, 0], [0, 1]]}"#);
    let out = fillscape(&["density", &norm, "--def", "loewner"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["density"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert!(v["ellipsoid"].is_object());
    let out = fillscape(&["density", &norm, "--def", "busemann"], tmp.path());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["density"].as_f64().unwrap() - std::f64::consts::FRAC_PI_4).abs() < 1e-6);
}

#[test]
fn malformed_input_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write(tmp.path(), "bad.json", "{\"dim\": 2, ");
    let out = fillscape(&["density", &bad], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
    let out = fillscape(&["density", "missing.json"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let out = fillscape(&["experiment", "no_such_experiment"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let cfg = write(tmp.path(), "cfg.json", r#"{"not_a_key": 1}"#);
    let out = fillscape(&["experiment", "stable_norm", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bdtable_euclidean_and_hyperbolic() {
    let tmp = tempfile::tempdir().unwrap();
    let out = fillscape(&["field", "euclidean"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let field = write(tmp.path(), "flat.json", std::str::from_utf8(&out.stdout).unwrap());
    let out = fillscape(&["bdtable", &field, "--p", "8"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let chord = |a: f64, b: f64| 2.0 * (0.5 * (a - b)).sin().abs();
    let (theta, rows) = table(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(theta.len(), 8);
    for (i, row) in rows.iter().enumerate() {
        for (j, d) in row.iter().enumerate() {
            assert!((d - chord(theta[i], theta[j])).abs() < 1e-8, "{i} {j} {d}");
        }
    }

    let out = fillscape(&["field", "hyperbolic", "--radius", "0.5"], tmp.path());
    let field = write(tmp.path(), "hyp.json", std::str::from_utf8(&out.stdout).unwrap());
    let out = fillscape(&["bdtable", &field, "--p", "8"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let r: f64 = 0.5;
    let (theta, rows) = table(&String::from_utf8(out.stdout).unwrap());
    for (i, row) in rows.iter().enumerate() {
        for (j, d) in row.iter().enumerate() {
            let c = r * chord(theta[i], theta[j]);
            let exact = (1.0 + 2.0 * c * c / ((1.0 - r * r) * (1.0 - r * r))).acosh();
            assert!((d - exact).abs() < 1e-6, "{i} {j} {d} {exact}");
        }
    }

    let out = fillscape(&["bdtable", &field, "--p", "2"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

/// Boundary parameters and distance rows of a table CSV.
fn table(csv: &str) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut lines = csv.lines();
    let theta = lines.next().unwrap().split(',').skip(1).map(|t| t.parse().unwrap()).collect();
    let rows = lines
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').skip(1).map(|t| t.parse().unwrap()).collect())
        .collect();
    (theta, rows)
}

#[test]
fn experiment_run_directory_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "cfg.json", r#"{"samples": 500}"#);
    let first = fillscape(&["experiment", "semi_ellipticity", &cfg, "--seed", "7", "--out", "a"], tmp.path());
    assert_eq!(first.status.code(), Some(0), "{}", String::from_utf8_lossy(&first.stderr));
    let dir = String::from_utf8(first.stdout).unwrap().trim().to_string();
    assert!(dir.contains("semi_ellipticity-7-"));
    for f in ["report.json", "metrics.csv", "plot.svg"] {
        assert!(tmp.path().join(&dir).join(f).exists(), "{f}");
    }
    // reordered keys hash to the same directory name
    let cfg2 = write(tmp.path(), "cfg2.json", r#"{"seed": 7, "samples": 500}"#);
    let second = fillscape(&["experiment", "semi_ellipticity", &cfg2, "--out", "b"], tmp.path());
    let dir2 = String::from_utf8(second.stdout).unwrap().trim().to_string();
    assert_eq!(Path::new(&dir).file_name(), Path::new(&dir2).file_name());
    let a = std::fs::read(tmp.path().join(&dir).join("metrics.csv")).unwrap();
    let b = std::fs::read(tmp.path().join(&dir2).join("metrics.csv")).unwrap();
    assert_eq!(a, b);
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(tmp.path().join(&dir).join("report.json")).unwrap()).unwrap();
    assert_eq!(report["verdict"], "pass");
    assert_eq!(report["config"]["slack"], 1e-9);
}

#[test]
fn exit_codes_follow_the_verdict() {
    let tmp = tempfile::tempdir().unwrap();
    // search mode finds no certificate at this budget
    let cfg = write(tmp.path(), "search.json", r#"{"mode": "search", "samples": 200, "norms": 2}"#);
    let out = fillscape(&["experiment", "semi_ellipticity", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(5));
    // a flat torus judged against an impossible ratio window fails
    let cfg = write(tmp.path(), "stable.json", r#"{"ratio_lo": 1.5, "ratio_hi": 2.0, "asvol_radius": 3.0, "directions": 2}"#);
    let out = fillscape(&["experiment", "stable_norm", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(4));
    // a non-dominating metric is gated out
    let cfg = write(tmp.path(), "haus.json", r#"{"dominate": false, "seed": 3}"#);
    let out = fillscape(&["experiment", "hausdorff_filling", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn help_lists_the_registry() {
    let tmp = tempfile::tempdir().unwrap();
    let out = fillscape(&["experiment", "--help"], tmp.path());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["perturbed_filling", "hemisphere", "semi_ellipticity", "hausdorff_filling", "stable_norm"] {
        assert!(text.contains(name), "{name}");
    }
}
