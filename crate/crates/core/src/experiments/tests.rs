use super::*;
use crate::metricfield::{MetricField, Model};
use serde_json::json;

use std::f64::consts::PI;

fn quick_perturbed() -> serde_json::Value {
    json!({"mesh_cells": 60, "m": 32, "p": 16, "competitors": 2, "simplicity_samples": 100,
           "optimizer": {"iterations": 30, "check_every": 10, "pattern_levels": 2}})
}

#[test]
fn registry_defaults_roundtrip() {
    for (name, about) in EXPERIMENTS {
        assert!(!about.is_empty());
        let cfg = default_config(name).unwrap();
        assert!(cfg.is_object(), "{name}");
        // the defaults parse back and unknown keys are rejected
        let mut bad = cfg.clone();
        bad.as_object_mut().unwrap().insert("no_such_key".into(), json!(1));
        assert!(matches!(run_experiment(name, &bad), Err(Error::Parse(_))), "{name}");
    }
    assert!(matches!(default_config("nope"), Err(Error::Argument(_))));
    assert!(matches!(run_experiment("nope", &json!({})), Err(Error::Argument(_))));
    let p: PerturbedConfig = parse(&serde_json::Value::Null).unwrap();
    assert_eq!(p, PerturbedConfig::default());
}

#[test]
fn report_clamps_non_finite_metrics() {
    let mut r = ExperimentReport::new("x", &json!({"a": 1}), 3).unwrap();
    r.metric("nan", f64::NAN);
    r.metric("neg", f64::NEG_INFINITY);
    r.metric("one", 1.0);
    assert_eq!(r.metrics["nan"], f64::MAX);
    assert_eq!(r.metrics["neg"], -f64::MAX);
    assert_eq!(r.verdict, Verdict::Inconclusive);
    let csv = r.metrics_csv();
    assert!(csv.starts_with("metric,value\nnan,"));
    assert!(csv.contains("one,1.00000000000000000e0\n"));
    assert!(serde_json::to_string(&r).is_ok());
}

#[test]
fn trial_seeds_differ() {
    let seeds: std::collections::BTreeSet<u64> = (0..100).map(|k| trial_seed(1, k)).collect();
    assert_eq!(seeds.len(), 100);
    assert_ne!(trial_seed(1, 0), trial_seed(2, 0));
}

#[test]
fn semi_control_passes_and_is_deterministic() {
    let cfg = json!({"samples": 500, "seed": 4});
    let a = run_experiment("semi_ellipticity", &cfg).unwrap();
    let b = run_experiment("semi_ellipticity", &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.verdict, Verdict::Pass);
    assert_eq!(a.metrics["violations"], 0.0);
    assert!(a.metrics["worst_ratio"] <= 1.0 + 1e-9);
    // defaults are echoed into the effective config
    assert_eq!(a.config["slack"], json!(1e-9));
    assert_eq!(a.config["seed"], json!(4));
    assert_eq!(a.thresholds["slack"], 1e-9);
}

#[test]
fn semi_search_without_certificate_is_inconclusive() {
    let r = run_experiment("semi_ellipticity", &json!({"mode": "search", "samples": 200, "norms": 2})).unwrap();
    assert_eq!(r.verdict, Verdict::Inconclusive);
    assert_eq!(r.metrics["verified_certificates"], 0.0);
}

#[test]
fn hausdorff_euclidean_and_scaled() {
    let r = run_experiment("hausdorff_filling", &json!({"metric": "euclidean", "p": 16, "quad_order": 24})).unwrap();
    assert_eq!(r.verdict, Verdict::Pass);
    assert!((r.metrics["hausdorff_area"] - PI).abs() < 1e-6);
    assert!(r.metrics["gate.margin"] > -1e-6);
    let r = run_experiment("hausdorff_filling", &json!({"metric": "scaled", "eps": 0.1, "p": 16, "quad_order": 24})).unwrap();
    assert_eq!(r.verdict, Verdict::Pass);
    assert!((r.metrics["hausdorff_area"] - 1.21 * PI).abs() < 1e-6);
}

#[test]
fn hausdorff_gate_rejects_non_dominating_metric() {
    let r = run_experiment("hausdorff_filling", &json!({"dominate": false, "seed": 3, "p": 16})).unwrap();
    assert_eq!(r.verdict, Verdict::Inconclusive);
    assert!(r.metrics["gate.margin"] < -1e-6);
    assert!(!r.metrics.contains_key("hausdorff_area"));
}

#[test]
fn stable_norm_flat_bound() {
    for matrix in [[1.0, 0.0, 0.0, 1.0], [4.0, 0.0, 0.0, 1.0]] {
        let field = flat_torus(&matrix);
        let est = stable_norm_estimate(&field, 4, 3).unwrap();
        // flat tori: d(0, K v) / K does not depend on K
        for row in &est.values {
            for w in row.windows(2) {
                assert!((w[0] - w[1]).abs() < 1e-8);
            }
        }
        assert!(est.max_increase < 1e-8);
        assert!((est.asvol_lower_bound / PI - 1.0).abs() < 0.03, "{}", est.asvol_lower_bound);
        // a polygon has more area than pi times its John ellipse
        assert!(est.asvol_lower_bound >= PI * (1.0 - 1e-9));
    }
    let plane = MetricField::euclidean(2, 1.0).unwrap();
    assert!(matches!(stable_norm_estimate(&plane, 8, 2), Err(Error::Argument(_))));
}

fn flat_torus(m: &[f64; 4]) -> MetricField {
    MetricField::periodic(2, Model::Constant { matrix: m.to_vec() }).unwrap()
}

#[test]
fn stable_norm_verdicts() {
    let cfg = json!({"asvol_radius": 4.0, "directions": 3});
    let r = run_experiment("stable_norm", &cfg).unwrap();
    assert!((r.metrics["bound_over_pi"] - 1.0).abs() < 0.03);
    assert!(r.series.contains_key("asvol"));
    let bad = run_experiment("stable_norm", &json!({"asvol_radius": 4.0, "directions": 3, "ratio_lo": 1.5, "ratio_hi": 2.0})).unwrap();
    assert_eq!(bad.verdict, Verdict::Fail);
    assert_eq!(bad.metrics, r.metrics);
}

#[test]
fn hemisphere_gate_discards_shrunk_competitors() {
    let r = run_experiment("hemisphere", &json!({"trials": 2, "shrunk_trials": 2, "graph_spacing": 0.0625, "quad_order": 24})).unwrap();
    assert_eq!(r.metrics["trials.discarded"], 2.0);
    assert_eq!(r.metrics["trials.accepted"] + r.metrics["trials.generator_failed"], 2.0);
    assert!((r.metrics["round.area_ratio"] - 1.0).abs() < 0.01);
    assert!(r.metrics["antipodal.margin_min"] >= -1e-9 * PI);
    assert!(r.metrics["area.min_ratio"] >= 0.98);
    assert_eq!(r.verdict, Verdict::Pass);
}

#[test]
fn perturbed_flat_disc_quick() {
    let a = run_experiment("perturbed_filling", &quick_perturbed()).unwrap();
    assert_eq!(a.verdict, Verdict::Pass, "{:?}", a.metrics);
    assert!(a.metrics["area.min_ratio"] >= 0.99);
    assert!(a.metrics["boundary.lipschitz_max"] <= 1.0 + 1e-8);
    assert_eq!(a.series.len(), 2);
    for k in 0..2 {
        assert!(a.metrics[&format!("competitor.{k}.final")] <= a.metrics[&format!("competitor.{k}.start")]);
    }
    let b = run_experiment("perturbed_filling", &quick_perturbed()).unwrap();
    assert_eq!(a.metrics, b.metrics);
}

#[test]
fn impossible_tolerance_triggers_the_rerun() {
    let mut cfg = quick_perturbed();
    cfg["competitors"] = json!(0);
    // a negative tolerance demands area strictly above the reference
    cfg["tol_rel"] = json!(-0.5);
    let r = run_experiment("perturbed_filling", &cfg).unwrap();
    assert_eq!(r.verdict, Verdict::Fail);
    assert!(r.metrics.contains_key("rerun.area.min"));
    assert_eq!(r.thresholds["rerun.tol_rel"], -0.25);
    assert!(r.notes.iter().any(|n| n.contains("rerun")));
}
