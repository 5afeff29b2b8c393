use super::*;
use std::f64::consts::PI;

fn hyperbolic_distance(x: &[f64], y: &[f64]) -> f64 {
    let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum();
    let nx: f64 = x.iter().map(|a| a * a).sum();
    let ny: f64 = y.iter().map(|a| a * a).sum();
    (1.0 + 2.0 * d2 / ((1.0 - nx) * (1.0 - ny))).acosh()
}

#[test]
fn straight_lines_in_flat_fields() {
    let f = MetricField::euclidean(2, 1.0).unwrap();
    let p = geodesic_shoot(&f, &[0.1, -0.2], &[0.3, 0.4], 1.0, 0.05).unwrap();
    for (k, x) in p.points.iter().enumerate() {
        let t = k as f64 * p.dt;
        assert!((x[0] - (0.1 + 0.3 * t)).abs() < 1e-14 && (x[1] - (-0.2 + 0.4 * t)).abs() < 1e-14);
    }
    assert!((p.length - 0.5).abs() < 1e-14);
    assert!(!p.exited);

    let eps = 0.2;
    let c = MetricField::constant(2, vec![1.0 + eps, 0.0, 0.0, 1.0 + eps], 1.0).unwrap();
    let q = geodesic_shoot(&c, &[0.0, 0.0], &[0.5, 0.0], 1.0, 0.05).unwrap();
    assert!((q.points.last().unwrap()[0] - 0.5).abs() < 1e-14);
    assert!((q.length - (1.0 + eps).sqrt() * 0.5).abs() < 1e-14);

    let out = geodesic_shoot(&f, &[0.0, 0.0], &[2.0, 0.0], 1.0, 0.05).unwrap();
    assert!(out.exited);
    assert!(geodesic_shoot(&f, &[1.5, 0.0], &[1.0, 0.0], 1.0, 0.05).is_err());
}

#[test]
fn hyperbolic_radial_geodesic() {
    let f = MetricField::hyperbolic(2, 0.95).unwrap();
    // g = 4 delta at the origin, so a g-unit vector has chart length 1/2
    let p = geodesic_shoot(&f, &[0.0, 0.0], &[0.5, 0.0], 1.0, 0.01).unwrap();
    let end = p.points.last().unwrap();
    assert!((end[0] - 0.5f64.tanh()).abs() < 1e-9, "{}", end[0]);
    assert!(end[1].abs() < 1e-15);
}

#[test]
fn distance_examples() {
    let f = MetricField::euclidean(2, 1.0).unwrap();
    let (d, path) = distance(&f, &[1.0, 0.0], &[0.0, 1.0], 1e-10).unwrap();
    assert!((d - 2f64.sqrt()).abs() < 1e-9);
    assert!(path.len() > 2);
    assert_eq!(distance(&f, &[0.3, 0.3], &[0.3, 0.3], 1e-10).unwrap().0, 0.0);

    let h = MetricField::hyperbolic(2, 0.95).unwrap();
    let (d, _) = distance(&h, &[0.0, 0.0], &[0.5, 0.0], 1e-12).unwrap();
    assert!((d - 3f64.ln()).abs() < 1e-6, "{d}");
    assert!(distance(&h, &[0.0, 0.0], &[0.99, 0.0], 1e-10).is_err());
}

#[test]
fn fourth_order_convergence() {
    let h = MetricField::hyperbolic(2, 0.95).unwrap();
    let err = |step: f64| {
        let opts = DistanceOptions { step, tol: 1e-13, ..DistanceOptions::default() };
        let s = DistanceSolver::new(&h, opts).unwrap();
        (s.distance(&[0.0, 0.0], &[0.5, 0.0]).unwrap().length - 3f64.ln()).abs()
    };
    let (e1, e2) = (err(0.1), err(0.05));
    assert!(e1 / e2 >= 8.0, "{e1} {e2}");
}

#[test]
fn reversibility_and_rotation() {
    let base = MetricField::hyperbolic(2, 0.9).unwrap();
    let f = base.perturbed(0.05, 3).unwrap();
    let s = DistanceSolver::new(&f, DistanceOptions::default()).unwrap();
    let (x, y) = ([0.2, -0.4], [-0.5, 0.3]);
    let a = s.distance(&x, &y).unwrap().length;
    let b = s.distance(&y, &x).unwrap().length;
    assert!((a - b).abs() < 1e-6, "{a} {b}");

    let h = MetricField::hyperbolic(2, 0.9).unwrap();
    let s = DistanceSolver::new(&h, DistanceOptions::default()).unwrap();
    let t: f64 = 0.7;
    let rot = |p: [f64; 2]| [t.cos() * p[0] - t.sin() * p[1], t.sin() * p[0] + t.cos() * p[1]];
    let a = s.distance(&x, &y).unwrap().length;
    let b = s.distance(&rot(x), &rot(y)).unwrap().length;
    assert!((a - b).abs() < 1e-6);
    assert!((a - hyperbolic_distance(&x, &y)).abs() < 1e-6);
}

#[test]
fn euclidean_and_scaled_tables() {
    let f = MetricField::euclidean(2, 1.0).unwrap();
    let t = boundary_distance_table(&f, 12, DistanceOptions::default()).unwrap();
    let eps = 0.1;
    let c = MetricField::constant(2, vec![1.0 + eps, 0.0, 0.0, 1.0 + eps], 1.0).unwrap();
    let tc = boundary_distance_table(&c, 12, DistanceOptions::default()).unwrap();
    for i in 0..12 {
        assert_eq!(t.get(i, i), 0.0);
        for j in 0..12 {
            let chord = radius_of(&[t.nodes[i][0] - t.nodes[j][0], t.nodes[i][1] - t.nodes[j][1]]);
            assert!((t.get(i, j) - chord).abs() < 1e-9);
            assert_eq!(t.get(i, j), t.get(j, i));
            assert!((tc.get(i, j) - (1.0 + eps).sqrt() * chord).abs() < 1e-9);
        }
    }
    assert!(t.triangle_violation() < 1e-9);
    assert!((t.arc_lengths[6] - PI).abs() < 1e-12);
    let csv = t.to_csv();
    assert!(csv.starts_with("theta,0.000000000000,"));
    assert_eq!(csv.lines().count(), 13);
    assert!(boundary_distance_table(&f, 4, DistanceOptions::default()).is_err());
}

#[test]
fn hyperbolic_table_matches_closed_form() {
    let h = MetricField::hyperbolic(2, 0.8).unwrap();
    let t = boundary_distance_table(&h, 16, DistanceOptions::default()).unwrap();
    for i in 0..16 {
        for j in 0..16 {
            let exact = hyperbolic_distance(&t.nodes[i], &t.nodes[j]);
            assert!((t.get(i, j) - exact).abs() < 1e-6, "{i} {j} {} {exact}", t.get(i, j));
        }
    }
    assert!(t.triangle_violation() < 1e-6);
}

#[test]
fn monotone_under_conformal_domination() {
    // psi >= 0 pointwise, so exp(2 psi) delta dominates delta
    let f = MetricField::euclidean(2, 1.0).unwrap();
    let mut waves = band_limited_waves(2, 4, 2.0, 11, 0);
    let amp: f64 = waves.iter().map(|w| w.amp.abs()).sum();
    waves.push(Wave { amp, freq: [0.0; 3], phase: 0.0 });
    let g = f.conformal(waves).unwrap();
    let opts = DistanceOptions::default();
    let a = boundary_distance_table(&f, 8, opts).unwrap();
    let b = boundary_distance_table(&g, 8, opts).unwrap();
    for (x, y) in a.values.iter().zip(&b.values) {
        assert!(*y >= *x - 1e-8);
    }
}

#[test]
fn simplicity_of_flat_disc() {
    let f = MetricField::euclidean(2, 2.0).unwrap();
    let r = simplicity_check(&f, 100, 5).unwrap();
    assert!((r.boundary_convexity - 0.5).abs() < 1e-12);
    assert!(r.conjugate_point_free && r.minimizing && !r.minimality_inconclusive);
    assert_eq!(r.worst_multiplicity, 1);
    assert!(r.is_simple());
    assert!(simplicity_check(&f, 10, 5).is_err());
}

#[test]
fn simplicity_reproducible() {
    let f = MetricField::hyperbolic(2, 0.5).unwrap().perturbed(0.05, 2).unwrap();
    let a = simplicity_check(&f, 100, 9).unwrap();
    let b = simplicity_check(&f, 100, 9).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert!(a.is_simple());
}

#[test]
fn hemisphere_minus_collar_is_simple() {
    let f = MetricField::sphere_cap(2, PI / 2.0 - 0.1).unwrap();
    let r = simplicity_check(&f, 100, 1).unwrap();
    // boundary curvature of a geodesic circle of radius rho is cot(rho)
    assert!((r.boundary_convexity - (PI / 2.0 - 0.1).tan().recip()).abs() < 1e-9);
    assert!(r.is_simple(), "{r:?}");
}

#[test]
fn large_cap_has_conjugate_points() {
    let f = MetricField::sphere_cap(2, PI - 0.1).unwrap();
    let start = f.boundary_nodes(8)[0].iter().map(|c| c * (1.0 - 1e-9)).collect::<Vec<_>>();
    let c = simplicity::jacobi_sign_change(&f, &start, &[-1.0, 0.05], 0.005).unwrap().unwrap();
    assert!((c.arc_length - PI).abs() < 0.02, "{}", c.arc_length);
    let mut opts = SimplicityOptions::default();
    opts.pairs = 2;
    let r = simplicity::simplicity_check_with(&f, 100, 1, opts).unwrap();
    assert!(!r.conjugate_point_free);
    assert!(!r.is_simple());
}

#[test]
fn json_roundtrip_and_hyperbolic_nodes() {
    let h = MetricField::hyperbolic(2, 0.5).unwrap();
    let j = h.to_json().unwrap();
    let (lo, count) = h.lattice();
    for (idx, t) in j.nodes.iter().enumerate() {
        let x = Grid::node(2, lo, h.h, count, idx);
        let r2 = x[0] * x[0] + x[1] * x[1];
        if r2 < 0.81 {
            let l = 4.0 / (1.0 - r2).powi(2);
            assert!((t[0] - l).abs() <= 1e-12 * l && t[1] == 0.0);
        }
    }
    let back = MetricField::from_json_str(&serde_json::to_string(&j).unwrap()).unwrap();
    assert_eq!(back.model, Model::Hyperbolic);

    let p = MetricField::euclidean(2, 1.0).unwrap().perturbed(0.1, 4).unwrap();
    let mut j = p.to_json().unwrap();
    j.model = None;
    let sampled = MetricField::from_json_str(&serde_json::to_string(&j).unwrap()).unwrap();
    for x in [[0.1, 0.2], [-0.6, 0.7], [0.99, 0.0]] {
        let a = p.tensor(&x).unwrap();
        let b = sampled.tensor(&x).unwrap();
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-5);
        }
    }
    assert!(MetricField::from_json_str(r#"{"dim":2,"R":1,"h":0.1,"kind":"custom","nodes":[[1,0,0,1]]}"#).is_err());
    assert!(MetricField::from_json_str(r#"{"dim":2,"R":1,"h":0.1,"kind":"euclidean","bogus":1}"#).is_err());
}

#[test]
fn spd_check_catches_indefinite_tensors() {
    assert!(matches!(
        MetricField::constant(2, vec![1.0, 2.0, 2.0, 1.0], 1.0),
        Err(Error::NotPositiveDefinite { .. })
    ));
    let p = MetricField::euclidean(2, 1.0).unwrap().perturbed(0.3, 1).unwrap();
    assert!(p.min_eigenvalue().unwrap().0 > 0.0);
}

#[test]
fn three_dimensional_fields() {
    let h = MetricField::hyperbolic(3, 0.8).unwrap();
    let s = DistanceSolver::new(&h, DistanceOptions::default()).unwrap();
    let (x, y) = ([0.1, 0.2, -0.3], [-0.2, 0.1, 0.4]);
    let d = s.distance(&x, &y).unwrap().length;
    assert!((d - hyperbolic_distance(&x, &y)).abs() < 1e-6);
    let e = MetricField::euclidean(3, 1.0).unwrap();
    let r = simplicity::second_fundamental_form(&e, &[0.0, 0.6, 0.8]).unwrap();
    assert!((r - 1.0).abs() < 1e-12);
}
