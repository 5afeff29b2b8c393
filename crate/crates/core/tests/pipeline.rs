//! End-to-end use of the public API: fields, tables, embeddings, areas.

use std::f64::consts::PI;

use fillscape::metricfield::{boundary_distance_table, DistanceOptions, MetricField};
use fillscape::normspace::{AreaDensity, DensityDef};
use fillscape::represent::SampledSphere;
use fillscape::surface::{embed_filling, surface_area, PlanarMesh, Representation};

#[test]
fn field_json_survives_a_roundtrip() {
    let f = MetricField::hyperbolic(2, 0.6).unwrap().perturbed(0.05, 11).unwrap();
    let text = serde_json::to_string(&f.to_json().unwrap()).unwrap();
    let g = MetricField::from_json_str(&text).unwrap();
    for x in [[0.0, 0.0], [0.2, -0.3], [-0.4, 0.1]] {
        assert_eq!(f.tensor(&x).unwrap(), g.tensor(&x).unwrap());
    }
    assert!(MetricField::from_json_str("{\"dim\": 2}").is_err());
}

#[test]
fn perturbed_table_is_a_metric() {
    let f = MetricField::euclidean(2, 1.0).unwrap().perturbed(0.05, 2).unwrap();
    let t = boundary_distance_table(&f, 12, DistanceOptions::default()).unwrap();
    assert_eq!(t.size(), 12);
    assert!(t.triangle_violation() < 1e-8);
    for i in 0..12 {
        assert_eq!(t.get(i, i), 0.0);
        for j in 0..12 {
            assert_eq!(t.get(i, j), t.get(j, i));
        }
    }
    // the perturbation is small, so chords change little
    let flat = boundary_distance_table(&MetricField::euclidean(2, 1.0).unwrap(), 12, DistanceOptions::default()).unwrap();
    let worst = t.values.iter().zip(&flat.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(worst > 0.0 && worst < 0.2, "{worst}");
}

#[test]
fn representations_of_the_flat_disc_agree() {
    let field = MetricField::euclidean(2, 1.0).unwrap();
    let sphere = SampledSphere::circle(64).unwrap();
    let mesh = PlanarMesh::disc(1.0, 120).unwrap();
    let density = AreaDensity::new(DensityDef::Loewner);
    let busemann = embed_filling(&field, &mesh, Representation::BusemannEuclidean, &sphere).unwrap();
    let hyperplane = embed_filling(&field, &mesh, Representation::Hyperplane, &sphere).unwrap();
    let a = surface_area(&busemann.surface, &density).total;
    let b = surface_area(&hyperplane.surface, &density).total;
    assert!((a - b).abs() < 1e-6 * a, "{a} {b}");
    assert!((busemann.disc_volume - PI).abs() < 1e-9);
    // the inscribed polygon misses a sliver of the disc
    assert!(busemann.mesh_volume < PI && busemann.mesh_volume > 0.98 * PI);
    assert!((a - busemann.mesh_volume).abs() < 1e-6);
}

#[test]
fn hyperbolic_filling_is_not_below_its_volume() {
    let field = MetricField::hyperbolic(2, 0.5).unwrap();
    let sphere = SampledSphere::circle(64).unwrap();
    let mesh = PlanarMesh::disc(0.5, 120).unwrap();
    let f = embed_filling(&field, &mesh, Representation::Hyperbolic, &sphere).unwrap();
    let a = surface_area(&f.surface, &AreaDensity::new(DensityDef::Loewner)).total;
    // closed form 4 pi r^2 / (1 - r^2) of the hyperbolic disc
    assert!((f.disc_volume - 4.0 * PI * 0.25 / 0.75).abs() < 1e-6);
    assert!(a >= f.mesh_volume * (1.0 - 1e-6), "{a} {}", f.mesh_volume);
}
