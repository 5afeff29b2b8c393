//! Planar ring triangulations of the disc.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanarMesh {
    pub points: Vec<[f64; 2]>,
    /// Counter-clockwise triangles.
    pub cells: Vec<[usize; 3]>,
    pub boundary: Vec<bool>,
}

impl PlanarMesh {
    /// Concentric rings of `b k` vertices at radius `R k / K` around a
    /// center vertex, consecutive rings zipped by angle. This gives `b K^2`
    /// cells; `b` in `4..=8` and `K` are picked to land closest to
    /// `cells`, preferring `b` near 6.
    pub fn disc(radius: f64, cells: usize) -> Result<PlanarMesh> {
        if cells < 4 {
            return Err(Error::Argument(format!("disc mesh needs at least 4 cells, got {cells}")));
        }
        if !(radius > 0.0) {
            return Err(Error::Argument("disc radius must be positive".into()));
        }
        let mut best = (usize::MAX, usize::MAX, 0usize, 0usize);
        for b in 4..=8usize {
            let k = ((cells as f64 / b as f64).sqrt().round() as usize).max(1);
            for kk in [k.saturating_sub(1).max(1), k, k + 1] {
                let miss = (b * kk * kk).abs_diff(cells);
                let key = (miss, b.abs_diff(6));
                if key < (best.0, best.1) {
                    best = (miss, b.abs_diff(6), b, kk);
                }
            }
        }
        Ok(PlanarMesh::rings(radius, best.2, best.3))
    }

    pub fn rings(radius: f64, b: usize, rings: usize) -> PlanarMesh {
        let mut points = vec![[0.0, 0.0]];
        let mut starts = vec![0usize];
        for k in 1..=rings {
            starts.push(points.len());
            let count = b * k;
            let r = radius * k as f64 / rings as f64;
            // stagger alternate rings to avoid long thin triangles
            let offset = if k % 2 == 0 { 0.5 } else { 0.0 };
            for j in 0..count {
                let t = std::f64::consts::TAU * (j as f64 + offset) / count as f64;
                points.push([r * t.cos(), r * t.sin()]);
            }
        }
        let mut cells = Vec::new();
        for k in 1..=rings {
            let outer: Vec<usize> = (0..b * k).map(|j| starts[k] + j).collect();
            let inner: Vec<usize> = if k == 1 { vec![0] } else { (0..b * (k - 1)).map(|j| starts[k - 1] + j).collect() };
            zip_rings(&points, &inner, &outer, &mut cells);
        }
        let first_boundary = starts[rings];
        let boundary = (0..points.len()).map(|i| i >= first_boundary).collect();
        PlanarMesh { points, cells, boundary }
    }

    /// Euclidean area of the triangulated polygon.
    pub fn area(&self) -> f64 {
        self.cells.iter().map(|c| signed_area(&self.points, c)).sum()
    }

    pub fn boundary_count(&self) -> usize {
        self.boundary.iter().filter(|b| **b).count()
    }
}

pub fn signed_area(p: &[[f64; 2]], c: &[usize; 3]) -> f64 {
    let (a, b, d) = (p[c[0]], p[c[1]], p[c[2]]);
    0.5 * ((b[0] - a[0]) * (d[1] - a[1]) - (b[1] - a[1]) * (d[0] - a[0]))
}

fn angle(p: &[f64; 2]) -> f64 {
    p[1].atan2(p[0]).rem_euclid(std::f64::consts::TAU)
}

/// Triangulates the annulus between two closed rings, advancing on
/// whichever ring has the smaller next angle.
fn zip_rings(points: &[[f64; 2]], inner: &[usize], outer: &[usize], cells: &mut Vec<[usize; 3]>) {
    if inner.len() == 1 {
        for j in 0..outer.len() {
            cells.push([inner[0], outer[j], outer[(j + 1) % outer.len()]]);
        }
        return;
    }
    let (ni, no) = (inner.len(), outer.len());
    let (mut i, mut o) = (0usize, 0usize);
    // unwrap angles so both rings count up from a common origin
    let start = angle(&points[inner[0]]).min(angle(&points[outer[0]]));
    let ang = |idx: usize| {
        let a = angle(&points[idx]) - start;
        if a < -1e-12 { a + std::f64::consts::TAU } else { a }
    };
    let next = |ring: &[usize], k: usize| -> f64 {
        let base = ang(ring[k % ring.len()]);
        base + std::f64::consts::TAU * (k / ring.len()) as f64
    };
    while i < ni || o < no {
        let ai = if i < ni { next(inner, i + 1) } else { f64::INFINITY };
        let ao = if o < no { next(outer, o + 1) } else { f64::INFINITY };
        if ao <= ai {
            cells.push([inner[i % ni], outer[o % no], outer[(o + 1) % no]]);
            o += 1;
        } else {
            cells.push([inner[i % ni], outer[o % no], inner[(i + 1) % ni]]);
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_orientation() {
        let m = PlanarMesh::disc(1.0, 4).unwrap();
        assert_eq!((m.cells.len(), m.points.len(), m.boundary_count()), (4, 5, 4));
        let big = PlanarMesh::disc(1.0, 2000).unwrap();
        assert_eq!(big.cells.len(), 2000);
        for c in &big.cells {
            assert!(signed_area(&big.points, c) > 0.0);
        }
        let outer = big.boundary_count() as f64;
        let polygon = 0.5 * outer * (std::f64::consts::TAU / outer).sin();
        assert!((big.area() - polygon).abs() < 1e-10);
        assert!(PlanarMesh::disc(1.0, 3).is_err());
    }

    #[test]
    fn every_interior_edge_shared_twice() {
        let m = PlanarMesh::disc(2.0, 300).unwrap();
        let mut edges = std::collections::HashMap::new();
        for c in &m.cells {
            for k in 0..3 {
                let (a, b) = (c[k], c[(k + 1) % 3]);
                *edges.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        for ((a, b), count) in edges {
            let on_boundary = m.boundary[a] && m.boundary[b];
            assert!(count == 2 || (count == 1 && on_boundary), "edge {a}-{b} used {count} times");
        }
    }
}
