//! Coarse lattice graph with metric edge lengths, used to seed shooting.
//!
//! Edges join lattice nodes along primitive offsets of sup-norm at most
//! `reach`; an edge length is the Gauss–Legendre integral of `|e|_g` along
//! the straight chart segment, so every graph path is a real curve and the
//! graph distance bounds the true distance from above.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::model::{Model, Vec3};
use crate::error::Result;
use crate::util::gauss_legendre;

const GAUSS_POINTS: usize = 4;

#[derive(Debug, Clone)]
pub struct Graph {
    n: usize,
    spacing: f64,
    reach: i32,
    nodes: Vec<Vec3>,
    adjacency: Vec<Vec<(usize, f64)>>,
    gauss: (Vec<f64>, Vec<f64>),
}

/// Single-source shortest paths over the lattice.
#[derive(Debug, Clone)]
pub struct Tree {
    pub source: Vec3,
    dist: Vec<f64>,
    prev: Vec<usize>,
}

#[derive(PartialEq)]
struct Item(f64, usize);
impl Eq for Item {}
impl Ord for Item {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
    }
}
impl PartialOrd for Item {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

const NONE: usize = usize::MAX;

impl Tree {
    /// Graph distance from the source to every lattice node.
    pub fn distances(&self) -> &[f64] {
        &self.dist
    }
}

fn gcd(a: i32, b: i32) -> i32 {
    if b == 0 { a.abs() } else { gcd(b, a % b) }
}

pub fn primitive_offsets(n: usize, reach: i32) -> Vec<[i32; 3]> {
    let mut out = Vec::new();
    let r = reach;
    for a in -r..=r {
        for b in -r..=r {
            let cs: Vec<i32> = if n == 3 { (-r..=r).collect() } else { vec![0] };
            for c in cs {
                if (a, b, c) == (0, 0, 0) {
                    continue;
                }
                if gcd(gcd(a, b), c) == 1 {
                    out.push([a, b, c]);
                }
            }
        }
    }
    out
}

impl Graph {
    /// Lattice of the given spacing covering the ball of radius `radius`.
    pub fn build(model: &Model, n: usize, radius: f64, spacing: f64, reach: i32) -> Result<Graph> {
        let k = (radius / spacing).floor() as i32;
        let mut index = std::collections::HashMap::new();
        let mut nodes = Vec::new();
        let range: Vec<i32> = (-k..=k).collect();
        let zs: Vec<i32> = if n == 3 { range.clone() } else { vec![0] };
        for &c in &zs {
            for &b in &range {
                for &a in &range {
                    let x = [a as f64 * spacing, b as f64 * spacing, c as f64 * spacing];
                    if (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt() <= radius * (1.0 - 1e-12) {
                        index.insert([a, b, c], nodes.len());
                        nodes.push(x);
                    }
                }
            }
        }
        let gauss = gauss_legendre(GAUSS_POINTS);
        let mut graph = Graph { n, spacing, reach, nodes, adjacency: Vec::new(), gauss };
        let offsets = primitive_offsets(n, reach);
        let mut adjacency = vec![Vec::new(); graph.nodes.len()];
        let keys: Vec<([i32; 3], usize)> = {
            let mut v: Vec<_> = index.iter().map(|(k, v)| (*k, *v)).collect();
            v.sort_by_key(|e| e.1);
            v
        };
        for (key, i) in keys {
            for off in &offsets {
                // each undirected edge once
                if (off[0], off[1], off[2]) < (0, 0, 0) {
                    continue;
                }
                let other = [key[0] + off[0], key[1] + off[1], key[2] + off[2]];
                if let Some(&j) = index.get(&other) {
                    let w = graph.segment_length(model, &graph.nodes[i], &graph.nodes[j])?;
                    adjacency[i].push((j, w));
                    adjacency[j].push((i, w));
                }
            }
        }
        graph.adjacency = adjacency;
        Ok(graph)
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[Vec3] {
        &self.nodes
    }

    pub fn segment_length(&self, model: &Model, a: &Vec3, b: &Vec3) -> Result<f64> {
        let n = self.n;
        let mut e = [0.0; 3];
        for i in 0..n {
            e[i] = b[i] - a[i];
        }
        let (xs, ws) = &self.gauss;
        let mut s = 0.0;
        for (t, w) in xs.iter().zip(ws) {
            let u = 0.5 * (t + 1.0);
            let mut p = [0.0; 3];
            for i in 0..n {
                p[i] = a[i] + u * e[i];
            }
            s += 0.5 * w * model.jet(&p, n)?.norm(&e);
        }
        Ok(s)
    }

    /// Lattice nodes within `reach` spacings of `x`, with edge lengths.
    fn attach(&self, model: &Model, x: &Vec3) -> Result<Vec<(usize, f64)>> {
        let r = self.reach as f64 * self.spacing * (1.0 + 1e-9);
        let mut out = Vec::new();
        for (i, p) in self.nodes.iter().enumerate() {
            let d: f64 = (0..self.n).map(|k| (p[k] - x[k]).powi(2)).sum::<f64>().sqrt();
            if d <= r {
                out.push((i, self.segment_length(model, x, p)?));
            }
        }
        Ok(out)
    }

    pub fn tree(&self, model: &Model, source: &[f64]) -> Result<Tree> {
        let mut src = [0.0; 3];
        src[..self.n].copy_from_slice(&source[..self.n]);
        let mut dist = vec![f64::INFINITY; self.nodes.len()];
        let mut prev = vec![NONE; self.nodes.len()];
        let mut heap = BinaryHeap::new();
        for (i, w) in self.attach(model, &src)? {
            if w < dist[i] {
                dist[i] = w;
                heap.push(Item(w, i));
            }
        }
        while let Some(Item(d, i)) = heap.pop() {
            if d > dist[i] {
                continue;
            }
            for &(j, w) in &self.adjacency[i] {
                let nd = d + w;
                if nd < dist[j] {
                    dist[j] = nd;
                    prev[j] = i;
                    heap.push(Item(nd, j));
                }
            }
        }
        Ok(Tree { source: src, dist, prev })
    }

    /// Graph distance from the tree source to `target` and the polyline.
    pub fn route(&self, model: &Model, tree: &Tree, target: &[f64]) -> Result<(f64, Vec<Vec3>)> {
        let mut t = [0.0; 3];
        t[..self.n].copy_from_slice(&target[..self.n]);
        let mut best = (f64::INFINITY, NONE);
        let direct: f64 = (0..self.n).map(|k| (t[k] - tree.source[k]).powi(2)).sum::<f64>().sqrt();
        if direct <= self.reach as f64 * self.spacing {
            best = (self.segment_length(model, &tree.source, &t)?, NONE);
        }
        for (i, w) in self.attach(model, &t)? {
            if tree.dist[i] + w < best.0 {
                best = (tree.dist[i] + w, i);
            }
        }
        let mut path = vec![t];
        let mut cur = best.1;
        while cur != NONE {
            path.push(self.nodes[cur]);
            cur = tree.prev[cur];
        }
        path.push(tree.source);
        path.reverse();
        Ok((best.0, path))
    }
}
