//! Triangulated grids over polygonal domains and piecewise-linear fields
//! on them.
//!
//! Nodes sit on a lattice `i·e1 + j·e2` (by default `hℤ²`). Each lattice
//! cell is split along the diagonal pointing away from the origin's
//! quadrant axes ("union jack"), so domains like `|x| + |y| ≤ 1` and
//! rectangles are triangulated exactly.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::covers::NewtonPolygon;
use crate::error::{DimerError, Result};
use crate::geometry::{point_in_polygon, Point};
use crate::io::float;

#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    pub domain: Vec<Point>,
    /// Longest triangle edge.
    pub h: f64,
    pub basis: [Point; 2],
    pub nodes: Vec<Point>,
    /// Integer grid coordinates of each node.
    pub node_ij: Vec<[i64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    /// Node lies on the boundary of the triangulated region.
    pub boundary: Vec<bool>,
    pub node_triangles: Vec<Vec<usize>>,
    index: HashMap<[i64; 2], usize>,
}

impl Mesh {
    /// Axis-aligned mesh with spacing `h`.
    pub fn new(domain: &[Point], h: f64) -> Result<Mesh> {
        Mesh::with_basis(domain, [[h, 0.0], [0.0, h]])
    }

    pub fn with_basis(domain: &[Point], basis: [Point; 2]) -> Result<Mesh> {
        let [e1, e2] = basis;
        let det = e1[0] * e2[1] - e1[1] * e2[0];
        if domain.len() < 3 || !(det.abs() > 0.0) || !det.is_finite() {
            return Err(DimerError::InvalidDomain("mesh needs a polygon and an independent basis".into()));
        }
        let to_lattice = |p: Point| [(p[0] * e2[1] - p[1] * e2[0]) / det, (e1[0] * p[1] - e1[1] * p[0]) / det];
        let to_plane = move |i: f64, j: f64| [i * e1[0] + j * e2[0], i * e1[1] + j * e2[1]];
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        let (mut plo, mut phi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for &p in domain {
            let q = to_lattice(p);
            for k in 0..2 {
                lo[k] = lo[k].min(q[k]);
                hi[k] = hi[k].max(q[k]);
                plo[k] = plo[k].min(p[k]);
                phi[k] = phi[k].max(p[k]);
            }
        }
        let eps = 1e-9 * (phi[0] - plo[0]).max(phi[1] - plo[1]);
        let i0 = [lo[0].floor() as i64 - 1, lo[1].floor() as i64 - 1];
        let i1 = [hi[0].ceil() as i64 + 1, hi[1].ceil() as i64 + 1];
        let node = |ij: [i64; 2]| to_plane(ij[0] as f64, ij[1] as f64);
        let inside = |ij: [i64; 2]| point_in_polygon(node(ij), domain, eps);
        let mut tris_ij = Vec::new();
        for j in i0[1]..i1[1] {
            for i in i0[0]..i1[0] {
                let a = [i, j];
                let b = [i + 1, j];
                let c = [i + 1, j + 1];
                let d = [i, j + 1];
                let (xc, yc) = (i as f64 + 0.5, j as f64 + 0.5);
                let pair = if xc * yc > 0.0 { [[a, b, d], [b, c, d]] } else { [[a, b, c], [a, c, d]] };
                for t in pair {
                    if !t.iter().all(|&p| inside(p)) {
                        continue;
                    }
                    let cx = (t[0][0] + t[1][0] + t[2][0]) as f64 / 3.0;
                    let cy = (t[0][1] + t[1][1] + t[2][1]) as f64 / 3.0;
                    if point_in_polygon(to_plane(cx, cy), domain, eps) {
                        tris_ij.push(t);
                    }
                }
            }
        }
        if tris_ij.is_empty() {
            return Err(DimerError::InvalidDomain("mesh spacing too coarse for the domain".into()));
        }
        let mut index = HashMap::new();
        let mut nodes = Vec::new();
        let mut node_ij = Vec::new();
        let mut triangles = Vec::with_capacity(tris_ij.len());
        for t in &tris_ij {
            let mut tri = [0; 3];
            for (k, &p) in t.iter().enumerate() {
                tri[k] = *index.entry(p).or_insert_with(|| {
                    nodes.push(node(p));
                    node_ij.push(p);
                    nodes.len() - 1
                });
            }
            triangles.push(tri);
        }
        let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
        let mut node_triangles = vec![Vec::new(); nodes.len()];
        for (ti, t) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (u, v) = (t[k], t[(k + 1) % 3]);
                *edge_count.entry((u.min(v), u.max(v))).or_insert(0) += 1;
                node_triangles[t[k]].push(ti);
            }
        }
        let mut boundary = vec![false; nodes.len()];
        for ((u, v), c) in edge_count {
            if c == 1 {
                boundary[u] = true;
                boundary[v] = true;
            }
        }
        let diag = [e1[0] + e2[0], e1[1] + e2[1]];
        let anti = [e1[0] - e2[0], e1[1] - e2[1]];
        let h = [e1, e2, diag, anti].iter().map(|v| v[0].hypot(v[1])).fold(0.0, f64::max);
        Ok(Mesh { domain: domain.to_vec(), h, basis, nodes, node_ij, triangles, boundary, node_triangles, index })
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_at(&self, ij: [i64; 2]) -> Option<usize> {
        self.index.get(&ij).copied()
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&v| !self.boundary[v])
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|v| self.nodes[v]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])).abs()
    }

    /// Gradient of the linear interpolant of `values` on triangle `t`.
    pub fn gradient(&self, t: usize, values: &[f64]) -> Point {
        let [i, j, k] = self.triangles[t];
        self.local_gradient(t, [values[i], values[j], values[k]])
    }

    /// Gradient on triangle `t` of the linear function with the given
    /// values at its three corners.
    pub fn local_gradient(&self, t: usize, v: [f64; 3]) -> Point {
        let [i, j, k] = self.triangles[t];
        let (a, b, c) = (self.nodes[i], self.nodes[j], self.nodes[k]);
        let (e1, e2) = ([b[0] - a[0], b[1] - a[1]], [c[0] - a[0], c[1] - a[1]]);
        let (d1, d2) = (v[1] - v[0], v[2] - v[0]);
        let det = e1[0] * e2[1] - e1[1] * e2[0];
        [(d1 * e2[1] - d2 * e1[1]) / det, (d2 * e1[0] - d1 * e2[0]) / det]
    }

    /// Triangle containing `p` and its barycentric coordinates.
    pub fn locate(&self, p: Point) -> Option<(usize, [f64; 3])> {
        let [e1, e2] = self.basis;
        let det = e1[0] * e2[1] - e1[1] * e2[0];
        let gi = ((p[0] * e2[1] - p[1] * e2[0]) / det).floor() as i64;
        let gj = ((e1[0] * p[1] - e1[1] * p[0]) / det).floor() as i64;
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for dj in -1..=1 {
            for di in -1..=1 {
                let Some(v) = self.node_at([gi + di, gj + dj]) else { continue };
                for &t in &self.node_triangles[v] {
                    let bc = self.barycentric(t, p);
                    let worst = bc.iter().copied().fold(f64::INFINITY, f64::min);
                    if best.as_ref().is_none_or(|b| worst > b.2) {
                        best = Some((t, bc, worst));
                    }
                }
            }
        }
        best.filter(|b| b.2 >= -1e-9).map(|b| (b.0, b.1))
    }

    fn barycentric(&self, t: usize, p: Point) -> [f64; 3] {
        let [a, b, c] = self.triangles[t].map(|v| self.nodes[v]);
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
        let l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (p[1] - a[1]) * (c[0] - a[0])) / det;
        let l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])) / det;
        [1.0 - l1 - l2, l1, l2]
    }
}

/// Piecewise-linear field on a mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct AsymptoticHeightField {
    pub mesh: Mesh,
    pub values: Vec<f64>,
}

/// Per-triangle gradients that leave the Newton polygon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientReport {
    pub triangles: usize,
    pub outside: Vec<usize>,
}

impl AsymptoticHeightField {
    pub fn from_fn(mesh: Mesh, f: impl Fn(Point) -> f64) -> AsymptoticHeightField {
        let values = mesh.nodes.iter().map(|&p| f(p)).collect();
        AsymptoticHeightField { mesh, values }
    }

    pub fn gradient(&self, t: usize) -> Point {
        self.mesh.gradient(t, &self.values)
    }

    pub fn eval(&self, p: Point) -> Option<f64> {
        let (t, bc) = self.mesh.locate(p)?;
        let tri = self.mesh.triangles[t];
        Some((0..3).map(|k| bc[k] * self.values[tri[k]]).sum())
    }

    /// Triangles whose gradient is outside `np` by more than `tol`.
    pub fn gradient_report(&self, np: &NewtonPolygon, tol: f64) -> GradientReport {
        let outside = (0..self.mesh.triangles.len()).filter(|&t| !np.contains(self.gradient(t), tol)).collect();
        GradientReport { triangles: self.mesh.triangles.len(), outside }
    }

    /// Largest node-wise difference to another field on the same mesh.
    pub fn sup_distance(&self, other: &AsymptoticHeightField) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// CSV grid `x,y,value` preceded by a header row recording the mesh size.
    pub fn to_csv(&self) -> String {
        let mut s = format!("# mesh_size={}\nx,y,value\n", float(self.mesh.h));
        for (p, v) in self.mesh.nodes.iter().zip(&self.values) {
            s.push_str(&format!("{},{},{}\n", float(p[0]), float(p[1]), float(*v)));
        }
        s
    }
}
