//! Lipschitz calculus for height functions: the support function of the
//! Newton polygon, extremal extensions of boundary data in the continuum and
//! on graphs, and the passage between asymptotic and discrete heights.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::covers::{cover_from_height, reference_cover, DimerCover, HeightFunction, NewtonPolygon};
use crate::error::{DimerError, Result};
use crate::geometry::{dist, sample_boundary, sub, Point};
use crate::gibbs::BoundaryCondition;
use crate::lattice::{planar_patch, FundamentalDomain, Graph};
use crate::mesh::{AsymptoticHeightField, Mesh};

/// `θ(x) = max_{p ∈ N} ⟨p, x⟩`. An asymptotic height `h` with gradients in
/// `N` satisfies `h(x) − h(y) ≤ θ(x − y)` on convex domains.
pub fn support_function(np: &NewtonPolygon, x: Point) -> f64 {
    np.support(x)
}

/// Boundary data on a polygon, linear along each side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuumBoundary {
    pub domain: Vec<Point>,
    /// Value at each polygon vertex.
    pub vertex_values: Vec<f64>,
}

impl ContinuumBoundary {
    pub fn new(domain: Vec<Point>, vertex_values: Vec<f64>) -> Result<ContinuumBoundary> {
        if domain.len() < 3 || domain.len() != vertex_values.len() {
            return Err(DimerError::MalformedInput("need one value per polygon vertex".into()));
        }
        Ok(ContinuumBoundary { domain, vertex_values })
    }

    /// Restriction of a function to the polygon vertices.
    pub fn from_fn(domain: Vec<Point>, f: impl Fn(Point) -> f64) -> ContinuumBoundary {
        let vertex_values = domain.iter().map(|&p| f(p)).collect();
        ContinuumBoundary { domain, vertex_values }
    }

    /// Value at a point of the boundary (nearest side).
    pub fn eval(&self, p: Point) -> f64 {
        let k = self.domain.len();
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..k {
            let (a, b) = (self.domain[i], self.domain[(i + 1) % k]);
            let ab = sub(b, a);
            let len2 = ab[0] * ab[0] + ab[1] * ab[1];
            let u = (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2).clamp(0.0, 1.0);
            let q = [a[0] + u * ab[0], a[1] + u * ab[1]];
            let d = dist(p, q);
            if d < best.0 {
                best = (d, (1.0 - u) * self.vertex_values[i] + u * self.vertex_values[(i + 1) % k]);
            }
        }
        best.1
    }

    pub fn samples(&self, per_side: usize) -> Vec<(Point, f64)> {
        sample_boundary(&self.domain, per_side).into_iter().map(|p| (p, self.eval(p))).collect()
    }
}

/// A pair of boundary samples violating `χ(x) − χ(y) ≤ θ(x − y)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzViolation {
    pub x: Point,
    pub y: Point,
    pub excess: f64,
}

/// Checks the Lipschitz criterion on boundary samples; `None` means the
/// data extends to a function with gradients in `N`.
pub fn extendable(np: &NewtonPolygon, chi: &ContinuumBoundary, per_side: usize, tol: f64) -> Option<LipschitzViolation> {
    let s = chi.samples(per_side);
    let mut worst: Option<LipschitzViolation> = None;
    for &(x, cx) in &s {
        for &(y, cy) in &s {
            let excess = cx - cy - np.support(sub(x, y));
            if excess > tol && worst.is_none_or(|w| excess > w.excess) {
                worst = Some(LipschitzViolation { x, y, excess });
            }
        }
    }
    worst
}

fn check(np: &NewtonPolygon, chi: &ContinuumBoundary) -> Result<()> {
    let per_side = 64;
    if let Some(v) = extendable(np, chi, per_side, 1e-9) {
        let s = chi.samples(per_side);
        let idx = |p: Point| s.iter().position(|q| q.0 == p).unwrap_or(0);
        return Err(DimerError::NotExtendable { x: idx(v.x), y: idx(v.y) });
    }
    Ok(())
}

/// Boundary samples refined until the extension moves by less than 1e-6.
fn extension(mesh: &Mesh, chi: &ContinuumBoundary, f: impl Fn(Point, &[(Point, f64)]) -> f64) -> Vec<f64> {
    let mut per_side = 8;
    let mut prev: Option<Vec<f64>> = None;
    loop {
        let s = chi.samples(per_side);
        let vals: Vec<f64> = mesh.nodes.iter().map(|&x| f(x, &s)).collect();
        if let Some(p) = &prev {
            let change = p.iter().zip(&vals).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if change < 1e-6 || per_side >= 4096 {
                return vals;
            }
        }
        prev = Some(vals);
        per_side *= 2;
    }
}

/// `h_max(x) = min_y χ(y) + θ(x − y)`, the largest extension.
pub fn max_extension(np: &NewtonPolygon, mesh: &Mesh, chi: &ContinuumBoundary) -> Result<AsymptoticHeightField> {
    check(np, chi)?;
    let values = extension(mesh, chi, |x, s| {
        s.iter().map(|&(y, c)| c + np.support(sub(x, y))).fold(f64::INFINITY, f64::min)
    });
    Ok(AsymptoticHeightField { mesh: mesh.clone(), values })
}

/// `h_min(x) = max_y χ(y) − θ(y − x)`, the smallest extension.
pub fn min_extension(np: &NewtonPolygon, mesh: &Mesh, chi: &ContinuumBoundary) -> Result<AsymptoticHeightField> {
    check(np, chi)?;
    let values = extension(mesh, chi, |x, s| {
        s.iter().map(|&(y, c)| c - np.support(sub(y, x))).fold(f64::NEG_INFINITY, f64::max)
    });
    Ok(AsymptoticHeightField { mesh: mesh.clone(), values })
}

/// Arcs of the height constraint digraph: crossing edge `e` from its right
/// face to its left face raises the height by at most `1 − [e ∈ r]`, and
/// crossing back by at most `[e ∈ r]`.
fn constraint_arcs(g: &Graph, r: &DimerCover) -> Vec<Vec<(usize, i64)>> {
    let rm = r.mask(g.num_edges());
    let mut adj = vec![Vec::new(); g.num_faces()];
    for e in 0..g.num_edges() {
        let (l, rt) = (g.left[e], g.right[e]);
        if l == rt {
            continue;
        }
        let re = i64::from(rm[e]);
        adj[rt].push((l, 1 - re));
        adj[l].push((rt, re));
    }
    adj
}

fn reversed(adj: &[Vec<(usize, i64)>]) -> Vec<Vec<(usize, i64)>> {
    let mut rev = vec![Vec::new(); adj.len()];
    for (u, out) in adj.iter().enumerate() {
        for &(v, w) in out {
            rev[v].push((u, w));
        }
    }
    rev
}

/// Multi-source shortest paths with initial offsets; unreachable faces
/// stay at `i64::MAX`.
fn shortest_paths(adj: &[Vec<(usize, i64)>], sources: &[(usize, i64)]) -> Vec<i64> {
    let mut d = vec![i64::MAX; adj.len()];
    let mut heap = BinaryHeap::new();
    for &(s, v) in sources {
        if v < d[s] {
            d[s] = v;
            heap.push(Reverse((v, s)));
        }
    }
    while let Some(Reverse((du, u))) = heap.pop() {
        if du > d[u] {
            continue;
        }
        for &(v, w) in &adj[u] {
            if du + w < d[v] {
                d[v] = du + w;
                heap.push(Reverse((du + w, v)));
            }
        }
    }
    d
}

/// `θ̂(x, y)` for every face `x`: the largest value of `h(x) − h(y)` over
/// height functions of covers of the planar graph `g` (heights relative to
/// the reference cover).
pub fn support_distances(g: &Graph, y: usize) -> Result<Vec<i64>> {
    if g.is_torus() {
        return Err(DimerError::InvalidGraph("support heights are defined on planar graphs".into()));
    }
    let r = reference_cover(g)?;
    Ok(shortest_paths(&constraint_arcs(g, &r), &[(y, 0)]))
}

pub fn support_height_function(g: &Graph, x: usize, y: usize) -> Result<i64> {
    Ok(support_distances(g, y)?[x])
}

/// Largest and smallest height functions with boundary values `chi`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphExtensions {
    pub max: HeightFunction,
    pub min: HeightFunction,
}

/// `h_max(x) = min_y χ(y) + θ̂(x, y)` and `h_min(x) = max_y χ(y) − θ̂(y, x)`
/// over boundary faces `y`; fails with `NotExtendable` when some pair of
/// boundary faces has `χ(x) − χ(y) > θ̂(x, y)`.
pub fn graph_extensions(g: &Graph, chi: &BoundaryCondition) -> Result<GraphExtensions> {
    if g.is_torus() {
        return Err(DimerError::InvalidGraph("extensions are defined on planar graphs".into()));
    }
    let r = reference_cover(g)?;
    let adj = constraint_arcs(g, &r);
    let rev = reversed(&adj);
    let faces: Vec<(usize, i64)> = chi.values.iter().map(|(&f, &v)| (f, v)).collect();
    for &(y, cy) in &faces {
        let d = shortest_paths(&adj, &[(y, 0)]);
        for &(x, cx) in &faces {
            if d[x] == i64::MAX || cx - cy > d[x] {
                return Err(DimerError::NotExtendable { x, y });
            }
        }
    }
    let hmax = shortest_paths(&adj, &faces);
    let neg: Vec<(usize, i64)> = faces.iter().map(|&(f, v)| (f, -v)).collect();
    let hmin: Vec<i64> = shortest_paths(&rev, &neg).into_iter().map(|v| -v).collect();
    if hmax.contains(&i64::MAX) {
        return Err(DimerError::InvalidGraph("some faces are not constrained by the boundary".into()));
    }
    let wrap = |values: Vec<i64>| HeightFunction { values, f0: g.f0, monodromy: None };
    Ok(GraphExtensions { max: wrap(hmax), min: wrap(hmin) })
}

/// `θ̂(x, y) / n` on a patch of `G / n` covering both points, with `x` and
/// `y` located at the nearest internal faces.
pub fn normalized_support(fd: &FundamentalDomain, n: usize, x: Point, y: Point) -> Result<f64> {
    let margin = 0.5 + 2.0 * fd.diameter() / n as f64;
    let (lo, hi) = ([x[0].min(y[0]) - margin, x[1].min(y[1]) - margin], [x[0].max(y[0]) + margin, x[1].max(y[1]) + margin]);
    let region = vec![lo, [hi[0], lo[1]], hi, [lo[0], hi[1]]];
    let g = planar_patch(fd, n, &region)?;
    let (fx, fy) = (nearest_face(&g, x), nearest_face(&g, y));
    Ok(support_height_function(&g, fx, fy)? as f64 / n as f64)
}

/// The internal face whose centroid is closest to `p`.
pub fn nearest_face(g: &Graph, p: Point) -> usize {
    (0..g.num_faces())
        .filter(|&f| !g.faces[f].boundary)
        .min_by(|&a, &b| dist(g.faces[a].centroid, p).total_cmp(&dist(g.faces[b].centroid, p)))
        .unwrap_or(g.f0)
}

/// Boundary values obtained by sampling `n · h` at boundary face centroids
/// and propagating them through the height constraints, so they are always
/// extendable.
pub fn boundary_from_field(g: &Graph, n: f64, h: &dyn Fn(Point) -> f64) -> Result<BoundaryCondition> {
    let values = lipschitz_envelope(g, n, h)?;
    Ok(BoundaryCondition::from_height(g, &HeightFunction { values, f0: g.f0, monodromy: None }))
}

fn lipschitz_envelope(g: &Graph, n: f64, h: &dyn Fn(Point) -> f64) -> Result<Vec<i64>> {
    let r = reference_cover(g)?;
    let adj = constraint_arcs(g, &r);
    let sources: Vec<(usize, i64)> = (0..g.num_faces()).map(|f| (f, (n * h(g.faces[f].centroid)).floor() as i64)).collect();
    Ok(shortest_paths(&adj, &sources))
}

/// Discrete approximation of `n · h`: the largest function below
/// `⌊n · h⌋` at face centroids that satisfies the height constraints, then
/// clamped between the extremal extensions of `chi`. The result is the
/// height function of a cover whose boundary values are `chi` up to the
/// additive constant, which is chosen to match `n · h` on the boundary
/// (median offset).
pub fn discretize(g: &Graph, n: f64, h: &dyn Fn(Point) -> f64, chi: &BoundaryCondition) -> Result<HeightFunction> {
    let eta = lipschitz_envelope(g, n, h)?;
    let mut offsets: Vec<i64> = chi.values.iter().map(|(&f, &v)| eta[f] - v).collect();
    offsets.sort_unstable();
    let k = offsets.get(offsets.len() / 2).copied().unwrap_or(0);
    let ext = graph_extensions(g, &BoundaryCondition { values: chi.shifted(k) })?;
    let values: Vec<i64> = (0..g.num_faces()).map(|f| eta[f].clamp(ext.min.values[f], ext.max.values[f])).collect();
    cover_from_height(g, &values, &reference_cover(g)?)?;
    Ok(HeightFunction { values, f0: g.f0, monodromy: None })
}

/// Largest `|η(f) / n − h(c_f)|` over faces, with `η` shifted so that it
/// agrees with `n · h` at the reference face.
pub fn discretization_error(g: &Graph, n: f64, h: &dyn Fn(Point) -> f64, eta: &HeightFunction) -> f64 {
    (0..g.num_faces())
        .filter(|&f| !g.faces[f].boundary)
        .map(|f| (eta.values[f] as f64 / n - h(g.faces[f].centroid)).abs())
        .fold(0.0, f64::max)
}

/// Piecewise-linear interpolation of a function on an `ℓ`-mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct PlApproximation {
    pub field: AsymptoticHeightField,
    /// Triangles whose gradient leaves `N`.
    pub outside: Vec<usize>,
    /// Fraction of triangles on which the interpolant is within `ℓ·ε` of
    /// the function at the sampled points.
    pub fraction_close: f64,
}

pub fn pl_approximation(np: &NewtonPolygon, domain: &[Point], ell: f64, eps: f64, h: &dyn Fn(Point) -> f64) -> Result<PlApproximation> {
    let mesh = Mesh::new(domain, ell)?;
    let field = AsymptoticHeightField::from_fn(mesh, h);
    let outside = field.gradient_report(np, 1e-9).outside;
    let nt = field.mesh.triangles.len();
    let mut close = 0;
    for t in 0..nt {
        let tri = field.mesh.triangles[t].map(|v| field.mesh.nodes[v]);
        let vals = field.mesh.triangles[t].map(|v| field.values[v]);
        let mut worst: f64 = 0.0;
        for (a, b) in [(1.0 / 3.0, 1.0 / 3.0), (0.5, 0.25), (0.25, 0.5), (0.25, 0.25), (0.5, 0.5), (0.5, 0.0), (0.0, 0.5)] {
            let c = 1.0 - a - b;
            let p = [c * tri[0][0] + a * tri[1][0] + b * tri[2][0], c * tri[0][1] + a * tri[1][1] + b * tri[2][1]];
            let lin = c * vals[0] + a * vals[1] + b * vals[2];
            worst = worst.max((lin - h(p)).abs());
        }
        if worst <= ell * eps {
            close += 1;
        }
    }
    Ok(PlApproximation { field, outside, fraction_close: close as f64 / nt as f64 })
}

/// Continuum boundary values whose vertex values are `h` at the vertices.
pub fn boundary_of(domain: &[Point], h: &dyn Fn(Point) -> f64) -> ContinuumBoundary {
    ContinuumBoundary::from_fn(domain.to_vec(), h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covers::{enumerate_covers, height_function, newton_polygon};
    use crate::lattice::presets;

    fn square_np() -> NewtonPolygon {
        newton_polygon(&presets::square4()).unwrap()
    }

    #[test]
    fn support_of_square_lattice_is_l_infinity_dual() {
        let np = square_np();
        for x in [[0.3, -0.7], [1.0, 2.0], [-0.5, 0.1]] {
            let expect = f64::max(f64::abs(x[0]), f64::abs(x[1]));
            assert!((support_function(&np, x) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn support_height_matches_exhaustive_search() {
        let block = vec![[0.1, 0.1], [0.65, 0.1], [0.65, 0.65], [0.1, 0.65]];
        for fd in [presets::square4(), presets::hexagonal()] {
            let g = planar_patch(&fd, 2, &block).unwrap();
            let r = reference_cover(&g).unwrap();
            let covers = enumerate_covers(&g, None).unwrap();
            let hs: Vec<Vec<i64>> = covers.iter().map(|d| height_function(&g, d, &r).unwrap().values).collect();
            for y in 0..g.num_faces() {
                let d = support_distances(&g, y).unwrap();
                for x in 0..g.num_faces() {
                    let best = hs.iter().map(|h| h[x] - h[y]).max().unwrap();
                    assert_eq!(d[x], best, "faces {x}, {y}");
                }
            }
        }
    }

    #[test]
    fn extensions_are_extremal_covers() {
        let g = presets::aztec(3);
        let r = reference_cover(&g).unwrap();
        let covers = enumerate_covers(&g, None).unwrap();
        let h = height_function(&g, &covers[covers.len() / 2], &r).unwrap();
        let chi = BoundaryCondition::from_height(&g, &h);
        let ext = graph_extensions(&g, &chi).unwrap();
        let with_bc: Vec<Vec<i64>> = enumerate_covers(&g, Some(&chi))
            .unwrap()
            .iter()
            .map(|d| height_function(&g, d, &r).unwrap().values)
            .collect();
        // align the additive constant with chi
        let f = *chi.values.keys().next().unwrap();
        for f2 in 0..g.num_faces() {
            let hi = with_bc.iter().map(|v| v[f2] - v[f] + chi.values[&f]).max().unwrap();
            let lo = with_bc.iter().map(|v| v[f2] - v[f] + chi.values[&f]).min().unwrap();
            assert_eq!(ext.max.values[f2], hi);
            assert_eq!(ext.min.values[f2], lo);
        }
    }

    #[test]
    fn incompatible_boundary_is_rejected() {
        let g = planar_patch(&presets::square4(), 2, &presets::unit_square_region()).unwrap();
        let b = g.boundary_faces();
        let mut chi = BoundaryCondition { values: Default::default() };
        for (i, &f) in b.iter().enumerate() {
            chi.values.insert(f, if i == 1 { 10 } else { 0 });
        }
        assert!(matches!(graph_extensions(&g, &chi), Err(DimerError::NotExtendable { .. })));
    }

    #[test]
    fn continuum_extensions_of_linear_data_are_linear() {
        let np = square_np();
        let mesh = Mesh::new(&presets::diamond_region(), 0.125).unwrap();
        let lin = |p: Point| 0.3 * p[0] - 0.4 * p[1];
        let chi = boundary_of(&presets::diamond_region(), &lin);
        let hi = max_extension(&np, &mesh, &chi).unwrap();
        let lo = min_extension(&np, &mesh, &chi).unwrap();
        for (v, &p) in mesh.nodes.iter().enumerate() {
            assert!(hi.values[v] >= lin(p) - 1e-9 && lo.values[v] <= lin(p) + 1e-9);
            assert!(lo.values[v] <= hi.values[v] + 1e-12);
            if mesh.boundary[v] {
                assert!((hi.values[v] - lin(p)).abs() < 1e-9 && (lo.values[v] - lin(p)).abs() < 1e-9);
            }
        }
        assert!(hi.gradient_report(&np, 1e-9).outside.is_empty());
        assert!(lo.gradient_report(&np, 1e-9).outside.is_empty());
    }

    #[test]
    fn steep_continuum_data_is_not_extendable() {
        let np = square_np();
        let chi = boundary_of(&presets::unit_square_region(), &|p: Point| 2.0 * p[0]);
        assert!(extendable(&np, &chi, 16, 1e-9).is_some());
        let mesh = Mesh::new(&presets::unit_square_region(), 0.25).unwrap();
        assert!(matches!(max_extension(&np, &mesh, &chi), Err(DimerError::NotExtendable { .. })));
    }

    #[test]
    fn normalized_support_approaches_theta() {
        let fd = presets::square4();
        let np = square_np();
        let (x, y) = ([0.7, 0.4], [0.2, 0.3]);
        let theta = np.support(sub(x, y));
        let mut errs = Vec::new();
        for n in [8, 16, 32] {
            let v = normalized_support(&fd, n, x, y).unwrap();
            errs.push((v - theta).abs() * n as f64);
        }
        assert!(errs.iter().all(|&e| e < 4.0), "{errs:?}");
    }

    #[test]
    fn discretization_error_is_order_one_over_n() {
        let fd = presets::square4();
        let h = |p: Point| 0.2 * (3.0 * p[0]).sin() + 0.15 * (2.0 * p[1]).cos();
        let mut scaled = Vec::new();
        for n in [8usize, 16, 32] {
            let g = planar_patch(&fd, n, &presets::unit_square_region()).unwrap();
            let nf = n as f64;
            let chi = boundary_from_field(&g, nf, &h).unwrap();
            let eta = discretize(&g, nf, &h, &chi).unwrap();
            scaled.push(discretization_error(&g, nf, &h, &eta) * nf);
        }
        assert!(scaled.iter().all(|&c| c < 4.0), "{scaled:?}");
    }

    #[test]
    fn pl_approximation_of_smooth_feasible_function() {
        let np = square_np();
        let h = |p: Point| 0.2 * (p[0] * p[0] - p[1] * p[1]);
        let pl = pl_approximation(&np, &presets::unit_square_region(), 1.0 / 16.0, 0.1, &h).unwrap();
        assert!(pl.outside.is_empty());
        assert!(pl.fraction_close > 0.99);
    }
}
