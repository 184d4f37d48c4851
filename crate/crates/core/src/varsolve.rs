//! Maximization of `ℱ(h) = ∬ σ(∇h)` over piecewise-linear height fields
//! with gradients in the Newton polygon and prescribed boundary values.
//!
//! The solver is cyclic coordinate ascent on nodal values: each interior
//! node moves within the interval that keeps the gradients of its
//! triangles in `N`, to the maximizer of the (concave) local objective
//! found by golden-section search. Coarser lattices provide the starting
//! point for finer ones.

use serde::{Deserialize, Serialize};

use crate::calculus::{extendable, max_extension, min_extension, ContinuumBoundary};
use crate::covers::NewtonPolygon;
use crate::error::{DimerError, Result};
use crate::geometry::{distance_to_polygon_boundary, Point};
use crate::kasteleyn::SurfaceTensionTable;
use crate::mesh::{AsymptoticHeightField, Mesh};

const FEASIBILITY_TOL: f64 = 1e-9;
const MAX_SWEEPS: usize = 20_000;

#[derive(Clone, Debug)]
pub struct VariationalProblem {
    pub mesh: Mesh,
    pub boundary: ContinuumBoundary,
    pub table: SurfaceTensionTable,
    pub polygon: NewtonPolygon,
}

impl VariationalProblem {
    pub fn new(mesh: Mesh, boundary: ContinuumBoundary, table: SurfaceTensionTable, polygon: NewtonPolygon) -> Result<VariationalProblem> {
        if let Some(v) = extendable(&polygon, &boundary, 64, FEASIBILITY_TOL) {
            let s = boundary.samples(64);
            let idx = |p: Point| s.iter().position(|q| q.0 == p).unwrap_or(0);
            return Err(DimerError::NotExtendable { x: idx(v.x), y: idx(v.y) });
        }
        Ok(VariationalProblem { mesh, boundary, table, polygon })
    }
}

/// A mesh whose edges run along the normals of a parallelogram `N`, when
/// the domain corners sit on that lattice; then a triangle gradient lies
/// in `N` exactly when the nodal differences along the two lattice
/// directions are bounded. Falls back to an axis-aligned mesh.
pub fn aligned_mesh(domain: &[Point], np: &NewtonPolygon, divisions: usize) -> Result<Mesh> {
    let d = divisions.max(1) as f64;
    if np.hull.len() == 4 {
        let h = np.hull_f64();
        let e = |i: usize| [h[(i + 1) % 4][0] - h[i][0], h[(i + 1) % 4][1] - h[i][1]];
        let parallelogram = (e(0)[0] + e(2)[0]).abs() < 1e-12 && (e(0)[1] + e(2)[1]).abs() < 1e-12;
        if parallelogram {
            // normals of the two edge directions, scaled to the lattice step
            let n1 = [-e(0)[1], e(0)[0]];
            let n2 = [-e(1)[1], e(1)[0]];
            let s = 1.0 / (2.0 * d);
            let basis = [[n1[0] * s, n1[1] * s], [n2[0] * s, n2[1] * s]];
            let bdet = basis[0][0] * basis[1][1] - basis[0][1] * basis[1][0];
            let on_lattice = domain.iter().all(|p| {
                let a = (p[0] * basis[1][1] - p[1] * basis[1][0]) / bdet;
                let b = (basis[0][0] * p[1] - basis[0][1] * p[0]) / bdet;
                (a - a.round()).abs() < 1e-9 && (b - b.round()).abs() < 1e-9
            });
            if on_lattice {
                return Mesh::with_basis(domain, basis);
            }
        }
    }
    Mesh::new(domain, 1.0 / d)
}

/// `Σ area(t) σ(∇h|_t)`; fails with `InfeasibleField` when a gradient
/// leaves `N` by more than 1e-9.
pub fn functional_value(field: &AsymptoticHeightField, table: &SurfaceTensionTable, np: &NewtonPolygon) -> Result<f64> {
    let mut total = 0.0;
    for t in 0..field.mesh.triangles.len() {
        let g = field.gradient(t);
        if !np.contains(g, FEASIBILITY_TOL) {
            return Err(DimerError::InfeasibleField { triangle: t });
        }
        let s = sigma_at(table, np, g).ok_or(DimerError::InfeasibleField { triangle: t })?;
        total += field.mesh.triangle_area(t) * s;
    }
    Ok(total)
}

/// Table value, nudging points that are outside by rounding only.
fn sigma_at(table: &SurfaceTensionTable, np: &NewtonPolygon, g: Point) -> Option<f64> {
    table.interpolate(g).or_else(|| {
        let c = np.centroid();
        let p = [g[0] + 1e-9 * (c[0] - g[0]), g[1] + 1e-9 * (c[1] - g[1])];
        table.interpolate(p)
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub value: f64,
    pub sweeps: usize,
    /// Largest single-node improvement in the last sweep.
    pub max_improvement: f64,
    /// Objective after each sweep on the finest lattice.
    pub history: Vec<f64>,
    pub levels: usize,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub field: AsymptoticHeightField,
    pub stats: SolveStats,
}

/// Per-node data: triangles around the node with the hat-function gradient
/// and area.
struct Star {
    tris: Vec<(usize, Point, f64)>,
}

struct Level<'a> {
    mesh: &'a Mesh,
    stars: Vec<Star>,
    interior: Vec<usize>,
}

impl<'a> Level<'a> {
    fn new(mesh: &'a Mesh) -> Level<'a> {
        let mut stars: Vec<Star> = (0..mesh.num_nodes()).map(|_| Star { tris: Vec::new() }).collect();
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let area = mesh.triangle_area(t);
            for k in 0..3 {
                let mut hat = [0.0; 3];
                hat[k] = 1.0;
                stars[tri[k]].tris.push((t, mesh.local_gradient(t, hat), area));
            }
        }
        Level { mesh, stars, interior: mesh.interior_nodes().collect() }
    }

    /// Feasible interval of node `v` with the other values fixed.
    fn interval(&self, v: usize, u: &[f64], planes: &[(Point, f64)]) -> (f64, f64) {
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for &(t, c, _) in &self.stars[v].tris {
            let g = self.mesh.gradient(t, u);
            let g0 = [g[0] - u[v] * c[0], g[1] - u[v] * c[1]];
            for &(n, b) in planes {
                let a = n[0] * c[0] + n[1] * c[1];
                let r = b - n[0] * g0[0] - n[1] * g0[1];
                if a > 1e-300 {
                    hi = hi.min(r / a);
                } else if a < -1e-300 {
                    lo = lo.max(r / a);
                }
            }
        }
        (lo, hi)
    }

    fn local(&self, v: usize, u: &mut [f64], x: f64, table: &SurfaceTensionTable, np: &NewtonPolygon) -> f64 {
        let old = u[v];
        u[v] = x;
        let mut s = 0.0;
        for &(t, _, area) in &self.stars[v].tris {
            s += area * sigma_at(table, np, self.mesh.gradient(t, u)).unwrap_or(f64::NEG_INFINITY);
        }
        u[v] = old;
        s
    }
}

fn golden_max(lo: f64, hi: f64, f: &mut dyn FnMut(f64) -> f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    let tol = 1e-12 + 1e-10 * (hi - lo);
    while b - a > tol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Keeps each node in its feasible interval; returns the number of nodes
/// whose interval is empty.
fn repair(level: &Level, u: &mut [f64], planes: &[(Point, f64)]) -> usize {
    let mut empty = 0;
    for _ in 0..50 {
        empty = 0;
        let mut moved = false;
        for &v in &level.interior {
            let (lo, hi) = level.interval(v, u, planes);
            if lo > hi + FEASIBILITY_TOL {
                empty += 1;
                continue;
            }
            let x = u[v].clamp(lo, hi.max(lo));
            if x != u[v] {
                u[v] = x;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    empty
}

fn coarse_meshes(mesh: &Mesh) -> Vec<Mesh> {
    let mut out = Vec::new();
    let mut basis = mesh.basis;
    loop {
        basis = [[2.0 * basis[0][0], 2.0 * basis[0][1]], [2.0 * basis[1][0], 2.0 * basis[1][1]]];
        let bdet = basis[0][0] * basis[1][1] - basis[0][1] * basis[1][0];
        let on_lattice = mesh.domain.iter().all(|p| {
            let a = (p[0] * basis[1][1] - p[1] * basis[1][0]) / bdet;
            let b = (basis[0][0] * p[1] - basis[0][1] * p[0]) / bdet;
            (a - a.round()).abs() < 1e-9 && (b - b.round()).abs() < 1e-9
        });
        let Ok(m) = Mesh::with_basis(&mesh.domain, basis) else { break };
        if !on_lattice || m.interior_nodes().count() < 4 {
            break;
        }
        out.push(m);
    }
    out.reverse();
    out
}

/// Coordinate ascent on one lattice. Returns the statistics; `u` is
/// updated in place and never decreases the objective.
fn ascend(level: &Level, u: &mut [f64], p: &VariationalProblem, tol: f64, record: bool) -> Result<SolveStats> {
    let planes = p.polygon.half_planes();
    let field = |u: &[f64]| AsymptoticHeightField { mesh: level.mesh.clone(), values: u.to_vec() };
    let mut value = functional_value(&field(u), &p.table, &p.polygon)?;
    let mut history = Vec::new();
    let mut calm = 0;
    let mut max_improvement = f64::INFINITY;
    for sweep in 1..=MAX_SWEEPS {
        max_improvement = 0.0;
        let mut gained = 0.0;
        for &v in &level.interior {
            let (lo, hi) = level.interval(v, u, &planes);
            if !(lo <= hi) {
                continue;
            }
            let before = level.local(v, u, u[v], &p.table, &p.polygon);
            let (x, fx) = golden_max(lo, hi, &mut |x| level.local(v, u, x, &p.table, &p.polygon));
            if fx > before {
                u[v] = x;
                max_improvement = f64::max(max_improvement, fx - before);
                gained += fx - before;
            }
        }
        let prev = value;
        value += gained;
        if record {
            history.push(value);
        }
        let rel = (value - prev).abs() / prev.abs().max(1e-300);
        calm = if rel < tol { calm + 1 } else { 0 };
        if calm >= 3 && max_improvement < tol {
            let value = functional_value(&field(u), &p.table, &p.polygon)?;
            return Ok(SolveStats { value, sweeps: sweep, max_improvement, history, levels: 1 });
        }
    }
    Err(DimerError::NonConvergence { iterations: MAX_SWEEPS, residual: max_improvement })
}

/// Maximizer of `ℱ` on the problem mesh, started from `½(h_min + h_max)` on
/// the coarsest compatible lattice and refined level by level.
pub fn solve(p: &VariationalProblem, tol: f64) -> Result<Solution> {
    let mut meshes = coarse_meshes(&p.mesh);
    meshes.push(p.mesh.clone());
    let planes = p.polygon.half_planes();
    let mut prev: Option<AsymptoticHeightField> = None;
    let mut total_sweeps = 0;
    let levels = meshes.len();
    for (li, mesh) in meshes.iter().enumerate() {
        let level = Level::new(mesh);
        let mut u: Vec<f64> = match &prev {
            None => {
                let hi = max_extension(&p.polygon, mesh, &p.boundary)?;
                let lo = min_extension(&p.polygon, mesh, &p.boundary)?;
                hi.values.iter().zip(&lo.values).map(|(a, b)| 0.5 * (a + b)).collect()
            }
            Some(c) => mesh.nodes.iter().map(|&x| c.eval(x).unwrap_or_else(|| p.boundary.eval(x))).collect(),
        };
        for v in 0..mesh.num_nodes() {
            if mesh.boundary[v] {
                u[v] = p.boundary.eval(mesh.nodes[v]);
            }
        }
        repair(&level, &mut u, &planes);
        let fine = li + 1 == levels;
        let mut stats = ascend(&level, &mut u, p, tol, fine)?;
        total_sweeps += stats.sweeps;
        let field = AsymptoticHeightField { mesh: mesh.clone(), values: u };
        if fine {
            stats.sweeps = total_sweeps;
            stats.levels = levels;
            return Ok(Solution { field, stats });
        }
        prev = Some(field);
    }
    unreachable!("the problem mesh is always the last level")
}

/// Differences `g(x) − η(x)` at sample points at least `margin` from the
/// domain boundary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub sup: f64,
    pub points: Vec<(Point, f64)>,
}

pub fn compare_with_sampler(g: &AsymptoticHeightField, samples: &[(Point, f64)], margin: f64) -> Result<Comparison> {
    let mut points = Vec::new();
    let mut sup: f64 = 0.0;
    for &(x, eta) in samples {
        if distance_to_polygon_boundary(x, &g.mesh.domain) < margin {
            continue;
        }
        let v = g.eval(x).ok_or_else(|| DimerError::GridMismatch(format!("point ({}, {}) is off the mesh", x[0], x[1])))?;
        sup = sup.max((v - eta).abs());
        points.push((x, v - eta));
    }
    if points.is_empty() {
        return Err(DimerError::GridMismatch("no sample points inside the margin".into()));
    }
    Ok(Comparison { sup, points })
}

/// Boundary values of the Aztec diamond `|x| + |y| ≤ 1` on the uniform
/// square lattice (`square4` preset) with every boundary vertex unmatched,
/// normalized by the scale: linear along each side, `|y| − 1` at corners.
pub fn aztec_boundary() -> ContinuumBoundary {
    ContinuumBoundary::from_fn(crate::lattice::presets::diamond_region(), |p| p[1].abs() - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covers::{for_each_cover, height_function, newton_polygon, reference_cover, DimerCover};
    use crate::kasteleyn::{characteristic_polynomial, tabulate_sigma};
    use crate::lattice::{planar_patch, presets};

    fn square_setup() -> (NewtonPolygon, SurfaceTensionTable) {
        let fd = presets::square4();
        let np = newton_polygon(&fd).unwrap();
        let table = tabulate_sigma(&characteristic_polynomial(&fd).unwrap(), 8).unwrap();
        (np, table)
    }

    #[test]
    fn linear_field_integrates_to_sigma_times_area() {
        let (np, table) = square_setup();
        let mesh = Mesh::new(&presets::unit_square_region(), 0.25).unwrap();
        let (s, t) = (0.2, -0.1);
        let f = AsymptoticHeightField::from_fn(mesh, |p| s * p[0] + t * p[1]);
        let v = functional_value(&f, &table, &np).unwrap();
        assert!((v - table.interpolate([s, t]).unwrap()).abs() < 1e-12);
        let corner = AsymptoticHeightField::from_fn(f.mesh.clone(), |p| p[0]);
        assert!(functional_value(&corner, &table, &np).unwrap().abs() < 1e-12);
        let steep = AsymptoticHeightField::from_fn(f.mesh.clone(), |p| 2.0 * p[0]);
        assert!(matches!(functional_value(&steep, &table, &np), Err(DimerError::InfeasibleField { .. })));
    }

    #[test]
    fn aligned_mesh_for_square_lattice_is_rotated() {
        let (np, _) = square_setup();
        let m = aligned_mesh(&presets::diamond_region(), &np, 4).unwrap();
        assert!((m.basis[0][0].abs() - m.basis[0][1].abs()).abs() < 1e-12);
        assert_eq!(m.num_nodes(), 9 * 9);
    }

    #[test]
    fn linear_boundary_gives_linear_solution() {
        let (np, table) = square_setup();
        let mesh = aligned_mesh(&presets::diamond_region(), &np, 4).unwrap();
        let lin = |p: Point| 0.25 * p[0] + 0.1 * p[1];
        let chi = ContinuumBoundary::from_fn(presets::diamond_region(), lin);
        let prob = VariationalProblem::new(mesh, chi, table.clone(), np.clone()).unwrap();
        let sol = solve(&prob, 1e-10).unwrap();
        let expect = 2.0 * table.interpolate([0.25, 0.1]).unwrap();
        assert!((sol.stats.value - expect).abs() < 1e-4, "{} vs {expect}", sol.stats.value);
        assert!(sol.stats.history.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    }

    #[test]
    fn aztec_solution_is_a_local_maximum() {
        let (np, table) = square_setup();
        let mesh = aligned_mesh(&presets::diamond_region(), &np, 4).unwrap();
        let prob = VariationalProblem::new(mesh, aztec_boundary(), table.clone(), np.clone()).unwrap();
        let sol = solve(&prob, 1e-10).unwrap();
        assert!(sol.field.gradient_report(&np, 1e-9).outside.is_empty());
        let lo = min_extension(&np, &prob.mesh, &prob.boundary).unwrap();
        let hi = max_extension(&np, &prob.mesh, &prob.boundary).unwrap();
        for v in 0..prob.mesh.num_nodes() {
            assert!(lo.values[v] - 1e-9 <= sol.field.values[v] && sol.field.values[v] <= hi.values[v] + 1e-9);
        }
        // random feasible perturbations never do better
        let mut state = 12345u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let level = Level::new(&prob.mesh);
        let planes = np.half_planes();
        for _ in 0..100 {
            let mut u = sol.field.values.clone();
            let v = level.interior[(next() * level.interior.len() as f64) as usize % level.interior.len()];
            let (a, b) = level.interval(v, &u, &planes);
            u[v] = a + next() * (b - a);
            let f = AsymptoticHeightField { mesh: prob.mesh.clone(), values: u };
            assert!(functional_value(&f, &table, &np).unwrap() <= sol.stats.value + 1e-9);
        }
    }

    #[test]
    fn aztec_boundary_matches_discrete_heights() {
        let m = 8usize;
        let g = planar_patch(&presets::square4(), m, &presets::diamond_region()).unwrap();
        let states: Vec<Option<bool>> = (0..g.num_edges()).map(|e| g.is_boundary_edge(e).then_some(false)).collect();
        let mut first = None;
        for_each_cover(&g, Some(&states), |c| {
            first = Some(DimerCover::new(c.to_vec()));
            false
        });
        let d = first.unwrap();
        let h = height_function(&g, &d, &reference_cover(&g).unwrap()).unwrap();
        let chi = aztec_boundary();
        let diffs: Vec<f64> =
            g.boundary_faces().iter().map(|&f| h.values[f] as f64 / m as f64 - chi.eval(g.faces[f].centroid)).collect();
        let lo = diffs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = diffs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!(hi - lo <= 2.0 / m as f64, "spread {}", hi - lo);
    }

    #[test]
    fn comparison_reports_grid_mismatch() {
        let mesh = Mesh::new(&presets::unit_square_region(), 0.25).unwrap();
        let f = AsymptoticHeightField::from_fn(mesh, |_| 0.0);
        assert!(compare_with_sampler(&f, &[([0.5, 0.5], 0.1)], 0.1).unwrap().sup > 0.09);
        assert!(matches!(compare_with_sampler(&f, &[([0.02, 0.5], 0.0)], 0.1), Err(DimerError::GridMismatch(_))));
    }
}
