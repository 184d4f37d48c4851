//! Surface tension tabulated on a triangular grid over the Newton polygon.
//!
//! The polygon is split into a fan of triangles from its centroid and each
//! fan triangle is subdivided `resolution` times. Values between grid points
//! are piecewise-linear over the small triangles.

use std::collections::HashMap;

use super::poly::LaurentPolynomial2;
use super::sigma::surface_tension_point;
use crate::error::{DimerError, Result};
use crate::geometry::{centroid, Point};
use crate::io::float;

#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceTensionTable {
    /// Newton polygon corners, counter-clockwise.
    pub hull: Vec<Point>,
    pub center: Point,
    pub resolution: usize,
    pub points: Vec<Point>,
    pub sigma: Vec<f64>,
    pub frozen: Vec<bool>,
    /// Per fan triangle, the point index of each `(a, b)` with `a + b ≤ res`.
    fans: Vec<Vec<usize>>,
}

/// Three collinear, equally spaced grid points where the middle value lies
/// below the chord by `excess`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConcavityViolation {
    pub points: [usize; 3],
    pub excess: f64,
}

/// Grid geometry without values.
fn build_grid(hull: &[Point], res: usize) -> (Point, Vec<Point>, Vec<Vec<usize>>) {
    let c = centroid(hull);
    let mut points = Vec::new();
    let mut index: HashMap<(i64, i64), usize> = HashMap::new();
    let mut fans = Vec::new();
    let k = hull.len();
    for f in 0..k {
        let (p, q) = (hull[f], hull[(f + 1) % k]);
        let mut slots = vec![usize::MAX; (res + 1) * (res + 2) / 2];
        for a in 0..=res {
            for b in 0..=res - a {
                let (x, y) = (a as f64 / res as f64, b as f64 / res as f64);
                let pt = [c[0] + x * (p[0] - c[0]) + y * (q[0] - c[0]), c[1] + x * (p[1] - c[1]) + y * (q[1] - c[1])];
                let key = ((pt[0] * 1e9).round() as i64, (pt[1] * 1e9).round() as i64);
                let id = *index.entry(key).or_insert_with(|| {
                    points.push(pt);
                    points.len() - 1
                });
                slots[slot(res, a, b)] = id;
            }
        }
        fans.push(slots);
    }
    (c, points, fans)
}

#[inline]
fn slot(res: usize, a: usize, b: usize) -> usize {
    // rows a = 0..=res, row a has res - a + 1 entries
    a * (2 * res + 3 - a) / 2 + b
}

impl SurfaceTensionTable {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of grid points for a polygon with `corners` corners.
    pub fn grid_size(hull: &[Point], res: usize) -> usize {
        build_grid(hull, res).1.len()
    }

    /// Small triangles of the grid as point-index triples.
    pub fn triangles(&self) -> Vec<[usize; 3]> {
        let res = self.resolution;
        let mut out = Vec::new();
        for slots in &self.fans {
            for a in 0..res {
                for b in 0..res - a {
                    out.push([slots[slot(res, a, b)], slots[slot(res, a + 1, b)], slots[slot(res, a, b + 1)]]);
                    if a + b + 2 <= res {
                        out.push([slots[slot(res, a + 1, b)], slots[slot(res, a + 1, b + 1)], slots[slot(res, a, b + 1)]]);
                    }
                }
            }
        }
        out
    }

    /// Fan triangle and barycentric grid coordinates of `x`.
    fn locate(&self, x: Point) -> Option<(usize, f64, f64)> {
        let k = self.hull.len();
        let c = self.center;
        let d = [x[0] - c[0], x[1] - c[1]];
        for f in 0..k {
            let (p, q) = (self.hull[f], self.hull[(f + 1) % k]);
            let u = [p[0] - c[0], p[1] - c[1]];
            let v = [q[0] - c[0], q[1] - c[1]];
            let det = u[0] * v[1] - u[1] * v[0];
            let al = (d[0] * v[1] - d[1] * v[0]) / det;
            let be = (u[0] * d[1] - u[1] * d[0]) / det;
            let eps = 1e-9;
            if al >= -eps && be >= -eps && al + be <= 1.0 + eps {
                return Some((f, al.max(0.0), be.max(0.0)));
            }
        }
        None
    }

    /// Piecewise-linear value at `x`, or `None` outside the polygon.
    pub fn interpolate(&self, x: Point) -> Option<f64> {
        self.interpolate_with_gradient(x).map(|v| v.0)
    }

    /// Value and gradient of the piecewise-linear interpolant.
    pub fn interpolate_with_gradient(&self, x: Point) -> Option<(f64, Point)> {
        let (f, al, be) = self.locate(x)?;
        let res = self.resolution;
        let rf = res as f64;
        let (u, v) = ((al * rf).min(rf), (be * rf).min(rf));
        let mut a = (u.floor() as usize).min(res - 1);
        let mut b = (v.floor() as usize).min(res - 1);
        if a + b > res - 1 {
            // on the outer edge; pull back into the last row of triangles
            if a > 0 && a + b > res - 1 {
                a = a.min(res - 1 - b.min(res - 1));
            }
            b = b.min(res - 1 - a);
        }
        let (fu, fv) = (u - a as f64, v - b as f64);
        let slots = &self.fans[f];
        let s = |a: usize, b: usize| self.sigma[slots[slot(res, a, b)]];
        let (val, du, dv) = if fu + fv <= 1.0 || a + b + 2 > res {
            let s0 = s(a, b);
            let (da, db) = (s(a + 1, b) - s0, s(a, b + 1) - s0);
            (s0 + fu * da + fv * db, da, db)
        } else {
            let s1 = s(a + 1, b + 1);
            let (da, db) = (s1 - s(a, b + 1), s1 - s(a + 1, b));
            (s1 - (1.0 - fu) * da - (1.0 - fv) * db, da, db)
        };
        // chain rule from grid coordinates (u, v) to the plane
        let c = self.center;
        let k = self.hull.len();
        let (p, q) = (self.hull[f], self.hull[(f + 1) % k]);
        let e1 = [(p[0] - c[0]) / rf, (p[1] - c[1]) / rf];
        let e2 = [(q[0] - c[0]) / rf, (q[1] - c[1]) / rf];
        let det = e1[0] * e2[1] - e1[1] * e2[0];
        let gx = (du * e2[1] - dv * e1[1]) / det;
        let gy = (dv * e1[0] - du * e2[0]) / det;
        Some((val, [gx, gy]))
    }

    /// Midpoint-concavity check along the three grid directions inside each
    /// fan triangle.
    pub fn concavity_violations(&self, tol: f64) -> Vec<ConcavityViolation> {
        let res = self.resolution as i64;
        let mut out = Vec::new();
        for slots in &self.fans {
            let get = |a: i64, b: i64| -> Option<usize> {
                (a >= 0 && b >= 0 && a + b <= res).then(|| slots[slot(res as usize, a as usize, b as usize)])
            };
            for a in 0..=res {
                for b in 0..=res - a {
                    for (da, db) in [(1, 0), (0, 1), (1, -1)] {
                        let (Some(l), Some(m), Some(r)) = (get(a - da, b - db), get(a, b), get(a + da, b + db)) else {
                            continue;
                        };
                        let excess = 0.5 * (self.sigma[l] + self.sigma[r]) - self.sigma[m];
                        if excess > tol {
                            out.push(ConcavityViolation { points: [l, m, r], excess });
                        }
                    }
                }
            }
        }
        out
    }

    /// Largest and smallest tabulated values.
    pub fn range(&self) -> (f64, f64) {
        let lo = self.sigma.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.sigma.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    /// CSV with columns `s,t,sigma,flag`, values printed round-trip exact.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,t,sigma,flag\n");
        for i in 0..self.points.len() {
            let flag = if self.frozen[i] { "frozen-limit" } else { "interior" };
            let (p, v) = (self.points[i], self.sigma[i]);
            out.push_str(&format!("{},{},{},{}\n", float(p[0]), float(p[1]), float(v), flag));
        }
        out
    }

    /// Reads a table written by [`SurfaceTensionTable::to_csv`] for the
    /// polygon `hull`, inferring the resolution from the row count.
    pub fn from_csv(hull: &[Point], text: &str) -> Result<SurfaceTensionTable> {
        let mut rows = Vec::new();
        for (k, line) in text.lines().enumerate() {
            if k == 0 || line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 4 {
                return Err(DimerError::MalformedInput(format!("line {}: expected 4 fields", k + 1)));
            }
            let num = |s: &str| s.trim().parse::<f64>().map_err(|e| DimerError::MalformedInput(format!("line {}: {e}", k + 1)));
            rows.push(([num(parts[0])?, num(parts[1])?], num(parts[2])?, parts[3].trim() == "frozen-limit"));
        }
        let res = (1..=4096)
            .find(|&r| Self::grid_size(hull, r) >= rows.len())
            .filter(|&r| Self::grid_size(hull, r) == rows.len())
            .ok_or_else(|| DimerError::GridMismatch(format!("{} rows fit no grid over this polygon", rows.len())))?;
        let (center, points, fans) = build_grid(hull, res);
        for (i, (p, _, _)) in rows.iter().enumerate() {
            if (p[0] - points[i][0]).abs() > 1e-9 || (p[1] - points[i][1]).abs() > 1e-9 {
                return Err(DimerError::GridMismatch(format!("row {i} is at {p:?}, expected {:?}", points[i])));
            }
        }
        Ok(SurfaceTensionTable {
            hull: hull.to_vec(),
            center,
            resolution: res,
            points,
            sigma: rows.iter().map(|r| r.1).collect(),
            frozen: rows.iter().map(|r| r.2).collect(),
            fans,
        })
    }

    /// Table from explicit values at the grid points (used for analytic
    /// test functions).
    pub fn from_fn(hull: &[Point], res: usize, f: impl Fn(Point) -> f64) -> SurfaceTensionTable {
        let (center, points, fans) = build_grid(hull, res);
        let sigma = points.iter().map(|&p| f(p)).collect();
        let frozen = vec![false; points.len()];
        SurfaceTensionTable { hull: hull.to_vec(), center, resolution: res, points, sigma, frozen, fans }
    }
}

/// Tabulates `σ` over the Newton polygon of `p`. Concavity is not enforced;
/// use [`SurfaceTensionTable::concavity_violations`] to audit it.
pub fn tabulate_sigma(p: &LaurentPolynomial2, resolution: usize) -> Result<SurfaceTensionTable> {
    if resolution < 8 {
        return Err(DimerError::MalformedInput("table resolution must be at least 8".into()));
    }
    let np = p.newton_polygon();
    if np.is_degenerate() {
        return Err(DimerError::InvalidDomain("Newton polygon has empty interior".into()));
    }
    let hull = np.hull_f64();
    let (center, points, fans) = build_grid(&hull, resolution);
    let mut sigma = vec![0.0; points.len()];
    let mut frozen = vec![false; points.len()];
    let mut done = vec![false; points.len()];
    let mut warm = [0.0, 0.0];
    for slots in &fans {
        for a in 0..=resolution {
            for b in 0..=resolution - a {
                let id = slots[slot(resolution, a, b)];
                if done[id] {
                    continue;
                }
                let pt = points[id];
                let sp = surface_tension_point(p, pt[0], pt[1], warm)?;
                sigma[id] = sp.sigma;
                frozen[id] = sp.frozen_limit;
                done[id] = true;
                warm = if sp.frozen_limit { [0.0, 0.0] } else { sp.b };
            }
            warm = [0.0, 0.0];
        }
    }
    Ok(SurfaceTensionTable { hull, center, resolution, points, sigma, frozen, fans })
}
