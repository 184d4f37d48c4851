//! Surface tension `σ(s, t) = inf_B [R(B) − ⟨(s, t), B⟩]`, computed by
//! damped Newton on the convex objective.

use serde::{Deserialize, Serialize};

use super::poly::LaurentPolynomial2;
use num_complex::Complex64;

use super::ronkin::{polynomial_roots, ronkin, ronkin_gradient};
use crate::covers::NewtonPolygon;
use crate::geometry::Point;
use crate::error::{DimerError, Result};

/// Largest |B| considered; slopes whose optimum lies further out are
/// reported at the cap and flagged.
pub const B_CAP: f64 = 30.0;
const GRAD_TOL: f64 = 1e-10;
const FD_STEP: f64 = 1e-4;
const MAX_ITER: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaPoint {
    pub s: f64,
    pub t: f64,
    pub sigma: f64,
    /// Minimizer of `R(B) − ⟨(s, t), B⟩`.
    pub b: [f64; 2],
    /// The slope lies on the boundary of the Newton polygon or the
    /// minimizer reached the cap `|B| = B_CAP`.
    pub frozen_limit: bool,
    pub iterations: usize,
}

pub fn surface_tension(p: &LaurentPolynomial2, s: f64, t: f64) -> Result<f64> {
    Ok(surface_tension_point(p, s, t, [0.0, 0.0])?.sigma)
}

/// Full solve from the starting point `b0`.
pub fn surface_tension_point(p: &LaurentPolynomial2, s: f64, t: f64, b0: [f64; 2]) -> Result<SigmaPoint> {
    let np = p.newton_polygon();
    if !np.contains([s, t], 1e-9) {
        return Err(DimerError::OutsidePolygon(s, t));
    }
    let obj = |b: [f64; 2]| -> Result<f64> { Ok(ronkin(p, b[0], b[1])? - s * b[0] - t * b[1]) };
    let grad = |b: [f64; 2]| -> Result<[f64; 2]> {
        let g = ronkin_gradient(p, b[0], b[1])?;
        Ok([g[0] - s, g[1] - t])
    };
    if !np.contains([s, t], -1e-9) {
        return Ok(SigmaPoint { s, t, sigma: boundary_sigma(p, &np, [s, t]), b: b0, frozen_limit: true, iterations: 0 });
    }
    let mut b = clamp(b0);
    let mut f = obj(b)?;
    let mut stalled = 0;
    let mut iterations = 0;
    let mut capped = false;
    while iterations < MAX_ITER {
        iterations += 1;
        let g = grad(b)?;
        if g[0].hypot(g[1]) < GRAD_TOL {
            break;
        }
        let h = hessian(&grad, b)?;
        let mut moved = false;
        for lambda in [0.0, 1e-8, 1e-5, 1e-3, 1e-1, 1.0, 10.0] {
            let Some(mut d) = solve2([[h[0][0] + lambda, h[0][1]], [h[1][0], h[1][1] + lambda]], [-g[0], -g[1]]) else {
                continue;
            };
            let norm = d[0].hypot(d[1]);
            if norm > 4.0 {
                d = [4.0 * d[0] / norm, 4.0 * d[1] / norm];
            }
            let slope = g[0] * d[0] + g[1] * d[1];
            if slope >= 0.0 {
                continue;
            }
            let mut alpha = 1.0;
            for _ in 0..30 {
                let cand = clamp([b[0] + alpha * d[0], b[1] + alpha * d[1]]);
                let fc = obj(cand)?;
                if fc <= f + 1e-4 * alpha * slope {
                    moved = cand != b;
                    stalled = if f - fc <= 1e-14 * (1.0 + f.abs()) { stalled + 1 } else { 0 };
                    b = cand;
                    f = fc;
                    break;
                }
                alpha *= 0.5;
            }
            if moved {
                break;
            }
        }
        capped = b[0].hypot(b[1]) >= B_CAP - 1e-9;
        if !moved || stalled >= 3 {
            break;
        }
    }
    Ok(SigmaPoint { s, t, sigma: f, b, frozen_limit: capped, iterations })
}

/// Exact value on the boundary of the Newton polygon, where the infimum is
/// approached at infinity. Along an edge only the edge terms of `P`
/// survive; they form `z^i0 w^j0 Q(z^a w^b)` for a univariate `Q`, and the
/// one-dimensional problem is solved from the roots of `Q`.
fn boundary_sigma(p: &LaurentPolynomial2, np: &NewtonPolygon, x: Point) -> f64 {
    let hull = np.hull_f64();
    let k = hull.len();
    let (mut best, mut edge) = (f64::INFINITY, 0);
    for i in 0..k {
        let d = crate::geometry::point_segment_distance(x, hull[i], hull[(i + 1) % k]);
        if d < best {
            best = d;
            edge = i;
        }
    }
    let (p0, p1) = (np.hull[edge], np.hull[(edge + 1) % k]);
    let (dx, dy) = (p1[0] - p0[0], p1[1] - p0[1]);
    let len = gcd(dx.abs(), dy.abs());
    let (a, b) = (dx / len, dy / len);
    let q: Vec<Complex64> = (0..=len).map(|m| Complex64::new(p.coefficient(p0[0] + m * a, p0[1] + m * b), 0.0)).collect();
    // position along the edge in lattice steps
    let mu = if a != 0 { (x[0] - p0[0] as f64) / a as f64 } else { (x[1] - p0[1] as f64) / b as f64 };
    let mu = mu.clamp(0.0, len as f64);
    let (lead, roots) = polynomial_roots(&q);
    let mut logs: Vec<f64> = roots.iter().map(|r| r.norm().ln()).collect();
    logs.sort_by(f64::total_cmp);
    if mu <= 1e-12 {
        return q[0].norm().ln();
    }
    let j = (mu - 1e-12).ceil() as usize;
    let r = logs[j - 1];
    let mut v = lead.norm().ln() - mu * r;
    for l in logs {
        v += r.max(l);
    }
    v
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn clamp(b: [f64; 2]) -> [f64; 2] {
    let n = b[0].hypot(b[1]);
    if n > B_CAP {
        [B_CAP * b[0] / n, B_CAP * b[1] / n]
    } else {
        b
    }
}

fn hessian(grad: &dyn Fn([f64; 2]) -> Result<[f64; 2]>, b: [f64; 2]) -> Result<[[f64; 2]; 2]> {
    let gxp = grad([b[0] + FD_STEP, b[1]])?;
    let gxm = grad([b[0] - FD_STEP, b[1]])?;
    let gyp = grad([b[0], b[1] + FD_STEP])?;
    let gym = grad([b[0], b[1] - FD_STEP])?;
    let hxx = (gxp[0] - gxm[0]) / (2.0 * FD_STEP);
    let hyy = (gyp[1] - gym[1]) / (2.0 * FD_STEP);
    let hxy = 0.25 * (gxp[1] - gxm[1] + gyp[0] - gym[0]) / FD_STEP;
    Ok([[hxx, hxy], [hxy, hyy]])
}

fn solve2(a: [[f64; 2]; 2], r: [f64; 2]) -> Option<[f64; 2]> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let scale = a[0][0].abs().max(a[1][1].abs()).max(a[0][1].abs());
    if det.abs() <= 1e-14 * scale * scale || det == 0.0 {
        return None;
    }
    Some([(r[0] * a[1][1] - r[1] * a[0][1]) / det, (a[0][0] * r[1] - a[1][0] * r[0]) / det])
}
