//! Ronkin function `R(Bx, By) = (2π)⁻² ∬ log|P(e^{Bx+iθ}, e^{By+iφ})| dθ dφ`
//! and its gradient.
//!
//! The inner integral over `θ` is done exactly with Jensen's formula from
//! the roots of `z ↦ P(z, w)`. The remaining integrand in `φ` is continuous
//! and piecewise smooth; its kinks (where a root crosses the circle) are
//! located by sampling and bisection, and each smooth piece is integrated
//! with adaptive Gauss–Kronrod.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::poly::LaurentPolynomial2;
use crate::error::{DimerError, Result};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
const SAMPLES: usize = 256;
const ABS_TOL: f64 = 1e-11;
/// Quadrature error estimates above this are reported as failures.
const FAIL_TOL: f64 = 1e-6;

/// Integral value with its estimated absolute error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
}

/// `F = R(0, 0)`.
pub fn free_energy(p: &LaurentPolynomial2) -> Result<Quadrature> {
    ronkin_with_error(p, 0.0, 0.0)
}

pub fn ronkin(p: &LaurentPolynomial2, bx: f64, by: f64) -> Result<f64> {
    Ok(ronkin_with_error(p, bx, by)?.value)
}

pub fn ronkin_with_error(p: &LaurentPolynomial2, bx: f64, by: f64) -> Result<Quadrature> {
    Ok(Slices::new(p, bx, by).value()?)
}

/// `∇R(Bx, By)`, which lies in the Newton polygon of `P`.
pub fn ronkin_gradient(p: &LaurentPolynomial2, bx: f64, by: f64) -> Result<[f64; 2]> {
    let gx = Slices::new(p, bx, by).count_mean();
    let gy = Slices::new(&p.swapped(), by, bx).count_mean();
    Ok([gx, gy])
}

/// Value and gradient together, sharing the kink search for `∂/∂Bx`.
pub fn ronkin_value_gradient(p: &LaurentPolynomial2, bx: f64, by: f64) -> Result<(f64, [f64; 2])> {
    let s = Slices::new(p, bx, by);
    let v = s.value()?.value;
    let gx = s.count_mean();
    let gy = Slices::new(&p.swapped(), by, bx).count_mean();
    Ok((v, [gx, gy]))
}

/// Roots of `Σ a_k z^k` (trailing zero coefficients give roots at 0).
pub fn polynomial_roots(a: &[Complex64]) -> (Complex64, Vec<Complex64>) {
    let scale = a.iter().fold(0.0f64, |m, c| m.max(c.norm()));
    let eps = 1e-300f64.max(scale * 1e-15);
    let hi = a.iter().rposition(|c| c.norm() > eps);
    let Some(hi) = hi else { return (Complex64::new(0.0, 0.0), Vec::new()) };
    let lo = a.iter().position(|c| c.norm() > eps).unwrap();
    let lead = a[hi];
    let mut roots = vec![Complex64::new(0.0, 0.0); lo];
    let b = &a[lo..=hi];
    match b.len() - 1 {
        0 => {}
        1 => roots.push(-b[0] / b[1]),
        2 => {
            let (qa, qb, qc) = (b[2], b[1], b[0]);
            let disc = (qb * qb - 4.0 * qa * qc).sqrt();
            let q = if (qb + disc).norm() >= (qb - disc).norm() { -0.5 * (qb + disc) } else { -0.5 * (qb - disc) };
            if q.norm() == 0.0 {
                roots.extend([Complex64::new(0.0, 0.0); 2]);
            } else {
                roots.push(q / qa);
                roots.push(qc / q);
            }
        }
        d => {
            let mut m = DMatrix::from_element(d, d, Complex64::new(0.0, 0.0));
            for k in 0..d {
                m[(0, k)] = -b[d - 1 - k] / b[d];
                if k + 1 < d {
                    m[(k + 1, k)] = Complex64::new(1.0, 0.0);
                }
            }
            let ev = m.schur().eigenvalues().expect("complex Schur form has eigenvalues");
            roots.extend(ev.iter().copied());
        }
    }
    (lead, roots)
}

/// The `φ`-integrand family for fixed radii.
struct Slices<'a> {
    p: &'a LaurentPolynomial2,
    bx: f64,
    by: f64,
}

impl<'a> Slices<'a> {
    fn new(p: &'a LaurentPolynomial2, bx: f64, by: f64) -> Slices<'a> {
        Slices { p, bx, by }
    }

    /// Jensen value and number of roots (plus `imin`) inside `|z| < e^Bx`.
    fn eval(&self, phi: f64) -> (f64, i64) {
        let w = Complex64::from_polar(self.by.exp(), phi);
        let (imin, a) = self.p.in_z(w);
        let (lead, roots) = polynomial_roots(&a);
        if lead.norm() == 0.0 {
            return (f64::NEG_INFINITY, imin);
        }
        let mut v = imin as f64 * self.bx + lead.norm().ln();
        let mut inside = imin;
        for r in roots {
            let l = r.norm().ln();
            if l < self.bx {
                inside += 1;
                v += self.bx;
            } else {
                v += l;
            }
        }
        (v, inside)
    }

    /// Breakpoints in `[0, 2π]` where the inside count changes.
    fn kinks(&self) -> Vec<f64> {
        let mut pts = vec![0.0];
        let h = TWO_PI / SAMPLES as f64;
        let mut prev = self.eval(0.0).1;
        for k in 1..=SAMPLES {
            let x = k as f64 * h;
            let c = self.eval(x).1;
            if c != prev {
                let (mut lo, mut hi) = (x - h, x);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if self.eval(mid).1 == prev {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo < 1e-15 {
                        break;
                    }
                }
                let m = 0.5 * (lo + hi);
                if m > *pts.last().unwrap() + 1e-14 {
                    pts.push(m);
                }
            }
            prev = c;
        }
        if *pts.last().unwrap() < TWO_PI - 1e-14 {
            pts.push(TWO_PI);
        } else {
            *pts.last_mut().unwrap() = TWO_PI;
        }
        pts
    }

    fn value(&self) -> Result<Quadrature> {
        let pts = self.kinks();
        let mut q = Quadrature { value: 0.0, error: 0.0 };
        let tol = ABS_TOL / pts.len() as f64;
        for w in pts.windows(2) {
            let r = adaptive_gk(&|x| self.eval(x).0, w[0], w[1], tol, 0);
            q.value += r.value;
            q.error += r.error;
        }
        q.value /= TWO_PI;
        q.error /= TWO_PI;
        if !q.value.is_finite() || q.error > FAIL_TOL {
            return Err(DimerError::QuadratureFailure(format!(
                "Ronkin integral at ({}, {}) has error estimate {:e}",
                self.bx, self.by, q.error
            )));
        }
        Ok(q)
    }

    /// Mean inside count: the integrand is piecewise constant between kinks.
    fn count_mean(&self) -> f64 {
        let pts = self.kinks();
        let mut s = 0.0;
        for w in pts.windows(2) {
            s += (w[1] - w[0]) * self.eval(0.5 * (w[0] + w[1])).1 as f64;
        }
        s / TWO_PI
    }
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let (f1, f2) = (f(c - h * XGK[j]), f(c + h * XGK[j]));
        k += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            g += WG[j / 2] * (f1 + f2);
        }
    }
    (k * h, (k - g).abs() * h)
}

/// Recursive adaptive Gauss–Kronrod (7, 15).
pub(crate) fn adaptive_gk(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: usize) -> Quadrature {
    let (k, e) = gk15(f, a, b);
    if e <= tol.max(1e-15 * k.abs()) || depth >= 40 || b - a < 1e-13 {
        return Quadrature { value: k, error: e };
    }
    let m = 0.5 * (a + b);
    let l = adaptive_gk(f, a, m, 0.5 * tol, depth + 1);
    let r = adaptive_gk(f, m, b, 0.5 * tol, depth + 1);
    Quadrature { value: l.value + r.value, error: l.error + r.error }
}
