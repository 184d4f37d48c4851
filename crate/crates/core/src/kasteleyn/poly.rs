//! Laurent polynomials in two variables and the torus Kasteleyn
//! determinant `det K(z, w)`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::kasteleyn_signs;
use crate::covers::{newton_polygon, NewtonPolygon};
use crate::error::{DimerError, Result};
use crate::lattice::{Color, FundamentalDomain, Graph};

/// Finitely supported map `(i, j) ↦ coefficient of z^i w^j`.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct LaurentPolynomial2 {
    pub coeffs: BTreeMap<(i64, i64), f64>,
}

impl LaurentPolynomial2 {
    pub fn new(coeffs: BTreeMap<(i64, i64), f64>) -> LaurentPolynomial2 {
        LaurentPolynomial2 { coeffs: coeffs.into_iter().filter(|(_, c)| *c != 0.0).collect() }
    }

    pub fn from_terms(terms: &[((i64, i64), f64)]) -> LaurentPolynomial2 {
        let mut m = BTreeMap::new();
        for &(k, c) in terms {
            *m.entry(k).or_insert(0.0) += c;
        }
        LaurentPolynomial2::new(m)
    }

    pub fn coefficient(&self, i: i64, j: i64) -> f64 {
        self.coeffs.get(&(i, j)).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, z: Complex64, w: Complex64) -> Complex64 {
        self.coeffs.iter().map(|(&(i, j), &c)| c * z.powi(i as i32) * w.powi(j as i32)).sum()
    }

    /// Convex hull of the support.
    pub fn newton_polygon(&self) -> NewtonPolygon {
        NewtonPolygon::from_points(self.coeffs.keys().map(|&(i, j)| [i, j]).collect(), [0, 0])
    }

    /// Multiplication by `z^a w^b`.
    pub fn shifted(&self, a: i64, b: i64) -> LaurentPolynomial2 {
        LaurentPolynomial2 { coeffs: self.coeffs.iter().map(|(&(i, j), &c)| ((i + a, j + b), c)).collect() }
    }

    /// `c · P(sz z, sw w)` for signs `sz, sw, c ∈ {±1}`.
    pub fn with_signs(&self, sz: i64, sw: i64, c: f64) -> LaurentPolynomial2 {
        let s = |b: i64, e: i64| if b < 0 && e.rem_euclid(2) == 1 { -1.0 } else { 1.0 };
        LaurentPolynomial2 {
            coeffs: self.coeffs.iter().map(|(&(i, j), &v)| ((i, j), c * v * s(sz, i) * s(sw, j))).collect(),
        }
    }

    /// Exchanges the roles of `z` and `w`.
    pub fn swapped(&self) -> LaurentPolynomial2 {
        LaurentPolynomial2 { coeffs: self.coeffs.iter().map(|(&(i, j), &c)| ((j, i), c)).collect() }
    }

    /// For fixed `w`, returns `(imin, a)` with `P(z, w) = z^imin Σ_k a_k z^k`.
    pub fn in_z(&self, w: Complex64) -> (i64, Vec<Complex64>) {
        let Some(imin) = self.coeffs.keys().map(|k| k.0).min() else { return (0, Vec::new()) };
        let imax = self.coeffs.keys().map(|k| k.0).max().unwrap();
        let mut a = vec![Complex64::new(0.0, 0.0); (imax - imin + 1) as usize];
        for (&(i, j), &c) in &self.coeffs {
            a[(i - imin) as usize] += c * w.powi(j as i32);
        }
        (imin, a)
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.coeffs.values().fold(0.0, |m, c| m.max(c.abs()))
    }
}

impl std::fmt::Display for LaurentPolynomial2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (&(i, j), &c) in &self.coeffs {
            let sign = if c < 0.0 { "-" } else if first { "" } else { "+" };
            if !first {
                write!(f, " ")?;
            }
            write!(f, "{sign}")?;
            if !first {
                write!(f, " ")?;
            }
            write!(f, "{}", c.abs())?;
            if i != 0 {
                write!(f, "*z^{i}")?;
            }
            if j != 0 {
                write!(f, "*w^{j}")?;
            }
            first = false;
        }
        Ok(())
    }
}

/// The Kasteleyn matrix of a torus graph with every edge multiplied by
/// `z^(−shift_y) w^(shift_x)`; rows are white and columns black vertices.
pub fn torus_kasteleyn_matrix(g: &Graph, sign: &[f64], z: Complex64, w: Complex64) -> DMatrix<Complex64> {
    let (rows, cols, nw) = color_indices(g);
    let mut k = DMatrix::from_element(nw, nw, Complex64::new(0.0, 0.0));
    for (e, ed) in g.edges.iter().enumerate() {
        let m = z.powi(-ed.shift[1] as i32) * w.powi(ed.shift[0] as i32);
        k[(rows[ed.white], cols[ed.black])] += sign[e] * ed.weight * m;
    }
    k
}

fn color_indices(g: &Graph) -> (Vec<usize>, Vec<usize>, usize) {
    let mut rows = vec![usize::MAX; g.num_vertices()];
    let mut cols = vec![usize::MAX; g.num_vertices()];
    let (mut nw, mut nb) = (0, 0);
    for (v, vert) in g.vertices.iter().enumerate() {
        match vert.color {
            Color::White => {
                rows[v] = nw;
                nw += 1;
            }
            Color::Black => {
                cols[v] = nb;
                nb += 1;
            }
        }
    }
    (rows, cols, nw)
}

/// Signed coefficients of `det K(z, w)` of a torus graph, recovered by a
/// discrete Fourier transform over roots of unity.
pub fn torus_coefficients(g: &Graph) -> Result<BTreeMap<(i64, i64), f64>> {
    if !g.is_torus() {
        return Err(DimerError::InvalidGraph("torus coefficients need a torus graph".into()));
    }
    let (rows, _, nw) = color_indices(g);
    if 2 * nw != g.num_vertices() {
        return Err(DimerError::UnbalancedColors { white: nw, black: g.num_vertices() - nw });
    }
    let sign = kasteleyn_signs(g)?;
    // exponent ranges: each white vertex contributes one edge
    let mut lo = [0i64; 2];
    let mut hi = [0i64; 2];
    let mut per_white: Vec<Option<([i64; 2], [i64; 2])>> = vec![None; nw];
    for ed in &g.edges {
        let x = [-ed.shift[1], ed.shift[0]];
        let slot = &mut per_white[rows[ed.white]];
        *slot = Some(match *slot {
            None => (x, x),
            Some((a, b)) => ([a[0].min(x[0]), a[1].min(x[1])], [b[0].max(x[0]), b[1].max(x[1])]),
        });
    }
    for (a, b) in per_white.into_iter().flatten() {
        for k in 0..2 {
            lo[k] += a[k];
            hi[k] += b[k];
        }
    }
    let m = [(hi[0] - lo[0] + 1) as usize, (hi[1] - lo[1] + 1) as usize];
    let root = |k: usize, a: usize| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * a as f64 / m[k] as f64);
    let mut vals = vec![Complex64::new(0.0, 0.0); m[0] * m[1]];
    for a in 0..m[0] {
        for b in 0..m[1] {
            vals[a * m[1] + b] = torus_kasteleyn_matrix(g, &sign, root(0, a), root(1, b)).lu().determinant();
        }
    }
    let mut out = BTreeMap::new();
    let mut max = 0.0f64;
    let mut raw = Vec::new();
    for s in lo[0]..=hi[0] {
        for t in lo[1]..=hi[1] {
            let mut c = Complex64::new(0.0, 0.0);
            for a in 0..m[0] {
                for b in 0..m[1] {
                    let phase = root(0, a).powi(-(s as i32)) * root(1, b).powi(-(t as i32));
                    c += vals[a * m[1] + b] * phase;
                }
            }
            let c = c.re / (m[0] * m[1]) as f64;
            max = max.max(c.abs());
            raw.push(((s, t), c));
        }
    }
    // drop Fourier round-off
    let tol = 64.0 * f64::EPSILON * max;
    for (k, c) in raw {
        if c.abs() > tol {
            out.insert(k, c);
        }
    }
    Ok(out)
}

/// Weighted cover counts `Z_{s,t}(G(n))` keyed by `n` times the slope.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusCounts {
    pub n: usize,
    pub counts: BTreeMap<(i64, i64), f64>,
    pub total: f64,
}

impl TorusCounts {
    pub fn log_total(&self) -> f64 {
        self.total.ln()
    }

    /// `Z` at slope `(s, t)`, or 0 when `n·(s, t)` is not an integer point.
    pub fn at_slope(&self, s: f64, t: f64) -> f64 {
        let (a, b) = (s * self.n as f64, t * self.n as f64);
        if (a - a.round()).abs() > 1e-9 || (b - b.round()).abs() > 1e-9 {
            return 0.0;
        }
        self.counts.get(&(a.round() as i64, b.round() as i64)).copied().unwrap_or(0.0)
    }
}

/// Slope-resolved partition functions of the torus `G(n)`.
pub fn torus_slope_counts(fd: &FundamentalDomain, n: usize) -> Result<TorusCounts> {
    let np = newton_polygon(fd)?;
    let t = crate::lattice::torus_quotient(fd, n)?;
    let raw = torus_coefficients(&t.graph)?;
    let ni = n as i64;
    let counts: BTreeMap<(i64, i64), f64> =
        raw.into_iter().map(|((s, u), c)| ((s - ni * np.shift[0], u - ni * np.shift[1]), c.abs())).collect();
    let total = counts.values().sum();
    Ok(TorusCounts { n, counts, total })
}

/// The characteristic polynomial `P(z, w) = det K(z, w)` of the fundamental
/// domain, divided by the monomial of the reference cover so that its
/// Newton polygon is exactly [`newton_polygon`], then normalized by
/// `z → ±z`, `w → ±w` and an overall sign to make corner coefficients (and
/// then as many others as possible) positive.
pub fn characteristic_polynomial(fd: &FundamentalDomain) -> Result<LaurentPolynomial2> {
    let np = newton_polygon(fd)?;
    let t = crate::lattice::torus_quotient(fd, 1)?;
    let raw = LaurentPolynomial2::new(torus_coefficients(&t.graph)?);
    if raw.is_zero() {
        return Err(DimerError::NoCover);
    }
    let p = raw.shifted(-np.shift[0], -np.shift[1]);
    let corners: Vec<(i64, i64)> = np.hull.iter().map(|c| (c[0], c[1])).collect();
    let mut best: Option<((usize, usize), LaurentPolynomial2)> = None;
    for (sz, sw, c) in [(1, 1, 1.0), (1, 1, -1.0), (-1, 1, 1.0), (-1, 1, -1.0), (1, -1, 1.0), (1, -1, -1.0), (-1, -1, 1.0), (-1, -1, -1.0)] {
        let q = p.with_signs(sz, sw, c);
        let score = (
            corners.iter().filter(|k| q.coefficient(k.0, k.1) > 0.0).count(),
            q.coeffs.values().filter(|&&v| v > 0.0).count(),
        );
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, q));
        }
    }
    Ok(best.unwrap().1)
}
