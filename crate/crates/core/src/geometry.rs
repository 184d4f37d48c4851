//! Planar geometry helpers: polygons, segments, hulls, Hausdorff distance.

pub type Point = [f64; 2];

#[inline]
pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
pub fn scale(a: Point, s: f64) -> Point {
    [a[0] * s, a[1] * s]
}

#[inline]
pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

#[inline]
pub fn dist(a: Point, b: Point) -> f64 {
    norm(sub(a, b))
}

/// Signed area, positive for counter-clockwise vertex order.
pub fn signed_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    let mut s = 0.0;
    for i in 0..n {
        s += cross(poly[i], poly[(i + 1) % n]);
    }
    0.5 * s
}

pub fn centroid(points: &[Point]) -> Point {
    let n = points.len().max(1) as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(x, y), p| (x + p[0], y + p[1]));
    [sx / n, sy / n]
}

/// Distance from `p` to the closed segment `[a, b]`.
pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = sub(b, a);
    let len2 = dot(ab, ab);
    if len2 == 0.0 {
        return dist(p, a);
    }
    let t = (dot(sub(p, a), ab) / len2).clamp(0.0, 1.0);
    dist(p, add(a, scale(ab, t)))
}

/// Closed point-in-polygon test (boundary counts as inside, within `eps`).
pub fn point_in_polygon(p: Point, poly: &[Point], eps: f64) -> bool {
    let n = poly.len();
    for i in 0..n {
        if point_segment_distance(p, poly[i], poly[(i + 1) % n]) <= eps {
            return true;
        }
    }
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (pi, pj) = (poly[i], poly[j]);
        if (pi[1] > p[1]) != (pj[1] > p[1]) {
            let x = pj[0] + (p[1] - pj[1]) * (pi[0] - pj[0]) / (pi[1] - pj[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

pub fn distance_to_polygon_boundary(p: Point, poly: &[Point]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| point_segment_distance(p, poly[i], poly[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min)
}

/// Proper intersection of segments `p1p2` and `q1q2`.
///
/// Returns `(t, u)` with the crossing at `p1 + t (p2 - p1)` and
/// `q1 + u (q2 - q1)`, or `None` when the segments are parallel or miss.
pub fn segment_intersection(p1: Point, p2: Point, q1: Point, q2: Point) -> Option<(f64, f64)> {
    let r = sub(p2, p1);
    let s = sub(q2, q1);
    let den = cross(r, s);
    if den.abs() < 1e-15 {
        return None;
    }
    let qp = sub(q1, p1);
    let t = cross(qp, s) / den;
    let u = cross(qp, r) / den;
    if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u) {
        Some((t, u))
    } else {
        None
    }
}

/// Convex hull of integer points, counter-clockwise, collinear points dropped.
pub fn convex_hull_i64(points: &[[i64; 2]]) -> Vec<[i64; 2]> {
    let mut pts: Vec<[i64; 2]> = points.to_vec();
    pts.sort();
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let turn = |o: [i64; 2], a: [i64; 2], b: [i64; 2]| -> i64 {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut lower: Vec<[i64; 2]> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && turn(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[i64; 2]> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && turn(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Half-plane representation `⟨n, x⟩ ≤ c` of a counter-clockwise convex polygon.
pub fn half_planes(poly: &[Point]) -> Vec<(Point, f64)> {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let a = poly[i];
            let b = poly[(i + 1) % n];
            let e = sub(b, a);
            let nrm = [e[1], -e[0]];
            (nrm, dot(nrm, a))
        })
        .collect()
}

/// Symmetric Hausdorff distance between two finite point sets.
pub fn hausdorff_points(a: &[Point], b: &[Point]) -> f64 {
    let directed = |x: &[Point], y: &[Point]| {
        x.iter()
            .map(|p| y.iter().map(|q| dist(*p, *q)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

/// Uniform samples along a closed polygon boundary, `per_side` per edge.
pub fn sample_boundary(poly: &[Point], per_side: usize) -> Vec<Point> {
    let n = poly.len();
    let mut out = Vec::with_capacity(n * per_side);
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        for k in 0..per_side {
            let t = k as f64 / per_side as f64;
            out.push(add(a, scale(sub(b, a), t)));
        }
    }
    out
}

/// Grid samples of the closed polygon with spacing `h` (boundary included).
pub fn sample_region(poly: &[Point], h: f64) -> Vec<Point> {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in poly {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let mut out = Vec::new();
    let nx = ((hi[0] - lo[0]) / h).ceil() as usize;
    let ny = ((hi[1] - lo[1]) / h).ceil() as usize;
    for i in 0..=nx {
        for j in 0..=ny {
            let p = [lo[0] + i as f64 * h, lo[1] + j as f64 * h];
            if point_in_polygon(p, poly, 1e-12) {
                out.push(p);
            }
        }
    }
    out.extend(sample_boundary(poly, ((1.0 / h).ceil() as usize).max(1)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_area_and_membership() {
        let sq = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        assert_eq!(signed_area(&sq), 1.0);
        assert!(point_in_polygon([0.5, 0.5], &sq, 1e-12));
        assert!(point_in_polygon([1.0, 0.3], &sq, 1e-12));
        assert!(!point_in_polygon([1.1, 0.3], &sq, 1e-12));
    }

    #[test]
    fn hull_drops_interior_and_collinear() {
        let pts = [[0, 0], [1, 0], [2, 0], [1, 1], [0, 2], [2, 2], [1, 2]];
        let h = convex_hull_i64(&pts);
        assert_eq!(h, vec![[0, 0], [2, 0], [2, 2], [0, 2]]);
    }

    #[test]
    fn crossing_segments() {
        let (t, u) = segment_intersection([0.0, 0.0], [2.0, 0.0], [1.0, -1.0], [1.0, 1.0]).unwrap();
        assert!((t - 0.5).abs() < 1e-15 && (u - 0.5).abs() < 1e-15);
        assert!(segment_intersection([0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]).is_none());
    }
}
