//! Face tracing from a rotation system.
//!
//! Outgoing darts at each vertex are sorted counter-clockwise by direction.
//! The successor of a dart is the clockwise neighbour of its reverse at the
//! head vertex, so every traced walk keeps its face on the left.

use super::{Dart, Edge, Face, Vertex};
use crate::error::{DimerError, Result};
use crate::geometry::{centroid, signed_area, Point};

pub(crate) struct Traced {
    pub rotation: Vec<Vec<Dart>>,
    pub faces: Vec<Face>,
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    pub edge_lift: Vec<[i64; 2]>,
    pub f0: usize,
}

fn dart_dir(edges: &[Edge], d: Dart) -> Point {
    let v = edges[d.edge].disp;
    if d.forward {
        v
    } else {
        [-v[0], -v[1]]
    }
}

pub(crate) fn trace(vertices: &[Vertex], edges: &[Edge], period: Option<usize>) -> Result<Traced> {
    let nv = vertices.len();
    let mut rotation: Vec<Vec<Dart>> = vec![Vec::new(); nv];
    for (e, ed) in edges.iter().enumerate() {
        rotation[ed.white].push(Dart { edge: e, forward: true });
        rotation[ed.black].push(Dart { edge: e, forward: false });
    }
    for (v, rot) in rotation.iter_mut().enumerate() {
        let mut keyed: Vec<(f64, Dart)> = rot
            .iter()
            .map(|&d| {
                let dir = dart_dir(edges, d);
                (dir[1].atan2(dir[0]), d)
            })
            .collect();
        keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in keyed.windows(2) {
            if (w[1].0 - w[0].0).abs() < 1e-12 {
                return Err(DimerError::Embedding(format!(
                    "edges {} and {} leave vertex {v} in the same direction",
                    w[0].1.edge, w[1].1.edge
                )));
            }
        }
        *rot = keyed.into_iter().map(|(_, d)| d).collect();
    }
    // position of each dart inside the rotation of its tail
    let mut slot = vec![0usize; 2 * edges.len()];
    for rot in &rotation {
        for (i, d) in rot.iter().enumerate() {
            slot[d.index()] = i;
        }
    }
    let next = |d: Dart| -> Dart {
        let r = d.reverse();
        let v = d.head(edges);
        let rot = &rotation[v];
        rot[(slot[r.index()] + rot.len() - 1) % rot.len()]
    };

    struct Walk {
        darts: Vec<Dart>,
        lifts: Vec<[i64; 2]>,
        area: f64,
        pts: Vec<Point>,
    }
    let mut seen = vec![false; 2 * edges.len()];
    let mut walks: Vec<Walk> = Vec::new();
    for start in 0..2 * edges.len() {
        if seen[start] {
            continue;
        }
        let d0 = Dart::from_index(start);
        let mut d = d0;
        let mut lift = [0i64; 2];
        let mut p = vertices[d0.tail(edges)].pos;
        let mut w = Walk { darts: vec![], lifts: vec![], area: 0.0, pts: vec![] };
        loop {
            seen[d.index()] = true;
            w.darts.push(d);
            w.lifts.push(lift);
            w.pts.push(p);
            let dir = dart_dir(edges, d);
            let q = [p[0] + dir[0], p[1] + dir[1]];
            let head = d.head(edges);
            if let Some(n) = period {
                let hp = vertices[head].pos;
                lift = [
                    ((q[0] - hp[0]) / n as f64).round() as i64,
                    ((q[1] - hp[1]) / n as f64).round() as i64,
                ];
            }
            p = q;
            d = next(d);
            if d == d0 {
                break;
            }
            if w.darts.len() > 2 * edges.len() {
                return Err(DimerError::Embedding("face walk does not close".into()));
            }
        }
        if period.is_none() && (p[0] - w.pts[0][0]).abs() + (p[1] - w.pts[0][1]).abs() > 1e-9 {
            return Err(DimerError::Embedding("planar face walk does not close geometrically".into()));
        }
        w.area = signed_area(&w.pts);
        walks.push(w);
    }

    let outer = if period.is_none() {
        let mut best = 0;
        for (i, w) in walks.iter().enumerate() {
            if w.area < walks[best].area {
                best = i;
            }
        }
        Some(best)
    } else {
        None
    };

    let mut faces: Vec<Face> = Vec::new();
    for (wi, w) in walks.into_iter().enumerate() {
        let stub_arrivals: Vec<usize> = (0..w.darts.len())
            .filter(|&i| vertices[w.darts[i].head(edges)].boundary)
            .collect();
        if stub_arrivals.is_empty() {
            let boundary = Some(wi) == outer;
            let c = if period.is_some() {
                let n = period.unwrap() as f64;
                let c = centroid(&w.pts);
                [c[0].rem_euclid(n), c[1].rem_euclid(n)]
            } else {
                centroid(&w.pts)
            };
            faces.push(Face { darts: w.darts, lifts: w.lifts, boundary, centroid: c });
            continue;
        }
        let len = w.darts.len();
        for (k, &end) in stub_arrivals.iter().enumerate() {
            let prev = stub_arrivals[(k + stub_arrivals.len() - 1) % stub_arrivals.len()];
            let mut darts = Vec::new();
            let mut lifts = Vec::new();
            let mut pts = Vec::new();
            let mut i = (prev + 1) % len;
            loop {
                darts.push(w.darts[i]);
                lifts.push(w.lifts[i]);
                pts.push(w.pts[i]);
                if i == end {
                    break;
                }
                i = (i + 1) % len;
            }
            pts.push(vertices[w.darts[end].head(edges)].pos);
            faces.push(Face { darts, lifts, boundary: true, centroid: centroid(&pts) });
        }
    }

    let mut dart_face = vec![usize::MAX; 2 * edges.len()];
    let mut dart_lift = vec![[0i64; 2]; 2 * edges.len()];
    for (f, face) in faces.iter().enumerate() {
        for (d, l) in face.darts.iter().zip(&face.lifts) {
            dart_face[d.index()] = f;
            dart_lift[d.index()] = *l;
        }
    }
    let mut left = vec![0; edges.len()];
    let mut right = vec![0; edges.len()];
    let mut edge_lift = vec![[0i64; 2]; edges.len()];
    for (e, ed) in edges.iter().enumerate() {
        let fwd = Dart { edge: e, forward: true }.index();
        let bwd = Dart { edge: e, forward: false }.index();
        left[e] = dart_face[fwd];
        right[e] = dart_face[bwd];
        let (a, b) = (dart_lift[fwd], dart_lift[bwd]);
        edge_lift[e] = [a[0] + ed.shift[0] - b[0], a[1] + ed.shift[1] - b[1]];
    }
    let f0 = faces.iter().position(|f| f.boundary).unwrap_or(0);
    Ok(Traced { rotation, faces, left, right, edge_lift, f0 })
}
