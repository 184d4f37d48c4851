use std::collections::HashMap;

use super::{Color, Edge, FundamentalDomain, Graph, Vertex};
use crate::covers;
use crate::error::{DimerError, Result};
use crate::geometry::{point_in_polygon, Point};

/// Cuts the graph `G / n` down to the vertices lying in the closed `region`.
///
/// Every edge with exactly one retained end keeps a fresh valence-one
/// boundary vertex placed at the edge midpoint, so boundary vertices never
/// coincide. Heights on the patch are normalized by `scale = n`.
pub fn planar_patch(fd: &FundamentalDomain, n: usize, region: &[Point]) -> Result<Graph> {
    if n == 0 || region.len() < 3 {
        return Err(DimerError::InvalidDomain("need n >= 1 and a polygon with 3+ vertices".into()));
    }
    fd.validate()?;
    let idx = fd.index();
    let nf = n as f64;
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in region {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let c0 = [(lo[0] * nf).floor() as i64 - 2, (lo[1] * nf).floor() as i64 - 2];
    let c1 = [(hi[0] * nf).ceil() as i64 + 2, (hi[1] * nf).ceil() as i64 + 2];
    let vpos = |i: i64, j: i64, k: usize| -> Point {
        let p = fd.vertices[k].pos;
        [(i as f64 + p[0]) / nf, (j as f64 + p[1]) / nf]
    };

    let mut vertices = Vec::new();
    let mut inside: HashMap<(i64, i64, usize), usize> = HashMap::new();
    for j in c0[1]..=c1[1] {
        for i in c0[0]..=c1[0] {
            for (k, v) in fd.vertices.iter().enumerate() {
                let p = vpos(i, j, k);
                if point_in_polygon(p, region, 1e-12) {
                    inside.insert((i, j, k), vertices.len());
                    vertices.push(Vertex { color: v.color, pos: p, boundary: false });
                }
            }
        }
    }
    if vertices.is_empty() {
        return Err(DimerError::EmptyPatch);
    }
    let mut edges = Vec::new();
    let mut fd_edge = Vec::new();
    for j in c0[1]..=c1[1] {
        for i in c0[0]..=c1[0] {
            for (e, ed) in fd.edges.iter().enumerate() {
                let (w, b) = (idx[&ed.white], idx[&ed.black]);
                let (bi, bj) = (i + ed.offset[0], j + ed.offset[1]);
                let wv = inside.get(&(i, j, w)).copied();
                let bv = inside.get(&(bi, bj, b)).copied();
                let pw = vpos(i, j, w);
                let pb = vpos(bi, bj, b);
                let mid = [0.5 * (pw[0] + pb[0]), 0.5 * (pw[1] + pb[1])];
                let (white, black) = match (wv, bv) {
                    (Some(a), Some(c)) => (a, c),
                    (Some(a), None) => {
                        vertices.push(Vertex { color: Color::Black, pos: mid, boundary: true });
                        (a, vertices.len() - 1)
                    }
                    (None, Some(c)) => {
                        vertices.push(Vertex { color: Color::White, pos: mid, boundary: true });
                        (vertices.len() - 1, c)
                    }
                    (None, None) => continue,
                };
                let (p_w, p_b) = (vertices[white].pos, vertices[black].pos);
                edges.push(Edge {
                    white,
                    black,
                    weight: ed.weight,
                    disp: [p_b[0] - p_w[0], p_b[1] - p_w[1]],
                    shift: [0, 0],
                });
                fd_edge.push(e);
            }
        }
    }
    let internal_edges: Vec<Edge> = edges
        .iter()
        .filter(|e| !vertices[e.white].boundary && !vertices[e.black].boundary)
        .cloned()
        .collect();
    let comps = super::components(inside.len(), &internal_edges);
    if comps > 1 {
        return Err(DimerError::DisconnectedPatch(comps));
    }
    let mut g = Graph::new(vertices, edges, None)?;
    g.scale = nf;
    g.fd_edge = Some(fd_edge);
    g.periodic_reference = covers::periodic_reference(fd).ok();
    Ok(g)
}
