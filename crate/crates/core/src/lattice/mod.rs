//! Periodic bipartite planar graphs, their torus quotients and planar patches.

mod faces;
mod patch;
pub mod presets;

pub use patch::planar_patch;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{DimerError, Result};
use crate::geometry::{segment_intersection, Point};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    White,
    Black,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Vertex {
    pub color: Color,
    pub pos: Point,
    /// Valence-one boundary vertex.
    pub boundary: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub white: usize,
    pub black: usize,
    pub weight: f64,
    /// Embedded vector from the white end to the black end.
    pub disp: Point,
    /// Number of seam crossings (x, y) on a torus, zero for planar graphs.
    pub shift: [i64; 2],
}

impl Edge {
    pub fn other(&self, v: usize) -> usize {
        if v == self.white {
            self.black
        } else {
            self.white
        }
    }
}

/// An edge traversed in one direction; `forward` means white to black.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Dart {
    pub edge: usize,
    pub forward: bool,
}

impl Dart {
    #[inline]
    pub fn index(self) -> usize {
        2 * self.edge + usize::from(!self.forward)
    }
    #[inline]
    pub fn from_index(i: usize) -> Dart {
        Dart { edge: i / 2, forward: i % 2 == 0 }
    }
    #[inline]
    pub fn reverse(self) -> Dart {
        Dart { edge: self.edge, forward: !self.forward }
    }
    #[inline]
    pub fn tail(self, edges: &[Edge]) -> usize {
        if self.forward {
            edges[self.edge].white
        } else {
            edges[self.edge].black
        }
    }
    #[inline]
    pub fn head(self, edges: &[Edge]) -> usize {
        self.reverse().tail(edges)
    }
}

/// A face as a closed walk (internal face) or as a walk segment between two
/// boundary-vertex visits (boundary face). The face lies left of every dart.
#[derive(Clone, Debug, PartialEq)]
pub struct Face {
    pub darts: Vec<Dart>,
    /// Torus lift of each dart's tail relative to the face's base lift.
    pub lifts: Vec<[i64; 2]>,
    pub boundary: bool,
    pub centroid: Point,
}

/// Identity of an edge across cutting operations: original id plus part
/// (0 uncut, 1 white half, 2 black half).
pub type EdgeKey = (usize, u8);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VertexKey {
    Original(usize),
    Cut(usize, u8),
}

/// Embedded bipartite graph, either planar with valence-one boundary
/// vertices or a torus quotient (`period = Some(n)`).
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Edge>,
    pub faces: Vec<Face>,
    /// Face on the left / right of each edge oriented white to black.
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    pub edge_lift: Vec<[i64; 2]>,
    pub rotation: Vec<Vec<Dart>>,
    /// Incident edges per vertex in increasing id order.
    pub incident: Vec<Vec<usize>>,
    pub f0: usize,
    pub period: Option<usize>,
    /// Normalization scale for heights (the patch scale `n`).
    pub scale: f64,
    pub vertex_keys: Vec<VertexKey>,
    pub edge_keys: Vec<EdgeKey>,
    /// Representative fundamental-domain edge, for graphs built from one.
    pub fd_edge: Option<Vec<usize>>,
    /// Fundamental-domain edges of the periodic reference cover.
    pub periodic_reference: Option<Vec<usize>>,
}

/// Graph with valence-one boundary vertices.
pub type GraphWithBoundary = Graph;

impl Graph {
    /// Builds a planar graph (or torus quotient when `period` is set) and
    /// traces its faces.
    pub fn new(vertices: Vec<Vertex>, edges: Vec<Edge>, period: Option<usize>) -> Result<Graph> {
        let nv = vertices.len();
        let mut incident = vec![Vec::new(); nv];
        for (e, ed) in edges.iter().enumerate() {
            if ed.white >= nv || ed.black >= nv {
                return Err(DimerError::InvalidGraph(format!("edge {e} references a missing vertex")));
            }
            if vertices[ed.white].color != Color::White || vertices[ed.black].color != Color::Black {
                return Err(DimerError::InvalidGraph(format!("edge {e} does not join white to black")));
            }
            if !(ed.weight > 0.0 && ed.weight.is_finite()) {
                return Err(DimerError::InvalidGraph(format!("edge {e} has non-positive weight")));
            }
            incident[ed.white].push(e);
            incident[ed.black].push(e);
        }
        for (v, inc) in incident.iter().enumerate() {
            if vertices[v].boundary && inc.len() != 1 {
                return Err(DimerError::InvalidGraph(format!(
                    "boundary vertex {v} has valence {}",
                    inc.len()
                )));
            }
            if inc.is_empty() {
                return Err(DimerError::InvalidGraph(format!("vertex {v} is isolated")));
            }
            if vertices[v].boundary && vertices[edges[inc[0]].other(v)].boundary {
                return Err(DimerError::InvalidGraph(format!("boundary vertex {v} touches another boundary vertex")));
            }
        }
        let comps = components(nv, &edges);
        if comps > 1 {
            return Err(DimerError::DisconnectedPatch(comps));
        }
        let t = faces::trace(&vertices, &edges, period)?;
        let vertex_keys = (0..nv).map(VertexKey::Original).collect();
        let edge_keys = (0..edges.len()).map(|e| (e, 0)).collect();
        Ok(Graph {
            vertices,
            edges,
            faces: t.faces,
            left: t.left,
            right: t.right,
            edge_lift: t.edge_lift,
            rotation: t.rotation,
            incident,
            f0: t.f0,
            period,
            scale: 1.0,
            vertex_keys,
            edge_keys,
            fd_edge: None,
            periodic_reference: None,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn internal_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.vertices.len()).filter(|&v| !self.vertices[v].boundary)
    }

    pub fn num_internal(&self) -> usize {
        self.vertices.iter().filter(|v| !v.boundary).count()
    }

    pub fn boundary_faces(&self) -> Vec<usize> {
        (0..self.faces.len()).filter(|&f| self.faces[f].boundary).collect()
    }

    pub fn is_torus(&self) -> bool {
        self.period.is_some()
    }

    /// Edges touching a boundary vertex.
    pub fn is_boundary_edge(&self, e: usize) -> bool {
        let ed = &self.edges[e];
        self.vertices[ed.white].boundary || self.vertices[ed.black].boundary
    }

    /// Dual adjacency: for each face, the (edge, neighbour face) pairs.
    pub fn dual_adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.faces.len()];
        for e in 0..self.edges.len() {
            adj[self.left[e]].push((e, self.right[e]));
            adj[self.right[e]].push((e, self.left[e]));
        }
        adj
    }

    /// Unweighted distance in the dual graph from every face to the nearest
    /// boundary face.
    pub fn dual_distance_to_boundary(&self) -> Vec<usize> {
        let adj = self.dual_adjacency();
        let mut dist = vec![usize::MAX; self.faces.len()];
        let mut queue = std::collections::VecDeque::new();
        for f in self.boundary_faces() {
            dist[f] = 0;
            queue.push_back(f);
        }
        while let Some(f) = queue.pop_front() {
            for &(_, g) in &adj[f] {
                if dist[g] == usize::MAX {
                    dist[g] = dist[f] + 1;
                    queue.push_back(g);
                }
            }
        }
        dist
    }

    pub fn with_weights(&self, weights: &[f64]) -> Result<Graph> {
        if weights.len() != self.edges.len() {
            return Err(DimerError::InvalidGraph("weight vector length mismatch".into()));
        }
        let mut g = self.clone();
        for (e, w) in weights.iter().enumerate() {
            if !(*w > 0.0 && w.is_finite()) {
                return Err(DimerError::InvalidGraph(format!("edge {e} has non-positive weight")));
            }
            g.edges[e].weight = *w;
        }
        Ok(g)
    }

    pub fn weights(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.weight).collect()
    }

    /// Regular valence of internal vertices, if all agree.
    pub fn internal_valence(&self) -> std::result::Result<usize, Vec<usize>> {
        let mut vals: Vec<usize> = self.internal_vertices().map(|v| self.incident[v].len()).collect();
        vals.sort();
        vals.dedup();
        if vals.len() == 1 {
            Ok(vals[0])
        } else {
            Err(vals)
        }
    }
}

pub(crate) fn components(nv: usize, edges: &[Edge]) -> usize {
    let mut parent: Vec<usize> = (0..nv).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut count = nv;
    for e in edges {
        let (a, b) = (find(&mut parent, e.white), find(&mut parent, e.black));
        if a != b {
            parent[a] = b;
            count -= 1;
        }
    }
    count
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdVertex {
    pub id: usize,
    pub color: Color,
    pub pos: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdEdge {
    pub white: usize,
    pub black: usize,
    pub offset: [i64; 2],
    #[serde(default = "unit_weight")]
    pub weight: f64,
}

fn unit_weight() -> f64 {
    1.0
}

/// One period of a ℤ²-periodic bipartite plane graph. An edge joins the
/// white vertex in cell (0,0) to the black vertex in cell `offset`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FundamentalDomain {
    pub vertices: Vec<FdVertex>,
    pub edges: Vec<FdEdge>,
}

impl FundamentalDomain {
    pub fn from_json(text: &str) -> Result<FundamentalDomain> {
        let fd: FundamentalDomain =
            serde_json::from_str(text).map_err(|e| DimerError::MalformedInput(e.to_string()))?;
        fd.validate()?;
        Ok(fd)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    /// Index of each vertex id.
    pub fn index(&self) -> HashMap<usize, usize> {
        self.vertices.iter().enumerate().map(|(i, v)| (v.id, i)).collect()
    }

    pub fn edge_ends(&self, e: usize) -> (usize, usize) {
        let idx = self.index();
        (idx[&self.edges[e].white], idx[&self.edges[e].black])
    }

    /// Embedded white-to-black vector of an edge.
    pub fn edge_vector(&self, e: usize) -> Point {
        let (w, b) = self.edge_ends(e);
        let ed = &self.edges[e];
        [
            self.vertices[b].pos[0] + ed.offset[0] as f64 - self.vertices[w].pos[0],
            self.vertices[b].pos[1] + ed.offset[1] as f64 - self.vertices[w].pos[1],
        ]
    }

    pub fn with_weights(&self, weights: &[f64]) -> FundamentalDomain {
        let mut fd = self.clone();
        for (e, w) in weights.iter().enumerate() {
            fd.edges[e].weight = *w;
        }
        fd
    }

    /// Largest distance between vertex positions inside the cell, plus the
    /// longest edge.
    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for e in 0..self.edges.len() {
            let v = self.edge_vector(e);
            d = d.max(v[0].hypot(v[1]));
        }
        d.max(std::f64::consts::SQRT_2)
    }

    pub fn validate(&self) -> Result<()> {
        let idx = self.index();
        if idx.len() != self.vertices.len() {
            return Err(DimerError::InvalidDomain("duplicate vertex id".into()));
        }
        let whites = self.vertices.iter().filter(|v| v.color == Color::White).count();
        let blacks = self.vertices.len() - whites;
        if whites != blacks {
            return Err(DimerError::InvalidDomain(format!("{whites} white vs {blacks} black vertices")));
        }
        for v in &self.vertices {
            if !(0.0..1.0).contains(&v.pos[0]) || !(0.0..1.0).contains(&v.pos[1]) {
                return Err(DimerError::InvalidDomain(format!("vertex {} lies outside [0,1)^2", v.id)));
            }
        }
        for (e, ed) in self.edges.iter().enumerate() {
            let (w, b) = match (idx.get(&ed.white), idx.get(&ed.black)) {
                (Some(&w), Some(&b)) => (w, b),
                _ => return Err(DimerError::InvalidDomain(format!("edge {e} references a missing vertex"))),
            };
            if self.vertices[w].color != Color::White || self.vertices[b].color != Color::Black {
                return Err(DimerError::InvalidDomain(format!("edge {e} does not join white to black")));
            }
            if !(ed.weight > 0.0 && ed.weight.is_finite()) {
                return Err(DimerError::InvalidDomain(format!("edge {e} has non-positive weight")));
            }
        }
        // crossing check on the 3x3 neighbourhood of the base cell
        let mut segs: Vec<(Point, Point, usize, usize, (i64, i64))> = Vec::new();
        for dx in -2..=2i64 {
            for dy in -2..=2i64 {
                for (e, ed) in self.edges.iter().enumerate() {
                    let w = idx[&ed.white];
                    let p = self.vertices[w].pos;
                    let a = [p[0] + dx as f64, p[1] + dy as f64];
                    let v = self.edge_vector(e);
                    segs.push((a, [a[0] + v[0], a[1] + v[1]], e, w, (dx, dy)));
                }
            }
        }
        for i in 0..segs.len() {
            if segs[i].4 != (0, 0) {
                continue;
            }
            for j in 0..segs.len() {
                if i == j {
                    continue;
                }
                if let Some((t, u)) = segment_intersection(segs[i].0, segs[i].1, segs[j].0, segs[j].1) {
                    let eps = 1e-9;
                    if t > eps && t < 1.0 - eps && u > eps && u < 1.0 - eps {
                        return Err(DimerError::InvalidDomain(format!(
                            "edges {} and {} cross",
                            segs[i].2, segs[j].2
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Torus quotient G(n) of the periodic graph generated by a fundamental
/// domain. The seams at x = 0 and y = 0 (mod n) are the fixed dual cuts.
#[derive(Clone, Debug)]
pub struct TorusGraph {
    pub fd: FundamentalDomain,
    pub n: usize,
    pub graph: Graph,
}

/// Builds G(n). Vertex `k` of cell `(i, j)` gets index `(j n + i) |V| + k`.
pub fn torus_quotient(fd: &FundamentalDomain, n: usize) -> Result<TorusGraph> {
    if n == 0 {
        return Err(DimerError::InvalidDomain("torus size must be positive".into()));
    }
    fd.validate()?;
    let idx = fd.index();
    let nv = fd.vertices.len();
    let n_i = n as i64;
    let mut vertices = Vec::with_capacity(n * n * nv);
    for j in 0..n {
        for i in 0..n {
            for v in &fd.vertices {
                vertices.push(Vertex {
                    color: v.color,
                    pos: [i as f64 + v.pos[0], j as f64 + v.pos[1]],
                    boundary: false,
                });
            }
        }
    }
    let mut edges = Vec::with_capacity(n * n * fd.edges.len());
    let mut fd_edge = Vec::with_capacity(n * n * fd.edges.len());
    for j in 0..n_i {
        for i in 0..n_i {
            for (e, ed) in fd.edges.iter().enumerate() {
                let w = idx[&ed.white];
                let b = idx[&ed.black];
                let (bi, bj) = (i + ed.offset[0], j + ed.offset[1]);
                let cell_w = (j * n_i + i) as usize;
                let cell_b = (bj.rem_euclid(n_i) * n_i + bi.rem_euclid(n_i)) as usize;
                edges.push(Edge {
                    white: cell_w * nv + w,
                    black: cell_b * nv + b,
                    weight: ed.weight,
                    disp: fd.edge_vector(e),
                    shift: [bi.div_euclid(n_i), bj.div_euclid(n_i)],
                });
                fd_edge.push(e);
            }
        }
    }
    let mut graph = Graph::new(vertices, edges, Some(n))?;
    graph.fd_edge = Some(fd_edge);
    graph.scale = n as f64;
    Ok(TorusGraph { fd: fd.clone(), n, graph })
}
