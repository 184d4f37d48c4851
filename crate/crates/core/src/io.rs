//! File formats shared by the library and the command line: graphs,
//! regions, covers and CSV tables.

use serde::{Deserialize, Serialize};

use crate::calculus::ContinuumBoundary;
use crate::covers::{reference_cover, DimerCover, HeightFunction};
use crate::error::{DimerError, Result};
use crate::geometry::Point;
use crate::lattice::{Color, Edge, Graph, Vertex};

/// Decimal float with 17 significant digits, enough to round-trip an `f64`.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn malformed(e: impl ToString) -> DimerError {
    DimerError::MalformedInput(e.to_string())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct GraphVertex {
    color: Color,
    pos: Point,
    #[serde(default)]
    boundary: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct GraphEdge {
    white: usize,
    black: usize,
    #[serde(default = "one")]
    weight: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct GraphFile {
    vertices: Vec<GraphVertex>,
    edges: Vec<GraphEdge>,
    #[serde(default = "one")]
    scale: f64,
    /// Edge ids of the reference cover for heights.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reference: Option<Vec<usize>>,
}

/// Planar graph file: `{"vertices": [{color, pos, boundary}], "edges":
/// [{white, black, weight}], "scale", "reference"}`. Vertex and edge ids are
/// list positions; `reference` optionally fixes the reference cover.
pub fn graph_from_json(text: &str) -> Result<Graph> {
    let f: GraphFile = serde_json::from_str(text).map_err(malformed)?;
    let vertices: Vec<Vertex> =
        f.vertices.iter().map(|v| Vertex { color: v.color, pos: v.pos, boundary: v.boundary }).collect();
    let mut edges = Vec::with_capacity(f.edges.len());
    for (e, ed) in f.edges.iter().enumerate() {
        let (w, b) = match (vertices.get(ed.white), vertices.get(ed.black)) {
            (Some(w), Some(b)) => (w, b),
            _ => return Err(DimerError::InvalidGraph(format!("edge {e} references a missing vertex"))),
        };
        let disp = [b.pos[0] - w.pos[0], b.pos[1] - w.pos[1]];
        edges.push(Edge { white: ed.white, black: ed.black, weight: ed.weight, disp, shift: [0, 0] });
    }
    let mut g = Graph::new(vertices, edges, None)?;
    g.scale = f.scale;
    if let Some(r) = f.reference {
        let d = DimerCover::new(r);
        if !d.is_valid(&g) {
            return Err(malformed("reference is not a dimer cover"));
        }
        g.fd_edge = Some((0..g.num_edges()).collect());
        g.periodic_reference = Some(d.edges);
    }
    Ok(g)
}

pub fn graph_to_json(g: &Graph) -> Result<String> {
    if g.is_torus() {
        return Err(DimerError::InvalidGraph("torus graphs have no planar file form".into()));
    }
    let f = GraphFile {
        vertices: g.vertices.iter().map(|v| GraphVertex { color: v.color, pos: v.pos, boundary: v.boundary }).collect(),
        edges: g.edges.iter().map(|e| GraphEdge { white: e.white, black: e.black, weight: e.weight }).collect(),
        scale: g.scale,
        reference: match g.periodic_reference {
            Some(_) => Some(reference_cover(g)?.edges),
            None => None,
        },
    };
    Ok(serde_json::to_string_pretty(&f).expect("serializable"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct RegionFile {
    polygon: Vec<Point>,
}

/// Region file `{"polygon": [[x, y], ...]}`, counter-clockwise.
pub fn region_from_json(text: &str) -> Result<Vec<Point>> {
    let f: RegionFile = serde_json::from_str(text).map_err(malformed)?;
    if f.polygon.len() < 3 {
        return Err(DimerError::MalformedInput("polygon needs at least 3 vertices".into()));
    }
    Ok(f.polygon)
}

pub fn region_to_json(polygon: &[Point]) -> String {
    serde_json::to_string_pretty(&RegionFile { polygon: polygon.to_vec() }).expect("serializable")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct ContinuumFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    polygon: Option<Vec<Point>>,
    vertex_values: Vec<f64>,
}

/// Continuum boundary file `{"polygon": [...], "vertex_values": [...]}`.
/// Without `polygon` the values refer to the vertices of `region`.
pub fn continuum_boundary_from_json(text: &str, region: Option<&[Point]>) -> Result<ContinuumBoundary> {
    let f: ContinuumFile = serde_json::from_str(text).map_err(malformed)?;
    let domain = match (f.polygon, region) {
        (Some(p), _) => p,
        (None, Some(r)) => r.to_vec(),
        (None, None) => return Err(malformed("boundary values need a polygon or a region")),
    };
    ContinuumBoundary::new(domain, f.vertex_values)
}

pub fn continuum_boundary_to_json(chi: &ContinuumBoundary) -> String {
    let f = ContinuumFile { polygon: Some(chi.domain.clone()), vertex_values: chi.vertex_values.clone() };
    serde_json::to_string_pretty(&f).expect("serializable")
}

/// Cover file: JSON list of edge ids.
pub fn cover_from_json(g: &Graph, text: &str) -> Result<DimerCover> {
    let edges: Vec<usize> = serde_json::from_str(text).map_err(malformed)?;
    if let Some(&e) = edges.iter().find(|&&e| e >= g.num_edges()) {
        return Err(malformed(format!("edge {e} is not in the graph")));
    }
    Ok(DimerCover::new(edges))
}

pub fn cover_to_json(d: &DimerCover) -> String {
    serde_json::to_string(&d.edges).expect("serializable")
}

/// Height function as CSV rows `x,y,value` at face centroids, the outer
/// face of a planar graph omitted.
pub fn height_csv(g: &Graph, h: &HeightFunction) -> String {
    let mut s = String::from("x,y,value\n");
    for (f, face) in g.faces.iter().enumerate() {
        if !g.is_torus() && f == g.f0 {
            continue;
        }
        s.push_str(&format!("{},{},{}\n", float(face.centroid[0]), float(face.centroid[1]), h.values[f]));
    }
    s
}

/// Per-face real values (for instance mean heights) as `x,y,value` rows.
pub fn face_values_csv(g: &Graph, values: &[f64]) -> String {
    let mut s = String::from("x,y,value\n");
    for (f, face) in g.faces.iter().enumerate() {
        if !g.is_torus() && f == g.f0 {
            continue;
        }
        s.push_str(&format!("{},{},{}\n", float(face.centroid[0]), float(face.centroid[1]), float(values[f])));
    }
    s
}

/// Reads `x,y,value` rows, skipping `#` comments and the header.
pub fn read_xyz_csv(text: &str) -> Result<Vec<(Point, f64)>> {
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('x') {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 3 {
            return Err(malformed(format!("line {}: expected 3 fields", k + 1)));
        }
        let num = |s: &str| s.trim().parse::<f64>().map_err(|e| malformed(format!("line {}: {e}", k + 1)));
        out.push(([num(parts[0])?, num(parts[1])?], num(parts[2])?));
    }
    Ok(out)
}
