//! SVG output: dimer covers as segments, scalar fields as colour maps with
//! contour lines extracted by marching triangles.

use std::fmt::Write;

use dimerlab::geometry::Point;
use dimerlab::{DimerCover, Graph, Mesh};

const SIZE: f64 = 512.0;
const MARGIN: f64 = 16.0;

/// Maps world coordinates to pixels, y pointing up.
struct Frame {
    min: Point,
    max_y: f64,
    scale: f64,
    width: f64,
    height: f64,
}

impl Frame {
    fn new(points: impl IntoIterator<Item = Point>) -> Frame {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in points {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        if !lo[0].is_finite() {
            lo = [0.0, 0.0];
            hi = [1.0, 1.0];
        }
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-12);
        let scale = (SIZE - 2.0 * MARGIN) / span;
        Frame {
            min: lo,
            max_y: hi[1],
            scale,
            width: (hi[0] - lo[0]) * scale + 2.0 * MARGIN,
            height: (hi[1] - lo[1]) * scale + 2.0 * MARGIN,
        }
    }

    fn map(&self, p: Point) -> (f64, f64) {
        (MARGIN + (p[0] - self.min[0]) * self.scale, MARGIN + (self.max_y - p[1]) * self.scale)
    }

    fn open(&self, out: &mut String) {
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {:.2} {:.2}">"#,
            self.width.ceil(),
            self.height.ceil(),
            self.width,
            self.height
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    }
}

const DIRECTION_COLORS: [&str; 4] = ["#d62728", "#1f77b4", "#2ca02c", "#ff7f0e"];

/// Direction class of a white-to-black vector: east, north, west, south.
fn direction(v: Point) -> usize {
    let a = v[1].atan2(v[0]) + std::f64::consts::FRAC_PI_4;
    (a.rem_euclid(std::f64::consts::TAU) / std::f64::consts::FRAC_PI_2) as usize % 4
}

/// The graph in light grey with each dimer drawn as a thick segment
/// coloured by its white-to-black direction.
pub fn cover_svg(g: &Graph, d: &DimerCover) -> String {
    let frame = Frame::new(g.vertices.iter().map(|v| v.pos));
    let mut out = String::new();
    frame.open(&mut out);
    for e in &g.edges {
        let (a, b) = (frame.map(g.vertices[e.white].pos), frame.map(g.vertices[e.black].pos));
        let _ = writeln!(
            out,
            r##"<line class="edge" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#cccccc" stroke-width="1"/>"##,
            a.0, a.1, b.0, b.1
        );
    }
    for &e in &d.edges {
        let edge = &g.edges[e];
        let (w, b) = (g.vertices[edge.white].pos, g.vertices[edge.black].pos);
        let k = direction([b[0] - w[0], b[1] - w[1]]);
        let (p, q) = (frame.map(w), frame.map(b));
        let _ = writeln!(
            out,
            r#"<line class="dimer" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}" stroke-width="{:.2}" stroke-linecap="round"/>"#,
            p.0,
            p.1,
            q.0,
            q.1,
            DIRECTION_COLORS[k],
            (0.35 * frame.scale * g.scale).clamp(2.0, 12.0)
        );
    }
    for v in &g.vertices {
        let (x, y) = frame.map(v.pos);
        let fill = match v.color {
            dimerlab::Color::White => "white",
            dimerlab::Color::Black => "black",
        };
        let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2" fill="{fill}" stroke="black" stroke-width="0.5"/>"#);
    }
    out.push_str("</svg>\n");
    out
}

/// Piecewise-linear colour ramp from dark blue through green to yellow.
fn color(u: f64) -> String {
    const STOPS: [[f64; 3]; 5] = [[68.0, 1.0, 84.0], [59.0, 82.0, 139.0], [33.0, 145.0, 140.0], [94.0, 201.0, 98.0], [253.0, 231.0, 37.0]];
    let u = if u.is_finite() { u.clamp(0.0, 1.0) } else { 0.0 };
    let x = u * (STOPS.len() - 1) as f64;
    let i = (x.floor() as usize).min(STOPS.len() - 2);
    let f = x - i as f64;
    let c: Vec<u8> = (0..3).map(|k| (STOPS[i][k] * (1.0 - f) + STOPS[i + 1][k] * f).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// `count` levels evenly spaced strictly inside the value range.
pub fn levels(values: &[f64], count: usize) -> Vec<f64> {
    let (lo, hi) = range(values);
    (1..=count).map(|i| lo + (hi - lo) * i as f64 / (count + 1) as f64).collect()
}

fn range(values: &[f64]) -> (f64, f64) {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Segments of the level set `{u = level}` of the piecewise-linear field.
/// A node counts as above the level when its value is at least `level`.
pub fn contour(nodes: &[Point], triangles: &[[usize; 3]], values: &[f64], level: f64) -> Vec<[Point; 2]> {
    let mut segments = Vec::new();
    for t in triangles {
        let above = t.map(|i| values[i] >= level);
        let lone = match above.iter().filter(|&&a| a).count() {
            1 => above.iter().position(|&a| a),
            2 => above.iter().position(|&a| !a),
            _ => None,
        };
        let Some(k) = lone else { continue };
        let a = t[k];
        let cut = |b: usize| {
            let s = (level - values[a]) / (values[b] - values[a]);
            [nodes[a][0] + s * (nodes[b][0] - nodes[a][0]), nodes[a][1] + s * (nodes[b][1] - nodes[a][1])]
        };
        segments.push([cut(t[(k + 1) % 3]), cut(t[(k + 2) % 3])]);
    }
    segments
}

/// Filled triangles coloured by their mean value, plus contour lines.
pub fn mesh_field_svg(mesh: &Mesh, values: &[f64], contours: usize) -> String {
    let frame = Frame::new(mesh.nodes.iter().copied());
    let (lo, hi) = range(values);
    let span = (hi - lo).max(1e-300);
    let mut out = String::new();
    frame.open(&mut out);
    for t in &mesh.triangles {
        let mean = t.iter().map(|&i| values[i]).sum::<f64>() / 3.0;
        let c = color((mean - lo) / span);
        let pts: Vec<String> = t.iter().map(|&i| frame.map(mesh.nodes[i])).map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(out, r#"<polygon points="{}" fill="{c}" stroke="{c}" stroke-width="0.5"/>"#, pts.join(" "));
    }
    for level in levels(values, contours) {
        for [p, q] in contour(&mesh.nodes, &mesh.triangles, values, level) {
            let (a, b) = (frame.map(p), frame.map(q));
            let _ = writeln!(
                out,
                r#"<line class="contour" data-level="{:.6}" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-width="1"/>"#,
                level, a.0, a.1, b.0, b.1
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Scattered `x,y,value` samples drawn as coloured dots.
pub fn point_field_svg(samples: &[(Point, f64)]) -> String {
    let frame = Frame::new(samples.iter().map(|s| s.0));
    let values: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let (lo, hi) = range(&values);
    let span = (hi - lo).max(1e-300);
    let r = (0.5 * (SIZE - 2.0 * MARGIN) / (samples.len().max(1) as f64).sqrt()).clamp(1.0, 12.0);
    let mut out = String::new();
    frame.open(&mut out);
    for &(p, v) in samples {
        let (x, y) = frame.map(p);
        let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r:.2}" fill="{}"/>"#, color((v - lo) / span));
    }
    out.push_str("</svg>\n");
    out
}
