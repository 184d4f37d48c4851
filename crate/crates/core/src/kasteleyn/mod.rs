//! Kasteleyn determinants: exact counting on planar graphs, the torus
//! characteristic polynomial, free energy, Ronkin function and surface
//! tension.

pub mod banded;
pub mod poly;
pub mod ronkin;
pub mod sigma;
pub mod table;

use std::collections::VecDeque;

pub use poly::{characteristic_polynomial, torus_slope_counts, LaurentPolynomial2, TorusCounts};
pub use ronkin::{free_energy, ronkin, ronkin_gradient, Quadrature};
pub use sigma::{surface_tension, SigmaPoint};
pub use table::{tabulate_sigma, SurfaceTensionTable};

use crate::error::{DimerError, Result};
use crate::lattice::{Color, Edge, Graph, Vertex};

/// Most free boundary vertices summed over by [`kasteleyn_count`].
pub const MAX_FREE_STUBS: usize = 24;

/// ±1 signs making every constrained face satisfy the Kasteleyn condition:
/// the product of signs around a face walk of `ℓ` darts is `(−1)^(ℓ/2+1)`.
///
/// Planar graphs must have no boundary vertices; the outer face is left
/// unconstrained. On a torus every face is constrained.
pub fn kasteleyn_signs(g: &Graph) -> Result<Vec<f64>> {
    if g.vertices.iter().any(|v| v.boundary) {
        return Err(DimerError::InvalidGraph("signs need a graph without boundary vertices".into()));
    }
    let ne = g.num_edges();
    let nf = g.num_faces();
    let mut sign = vec![0.0f64; ne];
    // primal spanning tree
    let mut seen = vec![false; g.num_vertices()];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(v) = queue.pop_front() {
        for &e in &g.incident[v] {
            let u = g.edges[e].other(v);
            if !seen[u] {
                seen[u] = true;
                sign[e] = 1.0;
                queue.push_back(u);
            }
        }
    }
    // dual spanning tree over the remaining edges
    let root = if g.is_torus() { 0 } else { g.f0 };
    let mut parent_edge = vec![usize::MAX; nf];
    let mut order = Vec::with_capacity(nf);
    let mut fseen = vec![false; nf];
    fseen[root] = true;
    let adj = g.dual_adjacency();
    let mut queue = VecDeque::from([root]);
    while let Some(f) = queue.pop_front() {
        order.push(f);
        for &(e, h) in &adj[f] {
            if sign[e] == 0.0 && !fseen[h] {
                fseen[h] = true;
                parent_edge[h] = e;
                queue.push_back(h);
            }
        }
    }
    for (e, s) in sign.iter_mut().enumerate() {
        if *s == 0.0 && !parent_edge.contains(&e) {
            *s = 1.0;
        }
    }
    for &f in order.iter().rev() {
        if f == root {
            continue;
        }
        let pe = parent_edge[f];
        let darts = &g.faces[f].darts;
        let mut prod = 1.0;
        for d in darts {
            if d.edge != pe {
                prod *= sign[d.edge];
            }
        }
        sign[pe] = face_target(darts.len()) / prod;
    }
    debug_assert!(sign.iter().all(|&s| s == 1.0 || s == -1.0));
    Ok(sign)
}

fn face_target(darts: usize) -> f64 {
    if (darts / 2) % 2 == 0 {
        -1.0
    } else {
        1.0
    }
}

/// Whether `sign` satisfies the Kasteleyn condition on every constrained face.
pub fn is_kasteleyn(g: &Graph, sign: &[f64]) -> bool {
    (0..g.num_faces()).all(|f| {
        let face = &g.faces[f];
        if !g.is_torus() && face.boundary {
            return true;
        }
        let prod: f64 = face.darts.iter().map(|d| sign[d.edge]).product();
        prod == face_target(face.darts.len())
    })
}

/// Partition function of a planar graph with boundary vertices, summed over
/// all states of the boundary edges.
pub fn kasteleyn_count(g: &Graph) -> Result<f64> {
    Ok(log_kasteleyn_count(g)?.exp())
}

/// Logarithm of [`kasteleyn_count`]; `-inf` when there is no cover.
pub fn log_kasteleyn_count(g: &Graph) -> Result<f64> {
    log_kasteleyn_count_fixed(g, &vec![None; g.num_edges()])
}

/// Log partition function with some boundary edges forced matched
/// (`Some(true)`) or unmatched (`Some(false)`); free ones are summed over.
pub fn log_kasteleyn_count_fixed(g: &Graph, stub_state: &[Option<bool>]) -> Result<f64> {
    if g.is_torus() {
        return Err(DimerError::InvalidGraph("planar counting needs a planar graph".into()));
    }
    let nv = g.num_vertices();
    let mut removed = vec![false; nv];
    let mut fixed_log = 0.0;
    let mut free = Vec::new();
    for e in 0..g.num_edges() {
        if !g.is_boundary_edge(e) {
            continue;
        }
        let ed = &g.edges[e];
        let inner = if g.vertices[ed.white].boundary { ed.black } else { ed.white };
        match stub_state.get(e).copied().flatten() {
            Some(true) => {
                if removed[inner] {
                    return Ok(f64::NEG_INFINITY);
                }
                removed[inner] = true;
                fixed_log += ed.weight.ln();
            }
            Some(false) => {}
            None => free.push(e),
        }
    }
    if free.len() > MAX_FREE_STUBS {
        return Err(DimerError::TooLarge { internal: free.len(), limit: MAX_FREE_STUBS });
    }
    let mut terms = Vec::new();
    sum_stubs(g, &free, 0, &mut removed, fixed_log, &mut terms)?;
    Ok(log_sum_exp(&terms))
}

fn sum_stubs(g: &Graph, free: &[usize], k: usize, removed: &mut [bool], acc: f64, out: &mut Vec<f64>) -> Result<()> {
    if k == free.len() {
        let l = log_count_reduced(g, removed)?;
        if l > f64::NEG_INFINITY {
            out.push(acc + l);
        }
        return Ok(());
    }
    sum_stubs(g, free, k + 1, removed, acc, out)?;
    let ed = &g.edges[free[k]];
    let inner = if g.vertices[ed.white].boundary { ed.black } else { ed.white };
    if !removed[inner] {
        removed[inner] = true;
        sum_stubs(g, free, k + 1, removed, acc + ed.weight.ln(), out)?;
        removed[inner] = false;
    }
    Ok(())
}

pub(crate) fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

/// Log count of covers of the internal vertices not in `removed`, using
/// only internal edges.
fn log_count_reduced(g: &Graph, removed: &[bool]) -> Result<f64> {
    let keep: Vec<usize> = g.internal_vertices().filter(|&v| !removed[v]).collect();
    if keep.is_empty() {
        return Ok(0.0);
    }
    let mut local = vec![usize::MAX; g.num_vertices()];
    for (i, &v) in keep.iter().enumerate() {
        local[v] = i;
    }
    let edges: Vec<usize> = (0..g.num_edges())
        .filter(|&e| local[g.edges[e].white] != usize::MAX && local[g.edges[e].black] != usize::MAX)
        .collect();
    // components
    let n = keep.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &e in &edges {
        let (a, b) = (find(&mut parent, local[g.edges[e].white]), find(&mut parent, local[g.edges[e].black]));
        if a != b {
            parent[a] = b;
        }
    }
    let mut comp_vertices: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        comp_vertices.entry(r).or_default().push(keep[i]);
    }
    let mut comp_edges: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for &e in &edges {
        let r = find(&mut parent, local[g.edges[e].white]);
        comp_edges.entry(r).or_default().push(e);
    }
    let mut total = 0.0;
    for (r, vs) in comp_vertices {
        let whites = vs.iter().filter(|&&v| g.vertices[v].color == Color::White).count();
        if 2 * whites != vs.len() {
            return Ok(f64::NEG_INFINITY);
        }
        let es = comp_edges.remove(&r).unwrap_or_default();
        let l = log_det_component(g, &vs, &es)?;
        if l == f64::NEG_INFINITY {
            return Ok(l);
        }
        total += l;
    }
    Ok(total)
}

fn log_det_component(g: &Graph, vs: &[usize], es: &[usize]) -> Result<f64> {
    let mut local = std::collections::HashMap::new();
    let verts: Vec<Vertex> = vs
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            local.insert(v, i);
            Vertex { color: g.vertices[v].color, pos: g.vertices[v].pos, boundary: false }
        })
        .collect();
    let edges: Vec<Edge> = es
        .iter()
        .map(|&e| {
            let ed = &g.edges[e];
            Edge { white: local[&ed.white], black: local[&ed.black], weight: ed.weight, disp: ed.disp, shift: [0, 0] }
        })
        .collect();
    let cg = Graph::new(verts, edges, None)?;
    let sign = kasteleyn_signs(&cg)?;
    let (rows, cols) = spatial_order(&cg);
    let entries: Vec<(usize, usize, f64)> = cg
        .edges
        .iter()
        .enumerate()
        .map(|(e, ed)| (rows[ed.white], cols[ed.black], sign[e] * ed.weight))
        .collect();
    let (s, l) = banded::banded_log_det(cg.num_vertices() / 2, &entries);
    Ok(if s == 0.0 { f64::NEG_INFINITY } else { l })
}

/// Row index of each white and column index of each black vertex, both
/// sorted by position (y, then x).
fn spatial_order(g: &Graph) -> (Vec<usize>, Vec<usize>) {
    let mut idx = vec![0; g.num_vertices()];
    for color in [Color::White, Color::Black] {
        let mut vs: Vec<usize> = (0..g.num_vertices()).filter(|&v| g.vertices[v].color == color).collect();
        vs.sort_by(|&a, &b| {
            let (p, q) = (g.vertices[a].pos, g.vertices[b].pos);
            p[0].total_cmp(&q[0]).then(p[1].total_cmp(&q[1]))
        });
        for (i, v) in vs.into_iter().enumerate() {
            idx[v] = i;
        }
    }
    (idx.clone(), idx)
}
