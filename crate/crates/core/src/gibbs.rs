//! Edge weight systems, Boltzmann measures, partition functions with fixed
//! boundary conditions, and the cutting rule.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::covers::{
    enumerate_covers, for_each_cover, height_function, reference_cover, DimerCover, HeightFunction,
    ENUMERATION_GUARD,
};
use crate::error::{DimerError, Result};
use crate::geometry::{cross, segment_intersection, sub, Point};
use crate::lattice::{Color, Edge, Graph, Vertex, VertexKey};

/// Positive weight per edge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSystem {
    pub weights: Vec<f64>,
}

impl WeightSystem {
    pub fn of(g: &Graph) -> WeightSystem {
        WeightSystem { weights: g.weights() }
    }

    pub fn uniform(g: &Graph) -> WeightSystem {
        WeightSystem { weights: vec![1.0; g.num_edges()] }
    }

    /// Independent weights drawn uniformly from `[lo, hi]`.
    pub fn random<R: Rng>(g: &Graph, rng: &mut R, lo: f64, hi: f64) -> WeightSystem {
        WeightSystem { weights: (0..g.num_edges()).map(|_| rng.random_range(lo..=hi)).collect() }
    }

    /// Parses a JSON object mapping edge ids to weights; missing edges get 1.
    pub fn from_json(text: &str, num_edges: usize) -> Result<WeightSystem> {
        let map: BTreeMap<String, f64> =
            serde_json::from_str(text).map_err(|e| DimerError::MalformedInput(e.to_string()))?;
        let mut weights = vec![1.0; num_edges];
        for (k, w) in map {
            let e: usize = k.parse().map_err(|_| DimerError::MalformedInput(format!("bad edge id {k}")))?;
            if e >= num_edges {
                return Err(DimerError::MalformedInput(format!("edge id {e} out of range")));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(DimerError::MalformedInput(format!("edge {e} has non-positive weight")));
            }
            weights[e] = w;
        }
        Ok(WeightSystem { weights })
    }

    pub fn apply(&self, g: &Graph) -> Result<Graph> {
        g.with_weights(&self.weights)
    }

    pub fn cover_weight(&self, d: &DimerCover) -> f64 {
        d.edges.iter().map(|&e| self.weights[e]).product()
    }
}

/// Boundary height function, anchored so that its smallest face id has
/// value 0.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BoundaryCondition {
    pub values: BTreeMap<usize, i64>,
}

impl BoundaryCondition {
    pub fn new(_g: &Graph, values: BTreeMap<usize, i64>) -> BoundaryCondition {
        let base = values.values().next().copied().unwrap_or(0);
        BoundaryCondition { values: values.into_iter().map(|(f, v)| (f, v - base)).collect() }
    }

    pub fn from_height(g: &Graph, h: &HeightFunction) -> BoundaryCondition {
        let vals = g.boundary_faces().into_iter().map(|f| (f, h.values[f])).collect();
        BoundaryCondition::new(g, vals)
    }

    pub fn get(&self, f: usize) -> Option<i64> {
        self.values.get(&f).copied()
    }

    /// Whether `h` restricted to the boundary equals this condition up to an
    /// additive constant.
    pub fn matches(&self, h: &HeightFunction) -> bool {
        let Some((&f, &v)) = self.values.iter().next() else { return true };
        let c = h.values[f] - v;
        self.values.iter().all(|(&f, &v)| h.values[f] - c == v)
    }

    /// Pointwise `self ≤ other` on common faces.
    pub fn le(&self, other: &BoundaryCondition) -> bool {
        self.values.iter().all(|(f, v)| other.values.get(f).is_none_or(|w| v <= w))
    }

    pub fn shifted(&self, k: i64) -> BTreeMap<usize, i64> {
        self.values.iter().map(|(&f, &v)| (f, v + k)).collect()
    }

    pub fn from_json(g: &Graph, text: &str) -> Result<BoundaryCondition> {
        #[derive(Deserialize)]
        struct File {
            chi: Vec<(usize, i64)>,
        }
        let f: File = serde_json::from_str(text).map_err(|e| DimerError::MalformedInput(e.to_string()))?;
        for &(face, _) in &f.chi {
            if face >= g.num_faces() || !g.faces[face].boundary {
                return Err(DimerError::MalformedInput(format!("face {face} is not a boundary face")));
            }
        }
        Ok(BoundaryCondition::new(g, f.chi.into_iter().collect()))
    }

    pub fn to_json(&self) -> String {
        let chi: Vec<(usize, i64)> = self.values.iter().map(|(&f, &v)| (f, v)).collect();
        serde_json::json!({ "chi": chi }).to_string()
    }
}

/// Sum of cover weights by exhaustive enumeration, optionally restricted to
/// a boundary condition. An empty sum is 0.
pub fn partition_function(g: &Graph, w: &WeightSystem, bc: Option<&BoundaryCondition>) -> Result<f64> {
    if bc.is_none() {
        let internal = g.num_internal();
        if internal > ENUMERATION_GUARD {
            return Err(DimerError::TooLarge { internal, limit: ENUMERATION_GUARD });
        }
        let mut z = 0.0;
        for_each_cover(g, None, |c| {
            z += c.iter().map(|&e| w.weights[e]).product::<f64>();
            true
        });
        return Ok(z);
    }
    Ok(enumerate_covers(g, bc)?.iter().map(|d| w.cover_weight(d)).sum())
}

/// Logarithm of the partition function, accumulated in log space.
pub fn log_partition_function(g: &Graph, w: &WeightSystem, bc: Option<&BoundaryCondition>) -> Result<f64> {
    let logs: Vec<f64> = enumerate_covers(g, bc)?
        .iter()
        .map(|d| d.edges.iter().map(|&e| w.weights[e].ln()).sum())
        .collect();
    if logs.is_empty() {
        return Ok(f64::NEG_INFINITY);
    }
    let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(m + logs.iter().map(|l| (l - m).exp()).sum::<f64>().ln())
}

/// Exact number of covers (uniform weights) as an integer.
pub fn count_covers(g: &Graph) -> Result<u128> {
    let internal = g.num_internal();
    if internal > ENUMERATION_GUARD {
        return Err(DimerError::TooLarge { internal, limit: ENUMERATION_GUARD });
    }
    let mut n = 0u128;
    for_each_cover(g, None, |_| {
        n += 1;
        true
    });
    Ok(n)
}

pub fn boltzmann_probability(g: &Graph, w: &WeightSystem, d: &DimerCover) -> Result<f64> {
    let z = partition_function(g, w, None)?;
    if z == 0.0 {
        return Err(DimerError::NoCover);
    }
    Ok(w.cover_weight(d) / z)
}

/// Exact mean height `Σ P(D) h_D` relative to the graph's reference cover.
pub fn mean_height(g: &Graph, w: &WeightSystem, bc: Option<&BoundaryCondition>) -> Result<Vec<f64>> {
    let r = reference_cover(g)?;
    let covers = enumerate_covers(g, bc)?;
    if covers.is_empty() {
        return Err(DimerError::NoCover);
    }
    let mut acc = vec![0.0; g.num_faces()];
    let mut z = 0.0;
    for d in &covers {
        let p = w.cover_weight(d);
        let h = height_function(g, d, &r)?;
        z += p;
        for (a, v) in acc.iter_mut().zip(&h.values) {
            *a += p * *v as f64;
        }
    }
    Ok(acc.into_iter().map(|a| a / z).collect())
}

/// Covers grouped by boundary condition, with their total weight.
pub fn partition_by_boundary(g: &Graph, w: &WeightSystem) -> Result<BTreeMap<BoundaryCondition, (f64, Vec<DimerCover>)>> {
    let r = reference_cover(g)?;
    let mut out: BTreeMap<BoundaryCondition, (f64, Vec<DimerCover>)> = BTreeMap::new();
    for d in enumerate_covers(g, None)? {
        let h = height_function(g, &d, &r)?;
        let bc = BoundaryCondition::from_height(g, &h);
        let entry = out.entry(bc).or_insert((0.0, Vec::new()));
        entry.0 += w.cover_weight(&d);
        entry.1.push(d);
    }
    Ok(out)
}

/// Result of cutting edges: one graph per connected component plus the
/// bookkeeping that relates components to the parent.
#[derive(Clone, Debug)]
pub struct Cut {
    pub components: Vec<Graph>,
    /// For each parent edge, the (component, edge) pieces it became.
    pub edge_image: Vec<Vec<(usize, usize)>>,
    /// For each component face, the parent face it lies in.
    pub face_parent: Vec<Vec<usize>>,
    pub cut_edges: Vec<usize>,
}

impl Cut {
    /// The image φ(D) of a parent cover, one cover per component.
    pub fn map_cover(&self, d: &DimerCover) -> Vec<DimerCover> {
        let mut out = vec![Vec::new(); self.components.len()];
        for &e in &d.edges {
            for &(c, ce) in &self.edge_image[e] {
                out[c].push(ce);
            }
        }
        out.into_iter().map(DimerCover::new).collect()
    }
}

/// Cuts every edge in `cut` into a white half (keeping the weight) and a
/// black half (weight 1), each ending at a fresh boundary vertex.
pub fn cut_edges(g: &Graph, cut: &[usize]) -> Result<Cut> {
    if g.is_torus() {
        return Err(DimerError::InvalidGraph("cutting is defined for planar graphs".into()));
    }
    let mut is_cut = vec![false; g.num_edges()];
    for &a in cut {
        if g.is_boundary_edge(a) {
            return Err(DimerError::BoundaryEdge(a));
        }
        is_cut[a] = true;
    }
    // new vertex and edge lists with inherited keys
    let mut vertices: Vec<(VertexKey, Vertex)> =
        g.vertices.iter().cloned().zip(g.vertex_keys.iter().copied()).map(|(v, k)| (k, v)).collect();
    struct NewEdge {
        key: (usize, u8),
        white: VertexKey,
        black: VertexKey,
        weight: f64,
        fd: Option<usize>,
        parent: usize,
    }
    let mut edges = Vec::new();
    for (e, ed) in g.edges.iter().enumerate() {
        let key = g.edge_keys[e];
        let fd = g.fd_edge.as_ref().map(|f| f[e]);
        let (wk, bk) = (g.vertex_keys[ed.white], g.vertex_keys[ed.black]);
        if !is_cut[e] {
            edges.push(NewEdge { key, white: wk, black: bk, weight: ed.weight, fd, parent: e });
            continue;
        }
        let pw = g.vertices[ed.white].pos;
        let s1 = VertexKey::Cut(key.0, 1);
        let s2 = VertexKey::Cut(key.0, 2);
        vertices.push((
            s1,
            Vertex { color: Color::Black, pos: [pw[0] + 0.45 * ed.disp[0], pw[1] + 0.45 * ed.disp[1]], boundary: true },
        ));
        vertices.push((
            s2,
            Vertex { color: Color::White, pos: [pw[0] + 0.55 * ed.disp[0], pw[1] + 0.55 * ed.disp[1]], boundary: true },
        ));
        edges.push(NewEdge { key: (key.0, 1), white: wk, black: s1, weight: ed.weight, fd, parent: e });
        edges.push(NewEdge { key: (key.0, 2), white: s2, black: bk, weight: 1.0, fd, parent: e });
    }
    vertices.sort_by_key(|(k, _)| *k);
    edges.sort_by_key(|e| e.key);
    let vindex: HashMap<VertexKey, usize> = vertices.iter().enumerate().map(|(i, (k, _))| (*k, i)).collect();

    // components by union-find over the new edge list
    let nv = vertices.len();
    let mut parent: Vec<usize> = (0..nv).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for e in &edges {
        let (a, b) = (find(&mut parent, vindex[&e.white]), find(&mut parent, vindex[&e.black]));
        if a != b {
            parent[a] = b;
        }
    }
    let mut comp_of_root: BTreeMap<usize, usize> = BTreeMap::new();
    let mut comp = vec![0; nv];
    for v in 0..nv {
        let r = find(&mut parent, v);
        let next = comp_of_root.len();
        comp[v] = *comp_of_root.entry(r).or_insert(next);
    }
    let ncomp = comp_of_root.len();
    let mut local = vec![0usize; nv];
    let mut comp_vertices: Vec<Vec<usize>> = vec![Vec::new(); ncomp];
    for v in 0..nv {
        local[v] = comp_vertices[comp[v]].len();
        comp_vertices[comp[v]].push(v);
    }
    let mut components = Vec::with_capacity(ncomp);
    let mut edge_image = vec![Vec::new(); g.num_edges()];
    let mut comp_edges: Vec<Vec<&NewEdge>> = vec![Vec::new(); ncomp];
    for e in &edges {
        comp_edges[comp[vindex[&e.white]]].push(e);
    }
    let mut comp_parent_edge: Vec<Vec<usize>> = Vec::new();
    for c in 0..ncomp {
        let verts: Vec<Vertex> = comp_vertices[c].iter().map(|&v| vertices[v].1.clone()).collect();
        let mut ge = Vec::new();
        for (i, e) in comp_edges[c].iter().enumerate() {
            let (w, b) = (vindex[&e.white], vindex[&e.black]);
            let (pw, pb) = (vertices[w].1.pos, vertices[b].1.pos);
            ge.push(Edge {
                white: local[w],
                black: local[b],
                weight: e.weight,
                disp: sub(pb, pw),
                shift: [0, 0],
            });
            edge_image[e.parent].push((c, i));
        }
        let mut cg = Graph::new(verts, ge, None)?;
        cg.vertex_keys = comp_vertices[c].iter().map(|&v| vertices[v].0).collect();
        cg.edge_keys = comp_edges[c].iter().map(|e| e.key).collect();
        cg.scale = g.scale;
        if g.fd_edge.is_some() {
            cg.fd_edge = Some(comp_edges[c].iter().map(|e| e.fd.unwrap()).collect());
            cg.periodic_reference = g.periodic_reference.clone();
        }
        comp_parent_edge.push(comp_edges[c].iter().map(|e| e.parent).collect());
        components.push(cg);
    }
    let face_parent = components
        .iter()
        .zip(&comp_parent_edge)
        .map(|(cg, pe)| {
            cg.faces
                .iter()
                .map(|f| {
                    let d = f.darts[0];
                    let p = pe[d.edge];
                    if d.forward {
                        g.left[p]
                    } else {
                        g.right[p]
                    }
                })
                .collect()
        })
        .collect();
    let mut cut_sorted = cut.to_vec();
    cut_sorted.sort();
    cut_sorted.dedup();
    Ok(Cut { components, edge_image, face_parent, cut_edges: cut_sorted })
}

/// Cuts one internal edge; the result must stay connected.
pub fn cut_edge(g: &Graph, a: usize) -> Result<(Graph, Cut)> {
    let c = cut_edges(g, &[a])?;
    if c.components.len() != 1 {
        return Err(DimerError::InvalidGraph(format!("edge {a} is a bridge")));
    }
    Ok((c.components[0].clone(), c))
}

/// A curve cut: the cut graph plus the faces met by the curve and the
/// pieces each of them split into.
#[derive(Clone, Debug)]
pub struct CurveCut {
    pub cut: Cut,
    /// Faces met by the curve, in order.
    pub faces: Vec<usize>,
    /// For each met face, the (component, face) pieces it became.
    pub pairing: Vec<(usize, Vec<(usize, usize)>)>,
}

/// Cuts every edge crossed by the polyline `curve`, after checking that the
/// curve avoids vertices, crosses edges transversally and meets each face
/// in one connected piece.
pub fn cut_along_curve(g: &Graph, curve: &[Point]) -> Result<CurveCut> {
    if curve.len() < 2 {
        return Err(DimerError::NotGeneralPosition("curve needs two points".into()));
    }
    let eps = 1e-9;
    for (v, vert) in g.vertices.iter().enumerate() {
        for s in curve.windows(2) {
            if crate::geometry::point_segment_distance(vert.pos, s[0], s[1]) < eps {
                return Err(DimerError::NotGeneralPosition(format!("curve passes through vertex {v}")));
            }
        }
    }
    let mut hits: Vec<(f64, usize, bool)> = Vec::new();
    for (k, s) in curve.windows(2).enumerate() {
        let r = sub(s[1], s[0]);
        for (e, ed) in g.edges.iter().enumerate() {
            let a = g.vertices[ed.white].pos;
            let b = [a[0] + ed.disp[0], a[1] + ed.disp[1]];
            if let Some((t, u)) = segment_intersection(s[0], s[1], a, b) {
                let c = cross(ed.disp, r);
                if c.abs() < eps * crate::geometry::norm(ed.disp) * crate::geometry::norm(r) {
                    return Err(DimerError::NotGeneralPosition(format!("curve is tangent to edge {e}")));
                }
                if u <= eps || u >= 1.0 - eps {
                    return Err(DimerError::NotGeneralPosition(format!("curve meets edge {e} at an end")));
                }
                if (t <= eps && k > 0) || (t >= 1.0 - eps && k + 2 < curve.len()) {
                    return Err(DimerError::NotGeneralPosition(format!("curve bends on edge {e}")));
                }
                if g.is_boundary_edge(e) {
                    return Err(DimerError::NotGeneralPosition(format!("curve crosses boundary edge {e}")));
                }
                // crossing from the right of e to its left when the curve
                // direction has positive component along the left normal
                hits.push((k as f64 + t, e, c > 0.0));
            }
        }
    }
    if hits.is_empty() {
        return Err(DimerError::NotGeneralPosition("curve crosses no edge".into()));
    }
    hits.sort_by(|a, b| a.0.total_cmp(&b.0));
    let side = |e: usize, r_to_l: bool| if r_to_l { (g.right[e], g.left[e]) } else { (g.left[e], g.right[e]) };
    let mut faces = vec![side(hits[0].1, hits[0].2).0];
    for (i, &(_, e, dir)) in hits.iter().enumerate() {
        let (before, after) = side(e, dir);
        if before != *faces.last().unwrap() {
            return Err(DimerError::NotGeneralPosition(format!(
                "face sequence breaks at crossing {i} (edge {e})"
            )));
        }
        faces.push(after);
    }
    let mut seen = faces.clone();
    seen.sort();
    seen.dedup();
    if seen.len() != faces.len() {
        return Err(DimerError::NotGeneralPosition("curve meets a face in more than one piece".into()));
    }
    let crossed: Vec<usize> = hits.iter().map(|h| h.1).collect();
    let cut = cut_edges(g, &crossed)?;
    let pairing = faces
        .iter()
        .map(|&f| {
            let mut pieces = Vec::new();
            for (c, fp) in cut.face_parent.iter().enumerate() {
                for (cf, &p) in fp.iter().enumerate() {
                    if p == f {
                        pieces.push((c, cf));
                    }
                }
            }
            (f, pieces)
        })
        .collect();
    Ok(CurveCut { cut, faces, pairing })
}

/// Both sides of the cutting rule: `Z(Γ, χ)` and the sum over compatible
/// boundary conditions of the products of component partition functions.
pub fn cutting_rule_sides(g: &Graph, w: &WeightSystem, bc: &BoundaryCondition, cut: &Cut) -> Result<(f64, f64)> {
    let lhs = partition_function(g, w, Some(bc))?;
    let pr = reference_cover(g)?;
    let refs = cut.map_cover(&pr);
    // component weights follow the cutting convention (white half keeps w(a))
    let mut groups: Vec<Vec<(Vec<i64>, f64)>> = Vec::new();
    for (c, cg) in cut.components.iter().enumerate() {
        let mut cw = vec![0.0; cg.num_edges()];
        for (pe, imgs) in cut.edge_image.iter().enumerate() {
            for &(cc, ce) in imgs {
                if cc == c {
                    cw[ce] = if cut.cut_edges.binary_search(&pe).is_ok() && cg.edge_keys[ce].1 == 2 {
                        1.0
                    } else {
                        w.weights[pe]
                    };
                }
            }
        }
        let bfaces = cg.boundary_faces();
        let mut by: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
        for d in enumerate_covers(cg, None)? {
            let h = height_function(cg, &d, &refs[c])?;
            let key: Vec<i64> = bfaces.iter().map(|&f| h.values[f]).collect();
            *by.entry(key).or_insert(0.0) += d.edges.iter().map(|&e| cw[e]).product::<f64>();
        }
        groups.push(by.into_iter().collect());
    }
    // process anchored components first
    let mut order: Vec<usize> = (0..cut.components.len()).collect();
    order.sort_by_key(|&c| {
        let anchored = cut.components[c].boundary_faces().iter().any(|&f| bc.get(cut.face_parent[c][f]).is_some());
        (!anchored, c)
    });
    let mut rhs = 0.0;
    let mut fixed: HashMap<usize, i64> = bc.values.iter().map(|(&f, &v)| (f, v)).collect();
    rhs_rec(cut, &groups, &order, 0, &mut fixed, 1.0, &mut rhs);
    Ok((lhs, rhs))
}

fn rhs_rec(
    cut: &Cut,
    groups: &[Vec<(Vec<i64>, f64)>],
    order: &[usize],
    k: usize,
    fixed: &mut HashMap<usize, i64>,
    prod: f64,
    acc: &mut f64,
) {
    if k == order.len() {
        *acc += prod;
        return;
    }
    let c = order[k];
    let cg = &cut.components[c];
    let bfaces = cg.boundary_faces();
    for (vals, z) in &groups[c] {
        // offset from any piece whose parent value is already known
        let offset = bfaces
            .iter()
            .zip(vals)
            .find_map(|(&f, &v)| fixed.get(&cut.face_parent[c][f]).map(|&x| x - v))
            .unwrap_or(0);
        let mut added = Vec::new();
        let mut ok = true;
        for (&f, &v) in bfaces.iter().zip(vals) {
            let p = cut.face_parent[c][f];
            match fixed.get(&p) {
                Some(&x) if x != v + offset => {
                    ok = false;
                    break;
                }
                Some(_) => {}
                None => {
                    fixed.insert(p, v + offset);
                    added.push(p);
                }
            }
        }
        if ok {
            rhs_rec(cut, groups, order, k + 1, fixed, prod * z, acc);
        }
        for p in added {
            fixed.remove(&p);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covers::enumerate_covers;
    use crate::lattice::{planar_patch, presets};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid(nx: usize, ny: usize) -> Graph {
        let region = vec![[0.0, 0.0], [0.5 * nx as f64, 0.0], [0.5 * nx as f64, 0.5 * ny as f64], [0.0, 0.5 * ny as f64]];
        planar_patch(&presets::square4(), 1, &region).unwrap()
    }

    #[test]
    fn four_cycle_partition_function() {
        let g = presets::cycle4();
        let w = WeightSystem { weights: vec![2.0, 3.0, 5.0, 7.0] };
        assert_eq!(partition_function(&g, &w, None).unwrap(), 2.0 * 5.0 + 3.0 * 7.0);
        let cs = enumerate_covers(&g, None).unwrap();
        let p: f64 = cs.iter().map(|d| boltzmann_probability(&g, &w, d).unwrap()).sum();
        assert!((p - 1.0).abs() < 1e-15);
    }

    #[test]
    fn four_cycle_probabilities() {
        let g = presets::cycle4();
        let cs = enumerate_covers(&g, None).unwrap();
        let u = WeightSystem::uniform(&g);
        for d in &cs {
            assert_eq!(boltzmann_probability(&g, &u, d).unwrap(), 0.5);
        }
        let w = WeightSystem { weights: vec![3.0, 1.0, 1.0, 1.0] };
        assert!((boltzmann_probability(&g, &w, &cs[0]).unwrap() - 0.75).abs() < 1e-15);
        assert!((boltzmann_probability(&g, &w, &cs[1]).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn single_cover_probability_is_one() {
        let g = presets::single_stub();
        let cs = enumerate_covers(&g, None).unwrap();
        assert_eq!(boltzmann_probability(&g, &WeightSystem::uniform(&g), &cs[0]).unwrap(), 1.0);
    }

    #[test]
    fn aztec2_uniform_z_and_log_z() {
        let g = presets::aztec(2);
        let u = WeightSystem::uniform(&g);
        assert_eq!(partition_function(&g, &u, None).unwrap(), 8.0);
        assert!((log_partition_function(&g, &u, None).unwrap() - 8f64.ln()).abs() < 1e-14);
        assert_eq!(count_covers(&g).unwrap(), 8);
    }

    #[test]
    fn sum_over_boundary_conditions_is_total() {
        let g = grid(3, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = WeightSystem::random(&g, &mut rng, 0.5, 2.0);
        let total = partition_function(&g, &w, None).unwrap();
        let parts = partition_by_boundary(&g, &w).unwrap();
        let mut s = 0.0;
        for (bc, (z, _)) in &parts {
            let zb = partition_function(&g, &w, Some(bc)).unwrap();
            assert!((zb - z).abs() <= 1e-12 * z);
            s += zb;
        }
        assert!((s - total).abs() <= 1e-12 * total);
    }

    #[test]
    fn mean_height_four_cycle() {
        let g = presets::cycle4();
        let h = mean_height(&g, &WeightSystem::uniform(&g), None).unwrap();
        assert_eq!(h[g.f0], 0.0);
        assert!(h[1 - g.f0].abs() == 0.5);
    }

    #[test]
    fn cut_edge_preserves_weights() {
        let g = grid(4, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let w = WeightSystem::random(&g, &mut rng, 0.5, 2.0);
        let g = w.apply(&g).unwrap();
        let a = (0..g.num_edges()).find(|&e| !g.is_boundary_edge(e)).unwrap();
        let (gp, cut) = cut_edge(&g, a).unwrap();
        assert_eq!(gp.vertices.iter().filter(|v| v.boundary).count(), g.vertices.iter().filter(|v| v.boundary).count() + 2);
        for d in enumerate_covers(&g, None).unwrap() {
            let img = &cut.map_cover(&d)[0];
            assert!(img.is_valid(&gp));
            assert!((img.weight(&gp) - d.weight(&g)).abs() <= 1e-12 * d.weight(&g));
        }
    }

    #[test]
    fn cut_edge_on_cycle_keeps_partition_function() {
        let g = presets::cycle4().with_weights(&[2.0, 3.0, 5.0, 7.0]).unwrap();
        let (gp, cut) = cut_edge(&g, 0).unwrap();
        let image: f64 = enumerate_covers(&g, None)
            .unwrap()
            .iter()
            .map(|d| cut.map_cover(d)[0].weight(&gp))
            .sum();
        assert_eq!(image, partition_function(&g, &WeightSystem::of(&g), None).unwrap());
        // covers of the cut graph where both halves agree
        let agree: f64 = enumerate_covers(&gp, None)
            .unwrap()
            .iter()
            .filter(|d| {
                let halves: Vec<bool> = cut.edge_image[0].iter().map(|&(_, e)| d.contains(e)).collect();
                halves[0] == halves[1]
            })
            .map(|d| d.weight(&gp))
            .sum();
        assert_eq!(agree, image);
    }

    #[test]
    fn cuts_commute() {
        let g = grid(4, 4);
        let internal: Vec<usize> = (0..g.num_edges()).filter(|&e| !g.is_boundary_edge(e)).collect();
        let (a, b) = (internal[3], internal[10]);
        let (ga, _) = cut_edge(&g, a).unwrap();
        let b_in_a = ga.edge_keys.iter().position(|k| *k == (b, 0)).unwrap();
        let (gab, _) = cut_edge(&ga, b_in_a).unwrap();
        let (gb, _) = cut_edge(&g, b).unwrap();
        let a_in_b = gb.edge_keys.iter().position(|k| *k == (a, 0)).unwrap();
        let (gba, _) = cut_edge(&gb, a_in_b).unwrap();
        assert_eq!(gab, gba);
        assert_eq!(gab, cut_edges(&g, &[a, b]).unwrap().components[0]);
    }

    #[test]
    fn boundary_edge_cannot_be_cut() {
        let g = grid(2, 2);
        let e = (0..g.num_edges()).find(|&e| g.is_boundary_edge(e)).unwrap();
        assert!(matches!(cut_edge(&g, e), Err(DimerError::BoundaryEdge(_))));
    }

    #[test]
    fn vertical_line_splits_grid() {
        let g = grid(4, 4);
        let cc = cut_along_curve(&g, &[[1.0, -0.3], [1.0, 2.3]]).unwrap();
        assert_eq!(cc.cut.components.len(), 2);
        for c in &cc.cut.components {
            assert_eq!(c.num_internal(), 8);
        }
        assert_eq!(cc.cut.cut_edges.len(), 4);
        assert_eq!(cc.faces.len(), 5);
        assert!(cc.pairing.iter().all(|(_, p)| p.len() == 2));
    }

    #[test]
    fn single_crossing_curve_matches_cut_edge() {
        let g = grid(4, 4);
        // short segment across the horizontal edge between (0.75,0.75) and (1.25,0.75)
        let cc = cut_along_curve(&g, &[[1.0, 0.6], [1.0, 0.9]]).unwrap();
        assert_eq!(cc.cut.cut_edges.len(), 1);
        let (gp, _) = cut_edge(&g, cc.cut.cut_edges[0]).unwrap();
        assert_eq!(cc.cut.components[0], gp);
    }

    #[test]
    fn curve_through_vertex_rejected() {
        let g = grid(4, 4);
        let r = cut_along_curve(&g, &[[0.75, -0.3], [0.75, 2.3]]);
        assert!(matches!(r, Err(DimerError::NotGeneralPosition(_))));
    }

    #[test]
    fn cutting_rule_on_grid() {
        let g = grid(4, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = WeightSystem::random(&g, &mut rng, 0.5, 2.0);
        let g = w.apply(&g).unwrap();
        let r = reference_cover(&g).unwrap();
        let covers = enumerate_covers(&g, None).unwrap();
        let d = &covers[covers.len() / 3];
        let bc = BoundaryCondition::from_height(&g, &height_function(&g, d, &r).unwrap());
        let cc = cut_along_curve(&g, &[[1.0, -0.3], [1.0, 2.3]]).unwrap();
        let (lhs, rhs) = cutting_rule_sides(&g, &w, &bc, &cc.cut).unwrap();
        assert!(lhs > 0.0);
        assert!((lhs - rhs).abs() <= 1e-12 * lhs, "{lhs} vs {rhs}");
    }
}
