//! Dimer covers as 1-chains, height functions, slopes, Newton polygons and
//! absolute height functions.
//!
//! Sign convention: with every edge oriented from white to black, a height
//! function of `D` relative to `D'` jumps by `[e ∈ D] − [e ∈ D']` from the
//! face on the right of `e` to the face on the left.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{DimerError, Result};
use crate::geometry::{convex_hull_i64, half_planes, Point};
use crate::gibbs::BoundaryCondition;
use crate::lattice::{torus_quotient, FundamentalDomain, Graph};

/// Default limit on internal vertices for exhaustive enumeration.
pub const ENUMERATION_GUARD: usize = 40;

/// A perfect matching of the internal vertices, stored as sorted edge ids.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DimerCover {
    pub edges: Vec<usize>,
}

impl DimerCover {
    pub fn new(mut edges: Vec<usize>) -> DimerCover {
        edges.sort_unstable();
        DimerCover { edges }
    }

    pub fn from_mask(mask: &[bool]) -> DimerCover {
        DimerCover { edges: (0..mask.len()).filter(|&e| mask[e]).collect() }
    }

    pub fn mask(&self, num_edges: usize) -> Vec<bool> {
        let mut m = vec![false; num_edges];
        for &e in &self.edges {
            m[e] = true;
        }
        m
    }

    pub fn contains(&self, e: usize) -> bool {
        self.edges.binary_search(&e).is_ok()
    }

    /// Product of edge weights.
    pub fn weight(&self, g: &Graph) -> f64 {
        self.edges.iter().map(|&e| g.edges[e].weight).product()
    }

    pub fn log_weight(&self, g: &Graph) -> f64 {
        self.edges.iter().map(|&e| g.edges[e].weight.ln()).sum()
    }

    /// Unmatched boundary vertices (the set δD).
    pub fn unmatched_boundary(&self, g: &Graph) -> Vec<usize> {
        let mut matched = vec![false; g.num_vertices()];
        for &e in &self.edges {
            matched[g.edges[e].white] = true;
            matched[g.edges[e].black] = true;
        }
        (0..g.num_vertices()).filter(|&v| g.vertices[v].boundary && !matched[v]).collect()
    }

    /// Checks that every internal vertex meets exactly one edge and every
    /// boundary vertex at most one.
    pub fn is_valid(&self, g: &Graph) -> bool {
        let mut deg = vec![0u32; g.num_vertices()];
        for &e in &self.edges {
            if e >= g.num_edges() {
                return false;
            }
            deg[g.edges[e].white] += 1;
            deg[g.edges[e].black] += 1;
        }
        (0..g.num_vertices()).all(|v| if g.vertices[v].boundary { deg[v] <= 1 } else { deg[v] == 1 })
    }
}

/// Integer function on faces. On a torus the values live on face
/// representatives and `monodromy = (s, t)` records the change along the
/// horizontal and vertical period.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeightFunction {
    pub values: Vec<i64>,
    pub f0: usize,
    pub monodromy: Option<[i64; 2]>,
}

impl HeightFunction {
    pub fn boundary_values(&self, g: &Graph) -> Vec<(usize, i64)> {
        g.boundary_faces().into_iter().map(|f| (f, self.values[f])).collect()
    }

    /// Values divided by the graph scale.
    pub fn normalized(&self, g: &Graph) -> Vec<f64> {
        self.values.iter().map(|&v| v as f64 / g.scale).collect()
    }
}

/// Signed multiplicities `[e ∈ d] − [e ∈ r]`.
pub fn chain_difference(g: &Graph, d: &DimerCover, r: &DimerCover) -> Vec<i64> {
    let mut c = vec![0i64; g.num_edges()];
    for &e in &d.edges {
        c[e] += 1;
    }
    for &e in &r.edges {
        c[e] -= 1;
    }
    c
}

/// Intersection numbers of the cycle `c` with the two seams.
pub fn monodromy_of_chain(g: &Graph, c: &[i64]) -> [i64; 2] {
    let (mut s, mut t) = (0, 0);
    for (e, ed) in g.edges.iter().enumerate() {
        s -= c[e] * ed.shift[1];
        t += c[e] * ed.shift[0];
    }
    [s, t]
}

/// Integrates a cycle over the dual graph from `f0`.
pub fn integrate_chain(g: &Graph, c: &[i64]) -> Result<HeightFunction> {
    let m = if g.is_torus() { monodromy_of_chain(g, c) } else { [0, 0] };
    let jump = |e: usize| c[e] + g.edge_lift[e][0] * m[0] + g.edge_lift[e][1] * m[1];
    let adj = g.dual_adjacency();
    let mut h = vec![i64::MIN; g.num_faces()];
    h[g.f0] = 0;
    let mut queue = VecDeque::from([g.f0]);
    while let Some(f) = queue.pop_front() {
        for &(e, other) in &adj[f] {
            let expected = if g.left[e] == f { h[f] - jump(e) } else { h[f] + jump(e) };
            if g.left[e] == g.right[e] {
                if jump(e) != 0 {
                    return Err(DimerError::InconsistentChain { edge: e });
                }
                continue;
            }
            if h[other] == i64::MIN {
                h[other] = expected;
                queue.push_back(other);
            } else if h[other] != expected {
                return Err(DimerError::InconsistentChain { edge: e });
            }
        }
    }
    Ok(HeightFunction { values: h, f0: g.f0, monodromy: g.is_torus().then_some(m) })
}

/// Height function of `d` relative to `r`, zero at the reference face.
pub fn height_function(g: &Graph, d: &DimerCover, r: &DimerCover) -> Result<HeightFunction> {
    integrate_chain(g, &chain_difference(g, d, r))
}

/// Slope `(s, t)` of `d` relative to `r` on a torus.
pub fn slope(g: &Graph, d: &DimerCover, r: &DimerCover) -> [i64; 2] {
    monodromy_of_chain(g, &chain_difference(g, d, r))
}

/// Recovers the cover whose height relative to `r` is `h` (planar graphs).
pub fn cover_from_height(g: &Graph, h: &[i64], r: &DimerCover) -> Result<DimerCover> {
    let rm = r.mask(g.num_edges());
    let mut edges = Vec::new();
    for e in 0..g.num_edges() {
        let d = h[g.left[e]] - h[g.right[e]] + i64::from(rm[e]);
        match d {
            0 => {}
            1 => edges.push(e),
            _ => return Err(DimerError::InconsistentChain { edge: e }),
        }
    }
    let d = DimerCover { edges };
    if !d.is_valid(g) {
        return Err(DimerError::InvalidGraph("height function does not come from a cover".into()));
    }
    Ok(d)
}

struct Search<'a> {
    g: &'a Graph,
    matched: Vec<bool>,
    /// Edge that must be used at an internal vertex (from a matched stub).
    forced: Vec<Option<usize>>,
    /// Boundary vertices that must stay unmatched.
    blocked: Vec<bool>,
    stack: Vec<usize>,
    order: Vec<usize>,
}

impl Search<'_> {
    fn run<F: FnMut(&[usize]) -> bool>(&mut self, pos: usize, f: &mut F) -> bool {
        let mut pos = pos;
        while pos < self.order.len() && self.matched[self.order[pos]] {
            pos += 1;
        }
        if pos == self.order.len() {
            return f(&self.stack);
        }
        let v = self.order[pos];
        let cands: Vec<usize> = match self.forced[v] {
            Some(e) => vec![e],
            None => self.g.incident[v].clone(),
        };
        for e in cands {
            let u = self.g.edges[e].other(v);
            if self.matched[u] || self.blocked[u] {
                continue;
            }
            if self.forced[u].is_some_and(|fe| fe != e) {
                continue;
            }
            self.matched[u] = true;
            self.matched[v] = true;
            self.stack.push(e);
            let go_on = self.run(pos + 1, f);
            self.stack.pop();
            self.matched[u] = false;
            self.matched[v] = false;
            if !go_on {
                return false;
            }
        }
        true
    }
}

/// Calls `f` with the edge list (in search order) of every cover whose
/// boundary edges obey `stub_state` (`Some(true)` matched, `Some(false)`
/// unmatched, indexed by edge). Stops early when `f` returns false.
pub fn for_each_cover<F: FnMut(&[usize]) -> bool>(g: &Graph, stub_state: Option<&[Option<bool>]>, mut f: F) {
    let nv = g.num_vertices();
    let mut forced = vec![None; nv];
    let mut blocked = vec![false; nv];
    if let Some(state) = stub_state {
        for (e, st) in state.iter().enumerate() {
            let ed = &g.edges[e];
            let stub = if g.vertices[ed.white].boundary {
                ed.white
            } else if g.vertices[ed.black].boundary {
                ed.black
            } else {
                continue;
            };
            match st {
                Some(true) => {
                    let v = ed.other(stub);
                    if forced[v].is_some_and(|x| x != e) {
                        return;
                    }
                    forced[v] = Some(e);
                }
                Some(false) => blocked[stub] = true,
                None => {}
            }
        }
    }
    let order: Vec<usize> = g.internal_vertices().collect();
    let mut s = Search { g, matched: vec![false; nv], forced, blocked, stack: Vec::new(), order };
    s.run(0, &mut f);
}

/// Boundary-edge states forced by a boundary condition, or `None` if some
/// boundary edge would need a multiplicity outside {0, 1}.
pub fn stub_states_from_bc(g: &Graph, bc: &BoundaryCondition, r: &DimerCover) -> Option<Vec<Option<bool>>> {
    let rm = r.mask(g.num_edges());
    let mut st = vec![None; g.num_edges()];
    for e in 0..g.num_edges() {
        if !g.is_boundary_edge(e) {
            continue;
        }
        let (Some(a), Some(b)) = (bc.get(g.left[e]), bc.get(g.right[e])) else { continue };
        match a - b + i64::from(rm[e]) {
            0 => st[e] = Some(false),
            1 => st[e] = Some(true),
            _ => return None,
        }
    }
    Some(st)
}

/// The reference cover used for heights on `g`: the periodic reference
/// when the graph comes from a fundamental domain, otherwise the first
/// cover found by the search.
pub fn reference_cover(g: &Graph) -> Result<DimerCover> {
    if let (Some(fe), Some(pr)) = (&g.fd_edge, &g.periodic_reference) {
        let d = DimerCover { edges: (0..g.num_edges()).filter(|&e| pr.contains(&fe[e])).collect() };
        if d.is_valid(g) {
            return Ok(d);
        }
    }
    let mut first = None;
    for_each_cover(g, None, |c| {
        first = Some(DimerCover::new(c.to_vec()));
        false
    });
    first.ok_or(DimerError::NoCover)
}

/// All covers (respecting `bc` if given), sorted lexicographically.
pub fn enumerate_covers(g: &Graph, bc: Option<&BoundaryCondition>) -> Result<Vec<DimerCover>> {
    enumerate_covers_with_limit(g, bc, ENUMERATION_GUARD)
}

pub fn enumerate_covers_with_limit(g: &Graph, bc: Option<&BoundaryCondition>, limit: usize) -> Result<Vec<DimerCover>> {
    let internal = g.num_internal();
    if internal > limit {
        return Err(DimerError::TooLarge { internal, limit });
    }
    let mut out = Vec::new();
    match bc {
        None => for_each_cover(g, None, |c| {
            out.push(DimerCover::new(c.to_vec()));
            true
        }),
        Some(bc) => {
            let r = reference_cover(g)?;
            let Some(states) = stub_states_from_bc(g, bc, &r) else { return Ok(out) };
            let mut err = None;
            for_each_cover(g, Some(&states), |c| {
                let d = DimerCover::new(c.to_vec());
                match height_function(g, &d, &r) {
                    Ok(h) => {
                        if bc.matches(&h) {
                            out.push(d);
                        }
                        true
                    }
                    Err(e) => {
                        err = Some(e);
                        false
                    }
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Fundamental-domain edge ids of the lexicographically first cover of G(1).
pub fn periodic_reference(fd: &FundamentalDomain) -> Result<Vec<usize>> {
    let t = torus_quotient(fd, 1)?;
    let covers = enumerate_covers(&t.graph, None)?;
    covers.into_iter().next().map(|c| c.edges).ok_or(DimerError::NoCover)
}

/// Convex lattice polygon of slopes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonPolygon {
    /// Distinct slopes of covers of G(1), sorted.
    pub points: Vec<[i64; 2]>,
    /// Hull vertices, counter-clockwise.
    pub hull: Vec<[i64; 2]>,
    /// Raw seam-crossing exponent of the reference cover; subtracting it
    /// puts the reference slope at the origin.
    pub shift: [i64; 2],
}

impl NewtonPolygon {
    pub fn from_points(mut points: Vec<[i64; 2]>, shift: [i64; 2]) -> NewtonPolygon {
        points.sort();
        points.dedup();
        let hull = convex_hull_i64(&points);
        NewtonPolygon { points, hull, shift }
    }

    pub fn hull_f64(&self) -> Vec<Point> {
        self.hull.iter().map(|p| [p[0] as f64, p[1] as f64]).collect()
    }

    pub fn is_degenerate(&self) -> bool {
        self.hull.len() < 3
    }

    pub fn half_planes(&self) -> Vec<(Point, f64)> {
        half_planes(&self.hull_f64())
    }

    /// Membership with absolute tolerance `tol` on each half-plane
    /// (half-plane normals are edge vectors rotated, not unit vectors).
    pub fn contains(&self, p: Point, tol: f64) -> bool {
        match self.hull.len() {
            0 => false,
            1 => (p[0] - self.hull[0][0] as f64).abs() <= tol && (p[1] - self.hull[0][1] as f64).abs() <= tol,
            2 => {
                let h = self.hull_f64();
                crate::geometry::point_segment_distance(p, h[0], h[1]) <= tol
            }
            _ => self.half_planes().iter().all(|(n, c)| n[0] * p[0] + n[1] * p[1] <= c + tol),
        }
    }

    pub fn centroid(&self) -> Point {
        crate::geometry::centroid(&self.hull_f64())
    }

    /// `max_{p ∈ N} ⟨p, x⟩`.
    pub fn support(&self, x: Point) -> f64 {
        self.hull
            .iter()
            .map(|p| p[0] as f64 * x[0] + p[1] as f64 * x[1])
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Exponent `(−Σ dy, Σ dx)` of a cover of G(1), in fundamental-domain edge ids.
pub fn raw_exponent(fd: &FundamentalDomain, edges: &[usize]) -> [i64; 2] {
    let mut x = [0i64; 2];
    for &e in edges {
        x[0] -= fd.edges[e].offset[1];
        x[1] += fd.edges[e].offset[0];
    }
    x
}

/// Hull of the slopes of all covers of G(1) measured against the first.
pub fn newton_polygon(fd: &FundamentalDomain) -> Result<NewtonPolygon> {
    let t = torus_quotient(fd, 1)?;
    let covers = enumerate_covers(&t.graph, None)?;
    let Some(r) = covers.first() else { return Err(DimerError::NoCover) };
    let points = covers.iter().map(|d| slope(&t.graph, d, r)).collect();
    Ok(NewtonPolygon::from_points(points, raw_exponent(fd, &r.edges)))
}

/// Absolute height function of `d` scaled by the valence `𝒩`: it jumps by
/// `𝒩 [e ∈ D] − 1` across every edge (right face to left face).
pub fn absolute_height(g: &Graph, d: &DimerCover) -> Result<HeightFunction> {
    if g.is_torus() {
        return Err(DimerError::InvalidGraph("absolute heights are implemented for planar graphs".into()));
    }
    let n = g.internal_valence().map_err(DimerError::NotRegular)? as i64;
    let m = d.mask(g.num_edges());
    let c: Vec<i64> = (0..g.num_edges()).map(|e| n * i64::from(m[e]) - 1).collect();
    integrate_chain(g, &c)
}

/// True iff around every internal vertex the jumps `f(left) − f(right)`
/// consist of one `𝒩 − 1` and `𝒩 − 1` copies of `−1`: going clockwise around
/// black and counter-clockwise around white vertices, the function drops by
/// one per step and rises once, across the dimer.
pub fn check_local_rule(g: &Graph, f: &[i64]) -> bool {
    let Ok(n) = g.internal_valence() else { return false };
    let n = n as i64;
    for v in g.internal_vertices() {
        let mut big = 0;
        for &e in &g.incident[v] {
            match f[g.left[e]] - f[g.right[e]] {
                j if j == n - 1 => big += 1,
                -1 => {}
                _ => return false,
            }
        }
        if big != 1 {
            return false;
        }
    }
    true
}

/// Counts functions on faces with `f(f0) = 0` that satisfy the local rule,
/// by a search over face values that never looks at edge subsets.
pub fn count_local_rule_functions(g: &Graph) -> Result<u64> {
    let n = g.internal_valence().map_err(DimerError::NotRegular)? as i64;
    let adj = g.dual_adjacency();
    // BFS order of faces and the tree edge used to reach each one
    let mut order = vec![g.f0];
    let mut via = vec![usize::MAX; g.num_faces()];
    let mut seen = vec![false; g.num_faces()];
    seen[g.f0] = true;
    let mut i = 0;
    while i < order.len() {
        let f = order[i];
        for &(e, o) in &adj[f] {
            if !seen[o] {
                seen[o] = true;
                via[o] = e;
                order.push(o);
            }
        }
        i += 1;
    }
    let mut rank = vec![0usize; g.num_faces()];
    for (k, &f) in order.iter().enumerate() {
        rank[f] = k;
    }
    // a vertex can be checked once its last face (by rank) is assigned
    let mut check_at: Vec<Vec<usize>> = vec![Vec::new(); order.len()];
    for v in g.internal_vertices() {
        let last = g.incident[v]
            .iter()
            .flat_map(|&e| [rank[g.left[e]], rank[g.right[e]]])
            .max()
            .unwrap_or(0);
        check_at[last].push(v);
    }
    // edges whose jump can be checked when the later face is assigned
    let mut edges_at: Vec<Vec<usize>> = vec![Vec::new(); order.len()];
    for e in 0..g.num_edges() {
        edges_at[rank[g.left[e]].max(rank[g.right[e]])].push(e);
    }

    fn rec(
        k: usize,
        vals: &mut Vec<i64>,
        ctx: &(&Graph, &[usize], &[usize], &[Vec<usize>], &[Vec<usize>], i64),
    ) -> u64 {
        let (g, order, via, check_at, edges_at, n) = *ctx;
        if k == order.len() {
            return 1;
        }
        let f = order[k];
        let e = via[f];
        let mut total = 0;
        for jump in [n - 1, -1] {
            // jump is f(left) − f(right)
            let v = if g.left[e] == f { vals[g.right[e]] + jump } else { vals[g.left[e]] - jump };
            vals[f] = v;
            let ok_edges = edges_at[k].iter().all(|&x| {
                let j = vals[g.left[x]] - vals[g.right[x]];
                j == n - 1 || j == -1
            });
            let ok_vertices = ok_edges
                && check_at[k].iter().all(|&u| {
                    g.incident[u].iter().filter(|&&x| vals[g.left[x]] - vals[g.right[x]] == n - 1).count() == 1
                });
            if ok_vertices {
                total += rec(k + 1, vals, ctx);
            }
        }
        vals[f] = i64::MIN;
        total
    }
    let mut vals = vec![i64::MIN; g.num_faces()];
    vals[g.f0] = 0;
    let ok0 = edges_at[0].iter().all(|&x| {
        let j = vals[g.left[x]] - vals[g.right[x]];
        j == n - 1 || j == -1
    });
    if !ok0 {
        return Ok(0);
    }
    let ctx = (g, &order[..], &via[..], &check_at[..], &edges_at[..], n);
    Ok(rec(1, &mut vals, &ctx))
}

/// Outcome of the modified Lipschitz check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LipschitzReport {
    pub holds: bool,
    pub pairs_checked: usize,
    /// Ordered face pairs with no oriented dual path.
    pub unreachable: usize,
}

/// Lengths of shortest oriented dual paths from `src`; oriented steps cross
/// an edge from its right face to its left face (clockwise around the black
/// end, counter-clockwise around the white end).
pub fn oriented_distances(g: &Graph, src: usize) -> Vec<usize> {
    let mut out = vec![Vec::new(); g.num_faces()];
    for e in 0..g.num_edges() {
        out[g.right[e]].push(g.left[e]);
    }
    let mut dist = vec![usize::MAX; g.num_faces()];
    dist[src] = 0;
    let mut q = VecDeque::from([src]);
    while let Some(f) = q.pop_front() {
        for &o in &out[f] {
            if dist[o] == usize::MAX {
                dist[o] = dist[f] + 1;
                q.push_back(o);
            }
        }
    }
    dist
}

/// Checks `H(f1) − H(f2) ≤ π(f1, f2)` for the scaled absolute height `H`.
pub fn modified_lipschitz_check(g: &Graph, d: &DimerCover) -> Result<LipschitzReport> {
    let h = absolute_height(g, d)?;
    let mut rep = LipschitzReport { holds: true, pairs_checked: 0, unreachable: 0 };
    for f1 in 0..g.num_faces() {
        let dist = oriented_distances(g, f1);
        for (f2, &dd) in dist.iter().enumerate() {
            if dd == usize::MAX {
                rep.unreachable += 1;
                continue;
            }
            rep.pairs_checked += 1;
            if h.values[f1] - h.values[f2] > dd as i64 {
                rep.holds = false;
            }
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{planar_patch, presets};

    fn square_patch(n: usize) -> Graph {
        let side = 0.5 * n as f64;
        let region = vec![[0.0, 0.0], [side, 0.0], [side, side], [0.0, side]];
        // square4 at scale 1: vertex spacing 1/2, so side n/2 gives an n x n grid
        planar_patch(&presets::square4(), 1, &region).unwrap()
    }

    #[test]
    fn four_cycle_has_two_covers() {
        let g = presets::cycle4();
        let cs = enumerate_covers(&g, None).unwrap();
        assert_eq!(cs, vec![DimerCover::new(vec![0, 2]), DimerCover::new(vec![1, 3])]);
    }

    #[test]
    fn single_stub_has_one_cover() {
        let g = presets::single_stub();
        // a tree has a single face on both sides of its edge
        assert_eq!(g.left[0], g.right[0]);
        let r = reference_cover(&g).unwrap();
        let mut chi = std::collections::BTreeMap::new();
        chi.insert(g.f0, 3);
        let bc = BoundaryCondition::new(&g, chi);
        assert_eq!(enumerate_covers(&g, Some(&bc)).unwrap(), vec![r]);
    }

    #[test]
    fn aztec_counts() {
        for (order, count) in [(1, 2), (2, 8), (3, 64)] {
            assert_eq!(enumerate_covers(&presets::aztec(order), None).unwrap().len(), count);
        }
    }

    #[test]
    fn guard_refuses_large_graphs() {
        let g = presets::aztec(5);
        assert!(matches!(enumerate_covers(&g, None), Err(DimerError::TooLarge { .. })));
    }

    #[test]
    fn four_cycle_heights() {
        let g = presets::cycle4();
        let cs = enumerate_covers(&g, None).unwrap();
        let h = height_function(&g, &cs[0], &cs[0]).unwrap();
        assert!(h.values.iter().all(|&v| v == 0));
        let h01 = height_function(&g, &cs[0], &cs[1]).unwrap();
        let h10 = height_function(&g, &cs[1], &cs[0]).unwrap();
        let inner = 1 - g.f0;
        assert_eq!(h01.values[g.f0], 0);
        assert_eq!(h01.values[inner].abs(), 1);
        assert_eq!(h01.values[inner], -h10.values[inner]);
    }

    #[test]
    fn torus_monodromy_matches_slope_and_sums() {
        let t = torus_quotient(&presets::square(), 2).unwrap();
        let g = &t.graph;
        let cs = enumerate_covers(g, None).unwrap();
        for a in &cs {
            for b in cs.iter().step_by(3) {
                let h = height_function(g, a, b).unwrap();
                assert_eq!(h.monodromy.unwrap(), slope(g, a, b));
            }
        }
        for a in cs.iter().step_by(5) {
            for b in cs.iter().step_by(7) {
                for c in cs.iter().step_by(11) {
                    let ab = slope(g, a, b);
                    let bc = slope(g, b, c);
                    let ac = slope(g, a, c);
                    assert_eq!([ab[0] + bc[0], ab[1] + bc[1]], ac);
                }
            }
        }
    }

    #[test]
    fn newton_polygons() {
        let sq = newton_polygon(&presets::square()).unwrap();
        assert_eq!(sq.hull.len(), 4);
        assert_eq!(sq.points.len(), 4);
        let hex = newton_polygon(&presets::hexagonal()).unwrap();
        assert_eq!(hex.hull.len(), 3);
        assert_eq!(hex.points.len(), 3);
        let sq4 = newton_polygon(&presets::square4()).unwrap();
        assert_eq!(sq4.hull, vec![[-1, 0], [0, -1], [1, 0], [0, 1]]);
        assert!(sq4.points.contains(&[0, 0]));
    }

    #[test]
    fn single_cover_domain_has_point_polygon() {
        use crate::lattice::{Color, FdEdge, FdVertex};
        let fd = FundamentalDomain {
            vertices: vec![
                FdVertex { id: 0, color: Color::White, pos: [0.2, 0.5] },
                FdVertex { id: 1, color: Color::Black, pos: [0.7, 0.5] },
            ],
            edges: vec![FdEdge { white: 0, black: 1, offset: [0, 0], weight: 1.0 }],
        };
        let n = newton_polygon(&fd).unwrap();
        assert_eq!(n.hull, vec![[0, 0]]);
        assert!(n.is_degenerate());
    }

    #[test]
    fn absolute_heights_on_square_patch() {
        let g = square_patch(4);
        assert_eq!(g.internal_valence(), Ok(4));
        let cs = enumerate_covers(&g, None).unwrap();
        let r = &cs[0];
        let hr = absolute_height(&g, r).unwrap();
        for d in cs.iter().step_by(37) {
            let ha = absolute_height(&g, d).unwrap();
            for e in 0..g.num_edges() {
                let j = ha.values[g.left[e]] - ha.values[g.right[e]];
                assert!(j == 3 || j == -1);
            }
            assert!(check_local_rule(&g, &ha.values));
            let h = height_function(&g, d, r).unwrap();
            for f in 0..g.num_faces() {
                assert_eq!(ha.values[f] - hr.values[f], 4 * h.values[f]);
            }
        }
        assert!(!check_local_rule(&g, &vec![0; g.num_faces()]));
    }

    #[test]
    fn local_rule_count_matches_covers_small() {
        let g = square_patch(2);
        let cs = enumerate_covers(&g, None).unwrap();
        assert_eq!(count_local_rule_functions(&g).unwrap(), cs.len() as u64);
    }

    #[test]
    fn modified_lipschitz_on_3x3() {
        let g = square_patch(3);
        for d in enumerate_covers(&g, None).unwrap() {
            let rep = modified_lipschitz_check(&g, &d).unwrap();
            assert!(rep.holds);
        }
    }

    #[test]
    fn cover_height_roundtrip() {
        let g = presets::aztec(2);
        let cs = enumerate_covers(&g, None).unwrap();
        for d in &cs {
            let h = height_function(&g, d, &cs[0]).unwrap();
            assert_eq!(&cover_from_height(&g, &h.values, &cs[0]).unwrap(), d);
        }
    }
}
