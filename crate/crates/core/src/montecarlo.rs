//! Glauber dynamics on dimer covers with fixed boundary heights, Monte
//! Carlo mean heights, and exact checks of height concentration and of
//! monotonicity in the boundary condition.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calculus::graph_extensions;
use crate::covers::{cover_from_height, enumerate_covers, height_function, reference_cover, DimerCover, HeightFunction};
use crate::error::{DimerError, Result};
use crate::gibbs::{BoundaryCondition, WeightSystem};
use crate::lattice::Graph;

/// Snapshot of a chain: cover, its height relative to the reference cover,
/// the (fixed) boundary condition, the seed and the number of steps taken.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainState {
    pub cover: Vec<bool>,
    pub height: Vec<i64>,
    pub boundary: BoundaryCondition,
    pub seed: u64,
    pub steps: u64,
}

#[derive(Clone, Debug)]
struct FaceMove {
    face: usize,
    edges: Vec<usize>,
    first_forward: bool,
    /// `log Π w(odd darts) − log Π w(even darts)`.
    log_ratio: f64,
}

/// Metropolis face-rotation chain. A face is rotatable when the edges along
/// its boundary alternate in and out of the cover; rotating it swaps the
/// two halves and moves the height at that face by one.
#[derive(Clone, Debug)]
pub struct GlauberChain<'a> {
    g: &'a Graph,
    moves: Vec<FaceMove>,
    state: ChainState,
    rng: ChaCha8Rng,
}

impl<'a> GlauberChain<'a> {
    /// Starts from cover `start`; its boundary values stay fixed.
    pub fn new(g: &'a Graph, w: &WeightSystem, start: &DimerCover, seed: u64) -> Result<GlauberChain<'a>> {
        if g.is_torus() {
            return Err(DimerError::InvalidGraph("the sampler works on planar graphs".into()));
        }
        if !start.is_valid(g) {
            return Err(DimerError::NoCover);
        }
        let r = reference_cover(g)?;
        let h = height_function(g, start, &r)?;
        let mut moves = Vec::new();
        for (f, face) in g.faces.iter().enumerate() {
            let k = face.darts.len();
            if face.boundary || k % 2 == 1 {
                continue;
            }
            let edges: Vec<usize> = face.darts.iter().map(|d| d.edge).collect();
            let mut sorted = edges.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != k {
                continue;
            }
            let lw = |i: usize| w.weights[edges[i]].ln();
            let log_ratio = (0..k).map(|i| if i % 2 == 1 { lw(i) } else { -lw(i) }).sum();
            moves.push(FaceMove { face: f, edges, first_forward: face.darts[0].forward, log_ratio });
        }
        let boundary = BoundaryCondition::from_height(g, &h);
        let state = ChainState { cover: start.mask(g.num_edges()), height: h.values, boundary, seed, steps: 0 };
        Ok(GlauberChain { g, moves, state, rng: ChaCha8Rng::seed_from_u64(seed) })
    }

    /// Starts from the largest height function with boundary values `chi`.
    pub fn from_boundary(g: &'a Graph, w: &WeightSystem, chi: &BoundaryCondition, seed: u64) -> Result<GlauberChain<'a>> {
        let ext = graph_extensions(g, chi)?;
        let d = cover_from_height(g, &ext.max.values, &reference_cover(g)?)?;
        GlauberChain::new(g, w, &d, seed)
    }

    /// Starts from the smallest height function with boundary values `chi`.
    pub fn from_boundary_min(g: &'a Graph, w: &WeightSystem, chi: &BoundaryCondition, seed: u64) -> Result<GlauberChain<'a>> {
        let ext = graph_extensions(g, chi)?;
        let d = cover_from_height(g, &ext.min.values, &reference_cover(g)?)?;
        GlauberChain::new(g, w, &d, seed)
    }

    pub fn state(&self) -> &ChainState {
        &self.state
    }

    pub fn height(&self) -> &[i64] {
        &self.state.height
    }

    pub fn cover(&self) -> DimerCover {
        DimerCover::from_mask(&self.state.cover)
    }

    /// Faces the chain may propose.
    pub fn num_moves(&self) -> usize {
        self.moves.len()
    }

    /// Proposes a uniformly random face and rotates it with probability
    /// `min(1, w(D') / w(D))`. Returns whether the cover changed.
    pub fn step(&mut self) -> bool {
        self.flip().is_some()
    }

    /// One step; on a rotation returns the face and its height change.
    fn flip(&mut self) -> Option<(usize, i64)> {
        self.state.steps += 1;
        if self.moves.is_empty() {
            return None;
        }
        let i = self.rng.random_range(0..self.moves.len());
        let m = &self.moves[i];
        let c0 = self.state.cover[m.edges[0]];
        for (j, &e) in m.edges.iter().enumerate() {
            if self.state.cover[e] != (c0 == (j % 2 == 0)) {
                return None;
            }
        }
        let log_ratio = if c0 { m.log_ratio } else { -m.log_ratio };
        if log_ratio < 0.0 && self.rng.random::<f64>() >= log_ratio.exp() {
            return None;
        }
        for &e in &m.edges {
            self.state.cover[e] = !self.state.cover[e];
        }
        // removing forward darts (face on their left) lowers the face
        let removed_forward = if c0 { m.first_forward } else { !m.first_forward };
        let delta = if removed_forward { -1 } else { 1 };
        let face = m.face;
        self.state.height[face] += delta;
        if cfg!(debug_assertions) && self.state.steps % 10_000 == 0 {
            self.assert_consistent();
        }
        Some((face, delta))
    }

    fn assert_consistent(&self) {
        let r = reference_cover(self.g).expect("reference cover");
        let d = self.cover();
        let h = height_function(self.g, &d, &r).expect("valid cover");
        let shift = self.state.height[self.g.f0] - h.values[self.g.f0];
        assert!(h.values.iter().zip(&self.state.height).all(|(a, b)| a + shift == *b), "height drifted from cover");
    }

    pub fn run(&mut self, steps: u64) {
        for _ in 0..steps {
            self.step();
        }
    }
}

/// Monte Carlo mean height with per-face standard errors from batch means.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanHeight {
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Per-batch means, one vector per batch.
    pub batches: Vec<Vec<f64>>,
    pub seed: u64,
    pub steps: u64,
    pub burn_in: u64,
}

impl MeanHeight {
    fn from_batches(batches: Vec<Vec<f64>>, seed: u64, steps: u64, burn_in: u64) -> MeanHeight {
        let nb = batches.len() as f64;
        let nf = batches.first().map_or(0, |b| b.len());
        let mut mean = vec![0.0; nf];
        for b in &batches {
            for (m, v) in mean.iter_mut().zip(b) {
                *m += v / nb;
            }
        }
        let mut stderr = vec![0.0; nf];
        if batches.len() > 1 {
            for b in &batches {
                for ((s, v), m) in stderr.iter_mut().zip(b).zip(&mean) {
                    *s += (v - m) * (v - m);
                }
            }
            for s in &mut stderr {
                *s = (*s / (nb - 1.0) / nb).sqrt();
            }
        }
        MeanHeight { mean, stderr, batches, seed, steps, burn_in }
    }

    /// Pools the batches of independent runs.
    pub fn merge(runs: &[MeanHeight]) -> MeanHeight {
        let batches = runs.iter().flat_map(|r| r.batches.iter().cloned()).collect();
        let steps = runs.iter().map(|r| r.steps).sum();
        let burn_in = runs.iter().map(|r| r.burn_in).sum();
        MeanHeight::from_batches(batches, runs.first().map_or(0, |r| r.seed), steps, burn_in)
    }
}

/// Runs `burn_in` steps, then `steps` more split into `batches` batches,
/// averaging the height after every step by time-weighted accumulation.
pub fn run_chain(chain: &mut GlauberChain<'_>, steps: u64, burn_in: u64, batches: usize) -> MeanHeight {
    chain.run(burn_in);
    let batches = batches.max(1);
    let per = (steps / batches as u64).max(1);
    let nf = chain.state.height.len();
    let mut out = Vec::with_capacity(batches);
    for _ in 0..batches {
        let mut acc = vec![0.0f64; nf];
        // first observation index at which the current value holds
        let mut since = vec![1u64; nf];
        for t in 1..=per {
            if let Some((f, delta)) = chain.flip() {
                let old = chain.state.height[f] - delta;
                acc[f] += old as f64 * (t - since[f]) as f64;
                since[f] = t;
            }
        }
        for f in 0..nf {
            acc[f] += chain.state.height[f] as f64 * (per + 1 - since[f]) as f64;
        }
        out.push(acc.into_iter().map(|a| a / per as f64).collect());
    }
    MeanHeight::from_batches(out, chain.state.seed, per * batches as u64, burn_in)
}

/// Mean height with boundary values `chi`, from a chain started at the
/// maximal extension.
pub fn estimate_mean_height(
    g: &Graph,
    w: &WeightSystem,
    chi: &BoundaryCondition,
    steps: u64,
    burn_in: u64,
    seed: u64,
) -> Result<MeanHeight> {
    let mut chain = GlauberChain::from_boundary(g, w, chi, seed)?;
    Ok(run_chain(&mut chain, steps, burn_in, 20))
}

/// Exact law of `h(v)` under the Boltzmann measure with boundary `chi`
/// (all covers when `None`), heights aligned so the boundary equals `chi`.
pub fn height_distribution(g: &Graph, w: &WeightSystem, chi: Option<&BoundaryCondition>, v: usize) -> Result<Vec<(i64, f64)>> {
    let r = reference_cover(g)?;
    let mut law: BTreeMap<i64, f64> = BTreeMap::new();
    let mut z = 0.0;
    for d in enumerate_covers(g, chi)? {
        let h = aligned_height(g, &height_function(g, &d, &r)?);
        let p = w.cover_weight(&d);
        *law.entry(h[v]).or_insert(0.0) += p;
        z += p;
    }
    if z == 0.0 {
        return Err(DimerError::NoCover);
    }
    Ok(law.into_iter().map(|(k, p)| (k, p / z)).collect())
}

/// Heights shifted so that the smallest boundary face id has value 0, the
/// normalization of `BoundaryCondition`.
fn aligned_height(g: &Graph, h: &HeightFunction) -> Vec<i64> {
    let base = g.boundary_faces().first().map_or(0, |&f| h.values[f]);
    h.values.iter().map(|v| v - base).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub face: usize,
    pub a: f64,
    /// Dual distance from the face to the boundary.
    pub m: usize,
    pub mean: f64,
    /// Exact `P(|h(v) − h̄(v)| > a√m)`.
    pub tail: f64,
    /// Tail frequency in `trials` independent draws from the exact law.
    pub sampled: Option<f64>,
    pub bound: f64,
    pub pass: bool,
}

/// Compares the tail of `h(v)` with `2 exp(−a²/2)`. The exact tail must be
/// below the bound; the sampled tail, when requested, may exceed it by at
/// most three binomial standard errors.
pub fn concentration_check(
    g: &Graph,
    w: &WeightSystem,
    chi: Option<&BoundaryCondition>,
    v: usize,
    a: f64,
    trials: usize,
    seed: u64,
) -> Result<ConcentrationReport> {
    let law = height_distribution(g, w, chi, v)?;
    let m = g.dual_distance_to_boundary()[v];
    let mean: f64 = law.iter().map(|&(k, p)| k as f64 * p).sum();
    let radius = a * (m as f64).sqrt();
    let far = |k: i64| (k as f64 - mean).abs() > radius;
    let tail: f64 = law.iter().filter(|&&(k, _)| far(k)).map(|&(_, p)| p).sum();
    let bound = 2.0 * (-a * a / 2.0).exp();
    let mut pass = tail < bound;
    let sampled = (trials > 0).then(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut hits = 0usize;
        for _ in 0..trials {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut k = law.last().map_or(0, |l| l.0);
            for &(kk, p) in &law {
                acc += p;
                if u < acc {
                    k = kk;
                    break;
                }
            }
            hits += usize::from(far(k));
        }
        let freq = hits as f64 / trials as f64;
        let se = (bound * (1.0 - bound).max(0.0) / trials as f64).sqrt();
        pass &= freq <= bound + 3.0 * se;
        freq
    });
    Ok(ConcentrationReport { face: v, a, m, mean, tail, sampled, bound, pass })
}

/// Exact mean heights for every boundary condition of `g`, aligned with it.
pub fn exact_mean_heights(g: &Graph, w: &WeightSystem) -> Result<Vec<(BoundaryCondition, Vec<f64>)>> {
    let r = reference_cover(g)?;
    let mut acc: BTreeMap<BoundaryCondition, (f64, Vec<f64>)> = BTreeMap::new();
    for d in enumerate_covers(g, None)? {
        let h = height_function(g, &d, &r)?;
        let bc = BoundaryCondition::from_height(g, &h);
        let p = w.cover_weight(&d);
        let e = acc.entry(bc).or_insert_with(|| (0.0, vec![0.0; g.num_faces()]));
        e.0 += p;
        for (s, v) in e.1.iter_mut().zip(aligned_height(g, &h)) {
            *s += p * v as f64;
        }
    }
    Ok(acc.into_iter().map(|(bc, (z, s))| (bc, s.into_iter().map(|x| x / z).collect())).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingViolation {
    pub lower: BoundaryCondition,
    pub upper: BoundaryCondition,
    pub shift: i64,
    pub face: usize,
    pub excess: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingReport {
    pub pairs: usize,
    pub violations: Vec<CouplingViolation>,
}

/// Checks `h̄_f ≤ h̄_g` for boundary conditions `f ≤ g`. Boundary
/// conditions are defined up to a constant, so every ordered pair is made
/// comparable with the smallest shift `k` such that `f ≤ g + k`, and the
/// check is `h̄_f ≤ h̄_g + k` at every face (tolerance 1e-12).
pub fn coupling_monotonicity_check(g: &Graph, w: &WeightSystem) -> Result<CouplingReport> {
    let means = exact_mean_heights(g, w)?;
    let mut report = CouplingReport { pairs: 0, violations: Vec::new() };
    for (f, hf) in &means {
        for (gg, hg) in &means {
            let shift = f.values.iter().map(|(face, v)| v - gg.values[face]).max().unwrap_or(0);
            report.pairs += 1;
            for face in 0..g.num_faces() {
                let excess = hf[face] - hg[face] - shift as f64;
                if excess > 1e-12 {
                    report.violations.push(CouplingViolation {
                        lower: f.clone(),
                        upper: gg.clone(),
                        shift,
                        face,
                        excess,
                    });
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gibbs::{mean_height, partition_function};
    use crate::lattice::{planar_patch, presets};
    use std::collections::HashSet;

    #[test]
    fn uniform_weights_always_accept() {
        let g = presets::aztec(2);
        let w = WeightSystem::uniform(&g);
        let d = enumerate_covers(&g, None).unwrap().remove(0);
        let c = GlauberChain::new(&g, &w, &d, 1).unwrap();
        assert!(c.num_moves() > 0);
        assert!(c.moves.iter().all(|m| m.log_ratio == 0.0));
    }

    #[test]
    fn four_cycle_frequencies_match_weights() {
        let g = presets::cycle4();
        let w = WeightSystem { weights: vec![1.0, 2.0, 3.0, 0.5] };
        let covers = enumerate_covers(&g, None).unwrap();
        let z = partition_function(&g, &w, None).unwrap();
        let target = w.cover_weight(&covers[0]) / z;
        let mut c = GlauberChain::new(&g, &w, &covers[0], 7).unwrap();
        let n = 100_000;
        let mut hits = 0;
        for _ in 0..n {
            c.step();
            hits += usize::from(c.cover() == covers[0]);
        }
        let freq = hits as f64 / n as f64;
        // two-state chain: autocorrelation inflates the variance, allow 5%
        assert!((freq - target).abs() < 0.05 * target.max(1.0 - target), "{freq} vs {target}");
    }

    #[test]
    fn aztec_two_is_ergodic() {
        let g = presets::aztec(2);
        let w = WeightSystem::uniform(&g);
        let d = enumerate_covers(&g, None).unwrap().remove(3);
        let mut c = GlauberChain::new(&g, &w, &d, 3).unwrap();
        let mut seen = HashSet::new();
        for _ in 0..10_000 {
            c.step();
            seen.insert(c.state().cover.clone());
        }
        assert_eq!(seen.len(), 8);
    }

    #[test]
    fn incremental_height_matches_recomputation() {
        let g = planar_patch(&presets::square4(), 2, &presets::diamond_region()).unwrap();
        let w = WeightSystem::uniform(&g);
        let r = reference_cover(&g).unwrap();
        let chi = BoundaryCondition::from_height(&g, &height_function(&g, &r, &r).unwrap());
        let mut c = GlauberChain::from_boundary(&g, &w, &chi, 11).unwrap();
        for _ in 0..50 {
            c.run(97);
            c.assert_consistent();
        }
    }

    #[test]
    fn mean_height_agrees_with_enumeration() {
        let g = presets::aztec(2);
        let w = WeightSystem { weights: (0..g.num_edges()).map(|e| 1.0 + 0.25 * (e % 3) as f64).collect() };
        let exact = mean_height(&g, &w, None).unwrap();
        let d = enumerate_covers(&g, None).unwrap().remove(0);
        let r = reference_cover(&g).unwrap();
        let chi = BoundaryCondition::from_height(&g, &height_function(&g, &d, &r).unwrap());
        let est = estimate_mean_height(&g, &w, &chi, 400_000, 10_000, 5).unwrap();
        // exact heights are zero at f0; align on the boundary face
        let shift = est.mean[g.f0] - exact[g.f0];
        for f in 0..g.num_faces() {
            let diff = (est.mean[f] - shift - exact[f]).abs();
            assert!(diff <= 3.0 * est.stderr[f] + 1e-9, "face {f}: {diff} vs se {}", est.stderr[f]);
        }
    }

    #[test]
    fn single_cover_boundary_has_zero_variance() {
        let g = presets::cycle4();
        let w = WeightSystem::uniform(&g);
        let covers = enumerate_covers(&g, None).unwrap();
        // fix the weight of the other cover to make the chain never leave
        let mut c = GlauberChain::new(&g, &w, &covers[0], 1).unwrap();
        c.moves.clear();
        let m = run_chain(&mut c, 1000, 0, 10);
        assert!(m.stderr.iter().all(|&s| s == 0.0));
        let r = reference_cover(&g).unwrap();
        let h = height_function(&g, &covers[0], &r).unwrap();
        for f in 0..g.num_faces() {
            assert_eq!(m.mean[f], h.values[f] as f64);
        }
    }

    #[test]
    fn concentration_holds_on_aztec_three() {
        let g = presets::aztec(3);
        let w = WeightSystem::uniform(&g);
        for v in 0..g.num_faces() {
            if g.faces[v].boundary {
                continue;
            }
            for a in [1.0, 2.0, 3.0] {
                let rep = concentration_check(&g, &w, None, v, a, 0, 0).unwrap();
                assert!(rep.pass, "{rep:?}");
            }
        }
        let rep = concentration_check(&g, &w, None, 5, 3.0, 20_000, 9).unwrap();
        assert!((rep.bound - 0.0222).abs() < 1e-4);
        assert!(rep.pass);
    }

    #[test]
    fn coupling_is_monotone_on_small_patch() {
        let g = planar_patch(&presets::square4(), 1, &presets::diamond_region()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..3 {
            let w = WeightSystem::random(&g, &mut rng, 0.5, 2.0);
            let rep = coupling_monotonicity_check(&g, &w).unwrap();
            assert!(rep.pairs > 1);
            assert!(rep.violations.is_empty(), "{:?}", rep.violations.first());
        }
    }
}
