//! Self-checks behind `dimerlab verify`. Each check compares two independent
//! computations of the same quantity; the fast tier uses smaller instances.

use std::time::Instant;

use dimerlab::calculus::{boundary_from_field, discretization_error, discretize, extendable};
use dimerlab::covers::{
    count_local_rule_functions, enumerate_covers, for_each_cover, height_function, modified_lipschitz_check,
    newton_polygon, reference_cover,
};
use dimerlab::geometry::{distance_to_polygon_boundary, Point};
use dimerlab::gibbs::{count_covers, cut_along_curve, cutting_rule_sides, partition_function};
use dimerlab::io;
use dimerlab::kasteleyn::{
    characteristic_polynomial, free_energy, kasteleyn_count, log_kasteleyn_count_fixed, ronkin, surface_tension,
    tabulate_sigma, torus_slope_counts, LaurentPolynomial2,
};
use dimerlab::lattice::{planar_patch, presets};
use dimerlab::montecarlo::{concentration_check, coupling_monotonicity_check, run_chain, MeanHeight};
use dimerlab::varsolve::{aligned_mesh, aztec_boundary, compare_with_sampler, solve};
use dimerlab::{BoundaryCondition, DimerCover, FundamentalDomain, GlauberChain, Graph, VariationalProblem, WeightSystem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::parallel::parallel_map;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tier {
    Fast,
    Full,
}

pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    pub secs: f64,
}

type CheckFn = fn(u64, Tier) -> (bool, String);

pub const CHECKS: [(&str, CheckFn); 12] = [
    ("presets", presets_check),
    ("counting", counting),
    ("polynomial", polynomial),
    ("free-energy", free_energy_check),
    ("surface-tension", surface_tension_check),
    ("concavity", concavity),
    ("cutting", cutting),
    ("concentration", concentration),
    ("coupling", coupling),
    ("density", density),
    ("local-rule", local_rule),
    ("variational", variational),
];

/// Checks named by `suite`: a tier (`fast`, `full`, `all`) or one check name.
pub fn select(suite: &str) -> Option<(Vec<(&'static str, CheckFn)>, Tier)> {
    match suite {
        "fast" => Some((CHECKS.iter().copied().filter(|c| c.0 != "variational").collect(), Tier::Fast)),
        "full" | "all" => Some((CHECKS.to_vec(), Tier::Full)),
        name => CHECKS.iter().find(|c| c.0 == name).map(|&c| (vec![c], Tier::Full)),
    }
}

pub fn run(checks: &[(&'static str, CheckFn)], tier: Tier, seed: u64, threads: usize) -> Vec<CheckResult> {
    parallel_map(checks, threads, |&(name, f)| {
        let t = Instant::now();
        let (pass, detail) = match std::panic::catch_unwind(|| f(seed, tier)) {
            Ok(r) => r,
            Err(_) => (false, "check panicked".into()),
        };
        CheckResult { name, pass, detail, secs: t.elapsed().as_secs_f64() }
    })
}

/// Preset files shipped under `presets/`.
const PRESET_FILES: [(&str, &str); 11] = [
    ("square", include_str!("../../../presets/square.json")),
    ("square4", include_str!("../../../presets/square4.json")),
    ("hexagonal", include_str!("../../../presets/hexagonal.json")),
    ("aztec1", include_str!("../../../presets/aztec1.json")),
    ("aztec2", include_str!("../../../presets/aztec2.json")),
    ("aztec3", include_str!("../../../presets/aztec3.json")),
    ("aztec4", include_str!("../../../presets/aztec4.json")),
    ("cycle4", include_str!("../../../presets/cycle4.json")),
    ("diamond", include_str!("../../../presets/diamond.json")),
    ("unit_square", include_str!("../../../presets/unit_square.json")),
    ("aztec_bc", include_str!("../../../presets/aztec_bc.json")),
];

/// Preset files parse; Aztec diamonds have `2^(k(k+1)/2)` covers by both
/// enumeration and determinant; lattice polygons have the expected corners.
fn presets_check(_seed: u64, _tier: Tier) -> (bool, String) {
    let file = |name: &str| PRESET_FILES.iter().find(|f| f.0 == name).map(|f| f.1).unwrap_or("");
    let mut problems = Vec::new();
    for k in 1..=4u32 {
        let want = 1u128 << (k * (k + 1) / 2);
        match io::graph_from_json(file(&format!("aztec{k}"))) {
            Ok(g) => {
                let exact = count_covers(&g).unwrap_or(0);
                let det = kasteleyn_count(&g).unwrap_or(f64::NAN);
                if exact != want || (det - want as f64).abs() > 1e-9 * want as f64 {
                    problems.push(format!("aztec{k}: {exact} covers, determinant {det}"));
                }
            }
            Err(e) => problems.push(format!("aztec{k}: {e}")),
        }
    }
    match io::graph_from_json(file("cycle4")).map(|g| count_covers(&g)) {
        Ok(Ok(2)) => {}
        other => problems.push(format!("cycle4: {other:?}")),
    }
    for (name, corners) in [("square", 4), ("square4", 4), ("hexagonal", 3)] {
        match FundamentalDomain::from_json(file(name)).and_then(|fd| newton_polygon(&fd)) {
            Ok(np) if np.hull.len() == corners => {}
            other => problems.push(format!("{name}: {other:?}")),
        }
    }
    let region = io::region_from_json(file("diamond"));
    if io::region_from_json(file("unit_square")).is_err() || region.is_err() {
        problems.push("region files do not parse".into());
    }
    if let Ok(r) = region {
        let np = newton_polygon(&presets::square4());
        match (io::continuum_boundary_from_json(file("aztec_bc"), Some(&r)), np) {
            (Ok(chi), Ok(np)) if extendable(&np, &chi, 32, 1e-9).is_none() => {}
            _ => problems.push("aztec_bc is not an extendable boundary".into()),
        }
    }
    let detail = if problems.is_empty() { format!("{} files", PRESET_FILES.len()) } else { problems.join("; ") };
    (problems.is_empty(), detail)
}

fn lattice(k: usize) -> FundamentalDomain {
    match k % 3 {
        0 => presets::square4(),
        1 => presets::hexagonal(),
        _ => presets::square(),
    }
}

/// Kasteleyn determinant against exhaustive enumeration on random patches.
fn counting(seed: u64, tier: Tier) -> (bool, String) {
    let want = if tier == Tier::Full { 50 } else { 10 };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    let mut attempts = 0;
    while checked < want && attempts < 10_000 {
        attempts += 1;
        let k = rng.random_range(0..3usize);
        let n = rng.random_range(1..=3usize);
        let (w, h) = (rng.random_range(0.4..2.0) / n as f64 * 2.0, rng.random_range(0.4..2.0) / n as f64 * 2.0);
        let mut jitter = || rng.random_range(-0.15..0.15);
        let region = vec![[jitter(), jitter()], [w + jitter(), jitter()], [w + jitter(), h + jitter()], [jitter(), h + jitter()]];
        let Ok(g) = planar_patch(&lattice(k), n, &region) else { continue };
        let stubs = g.vertices.iter().filter(|v| v.boundary).count();
        if g.num_vertices() > 36 || g.num_internal() < 2 || stubs > 12 {
            continue;
        }
        let ws = WeightSystem::random(&g, &mut rng, 0.2, 5.0);
        let Ok(gw) = ws.apply(&g) else { continue };
        let Ok(z) = partition_function(&gw, &ws, None) else { continue };
        if z == 0.0 {
            continue;
        }
        let Ok(kz) = kasteleyn_count(&gw) else { return (false, "determinant failed".into()) };
        worst = worst.max((kz - z).abs() / z);
        checked += 1;
    }
    (checked == want && worst <= 1e-9, format!("{checked} patches, worst relative error {worst:.2e}"))
}

/// Square-lattice polynomial equals `4 + z + 1/z + w + 1/w` up to shift and signs.
fn polynomial(_seed: u64, _tier: Tier) -> (bool, String) {
    let Ok(p) = characteristic_polynomial(&presets::square4()) else { return (false, "no polynomial".into()) };
    let want = LaurentPolynomial2::from_terms(&[((1, 0), 1.0), ((0, 0), 4.0), ((-1, 0), 1.0), ((0, 1), 1.0), ((0, -1), 1.0)]);
    let low = |q: &LaurentPolynomial2| {
        (q.coeffs.keys().map(|k| k.0).min().unwrap_or(0), q.coeffs.keys().map(|k| k.1).min().unwrap_or(0))
    };
    let (pl, wl) = (low(&p), low(&want));
    let shifted = p.shifted(wl.0 - pl.0, wl.1 - pl.1);
    let mut best = f64::INFINITY;
    for sz in [1, -1] {
        for sw in [1, -1] {
            for c in [1.0, -1.0] {
                let q = shifted.with_signs(sz, sw, c);
                let err = q
                    .coeffs
                    .keys()
                    .chain(want.coeffs.keys())
                    .map(|k| (q.coefficient(k.0, k.1) - want.coefficient(k.0, k.1)).abs())
                    .fold(0.0, f64::max);
                best = best.min(err);
            }
        }
    }
    (best <= 1e-12, format!("P = {p}, coefficient error {best:.1e}"))
}

/// Least-squares fit of `a + b x + c x²`, returning `a`.
fn extrapolate(points: &[(f64, f64)]) -> Option<f64> {
    let a = nalgebra::DMatrix::from_fn(points.len(), 3, |r, c| points[r].0.powi(c as i32));
    let y = nalgebra::DVector::from_iterator(points.len(), points.iter().map(|p| p.1));
    a.svd(true, true).solve(&y, 1e-14).ok().map(|s| s[0])
}

/// Ronkin free energy against torus partition functions extrapolated in 1/n².
fn free_energy_check(_seed: u64, tier: Tier) -> (bool, String) {
    let fd = presets::square();
    let Ok(f) = characteristic_polynomial(&fd).and_then(|p| free_energy(&p)) else { return (false, "quadrature failed".into()) };
    let top = if tier == Tier::Full { 8 } else { 6 };
    let mut points = Vec::new();
    for n in 2..=top {
        let Ok(tc) = torus_slope_counts(&fd, n) else { return (false, format!("torus count failed at n = {n}")) };
        let n2 = (n * n) as f64;
        points.push((1.0 / n2, tc.log_total() / n2));
    }
    let Some(ext) = extrapolate(&points) else { return (false, "fit failed".into()) };
    let err = (f.value - ext).abs();
    let tol = if tier == Tier::Full { 1e-3 } else { 5e-3 };
    (err <= tol, format!("F = {:.8}, extrapolated {ext:.8}, difference {err:.2e}", f.value))
}

/// σ against slope-restricted torus counts.
fn surface_tension_check(_seed: u64, _tier: Tier) -> (bool, String) {
    let fd = presets::square4();
    let Ok(p) = characteristic_polynomial(&fd) else { return (false, "no polynomial".into()) };
    let (Ok(c4), Ok(c6)) = (torus_slope_counts(&fd, 4), torus_slope_counts(&fd, 6)) else {
        return (false, "torus count failed".into());
    };
    let mut worst: f64 = 0.0;
    for (s, t) in [(0.0, 0.0), (0.5, 0.0), (-0.5, 0.0), (0.0, 0.5), (0.0, -0.5)] {
        let Ok(sigma) = surface_tension(&p, s, t) else { return (false, format!("sigma failed at ({s}, {t})")) };
        let at = |tc: &dimerlab::kasteleyn::TorusCounts| {
            let x = 1.0 / (tc.n * tc.n) as f64;
            (x, tc.at_slope(s, t).ln() * x)
        };
        let (a, b) = (at(&c4), at(&c6));
        let direct = (b.1 * a.0 - a.1 * b.0) / (a.0 - b.0);
        worst = worst.max((direct - sigma).abs());
    }
    (worst <= 5e-2, format!("5 slopes, worst difference {worst:.2e}"))
}

/// Concavity of the σ table and midpoint convexity of the Ronkin function.
fn concavity(seed: u64, tier: Tier) -> (bool, String) {
    let (res, pairs) = if tier == Tier::Full { (64, 100) } else { (16, 20) };
    let Ok(table) = characteristic_polynomial(&presets::square4()).and_then(|p| tabulate_sigma(&p, res)) else {
        return (false, "tabulation failed".into());
    };
    let sigma_bad = table.concavity_violations(1e-5).len();
    let Ok(p) = characteristic_polynomial(&presets::hexagonal()) else { return (false, "no polynomial".into()) };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ronkin_bad = 0;
    for _ in 0..pairs {
        let a: [f64; 4] = std::array::from_fn(|_| rng.random_range(-3.0..3.0));
        let r = |x: f64, y: f64| ronkin(&p, x, y).unwrap_or(f64::NAN);
        let mid = r(0.5 * (a[0] + a[2]), 0.5 * (a[1] + a[3]));
        let avg = 0.5 * (r(a[0], a[1]) + r(a[2], a[3]));
        if !(mid <= avg + 1e-5) {
            ronkin_bad += 1;
        }
    }
    (
        sigma_bad == 0 && ronkin_bad == 0,
        format!("sigma grid {res}: {sigma_bad} violations; Ronkin: {ronkin_bad} of {pairs} pairs"),
    )
}

/// Boundary condition of a random cover of `g`.
fn random_boundary(g: &Graph, rng: &mut ChaCha8Rng) -> Option<BoundaryCondition> {
    let r = reference_cover(g).ok()?;
    let covers = enumerate_covers(g, None).ok()?;
    let d = &covers[rng.random_range(0..covers.len())];
    Some(BoundaryCondition::from_height(g, &height_function(g, d, &r).ok()?))
}

/// Partition function of a patch against the product over the two sides of a cut.
fn cutting(seed: u64, tier: Tier) -> (bool, String) {
    let curves: [&[Point]; 4] = [
        &[[1.0, -0.3], [1.0, 2.3]],
        &[[-0.3, 1.0], [2.3, 1.0]],
        &[[0.5, -0.3], [0.5, 1.0], [1.5, 1.0], [1.5, 2.3]],
        &[[1.0, -0.3], [1.0, 1.0], [2.3, 1.0]],
    ];
    let graphs = [
        (planar_patch(&presets::square4(), 1, &[[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0]]), 1.0),
        (planar_patch(&presets::square(), 2, &[[0.05, 0.05], [1.1, 0.05], [1.1, 1.1], [0.05, 1.1]]), 0.55),
        (planar_patch(&presets::hexagonal(), 2, &[[0.0, 0.0], [1.2, 0.0], [1.2, 1.0], [0.0, 1.0]]), 0.53),
    ];
    let draws = if tier == Tier::Full { 3 } else { 1 };
    let mut combos = 0;
    let mut worst: f64 = 0.0;
    for (g, scale) in &graphs {
        let Ok(g) = g else { return (false, "patch construction failed".into()) };
        for curve in curves {
            let curve: Vec<Point> = curve.iter().map(|p| [p[0] * scale, p[1] * scale]).collect();
            let Ok(cut) = cut_along_curve(g, &curve) else { continue };
            for k in 0..draws {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k));
                let ws = WeightSystem::random(g, &mut rng, 0.3, 3.0);
                let Ok(gw) = ws.apply(g) else { continue };
                let Some(bc) = random_boundary(&gw, &mut rng) else { return (false, "no cover".into()) };
                let Ok((lhs, rhs)) = cutting_rule_sides(&gw, &ws, &bc, &cut.cut) else {
                    return (false, "cutting rule evaluation failed".into());
                };
                worst = worst.max((lhs - rhs).abs() / lhs);
                combos += 1;
            }
        }
    }
    (combos > 0 && worst <= 1e-12, format!("{combos} combinations, worst relative error {worst:.2e}"))
}

/// Exact height tails on the order-3 Aztec diamond against `2 exp(−a²/2)`.
fn concentration(seed: u64, tier: Tier) -> (bool, String) {
    let g = presets::aztec(3);
    let ws = WeightSystem::random(&g, &mut ChaCha8Rng::seed_from_u64(seed), 0.5, 2.0);
    let trials = if tier == Tier::Full { 2000 } else { 200 };
    let (mut checks, mut violations) = (0, 0);
    for v in (0..g.num_faces()).filter(|&v| !g.faces[v].boundary) {
        for a in [1.0, 2.0, 3.0] {
            match concentration_check(&g, &ws, None, v, a, trials, seed) {
                Ok(rep) => violations += usize::from(!rep.pass),
                Err(_) => return (false, format!("face {v} failed")),
            }
            checks += 1;
        }
    }
    (violations == 0, format!("{checks} face/threshold checks, {violations} violations"))
}

/// Mean heights are ordered like their boundary conditions.
fn coupling(seed: u64, tier: Tier) -> (bool, String) {
    let Ok(g) = planar_patch(&presets::square4(), 1, &presets::diamond_region()) else { return (false, "no patch".into()) };
    let systems = if tier == Tier::Full { 20 } else { 3 };
    let (mut pairs, mut violations) = (0, 0);
    for k in 0..systems {
        let ws = WeightSystem::random(&g, &mut ChaCha8Rng::seed_from_u64(seed.wrapping_add(k)), 0.2, 5.0);
        let Ok(rep) = coupling_monotonicity_check(&g, &ws) else { return (false, "check failed".into()) };
        pairs += rep.pairs;
        violations += rep.violations.len();
    }
    (violations == 0, format!("{pairs} pairs over {systems} weight systems, {violations} violations"))
}

/// Discretization error scales like 1/n.
fn density(_seed: u64, tier: Tier) -> (bool, String) {
    let fd = presets::square4();
    let h = |p: Point| 0.2 * (3.0 * p[0]).sin() + 0.15 * (2.0 * p[1]).cos();
    let sizes: &[usize] = if tier == Tier::Full { &[8, 16, 32] } else { &[8, 16] };
    let mut consts = Vec::new();
    for &n in sizes {
        let nf = n as f64;
        let Ok(g) = planar_patch(&fd, n, &presets::unit_square_region()) else { return (false, "no patch".into()) };
        let Ok(eta) = boundary_from_field(&g, nf, &h).and_then(|chi| discretize(&g, nf, &h, &chi)) else {
            return (false, format!("discretization failed at n = {n}"));
        };
        consts.push(discretization_error(&g, nf, &h, &eta) * nf);
    }
    let mean = consts.iter().sum::<f64>() / consts.len() as f64;
    let spread = consts.iter().map(|c| (c / mean - 1.0).abs()).fold(0.0, f64::max);
    (spread <= 0.25, format!("n·error = {consts:.3?}, deviation {:.1}%", 100.0 * spread))
}

/// Local-rule functions, covers and modified Lipschitz functions coincide.
fn local_rule(_seed: u64, _tier: Tier) -> (bool, String) {
    let Ok(g) = planar_patch(&presets::square4(), 1, &[[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0]]) else {
        return (false, "no patch".into());
    };
    let (Ok(covers), Ok(local)) = (enumerate_covers(&g, None), count_local_rule_functions(&g)) else {
        return (false, "enumeration failed".into());
    };
    let lipschitz = covers.iter().filter(|d| modified_lipschitz_check(&g, d).is_ok_and(|r| r.holds)).count();
    (
        local == covers.len() as u64 && lipschitz == covers.len(),
        format!("{local} local-rule functions, {} covers, {lipschitz} modified Lipschitz", covers.len()),
    )
}

/// Solver against Monte Carlo mean heights and log Z on Aztec diamonds.
fn variational(seed: u64, tier: Tier) -> (bool, String) {
    let fd = presets::square4();
    let region = presets::diamond_region();
    let chi_c = aztec_boundary();
    let (divisions, res, sizes, sweeps): (usize, usize, &[usize], u64) =
        if tier == Tier::Full { (32, 64, &[16, 32, 64], 20_000) } else { (16, 32, &[16, 32], 4_000) };
    let solution = newton_polygon(&fd).and_then(|np| {
        let table = tabulate_sigma(&characteristic_polynomial(&fd)?, res)?;
        let mesh = aligned_mesh(&region, &np, divisions)?;
        solve(&VariationalProblem::new(mesh, chi_c.clone(), table, np)?, 1e-9)
    });
    let Ok(sol) = solution else { return (false, "solver failed".into()) };
    let value = sol.stats.value;
    let (mut sups, mut gaps) = (Vec::new(), Vec::new());
    for &n in sizes {
        let m = n / 2;
        let Ok(g) = planar_patch(&fd, m, &region) else { return (false, "no patch".into()) };
        let states: Vec<Option<bool>> = (0..g.num_edges()).map(|e| g.is_boundary_edge(e).then_some(false)).collect();
        let Ok(log_z) = log_kasteleyn_count_fixed(&g, &states) else { return (false, "determinant failed".into()) };
        gaps.push((log_z / (m * m) as f64 - value).abs());
        let Some(chi) = unmatched_boundary(&g, &states) else { return (false, "no cover".into()) };
        let ws = WeightSystem::uniform(&g);
        let (Ok(mut top), Ok(mut bottom)) = (
            GlauberChain::from_boundary(&g, &ws, &chi, seed),
            GlauberChain::from_boundary_min(&g, &ws, &chi, seed.wrapping_add(1)),
        ) else {
            return (false, "chain construction failed".into());
        };
        let steps = sweeps * top.num_moves() as u64;
        let runs = [run_chain(&mut top, steps, steps, 10), run_chain(&mut bottom, steps, steps, 10)];
        let mean = MeanHeight::merge(&runs);
        let samples = normalized_means(&g, &mean.mean, m as f64, &|p| chi_c.eval(p));
        match compare_with_sampler(&sol.field, &samples, 0.1) {
            Ok(c) => sups.push(c.sup),
            Err(e) => return (false, e.to_string()),
        }
    }
    let decreasing = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
    let last = if tier == Tier::Full { 0.05 } else { 0.1 };
    let pass = decreasing(&sups) && sups.last().is_some_and(|&s| s <= last) && decreasing(&gaps);
    (pass, format!("F(g) = {value:.5}; sup distance {sups:.4?}; free-energy gap {gaps:.4?}"))
}

fn unmatched_boundary(g: &Graph, states: &[Option<bool>]) -> Option<BoundaryCondition> {
    let mut cover = None;
    for_each_cover(g, Some(states), |c| {
        cover = Some(DimerCover::new(c.to_vec()));
        false
    });
    let r = reference_cover(g).ok()?;
    Some(BoundaryCondition::from_height(g, &height_function(g, &cover?, &r).ok()?))
}

/// Interior face means scaled by `1/m`, aligned to the continuum boundary by
/// the median offset on boundary faces.
fn normalized_means(g: &Graph, mean: &[f64], m: f64, chi: &dyn Fn(Point) -> f64) -> Vec<(Point, f64)> {
    let mut offsets: Vec<f64> = g.boundary_faces().iter().map(|&f| mean[f] / m - chi(g.faces[f].centroid)).collect();
    offsets.sort_by(f64::total_cmp);
    let off = offsets[offsets.len() / 2];
    let region = presets::diamond_region();
    (0..g.num_faces())
        .filter(|&f| !g.faces[f].boundary && distance_to_polygon_boundary(g.faces[f].centroid, &region) >= 0.1)
        .map(|f| (g.faces[f].centroid, mean[f] / m - off))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_resolve() {
        assert_eq!(select("fast").unwrap().0.len(), CHECKS.len() - 1);
        assert_eq!(select("all").unwrap().0.len(), CHECKS.len());
        assert_eq!(select("coupling").unwrap().0[0].0, "coupling");
        assert!(select("nonsense").is_none());
    }

    #[test]
    fn cheap_checks_pass() {
        for (name, f) in CHECKS.iter().filter(|c| ["presets", "polynomial", "local-rule", "coupling"].contains(&c.0)) {
            let (pass, detail) = f(3, Tier::Fast);
            assert!(pass, "{name}: {detail}");
        }
    }
}
