//! `dimerlab`: command-line front end to the dimer library.

mod manifest;
mod parallel;
mod render;
mod verify;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use dimerlab::covers::{enumerate_covers, newton_polygon, reference_cover, stub_states_from_bc, ENUMERATION_GUARD};
use dimerlab::gibbs::count_covers;
use dimerlab::io;
use dimerlab::kasteleyn::{characteristic_polynomial, log_kasteleyn_count_fixed, tabulate_sigma};
use dimerlab::lattice::presets;
use dimerlab::montecarlo::{run_chain, MeanHeight};
use dimerlab::varsolve::{aligned_mesh, solve};
use dimerlab::{
    BoundaryCondition, DimerCover, DimerError, FundamentalDomain, GlauberChain, Graph, NewtonPolygon,
    SurfaceTensionTable, VariationalProblem, WeightSystem,
};

use manifest::Recorder;

#[derive(Parser)]
#[command(name = "dimerlab", version, about = "Dimer covers, Kasteleyn counting, surface tension and limit shapes")]
struct Cli {
    /// Worker threads for parallel chains and checks.
    #[arg(long, global = true, env = "DIMERLAB_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the dimer covers of a small planar graph.
    Enumerate(EnumerateArgs),
    /// Partition function of a planar graph.
    Z(ZArgs),
    /// Newton polygon of a fundamental domain.
    Newton(NewtonArgs),
    /// Tabulate the surface tension over the Newton polygon.
    SurfaceTension(SurfaceTensionArgs),
    /// Solve the variational problem for the asymptotic height.
    LimitShape(LimitShapeArgs),
    /// Monte Carlo mean height by Glauber dynamics.
    Sample(SampleArgs),
    /// Run the built-in consistency checks.
    Verify(VerifyArgs),
    /// Draw a cover or a scalar field as SVG.
    Render(RenderArgs),
}

#[derive(Args)]
struct GraphInputs {
    /// Planar graph file.
    #[arg(long)]
    graph: PathBuf,
    /// Edge weights: JSON object from edge id to weight (missing edges get 1).
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Boundary heights: `{"chi": [[face, height], ...]}`.
    #[arg(long)]
    bc: Option<PathBuf>,
}

#[derive(Args)]
struct EnumerateArgs {
    #[command(flatten)]
    inputs: GraphInputs,
    /// Write the covers with their weights and probabilities as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ZArgs {
    #[command(flatten)]
    inputs: GraphInputs,
    /// Print ln Z instead of Z.
    #[arg(long)]
    log: bool,
}

#[derive(Args)]
struct NewtonArgs {
    /// Preset name (square, square4, hexagonal) or fundamental-domain file.
    #[arg(long)]
    fd: String,
}

#[derive(Args)]
struct SurfaceTensionArgs {
    #[arg(long)]
    fd: String,
    /// Grid resolution along each polygon fan triangle.
    #[arg(long, default_value_t = 64)]
    grid: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LimitShapeArgs {
    /// Region file `{"polygon": [[x, y], ...]}`.
    #[arg(long)]
    region: PathBuf,
    /// Boundary values `{"vertex_values": [...]}` at the region corners.
    #[arg(long)]
    bc: PathBuf,
    /// Surface tension table from `surface-tension`; tabulated from `--fd` when absent.
    #[arg(long, required_unless_present = "fd")]
    sigma: Option<PathBuf>,
    /// Lattice; without it the Newton polygon is read off the table's corners.
    #[arg(long)]
    fd: Option<String>,
    /// Table resolution used when no table is given.
    #[arg(long, default_value_t = 64)]
    grid: usize,
    /// Mesh divisions per unit length.
    #[arg(long, default_value_t = 64)]
    mesh: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Number of contour levels in the SVG.
    #[arg(long, default_value_t = 12)]
    contours: usize,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    inputs: GraphInputs,
    /// Measured steps per chain (accepts `1e6`).
    #[arg(long, value_parser = parse_count, default_value = "1e6")]
    steps: u64,
    /// Burn-in steps per chain.
    #[arg(long, value_parser = parse_count, default_value = "1e5")]
    burn: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Independent chains, alternately started from the maximal and minimal extension.
    #[arg(long, default_value_t = 1)]
    chains: usize,
    #[arg(long, default_value_t = 10)]
    batches: usize,
    /// Mean heights at face centroids.
    #[arg(long)]
    out: PathBuf,
    /// Final cover of the first chain.
    #[arg(long)]
    cover_out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// `fast`, `full` (alias `all`) or a single check name.
    #[arg(default_value = "fast")]
    suite: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct RenderArgs {
    /// Graph of the cover to draw.
    #[arg(long, requires = "cover", conflicts_with = "field")]
    graph: Option<PathBuf>,
    /// Cover file: JSON list of edge ids.
    #[arg(long, requires = "graph")]
    cover: Option<PathBuf>,
    /// CSV of `x,y,value` rows.
    #[arg(long, required_unless_present = "cover")]
    field: Option<PathBuf>,
    /// With `--fd` and `--mesh`, rebuilds the limit-shape mesh so the field is
    /// drawn as triangles with contours.
    #[arg(long, requires_all = ["fd", "mesh"])]
    region: Option<PathBuf>,
    #[arg(long)]
    fd: Option<String>,
    #[arg(long)]
    mesh: Option<usize>,
    #[arg(long, default_value_t = 12)]
    contours: usize,
    #[arg(long)]
    out: PathBuf,
}

fn parse_count(s: &str) -> std::result::Result<u64, String> {
    let x: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if !(x >= 0.0 && x.is_finite() && x.fract() == 0.0 && x < 1.8e19) {
        return Err(format!("`{s}` is not a non-negative integer"));
    }
    Ok(x as u64)
}

/// A verification run with at least one failed check.
#[derive(Debug)]
struct ChecksFailed(usize);

impl std::fmt::Display for ChecksFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} check(s) failed", self.0)
    }
}

impl std::error::Error for ChecksFailed {}

/// 1 for unreadable or malformed input, 2 for numerical or domain failures.
fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<ChecksFailed>().is_some() {
        return 2;
    }
    match e.downcast_ref::<DimerError>() {
        None
        | Some(DimerError::MalformedInput(_))
        | Some(DimerError::InvalidGraph(_))
        | Some(DimerError::InvalidDomain(_))
        | Some(DimerError::Embedding(_))
        | Some(DimerError::GridMismatch(_)) => 1,
        Some(_) => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let threads = cli.threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())).max(1);
    let result = match cli.command {
        Command::Enumerate(a) => enumerate(a),
        Command::Z(a) => z(a),
        Command::Newton(a) => newton(a),
        Command::SurfaceTension(a) => surface_tension(a),
        Command::LimitShape(a) => limit_shape(a),
        Command::Sample(a) => sample(a, threads),
        Command::Verify(a) => run_verify(a, threads),
        Command::Render(a) => render_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

struct LoadedGraph {
    graph: Graph,
    weights: WeightSystem,
    bc: Option<BoundaryCondition>,
    uniform: bool,
}

fn load_graph(rec: &mut Recorder, inputs: &GraphInputs) -> Result<LoadedGraph> {
    let graph = io::graph_from_json(&rec.read(&inputs.graph)?).context("reading graph")?;
    let weights = match &inputs.weights {
        Some(p) => WeightSystem::from_json(&rec.read(p)?, graph.num_edges()).context("reading weights")?,
        None => WeightSystem::of(&graph),
    };
    let graph = weights.apply(&graph)?;
    let bc = match &inputs.bc {
        Some(p) => Some(BoundaryCondition::from_json(&graph, &rec.read(p)?).context("reading boundary condition")?),
        None => None,
    };
    let uniform = weights.weights.iter().all(|&w| w == 1.0);
    Ok(LoadedGraph { graph, weights, bc, uniform })
}

fn load_fd(rec: &mut Recorder, spec: &str) -> Result<FundamentalDomain> {
    if let Some(fd) = presets::by_name(spec) {
        return Ok(fd);
    }
    let text = rec.read(Path::new(spec)).with_context(|| format!("`{spec}` is neither a preset nor a readable file"))?;
    Ok(FundamentalDomain::from_json(&text)?)
}

fn enumerate(a: EnumerateArgs) -> Result<()> {
    let mut rec = Recorder::new("enumerate");
    let l = load_graph(&mut rec, &a.inputs)?;
    let covers = enumerate_covers(&l.graph, l.bc.as_ref())?;
    println!("{} covers", covers.len());
    if let Some(out) = &a.out {
        let weights: Vec<f64> = covers.iter().map(|d| l.weights.cover_weight(d)).collect();
        let z: f64 = weights.iter().sum();
        let rows: Vec<serde_json::Value> = covers
            .iter()
            .zip(&weights)
            .map(|(d, &w)| serde_json::json!({ "edges": d.edges, "weight": w, "probability": w / z }))
            .collect();
        rec.write(out, &(serde_json::to_string_pretty(&rows)? + "\n"))?;
    }
    rec.finish()
}

fn z(a: ZArgs) -> Result<()> {
    let mut rec = Recorder::new("z");
    let l = load_graph(&mut rec, &a.inputs)?;
    let g = &l.graph;
    let states = match &l.bc {
        Some(bc) => {
            let r = reference_cover(g)?;
            match stub_states_from_bc(g, bc, &r) {
                Some(s) => s,
                None => {
                    println!("{}", if a.log { "-inf" } else { "0" });
                    return Ok(());
                }
            }
        }
        None => vec![None; g.num_edges()],
    };
    if l.uniform && !a.log && g.num_internal() <= ENUMERATION_GUARD {
        let n = match &l.bc {
            Some(bc) => enumerate_covers(g, Some(bc))?.len() as u128,
            None => count_covers(g)?,
        };
        println!("{n}");
        return Ok(());
    }
    let log_z = log_kasteleyn_count_fixed(g, &states)?;
    if a.log {
        println!("{log_z}");
    } else {
        println!("{}", log_z.exp());
    }
    Ok(())
}

fn newton(a: NewtonArgs) -> Result<()> {
    let mut rec = Recorder::new("newton");
    let fd = load_fd(&mut rec, &a.fd)?;
    let np = newton_polygon(&fd)?;
    for p in &np.hull {
        println!("{} {}", p[0], p[1]);
    }
    Ok(())
}

fn surface_tension(a: SurfaceTensionArgs) -> Result<()> {
    let mut rec = Recorder::new("surface-tension");
    let fd = load_fd(&mut rec, &a.fd)?;
    let table = tabulate_sigma(&characteristic_polynomial(&fd)?, a.grid)?;
    let (lo, hi) = table.range();
    let frozen = table.frozen.iter().filter(|&&f| f).count();
    println!("{} points, sigma in [{:.6}, {:.6}], {frozen} frozen-limit", table.len(), lo + 0.0, hi + 0.0);
    rec.write(&a.out, &table.to_csv())?;
    rec.finish()
}

/// Newton polygon spanned by the integer points of a table file.
fn polygon_of_table(text: &str) -> Result<NewtonPolygon> {
    let mut corners = Vec::new();
    for line in text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        let mut fields = line.split(',').map(|f| f.trim().parse::<f64>());
        let (Some(Ok(s)), Some(Ok(t))) = (fields.next(), fields.next()) else {
            bail!(DimerError::MalformedInput(format!("bad table row `{line}`")));
        };
        if (s - s.round()).abs() < 1e-9 && (t - t.round()).abs() < 1e-9 {
            corners.push([s.round() as i64, t.round() as i64]);
        }
    }
    let np = NewtonPolygon::from_points(corners, [0, 0]);
    if np.is_degenerate() {
        bail!(DimerError::MalformedInput("table does not span a polygon".into()));
    }
    Ok(np)
}

fn limit_shape(a: LimitShapeArgs) -> Result<()> {
    let mut rec = Recorder::new("limit-shape");
    let region = io::region_from_json(&rec.read(&a.region)?).context("reading region")?;
    let chi = io::continuum_boundary_from_json(&rec.read(&a.bc)?, Some(&region)).context("reading boundary values")?;
    let (np, table) = match (&a.fd, &a.sigma) {
        (Some(fd), sigma) => {
            let fd = load_fd(&mut rec, fd)?;
            let p = characteristic_polynomial(&fd)?;
            let table = match sigma {
                Some(path) => SurfaceTensionTable::from_csv(&p.newton_polygon().hull_f64(), &rec.read(path)?)
                    .context("reading surface tension table")?,
                None => tabulate_sigma(&p, a.grid)?,
            };
            (newton_polygon(&fd)?, table)
        }
        (None, Some(path)) => {
            let text = rec.read(path)?;
            let np = polygon_of_table(&text)?;
            let table = SurfaceTensionTable::from_csv(&np.hull_f64(), &text).context("reading surface tension table")?;
            (np, table)
        }
        (None, None) => bail!(DimerError::MalformedInput("limit-shape needs --sigma or --fd".into())),
    };
    let mesh = aligned_mesh(&region, &np, a.mesh)?;
    let problem = VariationalProblem::new(mesh, chi, table, np)?;
    let sol = solve(&problem, a.tol)?;
    println!(
        "F(g) = {:.10}, {} nodes, {} sweeps over {} levels",
        sol.stats.value,
        sol.field.mesh.num_nodes(),
        sol.stats.sweeps,
        sol.stats.levels
    );
    rec.write(&a.out, &sol.field.to_csv())?;
    if let Some(svg) = &a.svg {
        rec.write(svg, &render::mesh_field_svg(&sol.field.mesh, &sol.field.values, a.contours))?;
    }
    rec.finish()
}

fn sample(a: SampleArgs, threads: usize) -> Result<()> {
    if a.chains == 0 {
        bail!(DimerError::MalformedInput("--chains must be positive".into()));
    }
    let mut rec = Recorder::new("sample");
    rec.seed(a.seed);
    let l = load_graph(&mut rec, &a.inputs)?;
    let g = &l.graph;
    let chi = match &l.bc {
        Some(bc) => bc.clone(),
        None => {
            let r = reference_cover(g)?;
            BoundaryCondition::from_height(g, &dimerlab::covers::height_function(g, &r, &r)?)
        }
    };
    let ids: Vec<usize> = (0..a.chains).collect();
    let runs = parallel::parallel_map(&ids, threads, |&k| -> dimerlab::Result<(MeanHeight, DimerCover)> {
        let seed = a.seed.wrapping_add(k as u64);
        let mut chain = if k % 2 == 0 {
            GlauberChain::from_boundary(g, &l.weights, &chi, seed)?
        } else {
            GlauberChain::from_boundary_min(g, &l.weights, &chi, seed)?
        };
        let mean = run_chain(&mut chain, a.steps, a.burn, a.batches);
        Ok((mean, chain.cover()))
    });
    let runs: Vec<(MeanHeight, DimerCover)> = runs.into_iter().collect::<dimerlab::Result<_>>()?;
    let means: Vec<MeanHeight> = runs.iter().map(|r| r.0.clone()).collect();
    let mean = MeanHeight::merge(&means);
    let worst = mean.stderr.iter().copied().fold(0.0, f64::max);
    println!("{} chains, {} measured steps, largest standard error {worst:.4}", a.chains, mean.steps);
    rec.write(&a.out, &io::face_values_csv(g, &mean.mean))?;
    if let Some(path) = &a.cover_out {
        rec.write(path, &(io::cover_to_json(&runs[0].1) + "\n"))?;
    }
    rec.finish()
}

fn run_verify(a: VerifyArgs, threads: usize) -> Result<()> {
    let names: Vec<&str> = verify::CHECKS.iter().map(|c| c.0).collect();
    let (checks, tier) = verify::select(&a.suite).ok_or_else(|| {
        DimerError::MalformedInput(format!("unknown suite `{}`; use fast, full, all or one of {}", a.suite, names.join(", ")))
    })?;
    let results = verify::run(&checks, tier, a.seed, threads);
    let width = results.iter().map(|r| r.name.len()).max().unwrap_or(0);
    for r in &results {
        let status = if r.pass { "PASS" } else { "FAIL" };
        println!("{status}  {:<width$}  {} [{:.1}s]", r.name, r.detail, r.secs);
    }
    let failed = results.iter().filter(|r| !r.pass).count();
    if failed > 0 {
        return Err(ChecksFailed(failed).into());
    }
    Ok(())
}

fn render_cmd(a: RenderArgs) -> Result<()> {
    let mut rec = Recorder::new("render");
    let svg = match (&a.graph, &a.cover, &a.field) {
        (Some(gp), Some(cp), _) => {
            let g = io::graph_from_json(&rec.read(gp)?).context("reading graph")?;
            let d = io::cover_from_json(&g, &rec.read(cp)?).context("reading cover")?;
            if !d.is_valid(&g) {
                return Err(anyhow!(DimerError::MalformedInput("cover is not a perfect matching of the graph".into())));
            }
            render::cover_svg(&g, &d)
        }
        (_, _, Some(fp)) => {
            let samples = io::read_xyz_csv(&rec.read(fp)?).context("reading field")?;
            match (&a.region, &a.fd, a.mesh) {
                (Some(rp), Some(fd), Some(m)) => {
                    let region = io::region_from_json(&rec.read(rp)?).context("reading region")?;
                    let np = newton_polygon(&load_fd(&mut rec, fd)?)?;
                    let mesh = aligned_mesh(&region, &np, m)?;
                    let matches = mesh.nodes.len() == samples.len()
                        && mesh.nodes.iter().zip(&samples).all(|(p, s)| (p[0] - s.0[0]).abs() < 1e-9 && (p[1] - s.0[1]).abs() < 1e-9);
                    if !matches {
                        return Err(anyhow!(DimerError::GridMismatch("field rows do not match the rebuilt mesh".into())));
                    }
                    let values: Vec<f64> = samples.iter().map(|s| s.1).collect();
                    render::mesh_field_svg(&mesh, &values, a.contours)
                }
                _ => render::point_field_svg(&samples),
            }
        }
        _ => bail!(DimerError::MalformedInput("render needs --graph with --cover, or --field".into())),
    };
    rec.write(&a.out, &svg)?;
    rec.finish()
}
