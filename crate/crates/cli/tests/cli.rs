//! End-to-end runs of the `dimerlab` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dimerlab::io;
use dimerlab::lattice::presets;
use sha2::{Digest, Sha256};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_dimerlab"));
    c.env_remove("DIMERLAB_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn preset(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../presets").join(name).to_string_lossy().into_owned()
}

/// Fresh scratch directory per test.
fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("dimerlab-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn sha256(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[test]
fn z_counts_the_order_two_aztec_diamond() {
    let o = run(&["z", "--graph", &preset("aztec2.json")]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "8");
}

#[test]
fn z_uses_determinants_for_weighted_graphs() {
    let dir = scratch("weighted");
    let w = dir.join("w.json");
    std::fs::write(&w, r#"{"0": 2.0}"#).unwrap();
    let o = run(&["z", "--graph", &preset("cycle4.json"), "--weights", s(&w)]);
    assert!(o.status.success());
    let z: f64 = stdout(&o).trim().parse().unwrap();
    assert!((z - 3.0).abs() < 1e-12, "{z}");
}

#[test]
fn newton_polygon_of_the_square_lattice() {
    let o = run(&["newton", "--fd", &preset("square.json")]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 4);
    let by_name = run(&["newton", "--fd", "square"]);
    assert_eq!(stdout(&by_name), stdout(&o));
}

#[test]
fn exit_codes_separate_input_from_numeric_failures() {
    let dir = scratch("exit");
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["z"]).status.code(), Some(1));
    assert_eq!(run(&["z", "--graph", s(&dir.join("missing.json"))]).status.code(), Some(1));
    let bad = dir.join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(run(&["z", "--graph", s(&bad)]).status.code(), Some(1));
    assert_eq!(run(&["verify", "nonsense"]).status.code(), Some(1));
    assert_eq!(run(&["sample", "--graph", &preset("aztec2.json"), "--steps", "2.5", "--out", "x"]).status.code(), Some(1));
    // boundary values steeper than any admissible slope
    let steep = dir.join("steep.json");
    std::fs::write(&steep, r#"{"vertex_values": [-5, 0, 5, 0]}"#).unwrap();
    let o = run(&[
        "limit-shape", "--region", &preset("diamond.json"), "--bc", s(&steep), "--fd", "square4", "--grid", "8",
        "--mesh", "4", "--out", s(&dir.join("g.csv")),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!dir.join("g.csv").exists());
}

#[test]
fn sampling_is_reproducible_and_recorded() {
    let dir = scratch("rerun");
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out = dir.join(format!("hbar{k}.csv"));
        let o = run(&[
            "sample", "--graph", &preset("aztec3.json"), "--steps", "2e4", "--burn", "1e3", "--seed", "9", "--chains", "3",
            "--threads", "2", "--out", s(&out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("hbar0.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "sample");
    assert_eq!(manifest["seed"], 9);
    assert_eq!(manifest["outputs"][0]["sha256"], sha256(&outputs[0]));
    assert_eq!(manifest["inputs"][0]["sha256"], sha256(&std::fs::read(preset("aztec3.json")).unwrap()));
    let rows = io::read_xyz_csv(&String::from_utf8(outputs[0].clone()).unwrap()).unwrap();
    assert_eq!(rows.len(), presets::aztec(3).num_faces() - 1);
}

#[test]
fn four_cycle_cover_renders_two_segments() {
    let dir = scratch("cycle");
    let cover = dir.join("c.json");
    std::fs::write(&cover, "[0, 2]").unwrap();
    let out = dir.join("c.svg");
    let o = run(&["render", "--graph", &preset("cycle4.json"), "--cover", s(&cover), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let svg = std::fs::read_to_string(&out).unwrap();
    assert_eq!(svg.matches(r#"class="dimer""#).count(), 2);
    std::fs::write(&cover, "[0, 1]").unwrap();
    assert_eq!(run(&["render", "--graph", &preset("cycle4.json"), "--cover", s(&cover), "--out", s(&out)]).status.code(), Some(1));
}

fn attr(line: &str, name: &str) -> f64 {
    let key = format!(r#" {name}=""#);
    let start = line.find(&key).unwrap() + key.len();
    line[start..].split('"').next().unwrap().parse().unwrap()
}

#[test]
fn sampled_aztec_diamond_has_frozen_corners() {
    let dir = scratch("aztec8");
    let g = presets::aztec(8);
    let graph = dir.join("aztec8.json");
    std::fs::write(&graph, io::graph_to_json(&g).unwrap()).unwrap();
    let (cover, hbar, svg) = (dir.join("cover.json"), dir.join("hbar.csv"), dir.join("cover.svg"));
    let o = run(&[
        "sample", "--graph", s(&graph), "--steps", "2e5", "--burn", "2e5", "--seed", "42", "--out", s(&hbar), "--cover-out",
        s(&cover),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(run(&["render", "--graph", s(&graph), "--cover", s(&cover), "--out", s(&svg)]).status.success());
    let text = std::fs::read_to_string(&svg).unwrap();
    // dimers in the outermost rows at each tip share one orientation; at
    // order 8 the frozen tips are about two lattice steps deep
    let dimers: Vec<[f64; 4]> = text
        .lines()
        .filter(|l| l.contains(r#"class="dimer""#))
        .map(|l| [attr(l, "x1"), attr(l, "y1"), attr(l, "x2"), attr(l, "y2")])
        .collect();
    assert_eq!(dimers.len(), g.num_vertices() / 2);
    let mid = |d: &[f64; 4]| [(d[0] + d[2]) / 2.0 - 256.0, (d[1] + d[3]) / 2.0 - 256.0];
    let horizontal = |d: &[f64; 4]| (d[2] - d[0]).abs() > (d[3] - d[1]).abs();
    let tips: [fn([f64; 2]) -> bool; 4] =
        [|m| m[0] > 200.0, |m| m[0] < -200.0, |m| m[1] > 200.0, |m| m[1] < -200.0];
    let mut orientation = Vec::new();
    for tip in tips {
        let in_tip: Vec<bool> = dimers.iter().filter(|d| tip(mid(d))).map(horizontal).collect();
        assert!(in_tip.len() >= 2);
        assert!(in_tip.iter().all(|&h| h == in_tip[0]), "tip is not frozen");
        orientation.push(in_tip[0]);
    }
    assert_eq!(orientation[0], orientation[1]);
    assert_eq!(orientation[2], orientation[3]);
    assert_ne!(orientation[0], orientation[2]);
    assert_eq!(sha256(text.as_bytes()), AZTEC8_SVG_SHA256);
}

const AZTEC8_SVG_SHA256: &str = "fa131dae6454c17129aa4b165dfa6d075e2cd10cb1b6bef46aa57478fca0c50c";

fn crosses(p: [f64; 4], q: [f64; 4]) -> bool {
    let orient = |a: [f64; 2], b: [f64; 2], c: [f64; 2]| (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    let (a, b, c, d) = ([p[0], p[1]], [p[2], p[3]], [q[0], q[1]], [q[2], q[3]]);
    let eps = 1e-6;
    orient(a, b, c) * orient(a, b, d) < -eps && orient(c, d, a) * orient(c, d, b) < -eps
}

#[test]
fn limit_shape_contours_do_not_cross() {
    let dir = scratch("contours");
    let (sigma, field, svg) = (dir.join("sigma.csv"), dir.join("g.csv"), dir.join("g.svg"));
    assert!(run(&["surface-tension", "--fd", "square4", "--grid", "16", "--out", s(&sigma)]).status.success());
    let o = run(&[
        "limit-shape", "--region", &preset("diamond.json"), "--bc", &preset("aztec_bc.json"), "--sigma", s(&sigma), "--fd",
        "square4", "--mesh", "8", "--out", s(&field), "--svg", s(&svg),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&svg).unwrap();
    let segs: Vec<(f64, [f64; 4])> = text
        .lines()
        .filter(|l| l.contains(r#"class="contour""#))
        .map(|l| (attr(l, "data-level"), [attr(l, "x1"), attr(l, "y1"), attr(l, "x2"), attr(l, "y2")]))
        .collect();
    let levels: std::collections::BTreeSet<u64> = segs.iter().map(|s| s.0.to_bits()).collect();
    assert!(levels.len() >= 10);
    for (i, (la, a)) in segs.iter().enumerate() {
        for (lb, b) in &segs[i + 1..] {
            if la != lb {
                assert!(!crosses(*a, *b), "contours at {la} and {lb} cross");
            }
        }
    }
    // without --fd the polygon comes from the table corners
    let inferred = dir.join("inferred.csv");
    let o = run(&[
        "limit-shape", "--region", &preset("diamond.json"), "--bc", &preset("aztec_bc.json"), "--sigma", s(&sigma), "--mesh",
        "8", "--out", s(&inferred),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read(&inferred).unwrap(), std::fs::read(&field).unwrap());
    // the same picture from the CSV once the mesh is rebuilt
    let again = dir.join("again.svg");
    let o = run(&[
        "render", "--field", s(&field), "--region", &preset("diamond.json"), "--fd", "square4", "--mesh", "8", "--out",
        s(&again),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read_to_string(&again).unwrap(), text);
    let wrong = run(&[
        "render", "--field", s(&field), "--region", &preset("diamond.json"), "--fd", "square4", "--mesh", "4", "--out",
        s(&again),
    ]);
    assert_eq!(wrong.status.code(), Some(1));
}

#[test]
fn verify_reports_and_honours_the_thread_variable() {
    let o = bin().args(["verify", "polynomial"]).env("DIMERLAB_THREADS", "2").output().unwrap();
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("PASS  polynomial"));
    assert_eq!(bin().args(["verify", "local-rule"]).env("DIMERLAB_THREADS", "zero").output().unwrap().status.code(), Some(1));
}

#[test]
fn enumerate_lists_covers_with_probabilities() {
    let dir = scratch("enumerate");
    let out = dir.join("covers.json");
    let o = run(&["enumerate", "--graph", &preset("aztec2.json"), "--out", s(&out)]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "8 covers");
    let rows: Vec<serde_json::Value> = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let total: f64 = rows.iter().map(|r| r["probability"].as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);
    assert!(out.with_extension("json.manifest.json").exists());
}

/// The files under `presets/` are exactly what the library generates;
/// set `DIMERLAB_REGENERATE_PRESETS=1` to rewrite them.
#[test]
fn preset_files_match_the_library() {
    let mut files: Vec<(String, String)> = vec![
        ("square".into(), presets::square().to_json()),
        ("square4".into(), presets::square4().to_json()),
        ("hexagonal".into(), presets::hexagonal().to_json()),
        ("cycle4".into(), io::graph_to_json(&presets::cycle4()).unwrap()),
        ("diamond".into(), io::region_to_json(&presets::diamond_region())),
        ("unit_square".into(), io::region_to_json(&presets::unit_square_region())),
        ("aztec_bc".into(), io::continuum_boundary_to_json(&dimerlab::varsolve::aztec_boundary())),
    ];
    for k in 1..=4 {
        files.push((format!("aztec{k}"), io::graph_to_json(&presets::aztec(k)).unwrap()));
    }
    let regenerate = std::env::var_os("DIMERLAB_REGENERATE_PRESETS").is_some();
    for (name, text) in files {
        let path = preset(&format!("{name}.json"));
        if regenerate {
            std::fs::write(&path, text + "\n").unwrap();
        } else {
            assert_eq!(std::fs::read_to_string(&path).unwrap(), text + "\n", "{name}.json is stale");
        }
    }
}
