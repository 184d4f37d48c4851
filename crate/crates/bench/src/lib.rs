//! Fixtures shared by the benchmarks.

use dimerlab::covers::{for_each_cover, height_function, reference_cover};
use dimerlab::lattice::{planar_patch, presets};
use dimerlab::{BoundaryCondition, DimerCover, Graph};

/// Aztec diamond of order `2m` on the square lattice: the diamond patch at
/// scale `m` with every boundary stub unmatched.
pub fn aztec_patch(m: usize) -> (Graph, Vec<Option<bool>>) {
    let g = planar_patch(&presets::square4(), m, &presets::diamond_region()).expect("diamond patch");
    let states = (0..g.num_edges()).map(|e| g.is_boundary_edge(e).then_some(false)).collect();
    (g, states)
}

/// Boundary heights of any cover compatible with the stub states.
pub fn boundary_of(g: &Graph, states: &[Option<bool>]) -> BoundaryCondition {
    let mut cover = None;
    for_each_cover(g, Some(states), |c| {
        cover = Some(DimerCover::new(c.to_vec()));
        false
    });
    let r = reference_cover(g).expect("reference cover");
    let h = height_function(g, &cover.expect("a compatible cover"), &r).expect("height");
    BoundaryCondition::from_height(g, &h)
}
