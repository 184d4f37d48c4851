//! Built-in fundamental domains and small graphs.

use super::{Color, Edge, FdEdge, FdVertex, FundamentalDomain, Graph, Vertex};

fn fd(vertices: &[(usize, Color, [f64; 2])], edges: &[(usize, usize, [i64; 2])]) -> FundamentalDomain {
    FundamentalDomain {
        vertices: vertices
            .iter()
            .map(|&(id, color, pos)| FdVertex { id, color, pos })
            .collect(),
        edges: edges
            .iter()
            .map(|&(white, black, offset)| FdEdge { white, black, offset, weight: 1.0 })
            .collect(),
    }
}

/// Square lattice with one white and one black vertex per cell; the lattice
/// is rotated by 45 degrees so each cell holds a single pair.
pub fn square() -> FundamentalDomain {
    fd(
        &[(0, Color::White, [0.25, 0.25]), (1, Color::Black, [0.75, 0.75])],
        &[(0, 1, [0, 0]), (0, 1, [-1, 0]), (0, 1, [0, -1]), (0, 1, [-1, -1])],
    )
}

/// Axis-aligned square lattice with a 2x2 block of vertices per cell.
pub fn square4() -> FundamentalDomain {
    fd(
        &[
            (0, Color::White, [0.25, 0.25]),
            (1, Color::Black, [0.75, 0.25]),
            (2, Color::Black, [0.25, 0.75]),
            (3, Color::White, [0.75, 0.75]),
        ],
        &[
            (0, 1, [0, 0]),
            (0, 1, [-1, 0]),
            (0, 2, [0, 0]),
            (0, 2, [0, -1]),
            (3, 1, [0, 0]),
            (3, 1, [0, 1]),
            (3, 2, [0, 0]),
            (3, 2, [1, 0]),
        ],
    )
}

/// Honeycomb lattice in skew coordinates: two vertices, three edges.
pub fn hexagonal() -> FundamentalDomain {
    fd(
        &[(0, Color::White, [1.0 / 3.0, 1.0 / 3.0]), (1, Color::Black, [2.0 / 3.0, 2.0 / 3.0])],
        &[(0, 1, [0, 0]), (0, 1, [-1, 0]), (0, 1, [0, -1])],
    )
}

pub fn by_name(name: &str) -> Option<FundamentalDomain> {
    match name {
        "square" => Some(square()),
        "square4" => Some(square4()),
        "hexagonal" => Some(hexagonal()),
        _ => None,
    }
}

/// Aztec diamond of the given order as a planar graph without boundary
/// vertices: one vertex per unit square inside |x| + |y| <= order + 1.
pub fn aztec(order: usize) -> Graph {
    let n = order as i64;
    let mut index = std::collections::HashMap::new();
    let mut vertices = Vec::new();
    for b in -n..n {
        for a in -n..n {
            let (x, y) = (a as f64 + 0.5, b as f64 + 0.5);
            if x.abs() + y.abs() <= order as f64 {
                let color = if (a + b).rem_euclid(2) == 0 { Color::White } else { Color::Black };
                index.insert((a, b), vertices.len());
                vertices.push(Vertex { color, pos: [x, y], boundary: false });
            }
        }
    }
    let mut edges = Vec::new();
    for b in -n..n {
        for a in -n..n {
            let Some(&u) = index.get(&(a, b)) else { continue };
            if vertices[u].color != Color::White {
                continue;
            }
            for (da, db) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                if let Some(&v) = index.get(&(a + da, b + db)) {
                    edges.push(Edge {
                        white: u,
                        black: v,
                        weight: 1.0,
                        disp: [da as f64, db as f64],
                        shift: [0, 0],
                    });
                }
            }
        }
    }
    Graph::new(vertices, edges, None).expect("aztec diamond is a valid planar graph")
}

/// The 4-cycle with edges 0..4 in cyclic order.
pub fn cycle4() -> Graph {
    let vertices = vec![
        Vertex { color: Color::White, pos: [0.0, 0.0], boundary: false },
        Vertex { color: Color::Black, pos: [1.0, 0.0], boundary: false },
        Vertex { color: Color::White, pos: [1.0, 1.0], boundary: false },
        Vertex { color: Color::Black, pos: [0.0, 1.0], boundary: false },
    ];
    let e = |w: usize, b: usize, vs: &[Vertex]| Edge {
        white: w,
        black: b,
        weight: 1.0,
        disp: [vs[b].pos[0] - vs[w].pos[0], vs[b].pos[1] - vs[w].pos[1]],
        shift: [0, 0],
    };
    let edges = vec![e(0, 1, &vertices), e(2, 1, &vertices), e(2, 3, &vertices), e(0, 3, &vertices)];
    Graph::new(vertices, edges, None).expect("4-cycle is valid")
}

/// A path of two vertices where the black end is a boundary vertex.
pub fn single_stub() -> Graph {
    let vertices = vec![
        Vertex { color: Color::White, pos: [0.0, 0.0], boundary: false },
        Vertex { color: Color::Black, pos: [1.0, 0.0], boundary: true },
    ];
    let edges = vec![Edge { white: 0, black: 1, weight: 1.0, disp: [1.0, 0.0], shift: [0, 0] }];
    Graph::new(vertices, edges, None).expect("stub is valid")
}

/// Region `|x| + |y| <= 1`.
pub fn diamond_region() -> Vec<[f64; 2]> {
    vec![[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]
}

pub fn unit_square_region() -> Vec<[f64; 2]> {
    vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for f in [square(), square4(), hexagonal()] {
            f.validate().unwrap();
        }
    }

    #[test]
    fn aztec_sizes() {
        for (order, v) in [(1, 4), (2, 12), (3, 24), (4, 40)] {
            let g = aztec(order);
            assert_eq!(g.num_vertices(), v);
            assert_eq!(g.boundary_faces().len(), 1);
        }
    }

    #[test]
    fn cycle4_has_two_faces() {
        let g = cycle4();
        assert_eq!(g.num_faces(), 2);
        assert_eq!(g.boundary_faces(), vec![g.f0]);
    }
}
