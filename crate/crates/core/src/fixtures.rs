//! Small named graphs used by tests, examples and the CLI.

use crate::graph::BipartiteGraph;

/// `K_{a,b}` with edges in row-major order.
pub fn complete(a: u32, b: u32) -> BipartiteGraph {
    let edges: Vec<(u32, u32)> = (0..a).flat_map(|u| (0..b).map(move |v| (u, v))).collect();
    BipartiteGraph::from_edges(a as usize, b as usize, &edges).expect("valid complete graph")
}

/// The 16-edge running example with wing numbers 1 through 4.
pub const FOUR_LEVEL_EDGES: [(u32, u32); 16] = [
    (0, 0),
    (0, 1),
    (1, 0),
    (1, 1),
    (1, 2),
    (2, 1),
    (2, 2),
    (2, 3),
    (2, 4),
    (3, 1),
    (3, 2),
    (3, 3),
    (3, 4),
    (4, 2),
    (4, 3),
    (4, 4),
];

/// Wing numbers of [`FOUR_LEVEL_EDGES`], by edge id.
pub const FOUR_LEVEL_WING: [u64; 16] = [1, 1, 1, 2, 2, 3, 4, 4, 4, 3, 4, 4, 4, 4, 4, 4];

pub fn four_level() -> BipartiteGraph {
    BipartiteGraph::from_edges(5, 5, &FOUR_LEVEL_EDGES).expect("valid example graph")
}

/// The 9-edge subgraph with two blooms: one of size 2, one of size 3.
pub fn twin_blooms() -> BipartiteGraph {
    let edges = [(0, 0), (0, 1), (1, 0), (1, 1), (1, 2), (2, 1), (2, 2), (3, 1), (3, 2)];
    BipartiteGraph::from_edges(4, 3, &edges).expect("valid example graph")
}
