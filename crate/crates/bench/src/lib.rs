//! Benchmark inputs.

use bipeel::gen::{erdos_renyi, power_law};
use bipeel::BipartiteGraph;

pub struct Input {
    pub name: &'static str,
    pub graph: BipartiteGraph,
}

/// Fixed-seed graphs shared by every benchmark.
pub fn inputs() -> Vec<Input> {
    vec![
        Input { name: "er-500x500-p0.05", graph: erdos_renyi(500, 500, 0.05, 500).expect("valid density") },
        Input { name: "pl-2000x1000-m20000", graph: power_law(2000, 1000, 20_000, 2.1, 7).expect("valid shape") },
    ]
}
