//! Seeded random bipartite graphs.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::BipartiteGraph;

/// `G(n1, n2, p)`: every U–V pair becomes an edge independently with
/// probability `p`.
pub fn erdos_renyi(n1: usize, n2: usize, p: f64, seed: u64) -> Result<BipartiteGraph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("edge probability {p} outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n1 as u32 {
        for v in 0..n2 as u32 {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    BipartiteGraph::from_edges(n1, n2, &edges)
}

/// Skewed degrees: `m` endpoint pairs drawn with vertex weights
/// `(i + 1)^(-1 / (exponent - 1))` on both sides, duplicates dropped.
pub fn power_law(n1: usize, n2: usize, m: usize, exponent: f64, seed: u64) -> Result<BipartiteGraph> {
    if exponent <= 1.0 {
        return Err(Error::InvalidArgument(format!("exponent {exponent} must exceed 1")));
    }
    if n1 == 0 || n2 == 0 {
        return Err(Error::InvalidArgument("both sides need at least one vertex".into()));
    }
    let weights = |n: usize| -> Vec<f64> { (0..n).map(|i| ((i + 1) as f64).powf(-1.0 / (exponent - 1.0))).collect() };
    let du = WeightedIndex::new(weights(n1)).expect("positive weights");
    let dv = WeightedIndex::new(weights(n2)).expect("positive weights");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges: Vec<(u32, u32)> =
        (0..m).map(|_| (du.sample(&mut rng) as u32, dv.sample(&mut rng) as u32)).collect();
    BipartiteGraph::from_edges(n1, n2, &edges)
}
