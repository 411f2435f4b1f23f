#![allow(dead_code)]

use bipeel::gen::erdos_renyi;
use bipeel::BipartiteGraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DENSITIES: [f64; 7] = [0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5];

pub struct Instance {
    pub label: String,
    pub graph: BipartiteGraph,
}

/// `count` seeded random graphs with 2..=max_side vertices per side.
pub fn corpus(count: usize, max_side: usize, seed: u64) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let nu = rng.gen_range(2..=max_side);
            let nv = rng.gen_range(2..=max_side);
            let p = DENSITIES[rng.gen_range(0..DENSITIES.len())];
            let s = rng.gen::<u64>();
            Instance {
                label: format!("#{i} {nu}x{nv} p={p} seed={s}"),
                graph: erdos_renyi(nu, nv, p, s).expect("valid probability"),
            }
        })
        .collect()
}
