//! Vertex-priority butterfly counting.
//!
//! A wedge `(start, mid, last)` is explored only when `last` outranks both
//! `start` and `mid`; every butterfly is then seen exactly once, from the
//! vertex opposite its highest-priority corner.

use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graph::{BipartiteGraph, VertexSide};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EntityKind {
    Vertex,
    Edge,
}

/// Per-entity butterfly support.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportVector {
    pub kind: EntityKind,
    pub values: Vec<u64>,
}

impl SupportVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sum(&self) -> u64 {
        self.values.iter().sum()
    }
}

impl std::ops::Index<usize> for SupportVector {
    type Output = u64;

    fn index(&self, i: usize) -> &u64 {
        &self.values[i]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ButterflyCounts {
    /// Indexed by global vertex id.
    pub vertex: SupportVector,
    /// Indexed by edge id; dead edges hold 0.
    pub edge: SupportVector,
    pub total: u64,
}

impl ButterflyCounts {
    /// Supports of one side, indexed by side-local id.
    pub fn side(&self, g: &BipartiteGraph, side: VertexSide) -> Vec<u64> {
        let r = g.side_range(side);
        self.vertex.values[r.start as usize..r.end as usize].to_vec()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Wedge {
    pub mid: u32,
    pub last: u32,
    pub e1: u32,
    pub e2: u32,
}

/// Per-worker wedge tally: dense counter array plus the list of touched slots.
pub(crate) struct WedgeScratch {
    pub count: Vec<u32>,
    pub touched: Vec<u32>,
    pub wedges: Vec<Wedge>,
}

impl WedgeScratch {
    pub fn new(n: usize) -> Self {
        WedgeScratch { count: vec![0; n], touched: Vec::new(), wedges: Vec::new() }
    }

    /// Collects every wedge from `start` whose `last` outranks `start` and
    /// `mid`. Returns the number of wedges found.
    pub fn collect(&mut self, g: &BipartiteGraph, start: u32) -> usize {
        self.reset();
        if !g.is_vertex_alive(start) {
            return 0;
        }
        let rs = g.rank(start);
        for a in g.neighbors(start) {
            let rm = g.rank(a.neighbor);
            for b in g.neighbors(a.neighbor) {
                let rl = g.rank(b.neighbor);
                if rl >= rm || rl >= rs {
                    break;
                }
                let slot = &mut self.count[b.neighbor as usize];
                if *slot == 0 {
                    self.touched.push(b.neighbor);
                }
                *slot += 1;
                self.wedges.push(Wedge { mid: a.neighbor, last: b.neighbor, e1: a.edge, e2: b.edge });
            }
        }
        self.wedges.len()
    }

    pub fn reset(&mut self) {
        for &w in &self.touched {
            self.count[w as usize] = 0;
        }
        self.touched.clear();
        self.wedges.clear();
    }
}

pub(crate) fn choose2(x: u64) -> u64 {
    x * x.saturating_sub(1) / 2
}

fn atomic_vec(len: usize) -> Vec<AtomicU64> {
    (0..len).map(|_| AtomicU64::new(0)).collect()
}

fn into_plain(v: Vec<AtomicU64>) -> Vec<u64> {
    v.into_iter().map(AtomicU64::into_inner).collect()
}

/// Exact per-vertex and per-edge butterfly counts over the live graph.
pub fn count_butterflies(g: &BipartiteGraph) -> ButterflyCounts {
    let n = g.n();
    let vertex = atomic_vec(n);
    let edge = atomic_vec(g.edge_count());
    (0..n as u32).into_par_iter().for_each_init(
        || WedgeScratch::new(n),
        |s, start| {
            if s.collect(g, start) == 0 {
                return;
            }
            let mut own = 0;
            for &last in &s.touched {
                let b = choose2(s.count[last as usize] as u64);
                if b > 0 {
                    own += b;
                    vertex[last as usize].fetch_add(b, Ordering::Relaxed);
                }
            }
            if own > 0 {
                vertex[start as usize].fetch_add(own, Ordering::Relaxed);
            }
            for w in &s.wedges {
                let c = s.count[w.last as usize] as u64;
                if c > 1 {
                    vertex[w.mid as usize].fetch_add(c - 1, Ordering::Relaxed);
                    edge[w.e1 as usize].fetch_add(c - 1, Ordering::Relaxed);
                    edge[w.e2 as usize].fetch_add(c - 1, Ordering::Relaxed);
                }
            }
        },
    );
    let vertex = into_plain(vertex);
    let edge = into_plain(edge);
    let sum: u64 = vertex.iter().sum();
    assert_eq!(sum % 4, 0, "vertex supports must sum to a multiple of 4");
    ButterflyCounts {
        vertex: SupportVector { kind: EntityKind::Vertex, values: vertex },
        edge: SupportVector { kind: EntityKind::Edge, values: edge },
        total: sum / 4,
    }
}

/// Per-vertex counts only, plus the number of wedges explored.
pub(crate) fn count_vertices(g: &BipartiteGraph) -> (Vec<u64>, u64) {
    let n = g.n();
    let vertex = atomic_vec(n);
    let wedges = AtomicU64::new(0);
    (0..n as u32).into_par_iter().for_each_init(
        || WedgeScratch::new(n),
        |s, start| {
            let found = s.collect(g, start);
            if found == 0 {
                return;
            }
            wedges.fetch_add(found as u64, Ordering::Relaxed);
            let mut own = 0;
            for &last in &s.touched {
                let b = choose2(s.count[last as usize] as u64);
                if b > 0 {
                    own += b;
                    vertex[last as usize].fetch_add(b, Ordering::Relaxed);
                }
            }
            if own > 0 {
                vertex[start as usize].fetch_add(own, Ordering::Relaxed);
            }
            for w in &s.wedges {
                let c = s.count[w.last as usize] as u64;
                if c > 1 {
                    vertex[w.mid as usize].fetch_add(c - 1, Ordering::Relaxed);
                }
            }
        },
    );
    (into_plain(vertex), wedges.into_inner())
}

/// Exact per-vertex supports of `side` over the live subgraph, indexed by
/// side-local id. Retired vertices get 0.
pub fn recount_surviving(g: &BipartiteGraph, side: VertexSide) -> SupportVector {
    let (all, _) = count_vertices(g);
    let r = g.side_range(side);
    SupportVector { kind: EntityKind::Vertex, values: all[r.start as usize..r.end as usize].to_vec() }
}

/// `Σ_{u ∈ subset} Σ_{v ∈ N_u} d_v` over live entries. `subset` holds global ids.
pub fn wedge_work(g: &BipartiteGraph, subset: &[u32]) -> u64 {
    subset
        .iter()
        .filter(|&&u| g.is_vertex_alive(u))
        .map(|&u| vertex_wedge_work(g, u))
        .sum()
}

pub(crate) fn vertex_wedge_work(g: &BipartiteGraph, u: u32) -> u64 {
    g.neighbors(u).map(|a| g.degree(a.neighbor) as u64).sum()
}

/// `Σ_{(u,v) ∈ E} min(d_u, d_v)` over live edges.
pub fn counting_bound(g: &BipartiteGraph) -> u64 {
    (0..g.edge_count() as u32)
        .filter(|&e| g.is_edge_alive(e))
        .map(|e| {
            let (u, v) = g.endpoints(e);
            g.degree(u).min(g.degree(v)) as u64
        })
        .sum()
}

/// Atomically lowers `slot` by `delta` without going below `floor`.
/// Returns the previous and the new value.
pub(crate) fn floor_sub(slot: &AtomicU64, delta: u64, floor: u64) -> (u64, u64) {
    let mut cur = slot.load(Ordering::Relaxed);
    loop {
        let next = cur.saturating_sub(delta).max(floor).min(cur);
        if next == cur {
            return (cur, cur);
        }
        match slot.compare_exchange_weak(cur, next, Ordering::Relaxed, Ordering::Relaxed) {
            Ok(_) => return (cur, next),
            Err(seen) => cur = seen,
        }
    }
}
