//! Brute-force references.
//!
//! Nothing here uses wedge priorities, blooms or saturated supports: counts
//! come from pairwise neighborhood intersections on bitsets, and entity
//! numbers from peeling with a full recount after every step.

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;

use crate::count::count_butterflies;
use crate::error::{Error, Result};
use crate::graph::{BipartiteGraph, VertexSide};
use crate::metrics::DecompositionKind;

/// Upper bound on vertex pairs scanned per enumeration.
pub const PAIR_SCAN_LIMIT: u128 = 10_000_000;

/// Largest side size for which the maximality check runs.
pub const MAXIMALITY_LIMIT: usize = 60;

/// One butterfly as side-local ids with `u < u2` and `v < v2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Butterfly {
    pub u: u32,
    pub v: u32,
    pub u2: u32,
    pub v2: u32,
}

/// Neighborhoods of one side as bitsets over the other side.
struct Rows {
    words: usize,
    bits: Vec<u64>,
}

impl Rows {
    fn new(rows: usize, cols: usize) -> Self {
        let words = cols.div_ceil(64);
        Rows { words, bits: vec![0; rows * words] }
    }

    fn set(&mut self, r: u32, c: u32) {
        self.bits[r as usize * self.words + c as usize / 64] |= 1 << (c % 64);
    }

    fn row(&self, r: u32) -> &[u64] {
        &self.bits[r as usize * self.words..(r as usize + 1) * self.words]
    }

    fn common(&self, a: u32, b: u32, out: &mut Vec<u32>) {
        out.clear();
        for (i, (x, y)) in self.row(a).iter().zip(self.row(b)).enumerate() {
            let mut w = x & y;
            while w != 0 {
                out.push((i * 64) as u32 + w.trailing_zeros());
                w &= w - 1;
            }
        }
    }
}

fn guard(rows: usize) -> Result<()> {
    let work = rows as u128 * rows as u128;
    if work > PAIR_SCAN_LIMIT {
        return Err(Error::OracleGuard { work, limit: PAIR_SCAN_LIMIT });
    }
    Ok(())
}

/// Live edges as side-local pairs with their ids.
fn live_pairs(g: &BipartiteGraph) -> Vec<(u32, u32, u32)> {
    (0..g.edge_count() as u32)
        .filter(|&e| {
            let (u, v) = g.endpoints(e);
            g.is_edge_alive(e) && g.is_vertex_alive(u) && g.is_vertex_alive(v)
        })
        .map(|e| {
            let (u, v) = g.endpoints(e);
            (g.local(u), g.local(v), e)
        })
        .collect()
}

/// Every butterfly of the live graph, each listed once, sorted.
pub fn enumerate_butterflies(g: &BipartiteGraph) -> Result<Vec<Butterfly>> {
    guard(g.u_count())?;
    let mut rows = Rows::new(g.u_count(), g.v_count());
    for (u, v, _) in live_pairs(g) {
        rows.set(u, v);
    }
    let mut out = Vec::new();
    let mut common = Vec::new();
    for u in 0..g.u_count() as u32 {
        for u2 in u + 1..g.u_count() as u32 {
            rows.common(u, u2, &mut common);
            for (i, &v) in common.iter().enumerate() {
                for &v2 in &common[i + 1..] {
                    out.push(Butterfly { u, v, u2, v2 });
                }
            }
        }
    }
    Ok(out)
}

/// Per-entity counts derived from an explicit butterfly list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ListedCounts {
    /// Indexed by global vertex id.
    pub vertex: Vec<u64>,
    pub edge: Vec<u64>,
    pub total: u64,
}

pub fn counts_from_list(g: &BipartiteGraph, list: &[Butterfly]) -> ListedCounts {
    let ids: HashMap<(u32, u32), u32> = live_pairs(g).into_iter().map(|(u, v, e)| ((u, v), e)).collect();
    let mut vertex = vec![0u64; g.n()];
    let mut edge = vec![0u64; g.edge_count()];
    for b in list {
        for u in [b.u, b.u2] {
            vertex[g.global(VertexSide::U, u) as usize] += 1;
        }
        for v in [b.v, b.v2] {
            vertex[g.global(VertexSide::V, v) as usize] += 1;
        }
        for (u, v) in [(b.u, b.v), (b.u, b.v2), (b.u2, b.v), (b.u2, b.v2)] {
            edge[ids[&(u, v)] as usize] += 1;
        }
    }
    ListedCounts { vertex, edge, total: list.len() as u64 }
}

/// Butterfly counts restricted to a live entity set, computed from scratch.
struct Recounter<'a> {
    g: &'a BipartiteGraph,
    kind: DecompositionKind,
    ids: EdgeIds,
    pairs: Vec<(u32, u32, u32)>,
}

/// Edge id lookup by side-local `(u, v)`, one sorted row per U-vertex.
struct EdgeIds {
    rows: Vec<Vec<(u32, u32)>>,
}

impl EdgeIds {
    fn new(u_count: usize, pairs: &[(u32, u32, u32)]) -> Self {
        let mut rows = vec![Vec::new(); u_count];
        for &(u, v, e) in pairs {
            rows[u as usize].push((v, e));
        }
        for r in &mut rows {
            r.sort_unstable();
        }
        EdgeIds { rows }
    }

    fn get(&self, u: u32, v: u32) -> u32 {
        let r = &self.rows[u as usize];
        r[r.binary_search_by_key(&v, |p| p.0).expect("edge present")].1
    }
}

impl<'a> Recounter<'a> {
    fn new(g: &'a BipartiteGraph, kind: DecompositionKind) -> Result<Self> {
        let rows = match kind {
            DecompositionKind::Wing | DecompositionKind::Tip(VertexSide::U) => g.u_count(),
            DecompositionKind::Tip(VertexSide::V) => g.v_count(),
        };
        guard(rows)?;
        let pairs = live_pairs(g);
        let ids = EdgeIds::new(g.u_count(), &pairs);
        Ok(Recounter { g, kind, ids, pairs })
    }

    fn entity_count(&self) -> usize {
        match self.kind {
            DecompositionKind::Wing => self.g.edge_count(),
            DecompositionKind::Tip(side) => self.g.side_count(side),
        }
    }

    /// Count per entity over the subgraph in which only entities with
    /// `keep[x]` remain.
    fn counts(&self, keep: &[bool]) -> Vec<u64> {
        let g = self.g;
        let mut out = vec![0u64; self.entity_count()];
        let mut common = Vec::new();
        match self.kind {
            DecompositionKind::Wing => {
                let mut rows = Rows::new(g.u_count(), g.v_count());
                for &(u, v, e) in &self.pairs {
                    if keep[e as usize] {
                        rows.set(u, v);
                    }
                }
                for u in 0..g.u_count() as u32 {
                    for u2 in u + 1..g.u_count() as u32 {
                        rows.common(u, u2, &mut common);
                        let c = common.len() as u64;
                        if c < 2 {
                            continue;
                        }
                        for &v in &common {
                            out[self.ids.get(u, v) as usize] += c - 1;
                            out[self.ids.get(u2, v) as usize] += c - 1;
                        }
                    }
                }
            }
            DecompositionKind::Tip(side) => {
                let (rn, cn) = (g.side_count(side), g.side_count(side.other()));
                let mut rows = Rows::new(rn, cn);
                for &(u, v, _) in &self.pairs {
                    let (r, c) = if side == VertexSide::U { (u, v) } else { (v, u) };
                    if keep[r as usize] {
                        rows.set(r, c);
                    }
                }
                for a in 0..rn as u32 {
                    for b in a + 1..rn as u32 {
                        rows.common(a, b, &mut common);
                        let c = common.len() as u64;
                        let bf = c * c.saturating_sub(1) / 2;
                        out[a as usize] += bf;
                        out[b as usize] += bf;
                    }
                }
            }
        }
        out
    }
}

/// Butterfly counts per entity (edge id, or side-local vertex id for tips)
/// over the subgraph spanned by the entities with `keep[x]`. For tips the
/// other side is kept whole.
pub fn restricted_counts(g: &BipartiteGraph, kind: DecompositionKind, keep: &[bool]) -> Result<Vec<u64>> {
    let rc = Recounter::new(g, kind)?;
    if keep.len() != rc.entity_count() {
        return Err(Error::InvalidArgument("mask must cover every entity".into()));
    }
    Ok(rc.counts(keep))
}

/// Reference tip or wing numbers: remove every entity whose full recount is
/// at most the current level, raising the level to the minimum recount.
/// Entities that are not live get 0.
pub fn oracle_entity_numbers(g: &BipartiteGraph, kind: DecompositionKind) -> Result<Vec<u64>> {
    let rc = Recounter::new(g, kind)?;
    let len = rc.entity_count();
    let mut live: Vec<bool> = match kind {
        DecompositionKind::Wing => {
            let mut l = vec![false; len];
            for &(_, _, e) in &rc.pairs {
                l[e as usize] = true;
            }
            l
        }
        DecompositionKind::Tip(side) => (0..len).map(|x| g.is_vertex_alive(g.global(side, x as u32))).collect(),
    };
    let mut theta = vec![0u64; len];
    let mut level = 0u64;
    while live.iter().any(|&b| b) {
        let counts = rc.counts(&live);
        let min = (0..len).filter(|&x| live[x]).map(|x| counts[x]).min().expect("some entity is live");
        level = level.max(min);
        for x in 0..len {
            if live[x] && counts[x] <= level {
                theta[x] = level;
                live[x] = false;
            }
        }
    }
    Ok(theta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CheckKind {
    /// Every entity of the level lies in at least `k` butterflies inside it.
    MinSupport,
    /// The level contains the next higher level.
    Nesting,
    /// Peeling the whole graph down to `k` leaves exactly the level.
    Maximality,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckResult {
    pub level: u64,
    pub check: CheckKind,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct HierarchyReport {
    pub checks: Vec<CheckResult>,
}

impl HierarchyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Per-entity counts over the subgraph spanned by the entities in `set`.
fn counts_within(g: &BipartiteGraph, kind: DecompositionKind, set: &[u32]) -> Result<Vec<u64>> {
    match kind {
        DecompositionKind::Wing => {
            let sub = g.edge_subgraph(set)?;
            let c = count_butterflies(&sub);
            let mut out = vec![0u64; g.edge_count()];
            for e in 0..sub.edge_count() as u32 {
                out[sub.parent_edge(e) as usize] = c.edge[e as usize];
            }
            Ok(out)
        }
        DecompositionKind::Tip(side) => {
            let sub = g.induced_subgraph(side, set)?;
            let c = count_butterflies(&sub);
            let mut out = vec![0u64; g.side_count(side)];
            for (i, &x) in set.iter().enumerate() {
                out[x as usize] = c.vertex[sub.global(side, i as u32) as usize];
            }
            Ok(out)
        }
    }
}

fn live_entities(g: &BipartiteGraph, kind: DecompositionKind) -> Vec<u32> {
    match kind {
        DecompositionKind::Wing => (0..g.edge_count() as u32).filter(|&e| g.is_edge_alive(e)).collect(),
        DecompositionKind::Tip(side) => {
            (0..g.side_count(side) as u32).filter(|&x| g.is_vertex_alive(g.global(side, x))).collect()
        }
    }
}

/// Checks every level of the hierarchy implied by `numbers`.
pub fn verify_hierarchy(g: &BipartiteGraph, numbers: &[u64], kind: DecompositionKind) -> Result<HierarchyReport> {
    let all = live_entities(g, kind);
    let levels: BTreeSet<u64> = all.iter().map(|&x| numbers[x as usize]).collect();
    let small = g.u_count() <= MAXIMALITY_LIMIT && g.v_count() <= MAXIMALITY_LIMIT;
    let mut report = HierarchyReport::default();
    let mut prev: Option<(u64, Vec<u32>)> = None;

    for &k in levels.iter().rev() {
        let set: Vec<u32> = all.iter().copied().filter(|&x| numbers[x as usize] >= k).collect();
        let counts = counts_within(g, kind, &set)?;
        let weak = set.iter().find(|&&x| counts[x as usize] < k);
        report.checks.push(CheckResult {
            level: k,
            check: CheckKind::MinSupport,
            passed: weak.is_none(),
            detail: weak.map_or(String::new(), |&x| format!("entity {x} has {} < {k}", counts[x as usize])),
        });

        if let Some((upper, inner)) = &prev {
            let missing = inner.iter().find(|x| set.binary_search(x).is_err());
            report.checks.push(CheckResult {
                level: k,
                check: CheckKind::Nesting,
                passed: missing.is_none(),
                detail: missing.map_or(String::new(), |x| format!("entity {x} of level {upper} missing")),
            });
        }

        if small {
            let mut closure = all.clone();
            loop {
                let c = counts_within(g, kind, &closure)?;
                let before = closure.len();
                closure.retain(|&x| c[x as usize] >= k);
                if closure.len() == before {
                    break;
                }
            }
            let same = closure == set;
            report.checks.push(CheckResult {
                level: k,
                check: CheckKind::Maximality,
                passed: same,
                detail: if same {
                    String::new()
                } else {
                    format!("closure has {} entities, level has {}", closure.len(), set.len())
                },
            });
        }
        prev = Some((k, set));
    }
    Ok(report)
}
