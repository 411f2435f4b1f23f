//! Coarse-grained decomposition.
//!
//! Entities are split into `P` ranges of entity numbers. For each range the
//! upper bound is picked so the range carries roughly a target amount of work,
//! then every entity whose support falls below the bound is peeled in
//! parallel iterations until none is left. Supports of the survivors are
//! floored at the range's lower bound, and a snapshot taken when the range
//! starts becomes the initial support for the fine phase.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::atomic::{AtomicU32, AtomicU64, AtomicU8, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bloom::BloomEdgeIndex;
use crate::count::{choose2, count_vertices, counting_bound, floor_sub};
use crate::error::{Error, Result};
use crate::graph::{BipartiteGraph, VertexSide};
use crate::metrics::{DecompositionKind, PeelCounters};

pub const DEFAULT_TIP_PARTITIONS: usize = 150;

/// Default partition count for wing decomposition of a graph with `m` edges.
pub fn default_wing_partitions(m: usize) -> usize {
    if m < 100_000_000 {
        400
    } else {
        1000
    }
}

/// How the work target of the first range is chosen. Later ranges always
/// adapt to how far the previous range overshot its estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TargetPolicy {
    /// Remaining work divided evenly over the partitions.
    #[default]
    Adaptive,
    /// Explicit work target for the first range.
    Fixed(u64),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeelConfig {
    pub partitions: usize,
    pub workers: usize,
    /// Aggregate per-bloom updates (wing) and allow recounting (tip).
    pub batch: bool,
    /// Physically drop peeled entries from blooms and adjacency lists.
    pub dynamic_deletes: bool,
    /// Upper bound on predicted index memory, bytes.
    pub mem_budget: Option<u64>,
    pub target: TargetPolicy,
}

impl PeelConfig {
    pub fn new(partitions: usize) -> Self {
        PeelConfig {
            partitions,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            batch: true,
            dynamic_deletes: true,
            mem_budget: None,
            target: TargetPolicy::Adaptive,
        }
    }

    pub fn workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.partitions < 1 {
            return Err(Error::InvalidArgument("partition count must be at least 1".into()));
        }
        if self.workers < 1 {
            return Err(Error::InvalidArgument("worker count must be at least 1".into()));
        }
        Ok(())
    }
}

/// Output of the coarse phase.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionPlan {
    pub kind: DecompositionKind,
    /// `θ(1) .. θ(P+1)`; partition `i` (0-based) covers
    /// `[range_bounds[i], range_bounds[i + 1])`.
    pub range_bounds: Vec<u64>,
    /// 0-based partition per entity; [`UNASSIGNED`] for entities that were
    /// not live.
    pub partition_of: Vec<u32>,
    /// Support of each entity when its partition started.
    pub init_support: Vec<u64>,
    /// Work of each partition measured on the snapshot.
    pub per_partition_work: Vec<u64>,
}

pub const UNASSIGNED: u32 = u32::MAX;

impl PartitionPlan {
    pub fn partitions(&self) -> usize {
        self.range_bounds.len().saturating_sub(1)
    }

    /// Entities of each partition, ascending.
    pub fn members(&self) -> Vec<Vec<u32>> {
        let mut out = vec![Vec::new(); self.partitions()];
        for (x, &p) in self.partition_of.iter().enumerate() {
            if p != UNASSIGNED {
                out[p as usize].push(x as u32);
            }
        }
        out
    }

    /// Checks `θ(i) ≤ numbers[x] < θ(i+1)` for every assigned entity.
    pub fn ranges_hold(&self, numbers: &[u64]) -> bool {
        self.partition_of.iter().zip(numbers).all(|(&p, &t)| {
            p == UNASSIGNED || (self.range_bounds[p as usize] <= t && t < self.range_bounds[p as usize + 1])
        })
    }

    /// JSON header with the partition count and range bounds.
    pub fn write_json<W: Write>(&self, mut out: W) -> Result<()> {
        #[derive(Serialize)]
        struct Header<'a> {
            kind: DecompositionKind,
            partitions: usize,
            range_bounds: &'a [u64],
            per_partition_work: &'a [u64],
        }
        let h = Header {
            kind: self.kind,
            partitions: self.partitions(),
            range_bounds: &self.range_bounds,
            per_partition_work: &self.per_partition_work,
        };
        serde_json::to_writer_pretty(&mut out, &h).map_err(std::io::Error::from)?;
        writeln!(out)?;
        Ok(())
    }

    /// `entity_id,partition,init_support` rows; partitions are 1-based.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "entity_id,partition,init_support")?;
        for (x, (&p, &s)) in self.partition_of.iter().zip(&self.init_support).enumerate() {
            if p != UNASSIGNED {
                writeln!(out, "{x},{},{s}", p + 1)?;
            }
        }
        Ok(())
    }
}

/// Chosen upper bound and the work of entities strictly below it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RangeChoice {
    pub bound: u64,
    pub work_below: u64,
}

/// Smallest `θ_ub` whose cumulative work over `(support, work)` items reaches
/// `tgt`, returned as `θ_ub + 1`. If the total falls short, the bound covers
/// every item.
pub fn find_range(items: &[(u64, u64)], tgt: u64) -> Result<RangeChoice> {
    if tgt == 0 {
        return Err(Error::InvalidArgument("range target must be positive".into()));
    }
    if items.is_empty() {
        return Err(Error::DegenerateRange);
    }
    let mut bins: BTreeMap<u64, u64> = BTreeMap::new();
    for &(s, w) in items {
        *bins.entry(s).or_default() += w;
    }
    let mut acc = 0;
    for (&s, &w) in &bins {
        acc += w;
        if acc >= tgt {
            return Ok(RangeChoice { bound: s + 1, work_below: acc });
        }
    }
    let max = *bins.keys().next_back().expect("non-empty");
    Ok(RangeChoice { bound: max + 1, work_below: acc })
}

/// Dense-bin variant of [`find_range`] for small support values.
fn find_range_dense(items: &[(u64, u64)], tgt: u64) -> Result<RangeChoice> {
    let max = items.par_iter().map(|p| p.0).max().ok_or(Error::DegenerateRange)?;
    if max as usize > 4 * items.len() + 1024 {
        return find_range(items, tgt);
    }
    if tgt == 0 {
        return Err(Error::InvalidArgument("range target must be positive".into()));
    }
    let mut bins = vec![0u64; max as usize + 1];
    for &(s, w) in items {
        bins[s as usize] += w;
    }
    let mut acc = 0;
    for (s, &w) in bins.iter().enumerate() {
        acc += w;
        if acc >= tgt {
            return Ok(RangeChoice { bound: s as u64 + 1, work_below: acc });
        }
    }
    Ok(RangeChoice { bound: max + 1, work_below: acc })
}

/// Work target for the next range: an even share of what remains, scaled by
/// how the previous range's estimate compared with the work it finally took.
pub fn adaptive_target(remaining_work: u64, partitions_left: usize, last_initial: u64, last_final: u64) -> u64 {
    let left = partitions_left.max(1) as u128;
    let t = if last_final == 0 || last_initial == 0 {
        remaining_work as u128 / left
    } else {
        remaining_work as u128 * last_initial as u128 / (left * last_final as u128)
    };
    (t.min(u64::MAX as u128) as u64).max(1)
}

const REMAINING: u8 = 0;
const ACTIVE: u8 = 1;
const PEELED: u8 = 2;

/// Coarse-phase result plus work counters; `counters.rounds` is ρ.
#[derive(Debug, Clone)]
pub struct CoarseOutcome {
    pub plan: PartitionPlan,
    pub support_updates: u64,
    pub wedges_traversed: u64,
    pub links_traversed: u64,
    pub iterations: u64,
    pub recounts: u64,
}

impl CoarseOutcome {
    pub(crate) fn counters(&self) -> PeelCounters {
        PeelCounters {
            support_updates: self.support_updates,
            wedges_traversed: self.wedges_traversed,
            links_traversed: self.links_traversed,
            rounds: self.iterations,
        }
    }
}

/// Tracks range targets across partitions.
struct Ranger {
    parts: usize,
    policy: TargetPolicy,
    last_initial: u64,
    last_final: u64,
}

impl Ranger {
    /// Upper bound for partition `i` (0-based) and the estimate behind it.
    fn bound(&mut self, i: usize, items: &[(u64, u64)], dense: bool) -> Result<RangeChoice> {
        let total: u64 = items.iter().map(|p| p.1).sum();
        if i + 1 == self.parts {
            let max = items.iter().map(|p| p.0).max().ok_or(Error::DegenerateRange)?;
            return Ok(RangeChoice { bound: max + 1, work_below: total });
        }
        let tgt = match (i, self.policy) {
            (0, TargetPolicy::Fixed(t)) => t.max(1),
            (0, TargetPolicy::Adaptive) => adaptive_target(total, self.parts, 0, 0),
            _ => adaptive_target(total, self.parts - i, self.last_initial, self.last_final),
        };
        if dense {
            find_range_dense(items, tgt)
        } else {
            find_range(items, tgt)
        }
    }

    fn record(&mut self, initial: u64, fin: u64) {
        self.last_initial = initial;
        self.last_final = fin;
    }
}

#[derive(Default)]
struct Sweep {
    crossed: Vec<u32>,
    touched: Vec<u32>,
    updates: u64,
    links: u64,
    wedges: u64,
}

impl Sweep {
    fn merge(mut self, o: Sweep) -> Sweep {
        self.crossed.extend(o.crossed);
        self.touched.extend(o.touched);
        self.updates += o.updates;
        self.links += o.links;
        self.wedges += o.wedges;
        self
    }
}

#[inline]
fn pack(edge: u32, twin: u32) -> u64 {
    (edge as u64) << 32 | twin as u64
}

#[inline]
fn unpack(x: u64) -> (u32, u32) {
    ((x >> 32) as u32, x as u32)
}

/// Coarse phase of wing decomposition. `supports` are the per-edge butterfly
/// counts of `g`; `index` is its full bloom-edge index.
pub fn cd_wing(
    g: &BipartiteGraph,
    index: &BloomEdgeIndex,
    supports: &[u64],
    cfg: &PeelConfig,
) -> Result<CoarseOutcome> {
    cfg.validate()?;
    let m = g.edge_count();
    if supports.len() != m || index.members().len() != m {
        return Err(Error::InvalidArgument("supports and index must cover every edge".into()));
    }
    let state: Vec<AtomicU8> =
        (0..m as u32).map(|e| AtomicU8::new(if g.is_edge_alive(e) { REMAINING } else { PEELED })).collect();
    let support: Vec<AtomicU64> = supports.iter().map(|&s| AtomicU64::new(s)).collect();
    let k: Vec<AtomicU64> = index.bloom_numbers().iter().map(|&x| AtomicU64::new(x)).collect();
    let tally: Vec<AtomicU64> = (0..index.bloom_count()).map(|_| AtomicU64::new(0)).collect();
    let offsets = index.bloom_offsets();
    let seg: Vec<AtomicU64> = index.raw_bloom_links().iter().map(|l| AtomicU64::new(pack(l.edge, l.twin))).collect();
    let seg_len: Vec<AtomicU32> =
        (0..index.bloom_count() as u32).map(|b| AtomicU32::new(index.bloom_links(b).len() as u32)).collect();

    let mut plan = PartitionPlan {
        kind: DecompositionKind::Wing,
        range_bounds: vec![0],
        partition_of: vec![UNASSIGNED; m],
        init_support: vec![0; m],
        per_partition_work: Vec::new(),
    };
    let mut out = CoarseOutcome {
        plan: plan.clone(),
        support_updates: 0,
        wedges_traversed: 0,
        links_traversed: 0,
        iterations: 0,
        recounts: 0,
    };
    let mut ranger = Ranger { parts: cfg.partitions, policy: cfg.target, last_initial: 0, last_final: 0 };
    let mut remaining: Vec<u32> = (0..m as u32).filter(|&e| g.is_edge_alive(e)).collect();
    let st = |e: u32| state[e as usize].load(Ordering::Relaxed);

    for i in 0..cfg.partitions {
        remaining.retain(|&e| st(e) == REMAINING);
        if remaining.is_empty() {
            break;
        }
        let lo = *plan.range_bounds.last().expect("starts with θ(1)");
        let items: Vec<(u64, u64)> = remaining
            .iter()
            .map(|&e| {
                let s = support[e as usize].load(Ordering::Relaxed);
                plan.init_support[e as usize] = s;
                (s, s)
            })
            .collect();
        let choice = ranger.bound(i, &items, true)?;
        let hi = choice.bound;
        let mut active: Vec<u32> =
            remaining.iter().copied().filter(|&e| plan.init_support[e as usize] < hi).collect();

        let dec = |x: u32, delta: u64, sw: &mut Sweep| {
            if delta == 0 {
                return;
            }
            sw.updates += 1;
            let (old, new) = floor_sub(&support[x as usize], delta, lo);
            if old >= hi && new < hi {
                sw.crossed.push(x);
            }
        };

        while !active.is_empty() {
            out.iterations += 1;
            for &e in &active {
                state[e as usize].store(ACTIVE, Ordering::Relaxed);
                plan.partition_of[e as usize] = i as u32;
            }

            let sweep = active
                .par_iter()
                .fold(Sweep::default, |mut sw, &e| {
                    for l in index.edge_links_at(e as usize) {
                        let ts = st(l.twin);
                        if ts == PEELED || (ts == ACTIVE && l.twin > e) {
                            continue;
                        }
                        let b = l.bloom as usize;
                        let kb = k[b].load(Ordering::Relaxed);
                        if ts == REMAINING {
                            dec(l.twin, kb - 1, &mut sw);
                        }
                        if tally[b].fetch_add(1, Ordering::Relaxed) == 0 {
                            sw.touched.push(l.bloom);
                        }
                        if !cfg.batch {
                            let len = seg_len[b].load(Ordering::Relaxed) as usize;
                            for slot in &seg[offsets[b]..offsets[b] + len] {
                                sw.links += 1;
                                let (x, y) = unpack(slot.load(Ordering::Relaxed));
                                if st(x) == REMAINING && st(y) == REMAINING {
                                    dec(x, 1, &mut sw);
                                }
                            }
                        }
                    }
                    sw
                })
                .reduce(Sweep::default, Sweep::merge);

            let commit = sweep
                .touched
                .par_iter()
                .fold(Sweep::default, |mut sw, &b| {
                    let b = b as usize;
                    let c = tally[b].swap(0, Ordering::Relaxed);
                    k[b].fetch_sub(c, Ordering::Relaxed);
                    if !cfg.batch && !cfg.dynamic_deletes {
                        return sw;
                    }
                    let len = seg_len[b].load(Ordering::Relaxed) as usize;
                    let base = offsets[b];
                    let mut keep = base;
                    for r in base..base + len {
                        sw.links += 1;
                        let packed = seg[r].load(Ordering::Relaxed);
                        let (x, y) = unpack(packed);
                        let live = st(x) == REMAINING && st(y) == REMAINING;
                        if live && cfg.batch {
                            dec(x, c, &mut sw);
                        }
                        if cfg.dynamic_deletes && live {
                            seg[keep].store(packed, Ordering::Relaxed);
                            keep += 1;
                        }
                    }
                    if cfg.dynamic_deletes {
                        seg_len[b].store((keep - base) as u32, Ordering::Relaxed);
                    }
                    sw
                })
                .reduce(Sweep::default, Sweep::merge);

            out.support_updates += sweep.updates + commit.updates;
            out.links_traversed += sweep.links + commit.links;
            for &e in &active {
                state[e as usize].store(PEELED, Ordering::Relaxed);
            }
            let mut next = sweep.crossed;
            next.extend(commit.crossed);
            next.sort_unstable();
            active = next;
        }

        let fin: u64 = remaining
            .iter()
            .filter(|&&e| plan.partition_of[e as usize] == i as u32)
            .map(|&e| plan.init_support[e as usize])
            .sum();
        ranger.record(choice.work_below, fin);
        plan.per_partition_work.push(fin);
        plan.range_bounds.push(hi);
    }
    out.plan = plan;
    Ok(out)
}

/// Coarse phase of tip decomposition on `side`. `supports` are the
/// side-local butterfly counts of `g`.
pub fn cd_tip(g: &BipartiteGraph, side: VertexSide, supports: &[u64], cfg: &PeelConfig) -> Result<CoarseOutcome> {
    cfg.validate()?;
    let count = g.side_count(side);
    if supports.len() != count {
        return Err(Error::InvalidArgument("supports must cover every vertex of the side".into()));
    }
    let mut work = g.clone();
    let recount_threshold = counting_bound(g);
    let base = g.global(side, 0);
    let state: Vec<AtomicU8> = (0..count as u32)
        .map(|x| AtomicU8::new(if g.is_vertex_alive(base + x) { REMAINING } else { PEELED }))
        .collect();
    let support: Vec<AtomicU64> = supports.iter().map(|&s| AtomicU64::new(s)).collect();

    let mut plan = PartitionPlan {
        kind: DecompositionKind::Tip(side),
        range_bounds: vec![0],
        partition_of: vec![UNASSIGNED; count],
        init_support: vec![0; count],
        per_partition_work: Vec::new(),
    };
    let mut out = CoarseOutcome {
        plan: plan.clone(),
        support_updates: 0,
        wedges_traversed: 0,
        links_traversed: 0,
        iterations: 0,
        recounts: 0,
    };
    let mut ranger = Ranger { parts: cfg.partitions, policy: cfg.target, last_initial: 0, last_final: 0 };
    let mut remaining: Vec<u32> = (0..count as u32).filter(|&x| g.is_vertex_alive(base + x)).collect();
    let st = |x: u32| state[x as usize].load(Ordering::Relaxed);
    let n = g.n();
    // Degrees counting only unpeeled neighbours, whether or not edges are deleted.
    let mut live_deg: Vec<u64> = (0..n as u32).map(|w| g.degree(w) as u64).collect();
    let est = |w: &BipartiteGraph, d: &[u64], u: u32| -> u64 { w.neighbors(u).map(|a| d[a.neighbor as usize]).sum() };

    for i in 0..cfg.partitions {
        remaining.retain(|&x| st(x) == REMAINING);
        if remaining.is_empty() {
            break;
        }
        let lo = *plan.range_bounds.last().expect("starts with θ(1)");
        let wedge_est: Vec<u64> = remaining.par_iter().map(|&x| est(&work, &live_deg, base + x)).collect();
        let items: Vec<(u64, u64)> = remaining
            .iter()
            .zip(&wedge_est)
            .map(|(&x, &w)| {
                let s = support[x as usize].load(Ordering::Relaxed);
                plan.init_support[x as usize] = s;
                (s, w)
            })
            .collect();
        let choice = ranger.bound(i, &items, false)?;
        let hi = choice.bound;
        let mut active: Vec<u32> =
            remaining.iter().copied().filter(|&x| plan.init_support[x as usize] < hi).collect();

        while !active.is_empty() {
            out.iterations += 1;
            for &x in &active {
                state[x as usize].store(ACTIVE, Ordering::Relaxed);
                plan.partition_of[x as usize] = i as u32;
            }
            let globals: Vec<u32> = active.iter().map(|&x| base + x).collect();
            let active_work: u64 = globals.iter().map(|&u| est(&work, &live_deg, u)).sum();
            for &u in &globals {
                for a in work.neighbors(u) {
                    live_deg[a.neighbor as usize] -= 1;
                }
            }

            let next = if cfg.batch && active_work > recount_threshold {
                for &x in &active {
                    state[x as usize].store(PEELED, Ordering::Relaxed);
                }
                retire(&mut work, &globals, cfg.dynamic_deletes)?;
                let (fresh, wedges) = count_vertices(&work);
                out.wedges_traversed += wedges;
                out.recounts += 1;
                let mut next = Vec::new();
                for &x in &remaining {
                    if st(x) != REMAINING {
                        continue;
                    }
                    let new = fresh[(base + x) as usize].max(lo);
                    let old = support[x as usize].swap(new, Ordering::Relaxed);
                    if old >= hi && new < hi {
                        next.push(x);
                    }
                }
                next
            } else {
                let wg = &work;
                let sweep = active
                    .par_iter()
                    .fold(
                        || (Sweep::default(), vec![0u32; n], Vec::<u32>::new()),
                        |(mut sw, mut wedge, mut touched), &x| {
                            let u = base + x;
                            for a in wg.neighbors(u) {
                                for b in wg.segment(a.neighbor) {
                                    sw.wedges += 1;
                                    let u2 = b.neighbor;
                                    if u2 == u || !wg.is_edge_alive(b.edge) || !wg.is_vertex_alive(u2) {
                                        continue;
                                    }
                                    if st(u2 - base) != REMAINING {
                                        continue;
                                    }
                                    if wedge[u2 as usize] == 0 {
                                        touched.push(u2);
                                    }
                                    wedge[u2 as usize] += 1;
                                }
                            }
                            for &u2 in &touched {
                                let delta = choose2(wedge[u2 as usize] as u64);
                                wedge[u2 as usize] = 0;
                                if delta == 0 {
                                    continue;
                                }
                                sw.updates += 1;
                                let (old, new) = floor_sub(&support[(u2 - base) as usize], delta, lo);
                                if old >= hi && new < hi {
                                    sw.crossed.push(u2 - base);
                                }
                            }
                            touched.clear();
                            (sw, wedge, touched)
                        },
                    )
                    .map(|(sw, _, _)| sw)
                    .reduce(Sweep::default, Sweep::merge);
                out.support_updates += sweep.updates;
                out.wedges_traversed += sweep.wedges;
                for &x in &active {
                    state[x as usize].store(PEELED, Ordering::Relaxed);
                }
                retire(&mut work, &globals, cfg.dynamic_deletes)?;
                sweep.crossed
            };
            let mut next = next;
            next.sort_unstable();
            active = next;
        }

        let fin: u64 = remaining
            .iter()
            .zip(&wedge_est)
            .filter(|&(&x, _)| plan.partition_of[x as usize] == i as u32)
            .map(|(_, &w)| w)
            .sum();
        ranger.record(choice.work_below, fin);
        plan.per_partition_work.push(fin);
        plan.range_bounds.push(hi);
    }
    out.plan = plan;
    Ok(out)
}

/// Removes peeled vertices from `g`; with `delete` their edges go too, so
/// later traversals no longer scan them.
fn retire(g: &mut BipartiteGraph, vertices: &[u32], delete: bool) -> Result<()> {
    if delete {
        let mut edges = Vec::new();
        for &u in vertices {
            edges.extend(g.neighbors(u).map(|a| a.edge));
        }
        g.delete_edges(edges)?;
    }
    g.retire_vertices(vertices.iter().copied());
    Ok(())
}
