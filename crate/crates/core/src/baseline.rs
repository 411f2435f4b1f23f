//! Sequential bottom-up peeling.
//!
//! Extraction is round based: each round removes the whole minimum bucket,
//! so the round count is the number of synchronized steps a level-parallel
//! peel would need. Supports never drop below the level being peeled.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bloom::{build_be_index, BloomEdgeIndex, EdgeLink, EdgeLocator};
use crate::count::{choose2, count_butterflies};
use crate::error::Result;
use crate::graph::{BipartiteGraph, VertexSide};
use crate::metrics::{DecompositionKind, DecompositionResult, LapTimer, Metrics, PeelCounters};

/// Bucket queue over supports. Each queued entity sits in the bucket of its
/// current key.
#[derive(Debug, Clone, Default)]
pub struct MinBucketQueue {
    buckets: BTreeMap<u64, BTreeSet<u32>>,
    key: Vec<Option<u64>>,
    len: usize,
}

impl MinBucketQueue {
    pub fn new(capacity: usize) -> Self {
        MinBucketQueue { buckets: BTreeMap::new(), key: vec![None; capacity], len: 0 }
    }

    /// Queue holding entity `i` with key `supports[i]` for every `i`.
    pub fn from_supports(supports: &[u64]) -> Self {
        let mut q = MinBucketQueue::new(supports.len());
        for (i, &s) in supports.iter().enumerate() {
            q.insert(i as u32, s);
        }
        q
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains(&self, id: u32) -> bool {
        self.key[id as usize].is_some()
    }

    pub fn key(&self, id: u32) -> Option<u64> {
        self.key[id as usize]
    }

    /// Smallest key present.
    pub fn current_floor(&self) -> Option<u64> {
        self.buckets.keys().next().copied()
    }

    pub fn insert(&mut self, id: u32, key: u64) {
        if self.key[id as usize].is_some() {
            self.update(id, key);
            return;
        }
        self.key[id as usize] = Some(key);
        self.buckets.entry(key).or_default().insert(id);
        self.len += 1;
    }

    /// Moves a queued entity to `key`; no-op if it is not queued.
    pub fn update(&mut self, id: u32, key: u64) {
        let Some(old) = self.key[id as usize] else { return };
        if old == key {
            return;
        }
        self.detach(id, old);
        self.key[id as usize] = Some(key);
        self.buckets.entry(key).or_default().insert(id);
    }

    pub fn remove(&mut self, id: u32) {
        if let Some(old) = self.key[id as usize].take() {
            self.detach(id, old);
            self.len -= 1;
        }
    }

    fn detach(&mut self, id: u32, key: u64) {
        let bucket = self.buckets.get_mut(&key).expect("queued key has a bucket");
        bucket.remove(&id);
        if bucket.is_empty() {
            self.buckets.remove(&key);
        }
    }

    /// Removes and returns the lowest-id entity of minimum key.
    pub fn pop_min(&mut self) -> Option<(u64, u32)> {
        let (&k, bucket) = self.buckets.iter().next()?;
        let id = *bucket.iter().next().expect("buckets are never empty");
        self.remove(id);
        Some((k, id))
    }

    /// Removes the entire minimum bucket; ids ascend.
    pub fn pop_min_bucket(&mut self) -> Option<(u64, Vec<u32>)> {
        let (k, bucket) = self.buckets.pop_first()?;
        let ids: Vec<u32> = bucket.into_iter().collect();
        for &id in &ids {
            self.key[id as usize] = None;
        }
        self.len -= ids.len();
        Some((k, ids))
    }
}

/// Processing order among entities extracted in the same round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    #[default]
    LowestId,
    HighestId,
    Random(u64),
}

struct Orderer {
    tie: TieBreak,
    rng: Option<ChaCha8Rng>,
}

impl Orderer {
    fn new(tie: TieBreak) -> Self {
        let rng = match tie {
            TieBreak::Random(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
            _ => None,
        };
        Orderer { tie, rng }
    }

    fn order(&mut self, ids: &mut [u32]) {
        match self.tie {
            TieBreak::LowestId => {}
            TieBreak::HighestId => ids.reverse(),
            TieBreak::Random(_) => ids.shuffle(self.rng.as_mut().expect("seeded")),
        }
    }
}

/// Which slice of the edge set an index covers.
#[derive(Clone, Copy)]
pub(crate) enum EdgeScope<'a> {
    Full,
    Part { loc: &'a EdgeLocator, part: u32 },
}

impl EdgeScope<'_> {
    #[inline]
    fn local(&self, e: u32) -> Option<usize> {
        match self {
            EdgeScope::Full => Some(e as usize),
            EdgeScope::Part { loc, part } => (loc.part(e) == *part).then(|| loc.local(e) as usize),
        }
    }
}

struct Decrementer {
    queue: MinBucketQueue,
    level: u64,
    updates: u64,
}

impl Decrementer {
    #[inline]
    fn dec(&mut self, id: usize, delta: u64) {
        if delta == 0 {
            return;
        }
        if let Some(cur) = self.queue.key(id as u32) {
            self.updates += 1;
            let next = cur.saturating_sub(delta).max(self.level);
            self.queue.update(id as u32, next);
        }
    }
}

/// Peels every member of `index` by minimum support using bloom updates.
/// `supports` and the returned numbers are indexed by member position.
/// Edges outside `scope` are never peeled and count as alive twins.
pub(crate) fn peel_edges_indexed(
    index: &mut BloomEdgeIndex,
    scope: EdgeScope<'_>,
    supports: &[u64],
    floor: u64,
    tie: TieBreak,
    compact: bool,
) -> (Vec<u64>, PeelCounters) {
    let count = index.members().len();
    let mut theta = vec![0u64; count];
    let mut peeled = vec![false; count];
    let mut d = Decrementer { queue: MinBucketQueue::from_supports(supports), level: floor, updates: 0 };
    let mut orderer = Orderer::new(tie);
    let mut counters = PeelCounters::default();
    let mut links: Vec<EdgeLink> = Vec::new();

    while let Some((key, mut ids)) = d.queue.pop_min_bucket() {
        d.level = d.level.max(key);
        counters.rounds += 1;
        orderer.order(&mut ids);
        for &p in &ids {
            theta[p as usize] = d.level;
        }
        for &p in &ids {
            let p = p as usize;
            peeled[p] = true;
            links.clear();
            links.extend_from_slice(index.edge_links_at(p));
            for &EdgeLink { bloom, twin } in &links {
                let tp = scope.local(twin);
                if tp.is_some_and(|q| peeled[q]) {
                    continue;
                }
                let k = index.bloom_number(bloom);
                if let Some(q) = tp {
                    d.dec(q, k - 1);
                }
                index.k_mut()[bloom as usize] = k - 1;
                let is_dead = |x: u32, peeled: &[bool]| scope.local(x).is_some_and(|q| peeled[q]);
                if compact {
                    let scanned = index.retain_links(bloom, |l| {
                        if is_dead(l.edge, &peeled) || is_dead(l.twin, &peeled) {
                            return false;
                        }
                        if l.edge != twin {
                            d.dec(scope.local(l.edge).expect("bloom links stay in scope"), 1);
                        }
                        true
                    });
                    counters.links_traversed += scanned as u64;
                } else {
                    for l in index.bloom_links(bloom) {
                        counters.links_traversed += 1;
                        if is_dead(l.edge, &peeled) || is_dead(l.twin, &peeled) || l.edge == twin {
                            continue;
                        }
                        d.dec(scope.local(l.edge).expect("bloom links stay in scope"), 1);
                    }
                }
            }
        }
    }
    counters.support_updates = d.updates;
    (theta, counters)
}

/// Peels every edge of `g` with wedge traversal, deleting edges as they go.
fn peel_edges_wedges(g: &mut BipartiteGraph, supports: &[u64], tie: TieBreak) -> (Vec<u64>, PeelCounters) {
    let m = g.edge_count();
    let mut theta = vec![0u64; m];
    let mut d = Decrementer { queue: MinBucketQueue::from_supports(supports), level: 0, updates: 0 };
    let mut orderer = Orderer::new(tie);
    let mut counters = PeelCounters::default();
    let mut mark = vec![u32::MAX; g.n()];
    let mut marked: Vec<u32> = Vec::new();
    let mut hits: Vec<u32> = Vec::new();

    while let Some((key, mut ids)) = d.queue.pop_min_bucket() {
        d.level = d.level.max(key);
        counters.rounds += 1;
        orderer.order(&mut ids);
        for &e in &ids {
            theta[e as usize] = d.level;
        }
        for &e in &ids {
            let (u, v) = g.endpoints(e);
            for a in g.neighbors(u) {
                if a.edge != e {
                    mark[a.neighbor as usize] = a.edge;
                    marked.push(a.neighbor);
                }
            }
            for b in g.neighbors(v) {
                if b.edge == e {
                    continue;
                }
                for c in g.segment(b.neighbor) {
                    counters.wedges_traversed += 1;
                    if c.neighbor == v || !g.is_edge_alive(c.edge) {
                        continue;
                    }
                    let uv2 = mark[c.neighbor as usize];
                    if uv2 != u32::MAX {
                        hits.extend([uv2, b.edge, c.edge]);
                    }
                }
            }
            for &x in &hits {
                d.dec(x as usize, 1);
            }
            hits.clear();
            for &w in &marked {
                mark[w as usize] = u32::MAX;
            }
            marked.clear();
            g.delete_edges([e]).expect("edge id in range");
        }
    }
    counters.support_updates = d.updates;
    (theta, counters)
}

/// Peels every live vertex of `side` in `g`. `supports` and the result are
/// indexed by side-local id; vertices already retired keep number 0.
/// Peeled vertices are retired and their edges deleted.
pub(crate) fn peel_tip_vertices(
    g: &mut BipartiteGraph,
    side: VertexSide,
    supports: &[u64],
    floor: u64,
    tie: TieBreak,
) -> (Vec<u64>, PeelCounters) {
    let count = g.side_count(side);
    let mut theta = vec![0u64; count];
    let mut d = Decrementer { queue: MinBucketQueue::new(count), level: floor, updates: 0 };
    for x in 0..count as u32 {
        if g.is_vertex_alive(g.global(side, x)) {
            d.queue.insert(x, supports[x as usize]);
        }
    }
    let mut orderer = Orderer::new(tie);
    let mut counters = PeelCounters::default();
    let mut wedge = vec![0u32; g.n()];
    let mut touched: Vec<u32> = Vec::new();

    while let Some((key, mut ids)) = d.queue.pop_min_bucket() {
        d.level = d.level.max(key);
        counters.rounds += 1;
        orderer.order(&mut ids);
        for &x in &ids {
            theta[x as usize] = d.level;
        }
        for &x in &ids {
            let u = g.global(side, x);
            let mut incident = Vec::new();
            for a in g.neighbors(u) {
                incident.push(a.edge);
                for b in g.segment(a.neighbor) {
                    counters.wedges_traversed += 1;
                    let u2 = b.neighbor;
                    if u2 == u || !g.is_edge_alive(b.edge) || !g.is_vertex_alive(u2) {
                        continue;
                    }
                    if wedge[u2 as usize] == 0 {
                        touched.push(u2);
                    }
                    wedge[u2 as usize] += 1;
                }
            }
            for &u2 in &touched {
                d.dec(g.local(u2) as usize, choose2(wedge[u2 as usize] as u64));
                wedge[u2 as usize] = 0;
            }
            touched.clear();
            g.delete_edges(incident).expect("edge ids in range");
            g.retire_vertices([u]);
        }
    }
    counters.support_updates = d.updates;
    (theta, counters)
}

/// Bottom-up wing decomposition. With `use_index` the updates go through the
/// bloom-edge index, otherwise through wedge traversal.
pub fn bup_wing(g: &BipartiteGraph, use_index: bool) -> DecompositionResult {
    bup_wing_with(g, use_index, TieBreak::LowestId)
}

pub fn bup_wing_with(g: &BipartiteGraph, use_index: bool, tie: TieBreak) -> DecompositionResult {
    let mut timer = LapTimer::new();
    let counts = count_butterflies(g);
    timer.lap("count");
    let (theta, counters) = if use_index {
        let mut index = build_be_index(g);
        timer.lap("index");
        peel_edges_indexed(&mut index, EdgeScope::Full, &counts.edge.values, 0, tie, true)
    } else {
        let mut work = g.clone();
        peel_edges_wedges(&mut work, &counts.edge.values, tie)
    };
    timer.lap("peel");
    finish(DecompositionKind::Wing, theta, counters, timer)
}

/// Bottom-up tip decomposition of `side`.
pub fn bup_tip(g: &BipartiteGraph, side: VertexSide) -> DecompositionResult {
    bup_tip_with(g, side, TieBreak::LowestId)
}

pub fn bup_tip_with(g: &BipartiteGraph, side: VertexSide, tie: TieBreak) -> DecompositionResult {
    let mut timer = LapTimer::new();
    let counts = count_butterflies(g);
    timer.lap("count");
    let mut work = g.clone();
    let (theta, counters) = peel_tip_vertices(&mut work, side, &counts.side(g, side), 0, tie);
    timer.lap("peel");
    finish(DecompositionKind::Tip(side), theta, counters, timer)
}

fn finish(kind: DecompositionKind, theta: Vec<u64>, c: PeelCounters, timer: LapTimer) -> DecompositionResult {
    let mut metrics = Metrics { iterations_rho: c.rounds, partitions: 1, ..Metrics::default() };
    metrics.absorb(&c);
    timer.finish(&mut metrics);
    DecompositionResult { kind, entity_numbers: theta, metrics }
}

/// One butterfly-connected piece of a hierarchy level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    /// Edge ids (wing) or side-local vertex ids (tip), ascending.
    pub entities: Vec<u32>,
    /// Edge ids of the component's subgraph, ascending.
    pub edges: Vec<u32>,
}

struct DisjointSets {
    parent: Vec<u32>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets { parent: (0..n as u32).collect() }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = p;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }
}

/// Entities with number `≥ k`, split into butterfly-connected components.
/// Components are ordered by their smallest entity.
pub fn extract_k_level(
    g: &BipartiteGraph,
    numbers: &[u64],
    kind: DecompositionKind,
    k: u64,
) -> Result<Vec<Component>> {
    match kind {
        DecompositionKind::Wing => {
            let level: Vec<u32> = (0..g.edge_count() as u32)
                .filter(|&e| g.is_edge_alive(e) && numbers[e as usize] >= k)
                .collect();
            let sub = g.edge_subgraph(&level)?;
            let index = build_be_index(&sub);
            let mut sets = DisjointSets::new(sub.edge_count());
            for b in 0..index.bloom_count() as u32 {
                let links = index.bloom_links(b);
                for l in links {
                    sets.union(links[0].edge, l.edge);
                }
            }
            let mut groups: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
            for e in 0..sub.edge_count() as u32 {
                let r = sets.find(e);
                groups.entry(r).or_default().push(sub.parent_edge(e));
            }
            Ok(groups
                .into_values()
                .map(|entities| Component { edges: entities.clone(), entities })
                .collect())
        }
        DecompositionKind::Tip(side) => {
            let level: Vec<u32> = (0..g.side_count(side) as u32)
                .filter(|&x| g.is_vertex_alive(g.global(side, x)) && numbers[x as usize] >= k)
                .collect();
            let sub = g.induced_subgraph(side, &level)?;
            let index = build_be_index(&sub);
            let mut sets = DisjointSets::new(sub.side_count(side));
            for b in 0..index.bloom_count() as u32 {
                let bloom = index.bloom(b);
                if sub.side_of(bloom.start) == side {
                    sets.union(sub.local(bloom.start), sub.local(bloom.last));
                } else {
                    let mids: Vec<u32> = index
                        .bloom_links(b)
                        .iter()
                        .map(|l| {
                            let (u, v) = sub.endpoints(l.edge);
                            sub.local(if side == VertexSide::U { u } else { v })
                        })
                        .collect();
                    for &x in &mids {
                        sets.union(mids[0], x);
                    }
                }
            }
            let mut groups: BTreeMap<u32, (Vec<u32>, Vec<u32>)> = BTreeMap::new();
            for x in 0..sub.side_count(side) as u32 {
                let r = sets.find(x);
                let w = sub.global(side, x);
                let entry = groups.entry(r).or_default();
                entry.0.push(level[x as usize]);
                entry.1.extend(sub.neighbors(w).map(|a| sub.parent_edge(a.edge)));
            }
            Ok(groups
                .into_values()
                .map(|(entities, mut edges)| {
                    edges.sort_unstable();
                    Component { entities, edges }
                })
                .collect())
        }
    }
}
