//! Bloom-edge index.
//!
//! A bloom is the set of wedges sharing the endpoint pair `(start, last)`
//! where `last` is the highest-priority vertex. With `k` midpoints it holds
//! `C(k, 2)` butterflies and every butterfly of the graph lies in exactly one
//! bloom. Each midpoint contributes the twin pair `(start, mid)`, `(mid, last)`.

use std::io::Write;

use rayon::prelude::*;

use crate::count::{counting_bound, WedgeScratch};
use crate::error::{Error, Result};
use crate::graph::BipartiteGraph;

/// Bytes of index storage per explored wedge: two bloom-side and two
/// edge-side links of 8 bytes each.
pub const BYTES_PER_WEDGE: u64 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Link {
    pub edge: u32,
    pub twin: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeLink {
    pub bloom: u32,
    pub twin: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bloom {
    pub start: u32,
    pub last: u32,
}

#[derive(Debug, Clone)]
pub struct BloomEdgeIndex {
    blooms: Vec<Bloom>,
    source_bloom: Vec<u32>,
    k: Vec<u64>,
    bloom_offsets: Vec<usize>,
    bloom_len: Vec<u32>,
    bloom_links: Vec<Link>,
    members: Vec<u32>,
    edge_offsets: Vec<usize>,
    edge_links: Vec<EdgeLink>,
}

impl BloomEdgeIndex {
    pub fn bloom_count(&self) -> usize {
        self.blooms.len()
    }

    pub fn bloom(&self, b: u32) -> Bloom {
        self.blooms[b as usize]
    }

    /// Id of the bloom in the full index this one was derived from.
    pub fn source_bloom(&self, b: u32) -> u32 {
        self.source_bloom[b as usize]
    }

    pub fn bloom_number(&self, b: u32) -> u64 {
        self.k[b as usize]
    }

    pub fn bloom_numbers(&self) -> &[u64] {
        &self.k
    }

    /// Current links of bloom `b`.
    pub fn bloom_links(&self, b: u32) -> &[Link] {
        let s = self.bloom_offsets[b as usize];
        &self.bloom_links[s..s + self.bloom_len[b as usize] as usize]
    }

    /// Edges covered by this index, ascending. For a full index this is every
    /// edge id of the graph.
    pub fn members(&self) -> &[u32] {
        &self.members
    }

    /// Links of the member at position `pos` in [`members`](Self::members).
    pub fn edge_links_at(&self, pos: usize) -> &[EdgeLink] {
        &self.edge_links[self.edge_offsets[pos]..self.edge_offsets[pos + 1]]
    }

    pub fn link_count(&self) -> usize {
        self.bloom_len.iter().map(|&l| l as usize).sum()
    }

    /// `Σ_B C(k_B, 2)`.
    pub fn butterfly_total(&self) -> u64 {
        self.k.iter().map(|&k| k * k.saturating_sub(1) / 2).sum()
    }

    pub(crate) fn bloom_offsets(&self) -> &[usize] {
        &self.bloom_offsets
    }

    pub(crate) fn raw_bloom_links(&self) -> &[Link] {
        &self.bloom_links
    }

    pub(crate) fn k_mut(&mut self) -> &mut [u64] {
        &mut self.k
    }

    /// Keeps the links of bloom `b` accepted by `keep`, preserving their
    /// order. Returns the number of links scanned.
    pub(crate) fn retain_links<F: FnMut(Link) -> bool>(&mut self, b: u32, mut keep: F) -> usize {
        let s = self.bloom_offsets[b as usize];
        let len = self.bloom_len[b as usize] as usize;
        let mut w = s;
        for r in s..s + len {
            let l = self.bloom_links[r];
            if keep(l) {
                self.bloom_links[w] = l;
                w += 1;
            }
        }
        self.bloom_len[b as usize] = (w - s) as u32;
        len
    }

    /// One line per bloom: `bloom_id k_B edge:twin ...`.
    pub fn dump<W: Write>(&self, mut out: W) -> Result<()> {
        for b in 0..self.blooms.len() as u32 {
            write!(out, "{} {}", self.source_bloom(b), self.k[b as usize])?;
            for l in self.bloom_links(b) {
                write!(out, " {}:{}", l.edge, l.twin)?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Predicted index size in bytes for `g`.
pub fn predicted_index_bytes(g: &BipartiteGraph) -> u64 {
    counting_bound(g).saturating_mul(BYTES_PER_WEDGE)
}

pub fn build_be_index(g: &BipartiteGraph) -> BloomEdgeIndex {
    build(g)
}

/// Builds the index after checking the predicted size against `budget` bytes.
pub fn build_be_index_with_budget(g: &BipartiteGraph, budget: Option<u64>) -> Result<BloomEdgeIndex> {
    if let Some(budget) = budget {
        let predicted = predicted_index_bytes(g);
        if predicted > budget {
            return Err(Error::IndexBudget { predicted, budget });
        }
    }
    Ok(build(g))
}

struct StartBlooms {
    lasts: Vec<(u32, u32)>,
    pairs: Vec<(u32, u32)>,
}

fn build(g: &BipartiteGraph) -> BloomEdgeIndex {
    let n = g.n();
    let per_start: Vec<StartBlooms> = (0..n as u32)
        .into_par_iter()
        .map_init(
            || WedgeScratch::new(n),
            |s, start| {
                let mut out = StartBlooms { lasts: Vec::new(), pairs: Vec::new() };
                if s.collect(g, start) == 0 {
                    return out;
                }
                let mut lasts: Vec<u32> =
                    s.touched.iter().copied().filter(|&l| s.count[l as usize] >= 2).collect();
                lasts.sort_unstable();
                let mut wedges = s.wedges.clone();
                wedges.retain(|w| s.count[w.last as usize] >= 2);
                wedges.sort_by_key(|w| (w.last, w.mid));
                for &l in &lasts {
                    out.lasts.push((l, s.count[l as usize]));
                }
                out.pairs = wedges.iter().map(|w| (w.e1, w.e2)).collect();
                out
            },
        )
        .collect();

    let mut blooms = Vec::new();
    let mut k = Vec::new();
    let mut bloom_offsets = vec![0usize];
    let mut bloom_links = Vec::new();
    for (start, sb) in per_start.iter().enumerate() {
        let mut cursor = 0;
        for &(last, count) in &sb.lasts {
            blooms.push(Bloom { start: start as u32, last });
            k.push(count as u64);
            for &(e1, e2) in &sb.pairs[cursor..cursor + count as usize] {
                bloom_links.push(Link { edge: e1, twin: e2 });
                bloom_links.push(Link { edge: e2, twin: e1 });
            }
            cursor += count as usize;
            bloom_offsets.push(bloom_links.len());
        }
    }

    let m = g.edge_count();
    let mut degree = vec![0usize; m + 1];
    for l in &bloom_links {
        degree[l.edge as usize + 1] += 1;
    }
    for i in 0..m {
        degree[i + 1] += degree[i];
    }
    let edge_offsets = degree;
    let mut cursor = edge_offsets.clone();
    let mut edge_links = vec![EdgeLink { bloom: 0, twin: 0 }; bloom_links.len()];
    for b in 0..blooms.len() {
        for l in &bloom_links[bloom_offsets[b]..bloom_offsets[b + 1]] {
            edge_links[cursor[l.edge as usize]] = EdgeLink { bloom: b as u32, twin: l.twin };
            cursor[l.edge as usize] += 1;
        }
    }

    BloomEdgeIndex {
        source_bloom: (0..blooms.len() as u32).collect(),
        bloom_len: bloom_offsets.windows(2).map(|w| (w[1] - w[0]) as u32).collect(),
        blooms,
        k,
        bloom_offsets,
        bloom_links,
        members: (0..m as u32).collect(),
        edge_offsets,
        edge_links,
    }
}

/// Maps global edge ids to their partition and position inside it.
#[derive(Debug, Clone)]
pub struct EdgeLocator {
    part_of: Vec<u32>,
    local_pos: Vec<u32>,
}

impl EdgeLocator {
    /// `partition_of[e]` is the 0-based partition of edge `e`.
    pub fn new(partition_of: &[u32], parts: usize) -> Result<Self> {
        let mut next = vec![0u32; parts];
        let mut local_pos = vec![0u32; partition_of.len()];
        for (e, &p) in partition_of.iter().enumerate() {
            if p as usize >= parts {
                return Err(Error::PlanIntegrity(format!("edge {e} has no partition")));
            }
            local_pos[e] = next[p as usize];
            next[p as usize] += 1;
        }
        Ok(EdgeLocator { part_of: partition_of.to_vec(), local_pos })
    }

    pub fn part(&self, e: u32) -> u32 {
        self.part_of[e as usize]
    }

    pub fn local(&self, e: u32) -> u32 {
        self.local_pos[e as usize]
    }
}

/// Splits `index` into one index per partition. `partition_of` is 0-based.
///
/// Partition `i` keeps link `(e, B)` for `e ∈ E_i` when the twin sits in a
/// partition `≥ i`; its bloom number counts the twin pairs of `B` with both
/// edges in partitions `≥ i`.
pub fn partition_be_index(
    g: &BipartiteGraph,
    index: &BloomEdgeIndex,
    partition_of: &[u32],
    parts: usize,
) -> Result<Vec<BloomEdgeIndex>> {
    if partition_of.len() != g.edge_count() || index.members.len() != g.edge_count() {
        return Err(Error::PlanIntegrity("partition vector does not cover every edge".into()));
    }
    let loc = EdgeLocator::new(partition_of, parts)?;

    // Per bloom: kept links grouped by partition, and twin-pair tallies.
    struct Split {
        links: Vec<(u32, Link)>,
        k_from: Vec<(u32, u64)>,
    }
    let splits: Vec<Split> = (0..index.bloom_count() as u32)
        .into_par_iter()
        .map(|b| {
            let mut links = Vec::new();
            let mut tally: Vec<(u32, u64)> = Vec::new();
            for &l in index.bloom_links(b) {
                let (pe, pt) = (loc.part(l.edge), loc.part(l.twin));
                if pt >= pe {
                    links.push((pe, l));
                }
                if pe < pt || (pe == pt && l.twin < l.edge) {
                    tally.push((pe.min(pt), 1));
                }
            }
            tally.sort_unstable();
            let mut k_from: Vec<(u32, u64)> = Vec::new();
            for (p, c) in tally {
                match k_from.last_mut() {
                    Some(last) if last.0 == p => last.1 += c,
                    _ => k_from.push((p, c)),
                }
            }
            // Suffix sums: k_B(I_i) = Σ_{j ≥ i} tally_j.
            let mut acc = 0;
            for entry in k_from.iter_mut().rev() {
                acc += entry.1;
                entry.1 = acc;
            }
            links.sort_by_key(|&(p, _)| p);
            Split { links, k_from }
        })
        .collect();

    let k_at = |s: &Split, p: u32| -> u64 {
        s.k_from.iter().find(|&&(q, _)| q >= p).map_or(0, |&(_, k)| k)
    };

    let mut members: Vec<Vec<u32>> = vec![Vec::new(); parts];
    for e in 0..g.edge_count() as u32 {
        members[loc.part(e) as usize].push(e);
    }

    let mut out: Vec<BloomEdgeIndex> = members
        .into_iter()
        .map(|members| BloomEdgeIndex {
            blooms: Vec::new(),
            source_bloom: Vec::new(),
            k: Vec::new(),
            bloom_offsets: vec![0],
            bloom_len: Vec::new(),
            bloom_links: Vec::new(),
            edge_offsets: vec![0; members.len() + 1],
            members,
            edge_links: Vec::new(),
        })
        .collect();

    for (b, s) in splits.iter().enumerate() {
        let mut i = 0;
        while i < s.links.len() {
            let p = s.links[i].0;
            let idx = &mut out[p as usize];
            idx.blooms.push(index.blooms[b]);
            idx.source_bloom.push(index.source_bloom[b]);
            idx.k.push(k_at(s, p));
            while i < s.links.len() && s.links[i].0 == p {
                idx.bloom_links.push(s.links[i].1);
                i += 1;
            }
            idx.bloom_offsets.push(idx.bloom_links.len());
        }
    }

    for idx in &mut out {
        idx.bloom_len = idx.bloom_offsets.windows(2).map(|w| (w[1] - w[0]) as u32).collect();
        for l in &idx.bloom_links {
            idx.edge_offsets[loc.local(l.edge) as usize + 1] += 1;
        }
        for i in 0..idx.members.len() {
            idx.edge_offsets[i + 1] += idx.edge_offsets[i];
        }
        let mut cursor = idx.edge_offsets.clone();
        let mut edge_links = vec![EdgeLink { bloom: 0, twin: 0 }; idx.bloom_links.len()];
        for b in 0..idx.blooms.len() {
            for l in &idx.bloom_links[idx.bloom_offsets[b]..idx.bloom_offsets[b + 1]] {
                let pos = loc.local(l.edge) as usize;
                edge_links[cursor[pos]] = EdgeLink { bloom: b as u32, twin: l.twin };
                cursor[pos] += 1;
            }
        }
        idx.edge_links = edge_links;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::count::count_butterflies;
    use crate::fixtures as testgraphs;

    #[test]
    fn k22_is_one_bloom() {
        let g = BipartiteGraph::from_edges(2, 2, &[(0, 0), (0, 1), (1, 0), (1, 1)]).unwrap();
        let idx = build_be_index(&g);
        assert_eq!(idx.bloom_count(), 1);
        assert_eq!(idx.bloom_number(0), 2);
        assert_eq!(idx.link_count(), 4);
    }

    #[test]
    fn twin_bloom_graph() {
        let g = testgraphs::twin_blooms();
        let idx = build_be_index(&g);
        assert_eq!(idx.bloom_count(), 2);
        let mut ks: Vec<u64> = idx.bloom_numbers().to_vec();
        ks.sort();
        assert_eq!(ks, vec![2, 3]);
        let b0 = (0..2).find(|&b| idx.bloom_number(b) == 2).unwrap();
        let mut pairs: Vec<(u32, u32)> =
            idx.bloom_links(b0).iter().map(|l| (l.edge.min(l.twin), l.edge.max(l.twin))).collect();
        pairs.sort();
        pairs.dedup();
        assert_eq!(pairs, vec![(0, 1), (2, 3)]);
    }

    #[test]
    fn per_edge_reconstruction_on_four_level() {
        let g = testgraphs::four_level();
        let idx = build_be_index(&g);
        let c = count_butterflies(&g);
        for e in 0..g.edge_count() {
            let s: u64 = idx.edge_links_at(e).iter().map(|l| idx.bloom_number(l.bloom) - 1).sum();
            assert_eq!(s, c.edge[e]);
        }
        assert_eq!(idx.butterfly_total(), c.total);
    }

    #[test]
    fn budget_guard() {
        let g = testgraphs::four_level();
        assert!(matches!(
            build_be_index_with_budget(&g, Some(1)),
            Err(Error::IndexBudget { .. })
        ));
        assert!(build_be_index_with_budget(&g, None).is_ok());
    }

    #[test]
    fn single_partition_is_identity() {
        let g = testgraphs::four_level();
        let idx = build_be_index(&g);
        let parts = partition_be_index(&g, &idx, &vec![0; g.edge_count()], 1).unwrap();
        assert_eq!(parts.len(), 1);
        let p = &parts[0];
        assert_eq!(p.bloom_numbers(), idx.bloom_numbers());
        for b in 0..idx.bloom_count() as u32 {
            assert_eq!(p.bloom_links(b), idx.bloom_links(b));
        }
    }

    #[test]
    fn first_partition_keeps_full_bloom_number() {
        let g = testgraphs::four_level();
        let idx = build_be_index(&g);
        let part: Vec<u32> = (0..g.edge_count() as u32).map(|e| if e <= 4 { 0 } else { 1 }).collect();
        let parts = partition_be_index(&g, &idx, &part, 2).unwrap();
        let i1 = &parts[0];
        let b1 = (0..i1.bloom_count() as u32)
            .find(|&b| i1.bloom_links(b).iter().any(|l| l.edge == 4))
            .unwrap();
        let mut kept: Vec<u32> = i1.bloom_links(b1).iter().map(|l| l.edge).collect();
        kept.sort();
        assert_eq!(kept, vec![3, 4]);
        assert_eq!(i1.bloom_number(b1), 3);
    }

    #[test]
    fn missing_assignment_is_an_error() {
        let g = testgraphs::four_level();
        let idx = build_be_index(&g);
        let mut part = vec![0; g.edge_count()];
        part[3] = 5;
        assert!(matches!(partition_be_index(&g, &idx, &part, 2), Err(Error::PlanIntegrity(_))));
    }
}
