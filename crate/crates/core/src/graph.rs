//! Bipartite graph storage.
//!
//! Vertices of both sides share one global id space: U-vertices occupy
//! `0..u_count` and V-vertices `u_count..u_count + v_count`. Adjacency is kept
//! in CSR form, each entry carrying the neighbor and the id of the connecting
//! edge. After [`BipartiteGraph::assign_priorities`] every list is sorted by
//! ascending priority rank of the neighbor, rank 0 being the highest-degree
//! vertex.
//!
//! Deletion is logical: an edge keeps its id forever and is only flagged dead.
//! A list is physically compacted once more than half of its entries are dead,
//! so the order of surviving entries (and thus the rank ordering) is preserved.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VertexSide {
    U,
    V,
}

impl VertexSide {
    pub fn other(self) -> VertexSide {
        match self {
            VertexSide::U => VertexSide::V,
            VertexSide::V => VertexSide::U,
        }
    }
}

impl std::fmt::Display for VertexSide {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            VertexSide::U => f.write_str("u"),
            VertexSide::V => f.write_str("v"),
        }
    }
}

impl std::str::FromStr for VertexSide {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "u" | "U" => Ok(VertexSide::U),
            "v" | "V" => Ok(VertexSide::V),
            other => Err(Error::InvalidArgument(format!("unknown side `{other}`"))),
        }
    }
}

/// One adjacency entry: the neighbor's global id and the connecting edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdjEntry {
    pub neighbor: u32,
    pub edge: u32,
}

/// Supported on-disk edge list layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgeListFormat {
    /// `u v` per line, 1-based ids, `%`/`#` comment lines (KONECT style).
    #[default]
    WhitespacePairs,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub u_count: usize,
    pub v_count: usize,
    pub m: usize,
    pub max_degree_u: u32,
    pub max_degree_v: u32,
}

#[derive(Debug, Clone)]
pub struct BipartiteGraph {
    u_count: usize,
    v_count: usize,
    offsets: Vec<usize>,
    adjacency: Vec<AdjEntry>,
    list_len: Vec<u32>,
    list_dead: Vec<u32>,
    degree: Vec<u32>,
    rank: Vec<u32>,
    endpoints: Vec<(u32, u32)>,
    alive_edge: Vec<bool>,
    alive_vertex: Vec<bool>,
    live_edges: usize,
    parent_edge: Option<Vec<u32>>,
    parent_vertex: Option<Vec<u32>>,
}

impl BipartiteGraph {
    /// Builds a graph from side-local `(u, v)` pairs. Duplicates are dropped;
    /// edge ids follow first-occurrence order. Priorities are assigned.
    pub fn from_edges(u_count: usize, v_count: usize, edges: &[(u32, u32)]) -> Result<Self> {
        let n = u_count + v_count;
        if n > u32::MAX as usize || edges.len() > u32::MAX as usize {
            return Err(Error::InvalidArgument("graph exceeds 32-bit id space".into()));
        }
        let mut seen = HashSet::with_capacity(edges.len());
        let mut endpoints = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            if u as usize >= u_count || v as usize >= v_count {
                return Err(Error::InvalidArgument(format!(
                    "edge ({u}, {v}) out of range for {u_count}x{v_count} graph"
                )));
            }
            if seen.insert((u, v)) {
                endpoints.push((u, u_count as u32 + v));
            }
        }

        let mut degree = vec![0u32; n];
        for &(u, v) in &endpoints {
            degree[u as usize] += 1;
            degree[v as usize] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for w in 0..n {
            offsets[w + 1] = offsets[w] + degree[w] as usize;
        }
        let mut cursor = offsets.clone();
        let mut adjacency = vec![AdjEntry { neighbor: 0, edge: 0 }; offsets[n]];
        for (e, &(u, v)) in endpoints.iter().enumerate() {
            let e = e as u32;
            adjacency[cursor[u as usize]] = AdjEntry { neighbor: v, edge: e };
            cursor[u as usize] += 1;
            adjacency[cursor[v as usize]] = AdjEntry { neighbor: u, edge: e };
            cursor[v as usize] += 1;
        }

        let m = endpoints.len();
        let mut g = BipartiteGraph {
            u_count,
            v_count,
            list_len: degree.clone(),
            list_dead: vec![0; n],
            offsets,
            adjacency,
            degree,
            rank: (0..n as u32).collect(),
            endpoints,
            alive_edge: vec![true; m],
            alive_vertex: vec![true; n],
            live_edges: m,
            parent_edge: None,
            parent_vertex: None,
        };
        g.assign_priorities();
        Ok(g)
    }

    pub fn u_count(&self) -> usize {
        self.u_count
    }

    pub fn v_count(&self) -> usize {
        self.v_count
    }

    /// Total number of vertices.
    pub fn n(&self) -> usize {
        self.u_count + self.v_count
    }

    /// Number of edge ids, dead or alive.
    pub fn edge_count(&self) -> usize {
        self.endpoints.len()
    }

    pub fn live_edge_count(&self) -> usize {
        self.live_edges
    }

    pub fn side_count(&self, side: VertexSide) -> usize {
        match side {
            VertexSide::U => self.u_count,
            VertexSide::V => self.v_count,
        }
    }

    pub fn side_of(&self, w: u32) -> VertexSide {
        if (w as usize) < self.u_count {
            VertexSide::U
        } else {
            VertexSide::V
        }
    }

    pub fn global(&self, side: VertexSide, local: u32) -> u32 {
        match side {
            VertexSide::U => local,
            VertexSide::V => self.u_count as u32 + local,
        }
    }

    pub fn local(&self, w: u32) -> u32 {
        if (w as usize) < self.u_count {
            w
        } else {
            w - self.u_count as u32
        }
    }

    /// Global ids of the vertices on `side`.
    pub fn side_range(&self, side: VertexSide) -> std::ops::Range<u32> {
        match side {
            VertexSide::U => 0..self.u_count as u32,
            VertexSide::V => self.u_count as u32..self.n() as u32,
        }
    }

    /// `(u, v)` global endpoints of edge `e`.
    pub fn endpoints(&self, e: u32) -> (u32, u32) {
        self.endpoints[e as usize]
    }

    pub fn degree(&self, w: u32) -> u32 {
        self.degree[w as usize]
    }

    pub fn rank(&self, w: u32) -> u32 {
        self.rank[w as usize]
    }

    pub fn ranks(&self) -> &[u32] {
        &self.rank
    }

    pub fn is_edge_alive(&self, e: u32) -> bool {
        self.alive_edge[e as usize]
    }

    pub fn is_vertex_alive(&self, w: u32) -> bool {
        self.alive_vertex[w as usize]
    }

    /// The stored adjacency list of `w`, including dead entries that have not
    /// been compacted away yet. Traversal cost is the length of this slice.
    pub fn segment(&self, w: u32) -> &[AdjEntry] {
        let start = self.offsets[w as usize];
        &self.adjacency[start..start + self.list_len[w as usize] as usize]
    }

    /// Live neighbors of `w`: the edge is alive and the neighbor has not been
    /// retired. Order is ascending neighbor rank.
    pub fn neighbors(&self, w: u32) -> impl Iterator<Item = AdjEntry> + '_ {
        self.segment(w)
            .iter()
            .copied()
            .filter(move |a| self.alive_edge[a.edge as usize] && self.alive_vertex[a.neighbor as usize])
    }

    /// Edge id of an induced subgraph's edge in the graph it was cut from.
    pub fn parent_edge(&self, e: u32) -> u32 {
        self.parent_edge.as_ref().map_or(e, |p| p[e as usize])
    }

    pub fn parent_vertex(&self, w: u32) -> u32 {
        self.parent_vertex.as_ref().map_or(w, |p| p[w as usize])
    }

    /// Recomputes priority ranks from current degrees and re-sorts every list
    /// by ascending neighbor rank. Dead entries are dropped on the way.
    ///
    /// Ranks order vertices by non-increasing degree; ties go to the smaller
    /// side-local id, and U before V on equal ids.
    pub fn assign_priorities(&mut self) {
        let n = self.n();
        let mut order: Vec<u32> = (0..n as u32).collect();
        order.sort_by_key(|&w| {
            (std::cmp::Reverse(self.degree[w as usize]), self.local(w), self.side_of(w))
        });
        for (r, &w) in order.iter().enumerate() {
            self.rank[w as usize] = r as u32;
        }
        for w in 0..n as u32 {
            self.compact(w);
            let start = self.offsets[w as usize];
            let len = self.list_len[w as usize] as usize;
            let rank = &self.rank;
            self.adjacency[start..start + len].sort_by_key(|a| rank[a.neighbor as usize]);
        }
    }

    /// Clears the liveness flag of each listed edge and updates degrees.
    /// Already-deleted ids are ignored; unknown ids are an error.
    ///
    /// Takes `&mut self`: callers running peeling in parallel must finish the
    /// parallel sweep before applying deletions, so no list is mutated while
    /// another worker traverses it.
    pub fn delete_edges<I: IntoIterator<Item = u32>>(&mut self, edges: I) -> Result<()> {
        for e in edges {
            if e as usize >= self.endpoints.len() {
                return Err(Error::InvalidArgument(format!("edge id {e} out of range")));
            }
            if !self.alive_edge[e as usize] {
                continue;
            }
            self.alive_edge[e as usize] = false;
            self.live_edges -= 1;
            let (u, v) = self.endpoints[e as usize];
            for w in [u, v] {
                self.degree[w as usize] -= 1;
                self.list_dead[w as usize] += 1;
                if 2 * self.list_dead[w as usize] > self.list_len[w as usize] {
                    self.compact(w);
                }
            }
        }
        Ok(())
    }

    /// Flags vertices as removed without touching their edges. Traversals via
    /// [`neighbors`](Self::neighbors) skip them.
    pub fn retire_vertices<I: IntoIterator<Item = u32>>(&mut self, vertices: I) {
        for w in vertices {
            self.alive_vertex[w as usize] = false;
        }
    }

    fn compact(&mut self, w: u32) {
        if self.list_dead[w as usize] == 0 {
            return;
        }
        let start = self.offsets[w as usize];
        let len = self.list_len[w as usize] as usize;
        let mut keep = start;
        for i in start..start + len {
            let a = self.adjacency[i];
            if self.alive_edge[a.edge as usize] {
                self.adjacency[keep] = a;
                keep += 1;
            }
        }
        self.list_len[w as usize] = (keep - start) as u32;
        self.list_dead[w as usize] = 0;
    }

    /// Subgraph induced on `subset` of `side` together with every vertex of
    /// the other side. Subset vertices are relabelled densely in ascending
    /// order; edges keep a link to their id here via `parent_edge`.
    pub fn induced_subgraph(&self, side: VertexSide, subset: &[u32]) -> Result<BipartiteGraph> {
        let count = self.side_count(side);
        let mut chosen: Vec<u32> = subset.to_vec();
        chosen.sort_unstable();
        chosen.dedup();
        if let Some(&bad) = chosen.iter().find(|&&x| x as usize >= count) {
            return Err(Error::InvalidArgument(format!(
                "vertex {bad} out of range for side {side} of size {count}"
            )));
        }
        let mut new_local = vec![u32::MAX; count];
        for (i, &x) in chosen.iter().enumerate() {
            new_local[x as usize] = i as u32;
        }

        let mut pairs = Vec::new();
        let mut parent_edges = Vec::new();
        for &x in &chosen {
            let w = self.global(side, x);
            // Parent edge order keeps the relative id order of the original.
            let mut incident: Vec<AdjEntry> = self
                .segment(w)
                .iter()
                .copied()
                .filter(|a| self.alive_edge[a.edge as usize])
                .collect();
            incident.sort_unstable_by_key(|a| a.edge);
            for a in incident {
                let other = self.local(a.neighbor);
                let nx = new_local[x as usize];
                pairs.push(match side {
                    VertexSide::U => (nx, other),
                    VertexSide::V => (other, nx),
                });
                parent_edges.push(a.edge);
            }
        }
        // Re-establish global edge-id order so ids are monotone in the parent's.
        let mut order: Vec<usize> = (0..pairs.len()).collect();
        order.sort_unstable_by_key(|&i| parent_edges[i]);
        let pairs: Vec<(u32, u32)> = order.iter().map(|&i| pairs[i]).collect();
        let parent_edges: Vec<u32> = order.iter().map(|&i| parent_edges[i]).collect();

        let (u_count, v_count) = match side {
            VertexSide::U => (chosen.len(), self.v_count),
            VertexSide::V => (self.u_count, chosen.len()),
        };
        let mut sub = BipartiteGraph::from_edges(u_count, v_count, &pairs)?;
        let mut parent_vertex = Vec::with_capacity(sub.n());
        for w in 0..sub.n() as u32 {
            let s = sub.side_of(w);
            let l = sub.local(w);
            let parent_local = if s == side { chosen[l as usize] } else { l };
            parent_vertex.push(self.parent_vertex(self.global(s, parent_local)));
        }
        sub.parent_vertex = Some(parent_vertex);
        sub.parent_edge = Some(parent_edges.iter().map(|&e| self.parent_edge(e)).collect());
        Ok(sub)
    }

    /// Subgraph on all vertices containing only the listed live edges.
    pub fn edge_subgraph(&self, edges: &[u32]) -> Result<BipartiteGraph> {
        let mut chosen: Vec<u32> = edges.to_vec();
        chosen.sort_unstable();
        chosen.dedup();
        if let Some(&bad) = chosen.iter().find(|&&e| e as usize >= self.edge_count()) {
            return Err(Error::InvalidArgument(format!("edge id {bad} out of range")));
        }
        chosen.retain(|&e| self.alive_edge[e as usize]);
        let pairs: Vec<(u32, u32)> = chosen
            .iter()
            .map(|&e| {
                let (u, v) = self.endpoints[e as usize];
                (u, v - self.u_count as u32)
            })
            .collect();
        let mut sub = BipartiteGraph::from_edges(self.u_count, self.v_count, &pairs)?;
        sub.parent_vertex = Some((0..self.n() as u32).map(|w| self.parent_vertex(w)).collect());
        sub.parent_edge = Some(chosen.iter().map(|&e| self.parent_edge(e)).collect());
        Ok(sub)
    }

    /// Surviving edges as side-local pairs, in edge-id order.
    pub fn live_edges(&self) -> Vec<(u32, u32)> {
        self.endpoints
            .iter()
            .enumerate()
            .filter(|&(e, &(u, v))| {
                self.alive_edge[e] && self.alive_vertex[u as usize] && self.alive_vertex[v as usize]
            })
            .map(|(_, &(u, v))| (u, v - self.u_count as u32))
            .collect()
    }

    pub fn summary(&self) -> GraphSummary {
        let max_deg = |side| self.side_range(side).map(|w| self.degree[w as usize]).max().unwrap_or(0);
        GraphSummary {
            u_count: self.u_count,
            v_count: self.v_count,
            m: self.live_edges,
            max_degree_u: max_deg(VertexSide::U),
            max_degree_v: max_deg(VertexSide::V),
        }
    }

    /// Writes live edges as 1-based `u v` lines, the format [`load_edge_list`]
    /// reads.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "% bip unweighted")?;
        writeln!(out, "% {} {} {}", self.live_edges, self.u_count, self.v_count)?;
        for (u, v) in self.live_edges() {
            writeln!(out, "{} {}", u + 1, v + 1)?;
        }
        Ok(())
    }
}

/// Parses an edge list and returns the normalized graph: per-side ids are
/// compacted to dense 0-based ranges (ascending original id), duplicates are
/// dropped, and edge ids follow first-occurrence order.
pub fn load_edge_list<R: BufRead>(source: R, format: EdgeListFormat) -> Result<BipartiteGraph> {
    let EdgeListFormat::WhitespacePairs = format;
    let mut raw: Vec<(u64, u64)> = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim_start();
        if trimmed.is_empty() || trimmed.starts_with('%') || trimmed.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        if tokens.len() != 2 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected 2 tokens, found {}", tokens.len()),
            });
        }
        let parse = |t: &str| -> Result<u64> {
            match t.parse::<u64>() {
                Ok(0) | Err(_) => Err(Error::Parse {
                    line: lineno,
                    message: format!("`{t}` is not a positive integer id"),
                }),
                Ok(x) => Ok(x),
            }
        };
        raw.push((parse(tokens[0])?, parse(tokens[1])?));
    }
    if raw.is_empty() {
        return Err(Error::EmptyGraph);
    }

    let dense = |ids: Vec<u64>| {
        let mut ids = ids;
        ids.sort_unstable();
        ids.dedup();
        ids
    };
    let u_ids = dense(raw.iter().map(|p| p.0).collect());
    let v_ids = dense(raw.iter().map(|p| p.1).collect());
    let pairs: Vec<(u32, u32)> = raw
        .iter()
        .map(|&(u, v)| {
            (
                u_ids.binary_search(&u).expect("id collected above") as u32,
                v_ids.binary_search(&v).expect("id collected above") as u32,
            )
        })
        .collect();
    BipartiteGraph::from_edges(u_ids.len(), v_ids.len(), &pairs)
}

pub fn read_edge_list_file<P: AsRef<Path>>(path: P) -> Result<BipartiteGraph> {
    let file = File::open(path)?;
    load_edge_list(BufReader::new(file), EdgeListFormat::WhitespacePairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(lines: &[&str]) -> Result<BipartiteGraph> {
        load_edge_list(lines.join("\n").as_bytes(), EdgeListFormat::WhitespacePairs)
    }

    #[test]
    fn k22_loads() {
        let g = parse(&["1 1", "1 2", "2 1", "2 2"]).unwrap();
        assert_eq!((g.u_count(), g.v_count(), g.edge_count()), (2, 2, 4));
    }

    #[test]
    fn duplicates_are_dropped() {
        let g = parse(&["% comment", "1 1", "1 1"]).unwrap();
        assert_eq!((g.u_count(), g.v_count(), g.edge_count()), (1, 1, 1));
    }

    #[test]
    fn k23_degrees() {
        let g = parse(&["1 1", "1 2", "1 3", "2 1", "2 2", "2 3"]).unwrap();
        assert_eq!(g.edge_count(), 6);
        let du: Vec<u32> = g.side_range(VertexSide::U).map(|w| g.degree(w)).collect();
        let dv: Vec<u32> = g.side_range(VertexSide::V).map(|w| g.degree(w)).collect();
        assert_eq!(du, vec![3, 3]);
        assert_eq!(dv, vec![2, 2, 2]);
    }

    #[test]
    fn sparse_ids_are_compacted() {
        let g = parse(&["# x", "10 7", "3 7", "10 100"]).unwrap();
        assert_eq!((g.u_count(), g.v_count()), (2, 2));
        // u=3 -> 0, u=10 -> 1; v=7 -> 0, v=100 -> 1
        assert_eq!(g.endpoints(0), (1, 2));
        assert_eq!(g.endpoints(1), (0, 2));
        assert_eq!(g.endpoints(2), (1, 3));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match parse(&["1 1", "1 x"]) {
            Err(Error::Parse { line: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        match parse(&["% c", "1 2 3"]) {
            Err(Error::Parse { line: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        match parse(&["0 1"]) {
            Err(Error::Parse { line: 1, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse(&["% only comments"]), Err(Error::EmptyGraph)));
    }

    #[test]
    fn star_center_gets_rank_zero() {
        let g = BipartiteGraph::from_edges(1, 3, &[(0, 0), (0, 1), (0, 2)]).unwrap();
        assert_eq!(g.rank(0), 0);
    }

    #[test]
    fn k22_ties_follow_ids() {
        let g = BipartiteGraph::from_edges(2, 2, &[(0, 0), (0, 1), (1, 0), (1, 1)]).unwrap();
        // u0, v0, u1, v1
        assert_eq!(g.rank(0), 0);
        assert_eq!(g.rank(2), 1);
        assert_eq!(g.rank(1), 2);
        assert_eq!(g.rank(3), 3);
    }

    #[test]
    fn path_ranks() {
        // u0 - v0 - u1
        let g = BipartiteGraph::from_edges(2, 1, &[(0, 0), (1, 0)]).unwrap();
        assert_eq!(g.rank(2), 0);
        assert_eq!(g.rank(0), 1);
        assert_eq!(g.rank(1), 2);
    }

    #[test]
    fn adjacency_sorted_by_rank() {
        let g = BipartiteGraph::from_edges(3, 3, &[(0, 0), (1, 0), (1, 1), (2, 1), (2, 2), (0, 2), (1, 2)])
            .unwrap();
        for w in 0..g.n() as u32 {
            let ranks: Vec<u32> = g.neighbors(w).map(|a| g.rank(a.neighbor)).collect();
            assert!(ranks.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn induced_subgraph_cases() {
        let k23 = BipartiteGraph::from_edges(2, 3, &[(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2)]).unwrap();
        let all = k23.induced_subgraph(VertexSide::U, &[0, 1]).unwrap();
        assert_eq!(all.edge_count(), 6);
        assert_eq!(all.live_edges(), k23.live_edges());
        let none = k23.induced_subgraph(VertexSide::U, &[]).unwrap();
        assert_eq!(none.edge_count(), 0);
        let star = k23.induced_subgraph(VertexSide::U, &[0]).unwrap();
        assert_eq!(star.edge_count(), 3);
        assert_eq!(star.u_count(), 1);
        assert_eq!((0..3).map(|e| star.parent_edge(e)).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert!(matches!(
            k23.induced_subgraph(VertexSide::U, &[2]),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn deletion_cases() {
        let mut g = BipartiteGraph::from_edges(2, 2, &[(0, 0), (0, 1), (1, 0), (1, 1)]).unwrap();
        g.delete_edges([]).unwrap();
        assert_eq!(g.live_edge_count(), 4);
        g.delete_edges([0, 1, 2, 3]).unwrap();
        assert_eq!(g.live_edge_count(), 0);
        g.delete_edges([0]).unwrap();
        assert_eq!(g.live_edge_count(), 0);
        assert!((0..4).all(|w| g.segment(w).is_empty()));
        assert!(g.delete_edges([9]).is_err());
    }

    #[test]
    fn summary_reports_max_degrees() {
        let g = BipartiteGraph::from_edges(1, 3, &[(0, 0), (0, 1), (0, 2)]).unwrap();
        let s = g.summary();
        assert_eq!((s.m, s.max_degree_u, s.max_degree_v), (3, 3, 1));
    }
}
