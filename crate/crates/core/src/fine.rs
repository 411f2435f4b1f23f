//! Fine-grained decomposition.
//!
//! Each coarse partition is peeled on its own, sequentially, starting from the
//! snapshot supports of the plan. Partitions are handed to workers through a
//! shared queue in decreasing order of estimated work.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::baseline::{peel_edges_indexed, peel_tip_vertices, EdgeScope, TieBreak};
use crate::bloom::{BloomEdgeIndex, EdgeLocator};
use crate::coarse::{PartitionPlan, UNASSIGNED};
use crate::error::{Error, Result};
use crate::graph::{BipartiteGraph, VertexSide};
use crate::metrics::{DecompositionKind, PeelCounters};

/// Partition ids in longest-first order behind a shared cursor.
#[derive(Debug)]
pub struct TaskQueue {
    order: Vec<usize>,
    cursor: AtomicUsize,
}

impl TaskQueue {
    /// Orders tasks by decreasing work; equal work keeps ascending id.
    pub fn longest_first(work: &[u64]) -> Self {
        let mut order: Vec<usize> = (0..work.len()).collect();
        order.sort_by_key(|&i| std::cmp::Reverse(work[i]));
        TaskQueue { order, cursor: AtomicUsize::new(0) }
    }

    pub fn in_order(len: usize) -> Self {
        TaskQueue { order: (0..len).collect(), cursor: AtomicUsize::new(0) }
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn pop(&self) -> Option<usize> {
        let i = self.cursor.fetch_add(1, Ordering::Relaxed);
        self.order.get(i).copied()
    }
}

/// Simulated execution of tasks on workers that each pull the next task as
/// soon as they are free.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduleTrace {
    pub order: Vec<usize>,
    pub worker_of: Vec<usize>,
    pub start: Vec<u64>,
    pub worker_load: Vec<u64>,
    pub makespan: u64,
}

/// Longest-first scheduling of `estimates` on `workers`.
pub fn schedule(estimates: &[u64], workers: usize) -> Result<ScheduleTrace> {
    let q = TaskQueue::longest_first(estimates);
    simulate(estimates, workers, q.order)
}

/// Same as [`schedule`] but pulling tasks in their given order.
pub fn schedule_in_order(estimates: &[u64], workers: usize) -> Result<ScheduleTrace> {
    simulate(estimates, workers, (0..estimates.len()).collect())
}

fn simulate(estimates: &[u64], workers: usize, order: Vec<usize>) -> Result<ScheduleTrace> {
    if workers < 1 {
        return Err(Error::InvalidArgument("worker count must be at least 1".into()));
    }
    let mut load = vec![0u64; workers];
    let mut worker_of = vec![0usize; estimates.len()];
    let mut start = vec![0u64; estimates.len()];
    for &t in &order {
        let w = (0..workers).min_by_key(|&w| (load[w], w)).expect("workers >= 1");
        worker_of[t] = w;
        start[t] = load[w];
        load[w] += estimates[t];
    }
    let makespan = load.iter().copied().max().unwrap_or(0);
    Ok(ScheduleTrace { order, worker_of, start, worker_load: load, makespan })
}

#[derive(Debug, Clone, Default)]
pub struct FineOutcome {
    pub numbers: Vec<u64>,
    pub support_updates: u64,
    pub wedges_traversed: u64,
    pub links_traversed: u64,
    /// Sequential rounds summed over partitions.
    pub rounds: u64,
    pub per_partition_work: Vec<u64>,
    pub per_worker_tasks: Vec<u64>,
}

impl FineOutcome {
    pub(crate) fn counters(&self) -> PeelCounters {
        PeelCounters {
            support_updates: self.support_updates,
            wedges_traversed: self.wedges_traversed,
            links_traversed: self.links_traversed,
            rounds: self.rounds,
        }
    }
}

type TaskResult = (usize, Vec<u64>, PeelCounters);

/// Runs `task` for every partition on `workers` threads, longest first.
fn run_tasks<F>(work: &[u64], workers: usize, task: F) -> Result<(Vec<TaskResult>, Vec<u64>)>
where
    F: Fn(usize) -> Result<(Vec<u64>, PeelCounters)> + Sync,
{
    if workers < 1 {
        return Err(Error::InvalidArgument("worker count must be at least 1".into()));
    }
    let queue = TaskQueue::longest_first(work);
    let per_worker: Vec<Result<Vec<TaskResult>>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                s.spawn(|| {
                    let mut done = Vec::new();
                    while let Some(i) = queue.pop() {
                        let (theta, c) = task(i)?;
                        done.push((i, theta, c));
                    }
                    Ok(done)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("fine-phase worker panicked")).collect()
    });
    let mut results = Vec::new();
    let mut tasks = Vec::with_capacity(workers);
    for r in per_worker {
        let r = r?;
        tasks.push(r.len() as u64);
        results.extend(r);
    }
    Ok((results, tasks))
}

fn check_plan(plan: &PartitionPlan, len: usize, kind: DecompositionKind) -> Result<()> {
    if plan.kind != kind {
        return Err(Error::PlanIntegrity(format!("plan is for {:?}, expected {:?}", plan.kind, kind)));
    }
    if plan.partition_of.len() != len || plan.init_support.len() != len {
        return Err(Error::PlanIntegrity("plan does not cover every entity".into()));
    }
    Ok(())
}

/// Fine phase of wing decomposition. `parts` are the per-partition indices
/// built from the plan.
pub fn fd_wing(
    g: &BipartiteGraph,
    parts: Vec<BloomEdgeIndex>,
    plan: &PartitionPlan,
    workers: usize,
    compact: bool,
) -> Result<FineOutcome> {
    let m = g.edge_count();
    check_plan(plan, m, DecompositionKind::Wing)?;
    if let Some(e) = (0..m).find(|&e| plan.partition_of[e] == UNASSIGNED && g.is_edge_alive(e as u32)) {
        return Err(Error::PlanIntegrity(format!("edge {e} has no initial support")));
    }
    if parts.len() != plan.partitions() {
        return Err(Error::PlanIntegrity("one index per partition required".into()));
    }
    let loc = EdgeLocator::new(&plan.partition_of, plan.partitions())?;
    let work: Vec<u64> = parts
        .iter()
        .map(|p| p.members().iter().map(|&e| plan.init_support[e as usize]).sum())
        .collect();
    let members: Vec<Vec<u32>> = parts.iter().map(|p| p.members().to_vec()).collect();
    let slots: Vec<Mutex<Option<BloomEdgeIndex>>> = parts.into_iter().map(|p| Mutex::new(Some(p))).collect();

    let (results, tasks) = run_tasks(&work, workers, |i| {
        let mut index = slots[i].lock().expect("slot lock").take().expect("each partition runs once");
        let supports: Vec<u64> = index.members().iter().map(|&e| plan.init_support[e as usize]).collect();
        let scope = EdgeScope::Part { loc: &loc, part: i as u32 };
        Ok(peel_edges_indexed(&mut index, scope, &supports, plan.range_bounds[i], TieBreak::LowestId, compact))
    })?;

    let mut out = FineOutcome { numbers: vec![0; m], per_partition_work: work, per_worker_tasks: tasks, ..Default::default() };
    for (i, theta, c) in results {
        for (j, &e) in members[i].iter().enumerate() {
            out.numbers[e as usize] = theta[j];
        }
        absorb(&mut out, c);
    }
    Ok(out)
}

/// Fine phase of tip decomposition on `side`: each partition is peeled inside
/// the subgraph induced by its vertices and the whole other side.
pub fn fd_tip(g: &BipartiteGraph, plan: &PartitionPlan, side: VertexSide, workers: usize) -> Result<FineOutcome> {
    let count = g.side_count(side);
    check_plan(plan, count, DecompositionKind::Tip(side))?;
    if let Some(x) =
        (0..count).find(|&x| plan.partition_of[x] == UNASSIGNED && g.is_vertex_alive(g.global(side, x as u32)))
    {
        return Err(Error::PlanIntegrity(format!("vertex {x} has no initial support")));
    }
    let members = plan.members();

    // Wedges with both endpoints in the partition: Σ_v cnt_v².
    let mut cnt = vec![0u64; g.n()];
    let mut touched = Vec::new();
    let work: Vec<u64> = members
        .iter()
        .map(|ms| {
            for &x in ms {
                for a in g.neighbors(g.global(side, x)) {
                    if cnt[a.neighbor as usize] == 0 {
                        touched.push(a.neighbor);
                    }
                    cnt[a.neighbor as usize] += 1;
                }
            }
            let w = touched.iter().map(|&v| cnt[v as usize] * cnt[v as usize]).sum();
            for &v in &touched {
                cnt[v as usize] = 0;
            }
            touched.clear();
            w
        })
        .collect();

    let (results, tasks) = run_tasks(&work, workers, |i| {
        let ms = &members[i];
        let mut sub = g.induced_subgraph(side, ms)?;
        let supports: Vec<u64> = ms.iter().map(|&x| plan.init_support[x as usize]).collect();
        Ok(peel_tip_vertices(&mut sub, side, &supports, plan.range_bounds[i], TieBreak::LowestId))
    })?;

    let mut out =
        FineOutcome { numbers: vec![0; count], per_partition_work: work, per_worker_tasks: tasks, ..Default::default() };
    for (i, theta, c) in results {
        for (j, &x) in members[i].iter().enumerate() {
            out.numbers[x as usize] = theta[j];
        }
        absorb(&mut out, c);
    }
    Ok(out)
}

fn absorb(out: &mut FineOutcome, c: PeelCounters) {
    out.support_updates += c.support_updates;
    out.wedges_traversed += c.wedges_traversed;
    out.links_traversed += c.links_traversed;
    out.rounds += c.rounds;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lpt_beats_given_order() {
        let est = [16, 16, 4, 4, 7, 13];
        assert_eq!(schedule_in_order(&est, 3).unwrap().makespan, 28);
        assert_eq!(schedule(&est, 3).unwrap().makespan, 20);
    }

    #[test]
    fn one_worker_sums() {
        let est = [3, 9, 1, 4];
        assert_eq!(schedule(&est, 1).unwrap().makespan, 17);
    }

    #[test]
    fn equal_tasks_balance() {
        let est = vec![5; 12];
        assert_eq!(schedule(&est, 4).unwrap().makespan, 15);
    }

    #[test]
    fn zero_workers_rejected() {
        assert!(matches!(schedule(&[1], 0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn queue_pops_each_once() {
        let q = TaskQueue::longest_first(&[1, 5, 3, 5]);
        let mut seen = Vec::new();
        while let Some(i) = q.pop() {
            seen.push(i);
        }
        assert_eq!(seen, vec![1, 3, 2, 0]);
        assert_eq!(q.pop(), None);
    }
}
