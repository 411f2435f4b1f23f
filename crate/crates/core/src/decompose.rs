//! End-to-end two-phase runs on a dedicated worker pool.

use crate::bloom::{build_be_index_with_budget, partition_be_index};
use crate::coarse::{cd_tip, cd_wing, PartitionPlan, PeelConfig};
use crate::count::count_butterflies;
use crate::error::{Error, Result};
use crate::fine::{fd_tip, fd_wing, FineOutcome};
use crate::graph::{BipartiteGraph, VertexSide};
use crate::metrics::{DecompositionKind, DecompositionResult, LapTimer, Metrics};

#[derive(Debug, Clone)]
pub struct TwoPhaseOutput {
    pub result: DecompositionResult,
    pub plan: PartitionPlan,
}

fn in_pool<T: Send>(workers: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start {workers} workers: {e}")))?;
    pool.install(f)
}

fn metrics_for(coarse: &crate::coarse::CoarseOutcome, fine: &FineOutcome, plan: &PartitionPlan) -> Metrics {
    let mut m = Metrics {
        iterations_rho: coarse.iterations,
        fd_rounds: fine.rounds,
        recounts: coarse.recounts,
        partitions: plan.partitions(),
        per_partition_work: fine.per_partition_work.clone(),
        per_worker_tasks: fine.per_worker_tasks.clone(),
        ..Metrics::default()
    };
    m.absorb(&coarse.counters());
    m.absorb(&fine.counters());
    m
}

/// Wing numbers of every edge through the coarse and fine phases.
pub fn wing_decomposition(g: &BipartiteGraph, cfg: &PeelConfig) -> Result<TwoPhaseOutput> {
    cfg.validate()?;
    in_pool(cfg.workers, || {
        let mut timer = LapTimer::new();
        let counts = count_butterflies(g);
        timer.lap("count");
        let index = build_be_index_with_budget(g, cfg.mem_budget)?;
        timer.lap("index");
        let coarse = cd_wing(g, &index, &counts.edge.values, cfg)?;
        timer.lap("coarse");
        let plan = coarse.plan.clone();
        let parts = partition_be_index(g, &index, &plan.partition_of, plan.partitions())?;
        drop(index);
        timer.lap("partition");
        let fine = fd_wing(g, parts, &plan, cfg.workers, cfg.dynamic_deletes)?;
        timer.lap("fine");
        let mut metrics = metrics_for(&coarse, &fine, &plan);
        timer.finish(&mut metrics);
        Ok(TwoPhaseOutput {
            result: DecompositionResult { kind: DecompositionKind::Wing, entity_numbers: fine.numbers, metrics },
            plan,
        })
    })
}

/// Tip numbers of every vertex of `side` through the coarse and fine phases.
pub fn tip_decomposition(g: &BipartiteGraph, side: VertexSide, cfg: &PeelConfig) -> Result<TwoPhaseOutput> {
    cfg.validate()?;
    in_pool(cfg.workers, || {
        let mut timer = LapTimer::new();
        let counts = count_butterflies(g);
        timer.lap("count");
        let coarse = cd_tip(g, side, &counts.side(g, side), cfg)?;
        timer.lap("coarse");
        let plan = coarse.plan.clone();
        let fine = fd_tip(g, &plan, side, cfg.workers)?;
        timer.lap("fine");
        let mut metrics = metrics_for(&coarse, &fine, &plan);
        timer.finish(&mut metrics);
        Ok(TwoPhaseOutput {
            result: DecompositionResult { kind: DecompositionKind::Tip(side), entity_numbers: fine.numbers, metrics },
            plan,
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baseline::{bup_tip, bup_wing};
    use crate::fixtures::{complete, four_level, FOUR_LEVEL_WING};

    #[test]
    fn four_level_two_phase() {
        let g = four_level();
        for p in 1..=4 {
            let out = wing_decomposition(&g, &PeelConfig::new(p).workers(2)).unwrap();
            assert_eq!(out.result.entity_numbers, FOUR_LEVEL_WING.to_vec(), "P={p}");
            assert!(out.plan.ranges_hold(&FOUR_LEVEL_WING));
        }
    }

    #[test]
    fn single_partition_matches_baseline() {
        let g = four_level();
        let out = wing_decomposition(&g, &PeelConfig::new(1).workers(1)).unwrap();
        assert_eq!(out.result.entity_numbers, bup_wing(&g, true).entity_numbers);
        for side in [VertexSide::U, VertexSide::V] {
            let out = tip_decomposition(&g, side, &PeelConfig::new(1).workers(1)).unwrap();
            assert_eq!(out.result.entity_numbers, bup_tip(&g, side).entity_numbers);
        }
    }

    #[test]
    fn k23_forced_split() {
        let g = complete(2, 3);
        let mut cfg = PeelConfig::new(2).workers(2);
        cfg.target = crate::coarse::TargetPolicy::Fixed(1);
        let out = tip_decomposition(&g, VertexSide::V, &cfg).unwrap();
        assert_eq!(out.result.entity_numbers, vec![2, 2, 2]);
    }

    #[test]
    fn phases_tile_wall_time() {
        let out = wing_decomposition(&four_level(), &PeelConfig::new(2).workers(2)).unwrap();
        let m = &out.result.metrics;
        assert!((m.phase_total() - m.wall_time_secs).abs() <= 0.05 * m.wall_time_secs + 1e-9);
    }

    #[test]
    fn budget_error_surfaces() {
        let mut cfg = PeelConfig::new(2);
        cfg.mem_budget = Some(8);
        assert!(matches!(wing_decomposition(&four_level(), &cfg), Err(Error::IndexBudget { .. })));
    }
}
