//! Butterfly counting and tip/wing decomposition of bipartite graphs.
//!
//! The two-phase decomposition first splits entities into ranges of entity
//! numbers with a few parallel peeling iterations ([`coarse`]), then peels
//! every range independently ([`fine`]). The sequential bottom-up peel in
//! [`baseline`] and the brute-force routines in [`oracle`] serve as
//! references.

pub mod baseline;
pub mod bloom;
pub mod coarse;
pub mod count;
pub mod decompose;
pub mod error;
pub mod fine;
pub mod fixtures;
pub mod gen;
pub mod graph;
pub mod metrics;
pub mod oracle;

pub use baseline::{bup_tip, bup_wing, extract_k_level, Component, MinBucketQueue, TieBreak};
pub use bloom::{build_be_index, build_be_index_with_budget, partition_be_index, BloomEdgeIndex};
pub use coarse::{
    adaptive_target, cd_tip, cd_wing, find_range, PartitionPlan, PeelConfig, TargetPolicy, DEFAULT_TIP_PARTITIONS,
};
pub use count::{
    count_butterflies, counting_bound, recount_surviving, wedge_work, ButterflyCounts, EntityKind, SupportVector,
};
pub use decompose::{tip_decomposition, wing_decomposition, TwoPhaseOutput};
pub use error::{Error, Result};
pub use fine::{fd_tip, fd_wing, schedule, schedule_in_order, ScheduleTrace, TaskQueue};
pub use graph::{load_edge_list, read_edge_list_file, BipartiteGraph, EdgeListFormat, GraphSummary, VertexSide};
pub use metrics::{DecompositionKind, DecompositionResult, Metrics, PhaseTime};
pub use oracle::{enumerate_butterflies, oracle_entity_numbers, verify_hierarchy, HierarchyReport};
