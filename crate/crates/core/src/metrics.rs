use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graph::VertexSide;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DecompositionKind {
    Wing,
    Tip(VertexSide),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTime {
    pub name: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub support_updates: u64,
    pub wedges_traversed: u64,
    pub links_traversed: u64,
    /// Globally synchronized peeling iterations: coarse iterations for the
    /// two-phase runs, extraction rounds for the baselines.
    pub iterations_rho: u64,
    /// Sequential rounds summed over fine-phase partitions.
    pub fd_rounds: u64,
    pub recounts: u64,
    pub partitions: usize,
    pub per_partition_work: Vec<u64>,
    pub per_worker_tasks: Vec<u64>,
    pub phases: Vec<PhaseTime>,
    pub wall_time_secs: f64,
}

impl Metrics {
    pub fn phase_total(&self) -> f64 {
        self.phases.iter().map(|p| p.seconds).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize")
    }

    pub(crate) fn absorb(&mut self, c: &PeelCounters) {
        self.support_updates += c.support_updates;
        self.wedges_traversed += c.wedges_traversed;
        self.links_traversed += c.links_traversed;
    }
}

/// Work counters accumulated by one peeling routine.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub(crate) struct PeelCounters {
    pub support_updates: u64,
    pub wedges_traversed: u64,
    pub links_traversed: u64,
    pub rounds: u64,
}

impl std::ops::AddAssign for PeelCounters {
    fn add_assign(&mut self, o: Self) {
        self.support_updates += o.support_updates;
        self.wedges_traversed += o.wedges_traversed;
        self.links_traversed += o.links_traversed;
        self.rounds += o.rounds;
    }
}

/// Consecutive phase timer: laps tile the run, so they sum to the total.
pub(crate) struct LapTimer {
    start: Instant,
    last: Instant,
    phases: Vec<PhaseTime>,
}

impl LapTimer {
    pub fn new() -> Self {
        let now = Instant::now();
        LapTimer { start: now, last: now, phases: Vec::new() }
    }

    pub fn lap(&mut self, name: &str) {
        let now = Instant::now();
        self.phases.push(PhaseTime { name: name.to_string(), seconds: (now - self.last).as_secs_f64() });
        self.last = now;
    }

    pub fn finish(self, m: &mut Metrics) {
        m.wall_time_secs = (self.last - self.start).as_secs_f64();
        m.phases = self.phases;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionResult {
    pub kind: DecompositionKind,
    /// Tip or wing number per entity: side-local vertex id for tips, edge id
    /// for wings.
    pub entity_numbers: Vec<u64>,
    pub metrics: Metrics,
}

impl DecompositionResult {
    pub fn max_number(&self) -> u64 {
        self.entity_numbers.iter().copied().max().unwrap_or(0)
    }

    /// `entity_id,theta` rows in id order.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "entity_id,theta")?;
        for (i, t) in self.entity_numbers.iter().enumerate() {
            writeln!(out, "{i},{t}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laps_sum_to_wall_time() {
        let mut t = LapTimer::new();
        t.lap("a");
        std::thread::sleep(std::time::Duration::from_millis(2));
        t.lap("b");
        let mut m = Metrics::default();
        t.finish(&mut m);
        assert!((m.phase_total() - m.wall_time_secs).abs() < 1e-9);
        assert_eq!(m.phases.len(), 2);
    }

    #[test]
    fn csv_is_sorted_by_id() {
        let r = DecompositionResult {
            kind: DecompositionKind::Wing,
            entity_numbers: vec![2, 0, 1],
            metrics: Metrics::default(),
        };
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "entity_id,theta\n0,2\n1,0\n2,1\n");
    }
}
