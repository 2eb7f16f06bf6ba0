//! Visitation statistics of the main agent's training data.

use std::collections::BTreeMap;
use std::io::Write;

use crate::env::{Position, TaskId};
use crate::Result;

/// Counts of `(task, position)` pairs over a fixed universe of states.
#[derive(Debug, Clone, PartialEq)]
pub struct VisitTable {
    counts: BTreeMap<(TaskId, Position), u64>,
    total: u64,
}

impl VisitTable {
    /// Every state in `universe` starts at zero visits.
    pub fn new(universe: impl IntoIterator<Item = (TaskId, Position)>) -> Self {
        Self { counts: universe.into_iter().map(|k| (k, 0)).collect(), total: 0 }
    }

    /// States outside the universe are added on first visit.
    pub fn record(&mut self, task: TaskId, position: Position) {
        *self.counts.entry((task, position)).or_insert(0) += 1;
        self.total += 1;
    }

    pub fn clear(&mut self) {
        self.counts.values_mut().for_each(|c| *c = 0);
        self.total = 0;
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, task: TaskId, position: Position) -> u64 {
        self.counts.get(&(task, position)).copied().unwrap_or(0)
    }

    pub fn num_states(&self) -> usize {
        self.counts.len()
    }

    /// Empirical visit frequencies; empty when nothing was recorded.
    pub fn frequencies(&self) -> BTreeMap<(TaskId, Position), f64> {
        if self.total == 0 {
            return BTreeMap::new();
        }
        self.counts.iter().filter(|(_, &c)| c > 0).map(|(&k, &c)| (k, c as f64 / self.total as f64)).collect()
    }

    /// Fraction of states visited at least once.
    pub fn coverage(&self) -> f64 {
        if self.counts.is_empty() {
            return 0.0;
        }
        self.counts.values().filter(|&&c| c > 0).count() as f64 / self.counts.len() as f64
    }

    /// Shannon entropy (nats) of the empirical visit distribution.
    pub fn entropy(&self) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        let n = self.total as f64;
        -self
            .counts
            .values()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / n;
                p * p.ln()
            })
            .sum::<f64>()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["task", "row", "col", "visits"])?;
        for (&(task, p), &c) in &self.counts {
            w.write_record([task.to_string(), p.row.to_string(), p.col.to_string(), c.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}
