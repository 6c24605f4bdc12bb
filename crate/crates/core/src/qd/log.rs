use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotOutcome {
    NewNiche,
    Improved,
    Rejected,
    /// The operator produced no applicable candidate.
    Invalid,
    /// A candidate was produced but did not execute to a valid walker.
    NotRunnable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub iteration: u64,
    pub evals: u64,
    pub niches: usize,
    pub qd: f64,
    pub max_fitness: f64,
    pub valid_pct: f64,
    pub runnable_pct: f64,
    pub outcomes: Vec<SlotOutcome>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunLog {
    pub rows: Vec<LogRow>,
}

impl RunLog {
    pub const CSV_HEADER: &'static str = "iteration,evals,niches,qd,max_fitness,valid_pct,runnable_pct";

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn outcomes(&self) -> impl Iterator<Item = SlotOutcome> + '_ {
        self.rows.iter().flat_map(|r| r.outcomes.iter().copied())
    }

    pub fn count(&self, outcome: SlotOutcome) -> usize {
        self.outcomes().filter(|o| *o == outcome).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.iteration, r.evals, r.niches, r.qd, r.max_fitness, r.valid_pct, r.runnable_pct
            );
        }
        out
    }
}
