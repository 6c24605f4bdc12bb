use std::fmt;
use std::io::{self, Write};

use rand::{RngCore, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use elm_core::ElmRng;

use crate::mutate::node_mutate;
use crate::task::{inject_bugs, Task, TaskName, TooManyBugs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    NodeMutation,
    Prompt,
    Diff,
}

impl OperatorKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            OperatorKind::NodeMutation => "node_mutation",
            OperatorKind::Prompt => "prompt",
            OperatorKind::Diff => "diff",
        }
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub task: TaskName,
    pub k_bugs: usize,
    pub operator: OperatorKind,
    pub n_trials: u64,
    pub successes: u64,
    pub success_rate: f64,
    pub oracle_rate: Option<f64>,
}

impl TrialReport {
    pub fn new(task: TaskName, k_bugs: usize, operator: OperatorKind, n_trials: u64, successes: u64) -> Self {
        assert!(successes <= n_trials);
        Self {
            task,
            k_bugs,
            operator,
            n_trials,
            successes,
            success_rate: if n_trials == 0 { 0.0 } else { successes as f64 / n_trials as f64 },
            oracle_rate: None,
        }
    }

    /// Binomial standard deviation of the rate under `p`.
    pub fn sigma(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.n_trials as f64).sqrt()
    }
}

pub const CSV_HEADER: &str = "task,k_bugs,operator,trials,successes,rate,oracle_rate";

pub fn write_csv<W: Write>(reports: &[TrialReport], mut out: W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in reports {
        let oracle = r.oracle_rate.map(|p| format!("{p:e}")).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{:e},{}",
            r.task, r.k_bugs, r.operator, r.n_trials, r.successes, r.success_rate, oracle
        )?;
    }
    Ok(())
}

/// `n` independent single node mutations of the `k`-bug program.
///
/// Each trial gets its own seed, drawn in order from `rng`, so the result
/// does not depend on how rayon schedules the trials.
pub fn run_trials(task: &Task, k: usize, rate: f64, n: u64, rng: &mut ElmRng) -> Result<TrialReport, TooManyBugs> {
    let buggy = inject_bugs(task, k)?;
    let seeds: Vec<u64> = (0..n).map(|_| rng.next_u64()).collect();
    let successes = seeds
        .par_iter()
        .filter(|&&s| {
            let mut trial = ElmRng::seed_from_u64(s);
            task.passes(&node_mutate(&buggy, task, rate, &mut trial))
        })
        .count() as u64;
    Ok(TrialReport::new(task.name, k, OperatorKind::NodeMutation, n, successes))
}
