use elm_core::mutation::{apply_diff_text, diff_prompt, extract_diff, LlmClient, TransportError, FIX_BUGS_MESSAGE};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::source::{parse, render};
use crate::task::{inject_bugs, Task, TooManyBugs};
use crate::tree::ExprTree;
use crate::trials::{OperatorKind, TrialReport};

/// Completions requested per model call.
pub const FIX_BATCH: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GpOperator {
    /// Complete a "fixed" version after the buggy program.
    Prompt,
    /// Ask for a diff with the commit message "Fixed bugs.".
    Diff,
}

impl GpOperator {
    pub fn kind(self) -> OperatorKind {
        match self {
            GpOperator::Prompt => OperatorKind::Prompt,
            GpOperator::Diff => OperatorKind::Diff,
        }
    }
}

#[derive(Debug, Error)]
pub enum FixError {
    #[error(transparent)]
    Bugs(#[from] TooManyBugs),
    #[error("model call failed: {0}")]
    Transport(#[from] TransportError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixReport {
    pub report: TrialReport,
    /// Parsed programs that failed the suite.
    pub wrong: u64,
    /// Completions that did not yield a program at all.
    pub unusable: u64,
}

pub fn fix_prompt(problem: &str) -> String {
    format!("# A buggy implementation\n{}\n\n# Fixed Bugs\ndef ", problem.trim_end())
}

/// Function text from a prompt-operator completion: the cue `def ` plus the
/// completion up to the next top-level `def` or comment.
pub fn completion_function(completion: &str) -> String {
    let mut out = String::from("def ");
    for (i, line) in completion.split_inclusive('\n').enumerate() {
        if i > 0 && (line.starts_with("def ") || line.starts_with('#')) {
            break;
        }
        out.push_str(line);
    }
    out
}

fn candidate_tree(task: &Task, op: GpOperator, buggy_source: &str, completion: &str) -> Option<ExprTree> {
    let source = match op {
        GpOperator::Prompt => completion_function(completion),
        GpOperator::Diff => apply_diff_text(buggy_source, extract_diff(completion)?).ok()?,
    };
    parse(task, &source).ok()
}

/// `n` model attempts at repairing the `k`-bug program. A completion that
/// cannot be turned into a program counts as a failed trial.
pub fn llm_fix(task: &Task, k: usize, client: &LlmClient, n: u64, op: GpOperator) -> Result<FixReport, FixError> {
    let buggy = render(task, &inject_bugs(task, k)?);
    let prompt = match op {
        GpOperator::Prompt => fix_prompt(&buggy),
        GpOperator::Diff => diff_prompt(&buggy, FIX_BUGS_MESSAGE),
    };
    let (mut successes, mut wrong, mut unusable, mut done) = (0u64, 0u64, 0u64, 0u64);
    while done < n {
        let want = (n - done).min(FIX_BATCH as u64) as u32;
        let mut completions = client.complete(&prompt, want)?.completions;
        completions.truncate(want as usize);
        // missing completions are failures too
        unusable += want as u64 - completions.len() as u64;
        for c in &completions {
            match candidate_tree(task, op, &buggy, c) {
                Some(t) if task.passes(&t) => successes += 1,
                Some(_) => wrong += 1,
                None => unusable += 1,
            }
        }
        done += want as u64;
    }
    Ok(FixReport {
        report: TrialReport::new(task.name, k, op.kind(), n, successes),
        wrong,
        unusable,
    })
}
