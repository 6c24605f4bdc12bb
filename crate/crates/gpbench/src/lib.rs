//! Bug-fixing benchmark for comparing mutation operators: small expression
//! programs with injected bugs, a node-mutation baseline with an exact
//! success-probability oracle, and model-based repair operators.

pub mod llm;
pub mod mutate;
pub mod oracle;
pub mod source;
pub mod task;
pub mod tree;
pub mod trials;

pub use llm::{completion_function, fix_prompt, llm_fix, FixError, FixReport, GpOperator};
pub use mutate::node_mutate;
pub use oracle::{exact_success_prob, tree_success_prob, tune_rate, RATE_GRID};
pub use source::{parse, render, ParseError};
pub use task::{build_task, inject_bugs, Task, TaskName, TestCase, TooManyBugs, UnknownTask};
pub use tree::{ExprTree, Node, Op, TreeError};
pub use trials::{run_trials, write_csv, OperatorKind, TrialReport, CSV_HEADER};
