//! Variation operators and the pieces they are made from: unified diffs,
//! commit-message sampling, and the LLM client.

mod commit;
pub mod diff;
pub mod export;
pub mod llm;
mod operators;

pub use commit::{CatalogError, CommitCatalog, CommitMessage, FIX_BUGS_MESSAGE};
pub use diff::{apply_diff, apply_diff_text, diff_lines, diff_of, parse_unified_diff, UnifiedDiff};
pub use export::{accepted_diffs, export_accepted_diffs, read_records, DiffRecord};
pub use llm::{LlmClient, LlmResponse, LlmTransport, MockTransport, RetryPolicy, SamplingParams, TransportError};
pub use operators::{
    apply_edit, completion_prompt, diff_prompt, extract_diff, spec_mutate, splice_completion, Attempt,
    Candidate, LlmDiffOperator, MutationOperator, OperatorStats, Parent, PromptOperator, SpecEdit,
    SpecMutator, ENTRY_STUB,
};
