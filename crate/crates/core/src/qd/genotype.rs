use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorTag {
    Seed,
    SpecMutate,
    LlmDiff,
    Prompt,
}

impl OperatorTag {
    pub fn is_llm(&self) -> bool {
        matches!(self, OperatorTag::LlmDiff | OperatorTag::Prompt)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            OperatorTag::Seed => "seed",
            OperatorTag::SpecMutate => "spec_mutate",
            OperatorTag::LlmDiff => "llm_diff",
            OperatorTag::Prompt => "prompt",
        }
    }
}

/// A candidate program and where it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Genotype {
    pub id: u64,
    pub source: String,
    pub parent_id: Option<u64>,
    pub operator: OperatorTag,
    pub commit_message: Option<String>,
    /// The diff that produced `source` from the parent, when an LLM operator
    /// proposed it.
    pub diff: Option<String>,
    pub generation: u32,
}
