//! Turning genotype source into walkers.
//!
//! [`ScriptInterpreter`] runs straight-line builder programs in-process;
//! [`WorkerPool`] sends any program to external worker processes over the
//! line-delimited JSON protocol in [`protocol`].

mod interp;
mod pool;
pub mod protocol;
mod serve;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use interp::ScriptInterpreter;
pub use pool::{PoolConfig, PoolError, PoolStats, WorkerPool};
pub use serve::serve;

use crate::walker::WalkerSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecStatus {
    Ok,
    SyntaxError,
    RuntimeError,
    Timeout,
    Resource,
    InvalidWalker,
}

impl ExecStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExecStatus::Ok => "ok",
            ExecStatus::SyntaxError => "syntax_error",
            ExecStatus::RuntimeError => "runtime_error",
            ExecStatus::Timeout => "timeout",
            ExecStatus::Resource => "resource",
            ExecStatus::InvalidWalker => "invalid_walker",
        }
    }
}

impl fmt::Display for ExecStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecFailure {
    pub status: ExecStatus,
    pub detail: String,
}

impl ExecFailure {
    pub fn new(status: ExecStatus, detail: impl Into<String>) -> Self {
        Self {
            status,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for ExecFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.status, self.detail)
    }
}

impl std::error::Error for ExecFailure {}

/// Runs a genotype program and returns the walker it builds. Implementations
/// return only walkers that pass [`crate::walker::validate`].
pub trait Executor: Send + Sync {
    fn execute(&self, source: &str) -> Result<WalkerSpec, ExecFailure>;
}

/// Parses and validates walker text returned by an external executor.
pub fn accept_walker_text(text: &str) -> Result<WalkerSpec, ExecFailure> {
    let spec = crate::walker::parse_spec(text)
        .map_err(|e| ExecFailure::new(ExecStatus::InvalidWalker, e.to_string()))?;
    let report = crate::walker::validate(&spec);
    if !report.ok() {
        return Err(ExecFailure::new(ExecStatus::InvalidWalker, report.to_string()));
    }
    Ok(spec)
}
