//! Line-delimited JSON protocol between the engine and worker processes.
//!
//! On startup a worker writes one handshake line:
//!
//! ```text
//! {"protocol": "elm-worker", "version": 1}
//! ```
//!
//! Then, for every request line it reads, it writes exactly one response
//! line, in order:
//!
//! ```text
//! -> {"id": 7, "source": "def make_walker(): ...", "entrypoint": "make_walker",
//!     "timeout_ms": 2000, "memory_mb": 256}
//! <- {"id": 7, "status": "ok", "walker": "{\"joints\": ..., \"muscles\": ...}"}
//! <- {"id": 7, "status": "syntax_error", "error": "line 3: ..."}
//! ```
//!
//! `walker` is the canonical walker text and is present only with status
//! `ok`; every other status carries `error`. A request line that cannot be
//! parsed gets a `runtime_error` response with `"id": null`. A worker exits
//! with status 0 at end of input.

use serde::{Deserialize, Serialize};

use super::ExecStatus;

pub const PROTOCOL_NAME: &str = "elm-worker";
pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Handshake {
    pub protocol: String,
    pub version: u32,
}

impl Handshake {
    pub fn current() -> Self {
        Self {
            protocol: PROTOCOL_NAME.into(),
            version: PROTOCOL_VERSION,
        }
    }
}

fn default_entrypoint() -> String {
    "make_walker".into()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecRequest {
    pub id: u64,
    pub source: String,
    #[serde(default = "default_entrypoint")]
    pub entrypoint: String,
    pub timeout_ms: u64,
    pub memory_mb: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecResponse {
    pub id: Option<u64>,
    pub status: ExecStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub walker: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ExecResponse {
    pub fn ok(id: u64, walker: String) -> Self {
        Self {
            id: Some(id),
            status: ExecStatus::Ok,
            walker: Some(walker),
            error: None,
        }
    }

    pub fn failed(id: Option<u64>, status: ExecStatus, error: impl Into<String>) -> Self {
        Self {
            id,
            status,
            walker: None,
            error: Some(error.into()),
        }
    }

    /// Exactly one of `walker`/`error` is present, matching the status.
    pub fn well_formed(&self) -> bool {
        match self.status {
            ExecStatus::Ok => self.walker.is_some() && self.error.is_none(),
            _ => self.walker.is_none() && self.error.is_some(),
        }
    }
}
