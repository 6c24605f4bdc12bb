use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use elm_core::mutation::CommitMessage;
use elm_core::physics::{SimConfig, TerrainKind, TerrainParams};
use elm_core::qd::GridConfig;

use crate::CliError;

/// A run configuration file. Unknown keys are rejected everywhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Seed programs: paths, or `square` for the built-in square walker.
    pub seeds: Vec<String>,
    #[serde(default)]
    pub operator: OperatorChoice,
    pub iterations: u64,
    #[serde(default = "default_batch")]
    pub batch: usize,
    /// Completions requested per prompt; each parent serves this many slots.
    #[serde(default = "one")]
    pub samples_per_prompt: usize,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Write a numbered snapshot every this many iterations; 0 disables.
    #[serde(default)]
    pub snapshot_every: u64,
    #[serde(default)]
    pub run_id: Option<String>,
    #[serde(default)]
    pub terrain: TerrainSection,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub physics: SimConfig,
    #[serde(default)]
    pub executor: ExecutorSection,
    #[serde(default)]
    pub llm: LlmSection,
    /// Commit messages for the diff operator; the standard three if empty.
    #[serde(default)]
    pub commit_messages: Vec<CommitMessage>,
}

fn default_batch() -> usize {
    512
}

fn one() -> usize {
    1
}

fn default_output() -> PathBuf {
    PathBuf::from("elm-out")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorChoice {
    #[default]
    SpecMutate,
    Diff,
    Prompt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TerrainSection {
    pub kind: TerrainKind,
    #[serde(default)]
    pub params: TerrainParams,
}

impl Default for TerrainSection {
    fn default() -> Self {
        Self {
            kind: TerrainKind::Flat,
            params: TerrainParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExecutorSection {
    /// Worker command line; the built-in interpreter runs in-process if empty.
    #[serde(default)]
    pub command: Vec<String>,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default = "default_timeout")]
    pub timeout_ms: u64,
    #[serde(default = "default_memory")]
    pub memory_mb: u64,
}

fn default_workers() -> usize {
    4
}

fn default_timeout() -> u64 {
    2000
}

fn default_memory() -> u64 {
    256
}

impl Default for ExecutorSection {
    fn default() -> Self {
        Self {
            command: Vec::new(),
            workers: default_workers(),
            timeout_ms: default_timeout(),
            memory_mb: default_memory(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LlmSection {
    /// Completion endpoint; falls back to `ELM_LLM_URL`.
    #[serde(default)]
    pub url: Option<String>,
    /// Falls back to `ELM_LLM_MODEL`.
    #[serde(default)]
    pub model: Option<String>,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    #[serde(default = "default_attempts")]
    pub attempts: u32,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    #[serde(default = "default_request_timeout")]
    pub request_timeout_s: u64,
    /// Replay canned replies instead of calling a model: a JSON array with
    /// one array of completion strings per call.
    #[serde(default)]
    pub mock_replies: Option<PathBuf>,
}

fn default_temperature() -> f64 {
    0.8
}

fn default_max_tokens() -> u32 {
    1024
}

fn default_attempts() -> u32 {
    3
}

fn default_in_flight() -> usize {
    8
}

fn default_request_timeout() -> u64 {
    60
}

impl Default for LlmSection {
    fn default() -> Self {
        Self {
            url: None,
            model: None,
            temperature: default_temperature(),
            max_tokens: default_max_tokens(),
            attempts: default_attempts(),
            max_in_flight: default_in_flight(),
            request_timeout_s: default_request_timeout(),
            mock_replies: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = std::path::absolute(path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new(".")))
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        config.resolve_paths(&base);
        Ok(config)
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let config: RunConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        config.check()?;
        Ok(config)
    }

    /// Relative paths in the file are relative to the file itself.
    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &Path| if p.is_relative() { base.join(p) } else { p.to_path_buf() };
        for s in &mut self.seeds {
            if s != BUILTIN_SEED {
                *s = fix(Path::new(s)).to_string_lossy().into_owned();
            }
        }
        self.output_dir = fix(&self.output_dir);
        if let Some(m) = &self.llm.mock_replies {
            self.llm.mock_replies = Some(fix(m));
        }
    }

    pub fn check(&self) -> Result<(), String> {
        if self.seeds.is_empty() {
            return Err("seeds: at least one seed program is required".into());
        }
        if self.samples_per_prompt == 0 || self.batch == 0 || self.batch % self.samples_per_prompt != 0 {
            return Err(format!(
                "batch ({}) must be a positive multiple of samples_per_prompt ({})",
                self.batch, self.samples_per_prompt
            ));
        }
        if self.operator == OperatorChoice::SpecMutate && self.samples_per_prompt != 1 {
            return Err("samples_per_prompt applies to model operators only".into());
        }
        self.grid.check().map_err(|e| format!("grid: {e}"))?;
        self.physics.check().map_err(|e| format!("physics: {e}"))?;
        if self.executor.workers == 0 {
            return Err("executor.workers must be at least 1".into());
        }
        let l = &self.llm;
        if !(l.temperature >= 0.0 && l.temperature.is_finite()) {
            return Err("llm.temperature must be a non-negative number".into());
        }
        if l.attempts == 0 || l.max_in_flight == 0 {
            return Err("llm.attempts and llm.max_in_flight must be at least 1".into());
        }
        let sum: f64 = self.commit_messages.iter().map(|m| m.weight).sum();
        if !self.commit_messages.is_empty() && (sum - 1.0).abs() > 1e-9 {
            return Err(format!("commit_messages: weights sum to {sum}, not 1"));
        }
        Ok(())
    }
}

pub const BUILTIN_SEED: &str = "square";
