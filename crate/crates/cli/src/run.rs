use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use elm_core::exec::{Executor, PoolConfig, ScriptInterpreter, WorkerPool};
use elm_core::mutation::llm::HttpTransport;
use elm_core::mutation::{
    export_accepted_diffs, CommitCatalog, LlmClient, LlmResponse, LlmDiffOperator, LlmTransport, MockTransport,
    MutationOperator, PromptOperator, RetryPolicy, SamplingParams, SpecMutator,
};
use elm_core::physics::{make_terrain, TerrainProfile};
use elm_core::qd::snapshot;
use elm_core::qd::{evolve, seed_map, EvalContext, MapState};
use elm_core::walker::{render_program, square_seed_spec};

use crate::config::{LlmSection, OperatorChoice, RunConfig, BUILTIN_SEED};
use crate::CliError;

pub const CONFIG_COPY: &str = "config.toml";
pub const FINAL_SNAPSHOT: &str = "map.snap";
pub const LOG_CSV: &str = "log.csv";
pub const DIFF_EXPORT: &str = "accepted_diffs.jsonl";

pub fn build_executor(config: &RunConfig, jobs: Option<usize>) -> Result<Box<dyn Executor>, CliError> {
    let e = &config.executor;
    if e.command.is_empty() {
        return Ok(Box::new(ScriptInterpreter::new()));
    }
    let mut pool = PoolConfig::new(e.command.clone());
    pool.workers = jobs.unwrap_or(e.workers);
    pool.timeout_ms = e.timeout_ms;
    pool.memory_mb = e.memory_mb;
    let pool = WorkerPool::start(pool).map_err(|err| CliError::Runtime(format!("worker pool: {err}")))?;
    Ok(Box::new(pool))
}

pub fn build_client(llm: &LlmSection) -> Result<Arc<LlmClient>, CliError> {
    let sampling = SamplingParams {
        temperature: llm.temperature,
        max_tokens: llm.max_tokens,
    };
    let (transport, retry): (Arc<dyn LlmTransport>, RetryPolicy) = if let Some(path) = &llm.mock_replies {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read mock replies {}: {e}", path.display())))?;
        let calls: Vec<Vec<String>> = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("mock replies {}: {e}", path.display())))?;
        let mock = MockTransport::queue(calls.into_iter().map(|c| Ok(LlmResponse::texts(c))));
        (Arc::new(mock), RetryPolicy::no_wait(llm.attempts))
    } else {
        let timeout = Duration::from_secs(llm.request_timeout_s);
        let http = match (&llm.url, &llm.model) {
            (Some(url), Some(model)) => {
                HttpTransport::new(url, model, std::env::var(elm_core::mutation::llm::ENV_KEY).ok(), timeout)
            }
            _ => HttpTransport::from_env(timeout).map_err(|e| CliError::Config(format!("llm: {e}")))?,
        };
        let retry = RetryPolicy {
            attempts: llm.attempts,
            ..RetryPolicy::default()
        };
        (Arc::new(http), retry)
    };
    Ok(Arc::new(LlmClient::new(transport, sampling, retry, llm.max_in_flight)))
}

fn build_operator(config: &RunConfig) -> Result<Box<dyn MutationOperator>, CliError> {
    if config.operator == OperatorChoice::SpecMutate {
        return Ok(Box::new(SpecMutator::new()));
    }
    let catalog = if config.commit_messages.is_empty() {
        CommitCatalog::default()
    } else {
        CommitCatalog::new(config.commit_messages.clone()).map_err(|e| CliError::Config(format!("commit_messages: {e}")))?
    };
    let client = build_client(&config.llm)?;
    Ok(match config.operator {
        OperatorChoice::Diff => Box::new(LlmDiffOperator::new(client, catalog)),
        _ => Box::new(PromptOperator::new(client, catalog)),
    })
}

fn build_terrain(config: &RunConfig) -> Result<TerrainProfile, CliError> {
    make_terrain(config.terrain.kind, &config.terrain.params).map_err(|e| CliError::Config(format!("terrain: {e}")))
}

fn seed_source(seed: &str) -> Result<(String, String), CliError> {
    if seed == BUILTIN_SEED {
        return Ok((BUILTIN_SEED.into(), render_program(&square_seed_spec())));
    }
    let path = Path::new(seed);
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read seed {seed}: {e}")))?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| seed.into());
    Ok((name, text))
}

fn write(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn save_snapshot(map: &MapState, path: &Path) -> Result<(), CliError> {
    snapshot::save(map, path).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

/// Evolves `iterations` more steps, writing numbered snapshots on the way,
/// then the final archive, log, and diff export into `dir`.
fn advance(map: &mut MapState, config: &RunConfig, dir: &Path, iterations: u64, jobs: Option<usize>) -> Result<(), CliError> {
    let executor = build_executor(config, jobs)?;
    let terrain = build_terrain(config)?;
    let operator = build_operator(config)?;
    let ctx = EvalContext {
        executor: executor.as_ref(),
        terrain: &terrain,
        sim: &config.physics,
    };
    let target = map.iteration + iterations;
    while map.iteration < target {
        let every = config.snapshot_every;
        let step = if every == 0 {
            target - map.iteration
        } else {
            (every - map.iteration % every).min(target - map.iteration)
        };
        evolve(map, operator.as_ref(), &ctx, step, config.batch, config.samples_per_prompt)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        if every > 0 && map.iteration % every == 0 {
            let snaps = dir.join("snapshots");
            std::fs::create_dir_all(&snaps).map_err(|e| CliError::Runtime(format!("{}: {e}", snaps.display())))?;
            save_snapshot(map, &snaps.join(format!("iter_{:06}.snap", map.iteration)))?;
        }
    }
    finish(map, config, dir)
}

fn finish(map: &MapState, config: &RunConfig, dir: &Path) -> Result<(), CliError> {
    save_snapshot(map, &dir.join(FINAL_SNAPSHOT))?;
    write(&dir.join(LOG_CSV), map.log.to_csv().as_bytes())?;
    let mut export = Vec::new();
    export_accepted_diffs(map, &mut export).map_err(|e| CliError::Runtime(format!("diff export: {e}")))?;
    write(&dir.join(DIFF_EXPORT), &export)?;
    let copy = toml::to_string(config).map_err(|e| CliError::Runtime(format!("config copy: {e}")))?;
    write(&dir.join(CONFIG_COPY), copy.as_bytes())?;
    println!(
        "iteration {} evals {} niches {} qd {} max_fitness {}",
        map.iteration,
        map.evals,
        map.niches_filled(),
        map.qd_score(),
        map.max_fitness()
    );
    Ok(())
}

pub fn cmd_run(config_path: &Path, out: Option<PathBuf>, jobs: Option<usize>) -> Result<(), CliError> {
    let mut config = RunConfig::load(config_path)?;
    if let Some(out) = out {
        config.output_dir = out;
    }
    let dir = config.output_dir.clone();
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;

    let seeds: Vec<(String, String)> = config.seeds.iter().map(|s| seed_source(s)).collect::<Result<_, _>>()?;
    let seed_name = seeds.iter().map(|s| s.0.as_str()).collect::<Vec<_>>().join("+");
    let run_id = config.run_id.clone().unwrap_or_else(|| {
        dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into())
    });
    let mut map = MapState::new(config.grid.clone(), config.rng_seed).with_meta(run_id, seed_name);
    {
        let executor = build_executor(&config, jobs)?;
        let terrain = build_terrain(&config)?;
        let ctx = EvalContext {
            executor: executor.as_ref(),
            terrain: &terrain,
            sim: &config.physics,
        };
        for (name, source) in &seeds {
            seed_map(&mut map, source, &ctx).map_err(|e| CliError::Runtime(format!("seed {name}: {e}")))?;
        }
    }
    advance(&mut map, &config, &dir, config.iterations, jobs)
}

pub fn cmd_resume(snapshot_path: &Path, iterations: u64, config: Option<PathBuf>, jobs: Option<usize>) -> Result<(), CliError> {
    let mut map = snapshot::load(snapshot_path)
        .map_err(|e| CliError::Runtime(format!("cannot load {}: {e}", snapshot_path.display())))?;
    let mut dir = snapshot_path.parent().map(Path::to_path_buf).unwrap_or_default();
    // numbered snapshots live one level below the run directory
    if dir.file_name().is_some_and(|n| n == "snapshots") {
        dir.pop();
    }
    let config_path = config.unwrap_or_else(|| dir.join(CONFIG_COPY));
    let mut config = RunConfig::load(&config_path)?;
    config.output_dir = dir.clone();
    advance(&mut map, &config, &dir, iterations, jobs)
}
