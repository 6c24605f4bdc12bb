use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use elm_core::dataset::{final_map_distill, load_archives, threshold_distill, write_examples, Example};
use elm_core::exec::{serve, ScriptInterpreter};
use elm_core::physics::{make_terrain, simulate_observed, SimConfig, SimState, TerrainKind, TerrainParams};
use elm_core::qd::snapshot;
use elm_core::walker::{parse_spec, validate, WalkerSpec};
use elm_core::ElmRng;
use elm_gpbench::{build_task, exact_success_prob, llm_fix, run_trials, tune_rate, write_csv, GpOperator, TaskName, TrialReport};
use rand::SeedableRng;

use crate::config::RunConfig;
use crate::run::{build_client, build_executor};
use crate::CliError;

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Runtime(format!("cannot write {}: {e}", path.display()))
}

/// Walker text is used as-is; anything else is run as a program.
fn load_walker(path: &Path, config: Option<&RunConfig>) -> Result<WalkerSpec, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))?;
    if let Ok(spec) = parse_spec(&text) {
        let report = validate(&spec);
        if !report.ok() {
            return Err(CliError::Runtime(format!("invalid walker: {report}")));
        }
        return Ok(spec);
    }
    let executor = match config {
        Some(c) => build_executor(c, None)?,
        None => Box::new(ScriptInterpreter::new()),
    };
    executor
        .execute(&text)
        .map_err(|e| CliError::Runtime(format!("{}: {} ({})", path.display(), e.status.as_str(), e.detail)))
}

pub struct SimulateArgs {
    pub walker: PathBuf,
    pub terrain: String,
    pub config: Option<PathBuf>,
    pub trajectory: Option<PathBuf>,
    pub dump_svg: Option<PathBuf>,
}

pub fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let kind: TerrainKind = args.terrain.parse().map_err(|e| CliError::Config(format!("{e}")))?;
    let config = args.config.as_deref().map(RunConfig::load).transpose()?;
    let (params, sim) = match &config {
        Some(c) => (c.terrain.params.clone(), c.physics.clone()),
        None => (TerrainParams::default(), SimConfig::default()),
    };
    let terrain = make_terrain(kind, &params).map_err(|e| CliError::Config(format!("terrain: {e}")))?;
    let spec = load_walker(&args.walker, config.as_ref())?;
    let mut first: Option<SimState> = None;
    let mut last: Option<SimState> = None;
    let want_frames = args.dump_svg.is_some();
    let result = simulate_observed(&spec, &terrain, &sim, |s| {
        if want_frames {
            if first.is_none() {
                first = Some(s.clone());
            }
            last = Some(s.clone());
        }
    });
    println!("fitness {}", result.fitness);
    if result.flags.diverged {
        println!("diverged");
    }
    if let Some(path) = &args.trajectory {
        let mut out = create(path)?;
        writeln!(out, "t,x,y").map_err(io_err(path))?;
        for s in &result.com_trajectory {
            writeln!(out, "{},{},{}", s.t, s.x, s.y).map_err(io_err(path))?;
        }
        out.flush().map_err(io_err(path))?;
    }
    if let (Some(path), Some(first), Some(last)) = (&args.dump_svg, &first, &last) {
        let svg = crate::svg::simulation_svg(&spec, &terrain, first, last, &result.com_trajectory);
        std::fs::write(path, svg).map_err(io_err(path))?;
    }
    Ok(())
}

pub struct DistillArgs {
    pub archives: Vec<PathBuf>,
    pub method: String,
    pub pct: f64,
    pub out: PathBuf,
    pub exclude_seed: Vec<String>,
    pub dedupe: bool,
    pub holdout_fraction: Option<f64>,
    pub holdout_seed: u64,
    pub stats: Option<PathBuf>,
}

fn write_jsonl(examples: &[Example], path: &Path) -> Result<(), CliError> {
    let mut out = create(path)?;
    write_examples(&mut out, examples).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    out.flush().map_err(io_err(path))
}

pub fn cmd_distill(args: DistillArgs) -> Result<(), CliError> {
    let archives = load_archives(&args.archives).map_err(|e| CliError::Runtime(e.to_string()))?;
    let mut ds = match args.method.as_str() {
        "threshold" => threshold_distill(&archives, args.pct).map_err(|e| CliError::Config(e.to_string()))?,
        "final" => final_map_distill(&archives).map_err(|e| CliError::Runtime(e.to_string()))?,
        other => return Err(CliError::Config(format!("unknown method '{other}' (expected threshold or final)"))),
    };
    for seed in &args.exclude_seed {
        ds.exclude_seed(seed);
    }
    if args.dedupe {
        ds.dedupe();
    }
    match args.holdout_fraction {
        Some(f) => {
            if !(0.0..=1.0).contains(&f) {
                return Err(CliError::Config(format!("--holdout-fraction {f} outside [0, 1]")));
            }
            let (train, held) = ds.holdout(f, args.holdout_seed);
            write_jsonl(&train, &args.out)?;
            write_jsonl(&held, &args.out.with_extension("holdout.jsonl"))?;
            println!("examples {} holdout {}", train.len(), held.len());
        }
        None => {
            write_jsonl(&ds.examples, &args.out)?;
            println!("examples {}", ds.examples.len());
        }
    }
    if let Some(path) = &args.stats {
        std::fs::write(path, ds.stats().to_csv()).map_err(io_err(path))?;
    }
    Ok(())
}

pub struct BenchArgs {
    pub task: String,
    pub operator: String,
    pub k: String,
    pub trials: u64,
    pub rate: Option<f64>,
    pub seed: u64,
    pub oracle: bool,
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

fn parse_range(text: &str, max: usize) -> Result<Vec<usize>, CliError> {
    let bad = || CliError::Config(format!("bad bug range '{text}': expected N or A..B with B <= {max}"));
    let (a, b) = match text.split_once("..") {
        Some((a, b)) => (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?),
        None => {
            let n = text.trim().parse().map_err(|_| bad())?;
            (n, n)
        }
    };
    if a > b || b > max {
        return Err(bad());
    }
    Ok((a..=b).collect())
}

pub fn cmd_bench(args: BenchArgs) -> Result<(), CliError> {
    let name: TaskName = args.task.parse().map_err(|e| CliError::Config(format!("{e}")))?;
    let task = build_task(name);
    let ks = parse_range(&args.k, task.max_bugs)?;
    if args.trials == 0 {
        return Err(CliError::Config("--trials must be at least 1".into()));
    }
    let mut reports: Vec<TrialReport> = Vec::new();
    match args.operator.as_str() {
        "node_mutation" | "gp" => {
            let rate = args.rate.unwrap_or_else(|| tune_rate(&task));
            if !(0.0..=1.0).contains(&rate) {
                return Err(CliError::Config(format!("--rate {rate} outside [0, 1]")));
            }
            let mut rng = ElmRng::seed_from_u64(args.seed);
            for k in ks {
                let mut r = run_trials(&task, k, rate, args.trials, &mut rng).map_err(|e| CliError::Config(e.to_string()))?;
                if args.oracle {
                    r.oracle_rate = Some(exact_success_prob(&task, k, rate).map_err(|e| CliError::Config(e.to_string()))?);
                }
                reports.push(r);
            }
            eprintln!("node mutation rate {rate}");
        }
        op @ ("prompt" | "diff") => {
            let op = if op == "prompt" { GpOperator::Prompt } else { GpOperator::Diff };
            let llm = match &args.config {
                Some(p) => RunConfig::load(p)?.llm,
                None => Default::default(),
            };
            let client = build_client(&llm)?;
            for k in ks {
                let r = llm_fix(&task, k, &client, args.trials, op).map_err(|e| CliError::Runtime(e.to_string()))?;
                reports.push(r.report);
            }
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown operator '{other}' (expected node_mutation, prompt, or diff)"
            )))
        }
    }
    match &args.out {
        Some(path) => {
            let mut out = create(path)?;
            write_csv(&reports, &mut out).map_err(io_err(path))?;
            out.flush().map_err(io_err(path))?;
        }
        None => write_csv(&reports, std::io::stdout().lock()).map_err(|e| CliError::Runtime(e.to_string()))?,
    }
    Ok(())
}

pub fn cmd_map_render(snapshot_path: &Path, slice: &str, at: Option<usize>, out: &Path) -> Result<(), CliError> {
    let axes = crate::svg::parse_slice(slice)?;
    let map = snapshot::load(snapshot_path)
        .map_err(|e| CliError::Runtime(format!("cannot load {}: {e}", snapshot_path.display())))?;
    let svg = crate::svg::map_svg(&map, axes, at)?;
    std::fs::write(out, svg).map_err(io_err(out))
}

pub fn cmd_worker() -> Result<(), CliError> {
    let stdin = std::io::stdin().lock();
    let stdout = std::io::stdout().lock();
    serve(&ScriptInterpreter::new(), stdin, stdout).map_err(|e| CliError::Runtime(format!("worker: {e}")))
}
