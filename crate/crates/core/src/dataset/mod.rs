//! Turning finished runs into fine-tuning corpora.
//!
//! Two methods: a per-niche percentage threshold over everything ever
//! admitted in any run, and the plain concatenation of each run's final map.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::io::{self, BufRead, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qd::snapshot::{self, SnapshotError};
use crate::qd::{MapState, NicheCoord};
use crate::ElmRng;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("no archives given")]
    NoArchives,
    #[error("threshold must be in (0, 1], got {0}")]
    BadThreshold(f64),
    #[error("duplicate run id '{0}'")]
    DuplicateRun(String),
    #[error("run '{run}': niche {niche:?} history is not improving")]
    NotMonotone { run: String, niche: NicheCoord },
    #[error("{path}: {source}")]
    Load { path: String, source: SnapshotError },
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
}

/// One finished run.
#[derive(Debug, Clone)]
pub struct RunArchive {
    pub run_id: String,
    pub seed_name: String,
    pub map: MapState,
}

impl RunArchive {
    pub fn from_map(map: MapState) -> Result<Self, DatasetError> {
        for (coord, rec) in &map.niches {
            if rec.history.windows(2).any(|w| !(w[1].fitness >= w[0].fitness)) {
                return Err(DatasetError::NotMonotone {
                    run: map.meta.run_id.clone(),
                    niche: *coord,
                });
            }
        }
        Ok(Self {
            run_id: map.meta.run_id.clone(),
            seed_name: map.meta.seed_name.clone(),
            map,
        })
    }

    pub fn load(path: &Path) -> Result<Self, DatasetError> {
        let map = snapshot::load(path).map_err(|source| DatasetError::Load {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_map(map)
    }
}

/// Loads snapshots in parallel and orders them by run id.
pub fn load_archives(paths: &[impl AsRef<Path> + Sync]) -> Result<Vec<RunArchive>, DatasetError> {
    let archives = paths
        .par_iter()
        .map(|p| RunArchive::load(p.as_ref()))
        .collect::<Result<Vec<_>, _>>()?;
    sort_archives(archives)
}

fn sort_archives(mut archives: Vec<RunArchive>) -> Result<Vec<RunArchive>, DatasetError> {
    if archives.is_empty() {
        return Err(DatasetError::NoArchives);
    }
    archives.sort_by(|a, b| a.run_id.cmp(&b.run_id));
    if let Some(w) = archives.windows(2).find(|w| w[0].run_id == w[1].run_id) {
        return Err(DatasetError::DuplicateRun(w[0].run_id.clone()));
    }
    Ok(archives)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Example {
    pub source: String,
    pub fitness: f64,
    pub height: f64,
    pub width: f64,
    pub mass: f64,
    pub run: String,
    pub niche: NicheCoord,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Threshold(f64),
    FinalMap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistilledDataset {
    pub method: Method,
    pub examples: Vec<Example>,
    /// Seed name of every run that contributed, by run id.
    pub seeds: BTreeMap<String, String>,
}

fn example(run: &RunArchive, niche: NicheCoord, a: &crate::qd::Admission) -> Example {
    Example {
        source: a.genotype.source.clone(),
        fitness: a.fitness,
        height: a.descriptor.height,
        width: a.descriptor.width,
        mass: a.descriptor.mass,
        run: run.run_id.clone(),
        niche,
    }
}

fn seeds_of(archives: &[RunArchive]) -> BTreeMap<String, String> {
    archives.iter().map(|a| (a.run_id.clone(), a.seed_name.clone())).collect()
}

/// Every admission scoring at least `pct` of its niche's best score across
/// all runs.
pub fn threshold_distill(archives: &[RunArchive], pct: f64) -> Result<DistilledDataset, DatasetError> {
    if !(pct > 0.0 && pct <= 1.0) {
        return Err(DatasetError::BadThreshold(pct));
    }
    let archives = sort_archives(archives.to_vec())?;
    let mut best: HashMap<NicheCoord, f64> = HashMap::new();
    for run in &archives {
        for (coord, a) in run.map.admissions() {
            let m = best.entry(*coord).or_insert(f64::NEG_INFINITY);
            *m = m.max(a.fitness);
        }
    }
    let mut examples = Vec::new();
    for run in &archives {
        for (coord, a) in run.map.admissions() {
            if a.fitness >= pct * best[coord] {
                examples.push(example(run, *coord, a));
            }
        }
    }
    Ok(DistilledDataset {
        method: Method::Threshold(pct),
        examples,
        seeds: seeds_of(&archives),
    })
}

/// The champion of every filled niche of every run.
pub fn final_map_distill(archives: &[RunArchive]) -> Result<DistilledDataset, DatasetError> {
    let archives = sort_archives(archives.to_vec())?;
    let examples = archives
        .iter()
        .flat_map(|run| {
            run.map
                .niches
                .iter()
                .map(move |(coord, rec)| example(run, *coord, rec.champion()))
        })
        .collect();
    Ok(DistilledDataset {
        method: Method::FinalMap,
        examples,
        seeds: seeds_of(&archives),
    })
}

impl DistilledDataset {
    /// Drops examples from runs started from `seed_name`.
    pub fn exclude_seed(&mut self, seed_name: &str) {
        let seeds = &self.seeds;
        self.examples
            .retain(|e| seeds.get(&e.run).map(String::as_str) != Some(seed_name));
    }

    /// Keeps the first occurrence (in run order) of each (source, niche).
    pub fn dedupe(&mut self) {
        let mut seen = BTreeSet::new();
        self.examples
            .retain(|e| seen.insert((e.source.clone(), e.niche)));
    }

    /// Splits off a random `fraction` of examples; returns (train, holdout).
    /// The split depends only on `seed` and the example list.
    pub fn holdout(&self, fraction: f64, seed: u64) -> (Vec<Example>, Vec<Example>) {
        let n_hold = ((self.examples.len() as f64) * fraction.clamp(0.0, 1.0)).round() as usize;
        let mut idx: Vec<usize> = (0..self.examples.len()).collect();
        idx.shuffle(&mut ElmRng::seed_from_u64(seed));
        let hold: BTreeSet<usize> = idx[..n_hold].iter().copied().collect();
        let mut train = Vec::new();
        let mut held = Vec::new();
        for (i, e) in self.examples.iter().enumerate() {
            if hold.contains(&i) {
                held.push(e.clone());
            } else {
                train.push(e.clone());
            }
        }
        (train, held)
    }

    pub fn stats(&self) -> DatasetStats {
        dataset_stats(&self.examples, &self.seeds)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetStats {
    pub count: usize,
    pub mean_fitness: f64,
    pub per_seed: BTreeMap<String, usize>,
    /// Distinct niches with at least one example.
    pub coverage: usize,
    /// Examples whose (source, niche) already appeared in an earlier run.
    pub cross_run_duplicates: usize,
}

pub fn dataset_stats(examples: &[Example], seeds: &BTreeMap<String, String>) -> DatasetStats {
    let mut per_seed = BTreeMap::new();
    let mut niches = BTreeSet::new();
    let mut seen = BTreeSet::new();
    let mut dups = 0;
    for e in examples {
        let seed = seeds.get(&e.run).cloned().unwrap_or_else(|| "unknown".into());
        *per_seed.entry(seed).or_insert(0) += 1;
        niches.insert(e.niche);
        if !seen.insert((e.source.as_str(), e.niche)) {
            dups += 1;
        }
    }
    let mean_fitness = if examples.is_empty() {
        0.0
    } else {
        examples.iter().map(|e| e.fitness).sum::<f64>() / examples.len() as f64
    };
    DatasetStats {
        count: examples.len(),
        mean_fitness,
        per_seed,
        coverage: niches.len(),
        cross_run_duplicates: dups,
    }
}

impl DatasetStats {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,value\n");
        let _ = writeln!(out, "count,{}", self.count);
        let _ = writeln!(out, "mean_fitness,{}", self.mean_fitness);
        let _ = writeln!(out, "coverage,{}", self.coverage);
        let _ = writeln!(out, "cross_run_duplicates,{}", self.cross_run_duplicates);
        for (seed, n) in &self.per_seed {
            let _ = writeln!(out, "seed:{seed},{n}");
        }
        out
    }
}

pub fn write_examples<W: Write>(out: &mut W, examples: &[Example]) -> io::Result<()> {
    for e in examples {
        writeln!(out, "{}", serde_json::to_string(e)?)?;
    }
    out.flush()
}

pub fn read_examples<R: BufRead>(input: R) -> Result<Vec<Example>, DatasetError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| DatasetError::Format {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn write_dataset(ds: &DistilledDataset, path: &Path) -> Result<(), DatasetError> {
    let mut f = io::BufWriter::new(std::fs::File::create(path)?);
    write_examples(&mut f, &ds.examples)?;
    Ok(())
}
