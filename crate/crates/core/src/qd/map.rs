use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::genotype::Genotype;
use super::grid::{GridConfig, NicheCoord};
use super::log::RunLog;
use crate::walker::{BehaviorDescriptor, WalkerSpec};
use crate::ElmRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Admission {
    pub genotype: Genotype,
    pub fitness: f64,
    pub descriptor: BehaviorDescriptor,
}

/// One filled niche: its current champion and every solution ever admitted,
/// oldest first. The last admission is the champion.
#[derive(Debug, Clone, PartialEq)]
pub struct NicheRecord {
    pub spec: WalkerSpec,
    pub history: Vec<Admission>,
}

impl NicheRecord {
    pub fn champion(&self) -> &Admission {
        self.history.last().expect("niche records are never empty")
    }

    pub fn fitness(&self) -> f64 {
        self.champion().fitness
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InsertOutcome {
    NewNiche,
    Improved,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MapError {
    #[error("map has no filled niches")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub run_id: String,
    pub seed_name: String,
}

impl Default for RunMeta {
    fn default() -> Self {
        Self {
            run_id: "run".into(),
            seed_name: "seed".into(),
        }
    }
}

/// The MAP-Elites archive plus everything needed to continue a run.
#[derive(Debug, Clone, PartialEq)]
pub struct MapState {
    pub grid: GridConfig,
    pub niches: BTreeMap<NicheCoord, NicheRecord>,
    pub rng: ElmRng,
    pub evals: u64,
    pub next_id: u64,
    pub iteration: u64,
    pub meta: RunMeta,
    pub log: RunLog,
}

impl MapState {
    pub fn new(grid: GridConfig, seed: u64) -> Self {
        Self {
            grid,
            niches: BTreeMap::new(),
            rng: ElmRng::seed_from_u64(seed),
            evals: 0,
            next_id: 0,
            iteration: 0,
            meta: RunMeta::default(),
            log: RunLog::default(),
        }
    }

    pub fn with_meta(mut self, run_id: impl Into<String>, seed_name: impl Into<String>) -> Self {
        self.meta = RunMeta {
            run_id: run_id.into(),
            seed_name: seed_name.into(),
        };
        self
    }

    pub fn fresh_id(&mut self) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    pub fn niches_filled(&self) -> usize {
        self.niches.len()
    }

    /// Sum of champion fitnesses.
    pub fn qd_score(&self) -> f64 {
        self.niches.values().map(NicheRecord::fitness).sum()
    }

    pub fn max_fitness(&self) -> f64 {
        self.niches.values().map(NicheRecord::fitness).fold(0.0, f64::max)
    }

    /// Inserts iff the niche is empty, the fitness beats the champion, or it
    /// ties with a strictly shorter source.
    pub fn try_insert(
        &mut self,
        genotype: Genotype,
        spec: WalkerSpec,
        fitness: f64,
        descriptor: BehaviorDescriptor,
    ) -> InsertOutcome {
        let coord = self.grid.niche_index(&descriptor);
        let admission = Admission {
            genotype,
            fitness,
            descriptor,
        };
        match self.niches.get_mut(&coord) {
            None => {
                self.niches.insert(
                    coord,
                    NicheRecord {
                        spec,
                        history: vec![admission],
                    },
                );
                InsertOutcome::NewNiche
            }
            Some(rec) => {
                let champ = rec.champion();
                let better = fitness > champ.fitness
                    || (fitness == champ.fitness
                        && admission.genotype.source.len() < champ.genotype.source.len());
                if better {
                    rec.spec = spec;
                    rec.history.push(admission);
                    InsertOutcome::Improved
                } else {
                    InsertOutcome::Rejected
                }
            }
        }
    }

    /// Uniform choice over filled niches; returns the coordinate.
    pub fn select_niche<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<NicheCoord, MapError> {
        if self.niches.is_empty() {
            return Err(MapError::Empty);
        }
        let k = rng.random_range(0..self.niches.len());
        Ok(*self.niches.keys().nth(k).expect("index in range"))
    }

    /// [`Self::select_niche`] driven by the map's own rng.
    pub fn draw_niche(&mut self) -> Result<NicheCoord, MapError> {
        if self.niches.is_empty() {
            return Err(MapError::Empty);
        }
        let k = self.rng.random_range(0..self.niches.len());
        Ok(*self.niches.keys().nth(k).expect("index in range"))
    }

    pub fn select_parent<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<&NicheRecord, MapError> {
        let coord = self.select_niche(rng)?;
        Ok(&self.niches[&coord])
    }

    /// Every genotype ever admitted, in niche then admission order.
    pub fn admissions(&self) -> impl Iterator<Item = (&NicheCoord, &Admission)> {
        self.niches
            .iter()
            .flat_map(|(c, r)| r.history.iter().map(move |a| (c, a)))
    }
}
