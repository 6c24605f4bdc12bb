use rand::{RngCore, SeedableRng};
use rayon::prelude::*;
use thiserror::Error;

use super::genotype::{Genotype, OperatorTag};
use super::log::{LogRow, SlotOutcome};
use super::map::{InsertOutcome, MapError, MapState};
use crate::exec::{ExecFailure, ExecStatus, Executor};
use crate::mutation::{Attempt, MutationOperator, Parent};
use crate::physics::{evaluate, EvalError, SimConfig, TerrainProfile};
use crate::walker::{BehaviorDescriptor, WalkerSpec};
use crate::ElmRng;

/// Everything needed to turn a program into a fitness and a niche.
#[derive(Clone, Copy)]
pub struct EvalContext<'a> {
    pub executor: &'a dyn Executor,
    pub terrain: &'a TerrainProfile,
    pub sim: &'a SimConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluated {
    pub spec: WalkerSpec,
    pub fitness: f64,
    pub descriptor: BehaviorDescriptor,
}

impl EvalContext<'_> {
    pub fn evaluate_source(&self, source: &str) -> Result<Evaluated, ExecFailure> {
        let spec = self.executor.execute(source)?;
        let (fitness, descriptor) = evaluate(&spec, self.terrain, self.sim).map_err(|e| match e {
            EvalError::Invalid(report) => ExecFailure::new(ExecStatus::InvalidWalker, report.to_string()),
        })?;
        Ok(Evaluated {
            spec,
            fitness,
            descriptor,
        })
    }
}

#[derive(Debug, Error)]
pub enum EvolveError {
    #[error("batch size {batch} must be a positive multiple of samples per prompt {k}")]
    BadBatch { batch: usize, k: usize },
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("seed program failed: {0}")]
    Seed(ExecFailure),
}

/// Evaluates the seed program and inserts it. Seeding is not counted
/// against the evaluation budget.
pub fn seed_map(map: &mut MapState, source: &str, ctx: &EvalContext<'_>) -> Result<InsertOutcome, EvolveError> {
    let ev = ctx.evaluate_source(source).map_err(EvolveError::Seed)?;
    let genotype = Genotype {
        id: map.fresh_id(),
        source: source.to_string(),
        parent_id: None,
        operator: OperatorTag::Seed,
        commit_message: None,
        diff: None,
        generation: 0,
    };
    Ok(map.try_insert(genotype, ev.spec, ev.fitness, ev.descriptor))
}

struct Slot {
    parent_id: u64,
    generation: u32,
    attempt: Attempt,
}

/// Runs `iterations` MAP-Elites iterations of `batch` evaluations each.
///
/// Parents and per-group rng seeds are drawn serially from the map rng, so a
/// run's result does not depend on thread count. Proposals and evaluations
/// run in parallel; insertion happens afterwards in slot order. Each group of
/// `k` slots shares one parent (one prompt sampled `k` times).
pub fn evolve(
    map: &mut MapState,
    operator: &dyn MutationOperator,
    ctx: &EvalContext<'_>,
    iterations: u64,
    batch: usize,
    k: usize,
) -> Result<Vec<LogRow>, EvolveError> {
    if k == 0 || batch == 0 || batch % k != 0 {
        return Err(EvolveError::BadBatch { batch, k });
    }
    let mut rows = Vec::with_capacity(iterations as usize);
    for _ in 0..iterations {
        let mut groups = Vec::with_capacity(batch / k);
        for _ in 0..batch / k {
            let coord = map.draw_niche()?;
            let slot_seed = map.rng.next_u64();
            groups.push((coord, slot_seed));
        }

        let slots: Vec<Slot> = groups
            .par_iter()
            .flat_map_iter(|&(coord, seed)| {
                let rec = &map.niches[&coord];
                let champ = &rec.champion().genotype;
                let parent = Parent {
                    genotype: champ,
                    spec: &rec.spec,
                };
                let mut rng = ElmRng::seed_from_u64(seed);
                let attempts = operator.propose(parent, &mut rng, k);
                assert_eq!(attempts.len(), k, "operator returned the wrong number of attempts");
                let (parent_id, generation) = (champ.id, champ.generation + 1);
                attempts.into_iter().map(move |attempt| Slot {
                    parent_id,
                    generation,
                    attempt,
                })
            })
            .collect();

        let results: Vec<Option<Result<Evaluated, ExecFailure>>> = slots
            .par_iter()
            .map(|s| s.attempt.candidate().map(|c| ctx.evaluate_source(&c.source)))
            .collect();

        let mut outcomes = Vec::with_capacity(batch);
        for (slot, result) in slots.into_iter().zip(results) {
            let outcome = match (slot.attempt, result) {
                (Attempt::Invalid(_), _) | (_, None) => SlotOutcome::Invalid,
                (_, Some(Err(_))) => SlotOutcome::NotRunnable,
                (Attempt::Candidate(c), Some(Ok(ev))) => {
                    let genotype = Genotype {
                        id: map.fresh_id(),
                        source: c.source,
                        parent_id: Some(slot.parent_id),
                        operator: c.operator,
                        commit_message: c.commit_message,
                        diff: c.diff,
                        generation: slot.generation,
                    };
                    match map.try_insert(genotype, ev.spec, ev.fitness, ev.descriptor) {
                        InsertOutcome::NewNiche => SlotOutcome::NewNiche,
                        InsertOutcome::Improved => SlotOutcome::Improved,
                        InsertOutcome::Rejected => SlotOutcome::Rejected,
                    }
                }
            };
            outcomes.push(outcome);
        }

        map.evals += batch as u64;
        map.iteration += 1;
        let valid = outcomes.iter().filter(|o| **o != SlotOutcome::Invalid).count();
        let runnable = outcomes
            .iter()
            .filter(|o| !matches!(o, SlotOutcome::Invalid | SlotOutcome::NotRunnable))
            .count();
        let row = LogRow {
            iteration: map.iteration,
            evals: map.evals,
            niches: map.niches_filled(),
            qd: map.qd_score(),
            max_fitness: map.max_fitness(),
            valid_pct: 100.0 * valid as f64 / batch as f64,
            runnable_pct: 100.0 * runnable as f64 / batch as f64,
            outcomes,
        };
        map.log.rows.push(row.clone());
        rows.push(row);
    }
    Ok(rows)
}
