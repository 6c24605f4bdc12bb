use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::commit::CommitCatalog;
use super::diff::{diff_of, parse_unified_diff, apply_diff};
use super::llm::LlmClient;
use crate::qd::{Genotype, OperatorTag};
use crate::walker::{render_program, validate, Joint, Muscle, MuscleKind, WalkerSpec, AMPLITUDE_CAP};
use crate::ElmRng;

/// What an operator mutates: the champion genotype and the walker it built.
#[derive(Debug, Clone, Copy)]
pub struct Parent<'a> {
    pub genotype: &'a Genotype,
    pub spec: &'a WalkerSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub source: String,
    pub operator: OperatorTag,
    pub commit_message: Option<String>,
    pub diff: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Attempt {
    Candidate(Candidate),
    /// No candidate came out of this sample (unparsable, stale, transport
    /// failure, empty).
    Invalid(String),
}

impl Attempt {
    pub fn candidate(&self) -> Option<&Candidate> {
        match self {
            Attempt::Candidate(c) => Some(c),
            Attempt::Invalid(_) => None,
        }
    }
}

#[derive(Debug, Default)]
pub struct OperatorStats {
    pub samples: AtomicU64,
    pub candidates: AtomicU64,
    pub parse_failures: AtomicU64,
    pub apply_failures: AtomicU64,
    pub transport_failures: AtomicU64,
    pub empty: AtomicU64,
}

impl OperatorStats {
    fn bump(counter: &AtomicU64) {
        counter.fetch_add(1, Ordering::Relaxed);
    }

    pub fn get(counter: &AtomicU64) -> u64 {
        counter.load(Ordering::Relaxed)
    }
}

/// Produces candidate programs from a parent.
///
/// `propose` returns exactly `k` attempts, in sample order. Given the same
/// parent and rng state, a deterministic operator returns the same list.
pub trait MutationOperator: Send + Sync {
    fn tag(&self) -> OperatorTag;
    fn propose(&self, parent: Parent<'_>, rng: &mut ElmRng, k: usize) -> Vec<Attempt>;
    fn stats(&self) -> &OperatorStats;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecEdit {
    Jitter,
    AddJoint,
    RemoveJoint,
    PerturbOscillation,
    ToggleKind,
}

impl SpecEdit {
    pub const ALL: [SpecEdit; 5] = [
        SpecEdit::Jitter,
        SpecEdit::AddJoint,
        SpecEdit::RemoveJoint,
        SpecEdit::PerturbOscillation,
        SpecEdit::ToggleKind,
    ];
}

pub const JITTER_SIGMA: f64 = 0.5;
pub const SPEC_MUTATE_RETRIES: usize = 10;

fn gauss(rng: &mut ElmRng, sigma: f64) -> f64 {
    Normal::new(0.0, sigma).expect("positive sigma").sample(rng)
}

fn random_kind(rng: &mut ElmRng, rest: f64) -> MuscleKind {
    if rng.random_bool(0.5) {
        MuscleKind::Distance
    } else {
        MuscleKind::Oscillating {
            amplitude: rng.random_range(0.0..=1.0) * AMPLITUDE_CAP * rest,
            phase: rng.random_range(0.0..1.0),
        }
    }
}

/// Applies one structural edit. Returns `None` when the edit does not apply
/// to this walker; the result is not yet validated.
pub fn apply_edit(spec: &WalkerSpec, edit: SpecEdit, rng: &mut ElmRng) -> Option<WalkerSpec> {
    let mut out = spec.clone();
    let n = spec.joints.len();
    match edit {
        SpecEdit::Jitter => {
            if n == 0 {
                return None;
            }
            let j = &mut out.joints[rng.random_range(0..n)];
            j.x += gauss(rng, JITTER_SIGMA);
            j.y += gauss(rng, JITTER_SIGMA);
        }
        SpecEdit::AddJoint => {
            if n == 0 {
                return None;
            }
            let anchor = spec.joints[rng.random_range(0..n)];
            let new = Joint::new(anchor.x + gauss(rng, 2.0), anchor.y + gauss(rng, 2.0));
            let mut by_distance: Vec<usize> = (0..n).collect();
            by_distance.sort_by(|&a, &b| {
                new.distance(&spec.joints[a])
                    .total_cmp(&new.distance(&spec.joints[b]))
                    .then(a.cmp(&b))
            });
            out.joints.push(new);
            for &other in by_distance.iter().take(2) {
                let rest = new.distance(&spec.joints[other]);
                out.muscles.push(Muscle {
                    a: other,
                    b: n,
                    kind: random_kind(rng, rest),
                });
            }
        }
        SpecEdit::RemoveJoint => {
            if n < 2 {
                return None;
            }
            let gone = rng.random_range(0..n);
            out.joints.remove(gone);
            let shift = |i: usize| if i > gone { i - 1 } else { i };
            out.muscles = spec
                .muscles
                .iter()
                .filter(|m| m.a != gone && m.b != gone)
                .map(|m| Muscle {
                    a: shift(m.a),
                    b: shift(m.b),
                    kind: m.kind,
                })
                .collect();
        }
        SpecEdit::PerturbOscillation => {
            let osc: Vec<usize> = (0..spec.muscles.len())
                .filter(|&i| spec.muscles[i].kind.is_oscillating())
                .collect();
            if osc.is_empty() {
                return None;
            }
            let i = osc[rng.random_range(0..osc.len())];
            let cap = AMPLITUDE_CAP * spec.rest_length(&spec.muscles[i]);
            if let MuscleKind::Oscillating { amplitude, phase } = spec.muscles[i].kind {
                let amplitude = (amplitude + gauss(rng, 0.1 * cap.max(1e-9))).clamp(0.0, cap);
                let mut phase = (phase + gauss(rng, 0.1)).rem_euclid(1.0);
                if phase >= 1.0 {
                    phase = 0.0;
                }
                out.muscles[i].kind = MuscleKind::Oscillating { amplitude, phase };
            }
        }
        SpecEdit::ToggleKind => {
            if spec.muscles.is_empty() {
                return None;
            }
            let i = rng.random_range(0..spec.muscles.len());
            let rest = spec.rest_length(&spec.muscles[i]);
            out.muscles[i].kind = match spec.muscles[i].kind {
                MuscleKind::Distance => MuscleKind::Oscillating {
                    amplitude: rng.random_range(0.0..=1.0) * AMPLITUDE_CAP * rest,
                    phase: rng.random_range(0.0..1.0),
                },
                MuscleKind::Oscillating { .. } => MuscleKind::Distance,
            };
        }
    }
    Some(out)
}

/// One random edit, re-validated; up to [`SPEC_MUTATE_RETRIES`] tries, after
/// which the parent is returned unchanged.
pub fn spec_mutate(spec: &WalkerSpec, rng: &mut ElmRng) -> WalkerSpec {
    for _ in 0..SPEC_MUTATE_RETRIES {
        let edit = SpecEdit::ALL[rng.random_range(0..SpecEdit::ALL.len())];
        if let Some(child) = apply_edit(spec, edit, rng) {
            if validate(&child).ok() {
                return child;
            }
        }
    }
    spec.clone()
}

/// LLM-free operator: perturbs the parent walker directly and renders the
/// child as a builder program.
#[derive(Debug, Default)]
pub struct SpecMutator {
    stats: OperatorStats,
}

impl SpecMutator {
    pub fn new() -> Self {
        Self::default()
    }
}

impl MutationOperator for SpecMutator {
    fn tag(&self) -> OperatorTag {
        OperatorTag::SpecMutate
    }

    fn propose(&self, parent: Parent<'_>, rng: &mut ElmRng, k: usize) -> Vec<Attempt> {
        (0..k)
            .map(|_| {
                OperatorStats::bump(&self.stats.samples);
                OperatorStats::bump(&self.stats.candidates);
                Attempt::Candidate(Candidate {
                    source: render_program(&spec_mutate(parent.spec, rng)),
                    operator: OperatorTag::SpecMutate,
                    commit_message: None,
                    diff: None,
                })
            })
            .collect()
    }

    fn stats(&self) -> &OperatorStats {
        &self.stats
    }
}

/// The diff operator's prompt: source, commit message, then a cue for the
/// diff.
pub fn diff_prompt(source: &str, message: &str) -> String {
    format!("{source}\n\ncommit message: {message}\n\ndiff")
}

/// Cuts a completion down to the diff it contains: everything from the first
/// `---` or `@@` line, minus trailing blank lines.
pub fn extract_diff(completion: &str) -> Option<&str> {
    let mut offset = 0;
    for line in completion.split_inclusive('\n') {
        if line.starts_with("--- ") || line.starts_with("@@") {
            let rest = &completion[offset..];
            let trimmed = rest.trim_end_matches(|c: char| c.is_whitespace());
            // keep the final newline of the last diff line
            let end = (trimmed.len() + 1).min(rest.len());
            return Some(&rest[..end]);
        }
        offset += line.len();
    }
    None
}

fn fill_to_k(mut attempts: Vec<Attempt>, k: usize, stats: &OperatorStats) -> Vec<Attempt> {
    attempts.truncate(k);
    while attempts.len() < k {
        OperatorStats::bump(&stats.empty);
        attempts.push(Attempt::Invalid("model returned fewer completions than requested".into()));
    }
    attempts
}

pub struct LlmDiffOperator {
    client: Arc<LlmClient>,
    catalog: CommitCatalog,
    stats: OperatorStats,
}

impl LlmDiffOperator {
    pub fn new(client: Arc<LlmClient>, catalog: CommitCatalog) -> Self {
        Self {
            client,
            catalog,
            stats: OperatorStats::default(),
        }
    }

    pub fn client(&self) -> &LlmClient {
        &self.client
    }

    fn one(&self, parent: &str, message: &str, completion: &str) -> Attempt {
        let Some(text) = extract_diff(completion) else {
            OperatorStats::bump(&self.stats.parse_failures);
            return Attempt::Invalid("completion contains no diff".into());
        };
        let diff = match parse_unified_diff(text) {
            Ok(d) => d,
            Err(e) => {
                OperatorStats::bump(&self.stats.parse_failures);
                return Attempt::Invalid(format!("unparsable diff: {e}"));
            }
        };
        match apply_diff(parent, &diff) {
            Ok(source) => {
                OperatorStats::bump(&self.stats.candidates);
                Attempt::Candidate(Candidate {
                    source,
                    operator: OperatorTag::LlmDiff,
                    commit_message: Some(message.to_string()),
                    diff: Some(diff.to_string()),
                })
            }
            Err(e) => {
                OperatorStats::bump(&self.stats.apply_failures);
                Attempt::Invalid(format!("diff does not apply: {e}"))
            }
        }
    }
}

impl MutationOperator for LlmDiffOperator {
    fn tag(&self) -> OperatorTag {
        OperatorTag::LlmDiff
    }

    fn propose(&self, parent: Parent<'_>, rng: &mut ElmRng, k: usize) -> Vec<Attempt> {
        let message = self.catalog.sample(rng).text.clone();
        let source = &parent.genotype.source;
        self.stats.samples.fetch_add(k as u64, Ordering::Relaxed);
        match self.client.complete(&diff_prompt(source, &message), k as u32) {
            Err(e) => {
                self.stats.transport_failures.fetch_add(k as u64, Ordering::Relaxed);
                vec![Attempt::Invalid(format!("transport: {e}")); k]
            }
            Ok(resp) => {
                let attempts = resp
                    .completions
                    .iter()
                    .map(|c| self.one(source, &message, c))
                    .collect();
                fill_to_k(attempts, k, &self.stats)
            }
        }
    }

    fn stats(&self) -> &OperatorStats {
        &self.stats
    }
}

pub const ENTRY_STUB: &str = "def make_walker():";

/// Prompt for the completion operator: the parent under a heading comment,
/// the instruction as a comment, and the entrypoint header to complete.
pub fn completion_prompt(source: &str, instruction: &str) -> String {
    format!("# A walker implementation\n{source}\n\n# {instruction}\n{ENTRY_STUB}")
}

/// Splices a completion onto the parent: helper code before the parent's
/// entrypoint, the stub, then the completion up to the first top-level
/// comment line that starts a new section, without trailing blank lines.
pub fn splice_completion(parent: &str, completion: &str) -> String {
    let prefix = parent.find("def make_walker").map_or("", |i| &parent[..i]);
    let mut body = String::new();
    for line in completion.split_inclusive('\n') {
        if line.starts_with("# ") || line.starts_with("#\n") {
            break;
        }
        body.push_str(line);
    }
    format!("{prefix}{ENTRY_STUB}{}\n", body.trim_end())
}

pub struct PromptOperator {
    client: Arc<LlmClient>,
    catalog: CommitCatalog,
    stats: OperatorStats,
}

impl PromptOperator {
    pub fn new(client: Arc<LlmClient>, catalog: CommitCatalog) -> Self {
        Self {
            client,
            catalog,
            stats: OperatorStats::default(),
        }
    }
}

impl MutationOperator for PromptOperator {
    fn tag(&self) -> OperatorTag {
        OperatorTag::Prompt
    }

    fn propose(&self, parent: Parent<'_>, rng: &mut ElmRng, k: usize) -> Vec<Attempt> {
        let message = self.catalog.sample(rng).text.clone();
        let source = &parent.genotype.source;
        self.stats.samples.fetch_add(k as u64, Ordering::Relaxed);
        match self.client.complete(&completion_prompt(source, &message), k as u32) {
            Err(e) => {
                self.stats.transport_failures.fetch_add(k as u64, Ordering::Relaxed);
                vec![Attempt::Invalid(format!("transport: {e}")); k]
            }
            Ok(resp) => {
                let attempts = resp
                    .completions
                    .iter()
                    .map(|c| {
                        if c.trim().is_empty() {
                            OperatorStats::bump(&self.stats.empty);
                            return Attempt::Invalid("empty completion".into());
                        }
                        OperatorStats::bump(&self.stats.candidates);
                        let child = splice_completion(source, c);
                        Attempt::Candidate(Candidate {
                            diff: Some(diff_of(source, &child)),
                            source: child,
                            operator: OperatorTag::Prompt,
                            commit_message: Some(message.clone()),
                        })
                    })
                    .collect();
                fill_to_k(attempts, k, &self.stats)
            }
        }
    }

    fn stats(&self) -> &OperatorStats {
        &self.stats
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walker::square_seed_spec;
    use rand::SeedableRng;

    #[test]
    fn forced_jitter_keeps_mass() {
        let spec = WalkerSpec::new(vec![Joint::new(1.0, 1.0)], vec![]);
        let mut rng = ElmRng::seed_from_u64(4);
        let child = apply_edit(&spec, SpecEdit::Jitter, &mut rng).unwrap();
        assert_eq!(child.joints.len(), 1);
        assert_ne!(child.joints[0], spec.joints[0]);
    }

    #[test]
    fn remove_on_single_joint_falls_back() {
        let spec = WalkerSpec::new(vec![Joint::new(1.0, 1.0)], vec![]);
        let mut rng = ElmRng::seed_from_u64(4);
        assert!(apply_edit(&spec, SpecEdit::RemoveJoint, &mut rng).is_none());
        for _ in 0..50 {
            let child = spec_mutate(&spec, &mut rng);
            assert!(validate(&child).ok());
        }
    }

    #[test]
    fn mutants_of_square_validate() {
        let spec = square_seed_spec();
        let mut rng = ElmRng::seed_from_u64(11);
        let mut changed = 0;
        for _ in 0..1000 {
            let child = spec_mutate(&spec, &mut rng);
            assert!(validate(&child).ok());
            changed += (child != spec) as usize;
        }
        assert!(changed > 900);
    }

    #[test]
    fn extract_skips_preamble() {
        assert_eq!(extract_diff("Here:\n@@ -1 +1 @@\n-a\n+b\n\n\n"), Some("@@ -1 +1 @@\n-a\n+b\n"));
        assert_eq!(extract_diff("--- a\n+++ b\n@@ -1 +1 @@\n-a\n+b"), Some("--- a\n+++ b\n@@ -1 +1 @@\n-a\n+b"));
        assert_eq!(extract_diff("no diff here"), None);
    }

    #[test]
    fn splice_echo_reproduces_parent() {
        let parent = render_program(&square_seed_spec());
        let body = &parent[ENTRY_STUB.len()..];
        assert_eq!(splice_completion(&parent, body), parent);
        let cut = format!("{body}\n# Another walker\ndef other():\n");
        assert_eq!(splice_completion(&parent, &cut).trim_end(), parent.trim_end());
    }
}
