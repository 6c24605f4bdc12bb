//! Quality-diversity evolution of programs that build 2D mass-spring
//! walkers.
//!
//! The pipeline: genotype programs are executed (by a sandboxed worker pool
//! or the built-in script interpreter) into a [`walker::WalkerSpec`], the
//! walker is simulated on a terrain by [`physics`], and the result is placed
//! into a MAP-Elites grid by [`qd`]. New programs come from the operators in
//! [`mutation`]: LLM-proposed unified diffs, prompt completions, or direct
//! walker perturbation. [`dataset`] distills finished runs into fine-tuning
//! corpora.

pub mod physics;
pub mod walker;
pub mod dataset;
pub mod exec;
pub mod mutation;
pub mod qd;

/// The rng used everywhere a run must be reproducible from a seed.
pub type ElmRng = rand_pcg::Pcg64;
