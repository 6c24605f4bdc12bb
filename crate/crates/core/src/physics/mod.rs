//! Deterministic 2D mass-spring simulation.
//!
//! Joints are unit point masses, muscles are damped springs. Oscillating
//! muscles modulate their rest length with a shared period. Contacts with
//! ground, walls, and tunnel ceilings are resolved by projection with
//! Coulomb friction.

mod sim;
mod terrain;
mod vec2;

pub use sim::{
    evaluate, simulate, simulate_observed, step, substep, ComSample, EvalError, SimConfig,
    SimConfigError, SimFlags, SimResult, SimState, Spring, PENETRATION_TOLERANCE,
};
pub use terrain::{
    make_terrain, Ceiling, Heightfield, TerrainError, TerrainKind, TerrainParams, TerrainProfile,
    Wall, WallSide,
};
pub use vec2::Vec2;
