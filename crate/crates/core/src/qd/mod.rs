//! MAP-Elites archive, evolution loop, and run snapshots.

mod evolve;
mod genotype;
mod grid;
mod log;
mod map;
pub mod snapshot;

pub use evolve::{evolve, seed_map, EvalContext, Evaluated, EvolveError};
pub use genotype::{Genotype, OperatorTag};
pub use grid::{AxisBounds, GridConfig, GridError, NicheCoord};
pub use log::{LogRow, RunLog, SlotOutcome};
pub use map::{Admission, InsertOutcome, MapError, MapState, NicheRecord, RunMeta};
