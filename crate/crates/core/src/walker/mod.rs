//! Walker intermediate representation: point-mass joints connected by
//! distance or oscillating muscles.
//!
//! Walkers are produced by a [`WalkerBuilder`], which enforces the
//! construction constraints every genotype program goes through:
//! joints closer than [`MIN_JOINT_DISTANCE`] merge, each joint carries at
//! most [`MAX_MUSCLES_PER_JOINT`] muscles, and oscillation amplitude is
//! capped at [`AMPLITUDE_CAP`] times the muscle's rest length.

mod builder;
mod descriptor;
pub mod pyfloat;
mod render;
mod text;
mod validate;

pub use builder::{BuildError, WalkerBuilder};
pub use descriptor::{behavior_descriptor, BehaviorDescriptor};
pub use render::render_program;
pub use text::{parse_spec, ParseError};
pub use validate::{validate, RuleId, ValidationReport, Violation};

/// Joints closer than this are merged by the builder.
pub const MIN_JOINT_DISTANCE: f64 = 0.1;
/// Maximum number of muscles attached to a single joint.
pub const MAX_MUSCLES_PER_JOINT: usize = 10;
/// Oscillation amplitude is clamped to this fraction of rest length.
pub const AMPLITUDE_CAP: f64 = 0.3;
/// Sanity bound on joint coordinates.
pub const COORDINATE_BOUND: f64 = 1e6;
/// Mass of every joint.
pub const UNIT_MASS: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Joint {
    pub x: f64,
    pub y: f64,
}

impl Joint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Euclidean distance, computed as `sqrt(dx*dx + dy*dy)`; the builder's
    /// merge rule and amplitude cap both depend on this exact expression.
    pub fn distance(&self, other: &Joint) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        (dx * dx + dy * dy).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuscleKind {
    /// Spring held at its initial rest length.
    Distance,
    /// Spring whose rest length oscillates. `amplitude` is in length units,
    /// `phase` is a fraction of a cycle in `[0, 1)`.
    Oscillating { amplitude: f64, phase: f64 },
}

impl MuscleKind {
    pub fn is_oscillating(&self) -> bool {
        matches!(self, MuscleKind::Oscillating { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Muscle {
    pub a: usize,
    pub b: usize,
    pub kind: MuscleKind,
}

impl Muscle {
    pub fn distance(a: usize, b: usize) -> Self {
        Self {
            a,
            b,
            kind: MuscleKind::Distance,
        }
    }

    pub fn oscillating(a: usize, b: usize, amplitude: f64, phase: f64) -> Self {
        Self {
            a,
            b,
            kind: MuscleKind::Oscillating { amplitude, phase },
        }
    }

    /// Endpoints as an unordered pair `(min, max)`.
    pub fn pair(&self) -> (usize, usize) {
        (self.a.min(self.b), self.a.max(self.b))
    }
}

/// A complete walker description. Immutable once built.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WalkerSpec {
    pub joints: Vec<Joint>,
    pub muscles: Vec<Muscle>,
}

impl WalkerSpec {
    pub fn new(joints: Vec<Joint>, muscles: Vec<Muscle>) -> Self {
        Self { joints, muscles }
    }

    pub fn rest_length(&self, muscle: &Muscle) -> f64 {
        self.joints[muscle.a].distance(&self.joints[muscle.b])
    }

    /// Canonical single-line text form; see [`parse_spec`] for the inverse.
    pub fn to_canonical(&self) -> String {
        text::serialize(self)
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        Self {
            joints: self
                .joints
                .iter()
                .map(|j| Joint::new(j.x + dx, j.y + dy))
                .collect(),
            muscles: self.muscles.clone(),
        }
    }

    pub fn oscillating_count(&self) -> usize {
        self.muscles.iter().filter(|m| m.kind.is_oscillating()).count()
    }
}

impl std::fmt::Display for WalkerSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.to_canonical())
    }
}

impl std::str::FromStr for WalkerSpec {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_spec(s)
    }
}

/// The square walker produced by the square seed program.
pub fn square_seed_spec() -> WalkerSpec {
    let mut wc = WalkerBuilder::new();
    let sides = [
        wc.add_joint(0.0, 0.0),
        wc.add_joint(0.0, 10.0),
        wc.add_joint(10.0, 10.0),
        wc.add_joint(10.0, 0.0),
    ]
    .map(|r| r.expect("finite"));
    let center = wc.add_joint(5.0, 5.0).expect("finite");
    let distance = MuscleKind::Distance;
    for k in 0..sides.len() - 1 {
        wc.add_muscle(sides[k], sides[k + 1], distance).expect("valid");
    }
    wc.add_muscle(sides[3], sides[0], distance).expect("valid");
    wc.add_muscle(sides[3], center, distance).expect("valid");
    for (side, amplitude) in [(sides[0], 5.0), (sides[1], 10.0), (sides[2], 2.0)] {
        wc.add_muscle(
            side,
            center,
            MuscleKind::Oscillating {
                amplitude,
                phase: 0.0,
            },
        )
        .expect("valid");
    }
    wc.build()
}
