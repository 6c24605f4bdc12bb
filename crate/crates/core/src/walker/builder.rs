use thiserror::Error;

use super::{
    Joint, Muscle, MuscleKind, WalkerSpec, AMPLITUDE_CAP, COORDINATE_BOUND, MAX_MUSCLES_PER_JOINT,
    MIN_JOINT_DISTANCE,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BuildError {
    #[error("joint coordinates must be finite and within ±{COORDINATE_BOUND}, got ({x}, {y})")]
    BadCoordinate { x: f64, y: f64 },
    #[error("muscle endpoints must differ (joint {0})")]
    SelfMuscle(usize),
    #[error("joint index {index} out of range ({len} joints)")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("oscillation parameters must be finite (amplitude {amplitude}, phase {phase})")]
    BadOscillation { amplitude: f64, phase: f64 },
}

/// Incremental walker constructor with forgiving merge/skip semantics.
///
/// The same call sequence always yields the same [`WalkerSpec`].
#[derive(Debug, Clone, Default)]
pub struct WalkerBuilder {
    joints: Vec<Joint>,
    muscles: Vec<Muscle>,
    degree: Vec<usize>,
}

impl WalkerBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn joint_count(&self) -> usize {
        self.joints.len()
    }

    pub fn muscle_count(&self) -> usize {
        self.muscles.len()
    }

    /// Adds a joint, or returns the index of the nearest existing joint if one
    /// lies closer than [`MIN_JOINT_DISTANCE`] (lowest index wins ties).
    pub fn add_joint(&mut self, x: f64, y: f64) -> Result<usize, BuildError> {
        if !x.is_finite() || !y.is_finite() || x.abs() > COORDINATE_BOUND || y.abs() > COORDINATE_BOUND
        {
            return Err(BuildError::BadCoordinate { x, y });
        }
        let candidate = Joint::new(x, y);
        let mut nearest: Option<(usize, f64)> = None;
        for (i, j) in self.joints.iter().enumerate() {
            let d = j.distance(&candidate);
            if d < MIN_JOINT_DISTANCE && nearest.is_none_or(|(_, best)| d < best) {
                nearest = Some((i, d));
            }
        }
        if let Some((i, _)) = nearest {
            return Ok(i);
        }
        self.joints.push(candidate);
        self.degree.push(0);
        Ok(self.joints.len() - 1)
    }

    /// Adds a muscle between joints `a` and `b`.
    ///
    /// Returns `Ok(false)` without touching the walker when the pair already
    /// has a muscle or either joint is at [`MAX_MUSCLES_PER_JOINT`].
    /// Oscillating amplitude is stored as
    /// `min(max(amplitude, 0), AMPLITUDE_CAP * rest_length)` and phase as
    /// `phase mod 1`.
    pub fn add_muscle(&mut self, a: usize, b: usize, kind: MuscleKind) -> Result<bool, BuildError> {
        let len = self.joints.len();
        for index in [a, b] {
            if index >= len {
                return Err(BuildError::IndexOutOfRange { index, len });
            }
        }
        if a == b {
            return Err(BuildError::SelfMuscle(a));
        }
        if let MuscleKind::Oscillating { amplitude, phase } = kind {
            if !amplitude.is_finite() || !phase.is_finite() {
                return Err(BuildError::BadOscillation { amplitude, phase });
            }
        }
        let pair = (a.min(b), a.max(b));
        if self.muscles.iter().any(|m| m.pair() == pair) {
            return Ok(false);
        }
        if self.degree[a] >= MAX_MUSCLES_PER_JOINT || self.degree[b] >= MAX_MUSCLES_PER_JOINT {
            return Ok(false);
        }
        let kind = match kind {
            MuscleKind::Distance => MuscleKind::Distance,
            MuscleKind::Oscillating { amplitude, phase } => {
                let rest = self.joints[a].distance(&self.joints[b]);
                MuscleKind::Oscillating {
                    amplitude: amplitude.max(0.0).min(AMPLITUDE_CAP * rest),
                    phase: wrap_phase(phase),
                }
            }
        };
        self.muscles.push(Muscle { a, b, kind });
        self.degree[a] += 1;
        self.degree[b] += 1;
        Ok(true)
    }

    pub fn build(self) -> WalkerSpec {
        WalkerSpec {
            joints: self.joints,
            muscles: self.muscles,
        }
    }

    pub fn snapshot(&self) -> WalkerSpec {
        WalkerSpec {
            joints: self.joints.clone(),
            muscles: self.muscles.clone(),
        }
    }
}

/// Floor-modulo into `[0, 1)`. Tiny negative inputs whose wrapped value
/// rounds up to 1.0 map to 0.0.
pub(crate) fn wrap_phase(phase: f64) -> f64 {
    let wrapped = phase.rem_euclid(1.0);
    if wrapped >= 1.0 {
        0.0
    } else {
        wrapped
    }
}
