use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::walker::BehaviorDescriptor;

pub type NicheCoord = [usize; 3];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisBounds {
    pub min: f64,
    pub max: f64,
}

/// Uniform grid over (height, width, mass). Out-of-range descriptors clamp
/// to the edge bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub dims: [usize; 3],
    pub bounds: [AxisBounds; 3],
}

impl Default for GridConfig {
    fn default() -> Self {
        let b = |max| AxisBounds { min: 0.0, max };
        Self {
            dims: [12, 12, 12],
            bounds: [b(30.0), b(30.0), b(60.0)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("axis {0} needs at least one bin")]
    NoBins(usize),
    #[error("axis {0} bounds must be finite with max > min")]
    BadBounds(usize),
}

impl GridConfig {
    pub fn check(&self) -> Result<(), GridError> {
        for axis in 0..3 {
            if self.dims[axis] == 0 {
                return Err(GridError::NoBins(axis));
            }
            let b = self.bounds[axis];
            if !(b.min.is_finite() && b.max.is_finite() && b.max > b.min) {
                return Err(GridError::BadBounds(axis));
            }
        }
        Ok(())
    }

    pub fn total_niches(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn bin_width(&self, axis: usize) -> f64 {
        let b = self.bounds[axis];
        (b.max - b.min) / self.dims[axis] as f64
    }

    fn bin(&self, axis: usize, v: f64) -> usize {
        let b = self.bounds[axis];
        let raw = ((v - b.min) / self.bin_width(axis)).floor();
        if raw.is_nan() || raw < 0.0 {
            0
        } else {
            (raw as usize).min(self.dims[axis] - 1)
        }
    }

    pub fn niche_index(&self, d: &BehaviorDescriptor) -> NicheCoord {
        [self.bin(0, d.height), self.bin(1, d.width), self.bin(2, d.mass)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desc(height: f64, width: f64, mass: f64) -> BehaviorDescriptor {
        BehaviorDescriptor { height, width, mass }
    }

    #[test]
    fn default_grid_has_1728_niches() {
        assert_eq!(GridConfig::default().total_niches(), 1728);
    }

    #[test]
    fn binning() {
        let g = GridConfig::default();
        assert_eq!(g.niche_index(&desc(0.0, 0.0, 0.0)), [0, 0, 0]);
        assert_eq!(g.niche_index(&desc(1.5 * g.bin_width(0), 0.0, 0.0))[0], 1);
        assert_eq!(g.niche_index(&desc(0.0, 0.0, 1e4))[2], 11);
        assert_eq!(g.niche_index(&desc(30.0, -1.0, 5.0)), [11, 0, 1]);
    }

    #[test]
    fn bad_configs() {
        let mut g = GridConfig::default();
        g.dims[1] = 0;
        assert_eq!(g.check(), Err(GridError::NoBins(1)));
        let mut g = GridConfig::default();
        g.bounds[2].max = 0.0;
        assert_eq!(g.check(), Err(GridError::BadBounds(2)));
    }
}
