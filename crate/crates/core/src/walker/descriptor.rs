use serde::{Deserialize, Serialize};

use super::{WalkerSpec, UNIT_MASS};

/// Morphology features used to place a walker in the behavior grid.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BehaviorDescriptor {
    pub height: f64,
    pub width: f64,
    pub mass: f64,
}

/// Bounding-box height and width of the joints, and total mass.
/// An empty walker maps to all zeros.
pub fn behavior_descriptor(spec: &WalkerSpec) -> BehaviorDescriptor {
    let Some(first) = spec.joints.first() else {
        return BehaviorDescriptor::default();
    };
    let (mut min_x, mut max_x, mut min_y, mut max_y) = (first.x, first.x, first.y, first.y);
    for j in &spec.joints[1..] {
        min_x = min_x.min(j.x);
        max_x = max_x.max(j.x);
        min_y = min_y.min(j.y);
        max_y = max_y.max(j.y);
    }
    BehaviorDescriptor {
        height: max_y - min_y,
        width: max_x - min_x,
        mass: spec.joints.len() as f64 * UNIT_MASS,
    }
}
