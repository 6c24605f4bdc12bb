use std::collections::HashSet;
use std::fmt;

use super::{
    MuscleKind, WalkerSpec, AMPLITUDE_CAP, COORDINATE_BOUND, MAX_MUSCLES_PER_JOINT,
    MIN_JOINT_DISTANCE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RuleId {
    NoJoints,
    NonFinite,
    CoordinateBound,
    SelfMuscle,
    IndexRange,
    DuplicateMuscle,
    MinDistance,
    MuscleCap,
    AmplitudeNegative,
    AmplitudeCap,
    PhaseRange,
}

impl RuleId {
    pub fn as_str(&self) -> &'static str {
        match self {
            RuleId::NoJoints => "no-joints",
            RuleId::NonFinite => "non-finite",
            RuleId::CoordinateBound => "coordinate-bound",
            RuleId::SelfMuscle => "self-muscle",
            RuleId::IndexRange => "index-range",
            RuleId::DuplicateMuscle => "duplicate-muscle",
            RuleId::MinDistance => "min-distance",
            RuleId::MuscleCap => "muscle-cap",
            RuleId::AmplitudeNegative => "amplitude-negative",
            RuleId::AmplitudeCap => "amplitude-cap",
            RuleId::PhaseRange => "phase-range",
        }
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub rule: RuleId,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, rule: RuleId) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }

    fn push(&mut self, rule: RuleId, detail: String) {
        self.violations.push(Violation { rule, detail });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok() {
            return f.write_str("ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{}: {}", v.rule, v.detail)?;
        }
        Ok(())
    }
}

/// Checks every walker invariant. Never mutates; violations are data.
pub fn validate(spec: &WalkerSpec) -> ValidationReport {
    let mut report = ValidationReport::default();
    if spec.joints.is_empty() {
        report.push(RuleId::NoJoints, "walker has no joints".into());
    }
    for (i, j) in spec.joints.iter().enumerate() {
        if !j.x.is_finite() || !j.y.is_finite() {
            report.push(RuleId::NonFinite, format!("joint {i} at ({}, {})", j.x, j.y));
        } else if j.x.abs() > COORDINATE_BOUND || j.y.abs() > COORDINATE_BOUND {
            report.push(RuleId::CoordinateBound, format!("joint {i} at ({}, {})", j.x, j.y));
        }
    }
    for i in 0..spec.joints.len() {
        for k in i + 1..spec.joints.len() {
            let d = spec.joints[i].distance(&spec.joints[k]);
            if d < MIN_JOINT_DISTANCE {
                report.push(
                    RuleId::MinDistance,
                    format!("joints {i} and {k} are {d} apart (< {MIN_JOINT_DISTANCE})"),
                );
            }
        }
    }

    let n = spec.joints.len();
    let mut degree = vec![0usize; n];
    let mut pairs = HashSet::new();
    for (i, m) in spec.muscles.iter().enumerate() {
        if m.a >= n || m.b >= n {
            report.push(
                RuleId::IndexRange,
                format!("muscle {i} connects ({}, {}) with {n} joints", m.a, m.b),
            );
            continue;
        }
        if m.a == m.b {
            report.push(RuleId::SelfMuscle, format!("muscle {i} connects joint {} to itself", m.a));
            continue;
        }
        if !pairs.insert(m.pair()) {
            report.push(
                RuleId::DuplicateMuscle,
                format!("muscle {i} duplicates pair ({}, {})", m.a, m.b),
            );
        }
        degree[m.a] += 1;
        degree[m.b] += 1;
        if let MuscleKind::Oscillating { amplitude, phase } = m.kind {
            if !amplitude.is_finite() || !phase.is_finite() {
                report.push(RuleId::NonFinite, format!("muscle {i} oscillation parameters"));
                continue;
            }
            if amplitude < 0.0 {
                report.push(RuleId::AmplitudeNegative, format!("muscle {i} amplitude {amplitude}"));
            }
            let cap = AMPLITUDE_CAP * spec.rest_length(m);
            if amplitude > cap {
                report.push(
                    RuleId::AmplitudeCap,
                    format!("muscle {i} amplitude {amplitude} exceeds {cap}"),
                );
            }
            if !(0.0..1.0).contains(&phase) {
                report.push(RuleId::PhaseRange, format!("muscle {i} phase {phase} outside [0, 1)"));
            }
        }
    }
    for (j, d) in degree.iter().enumerate() {
        if *d > MAX_MUSCLES_PER_JOINT {
            report.push(
                RuleId::MuscleCap,
                format!("joint {j} carries {d} muscles (> {MAX_MUSCLES_PER_JOINT})"),
            );
        }
    }
    report
}
