use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::terrain::{TerrainProfile, WallSide};
use super::vec2::Vec2;
use crate::walker::{
    behavior_descriptor, validate, BehaviorDescriptor, MuscleKind, ValidationReport, WalkerSpec,
    UNIT_MASS,
};

/// Integration and material constants. `dt` is the frame length; each frame
/// is split into `substeps` semi-implicit Euler steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub dt: f64,
    pub substeps: u32,
    pub duration: f64,
    pub gravity: f64,
    pub period: f64,
    pub stiffness: f64,
    pub damping: f64,
    pub friction: f64,
    pub restitution: f64,
    pub max_speed: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1.0 / 60.0,
            substeps: 4,
            duration: 10.0,
            gravity: 9.8,
            period: 2.0,
            stiffness: 80.0,
            damping: 4.0,
            friction: 0.8,
            restitution: 0.0,
            max_speed: 1e3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimConfigError {
    #[error("{0} must be positive and finite")]
    NonPositive(&'static str),
    #[error("{0} must be non-negative and finite")]
    Negative(&'static str),
    #[error("duration must be at least one frame")]
    TooShort,
    #[error("restitution must lie in [0, 1]")]
    Restitution,
}

impl SimConfig {
    pub fn check(&self) -> Result<(), SimConfigError> {
        let pos = |v: f64, name| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(SimConfigError::NonPositive(name))
            }
        };
        let nonneg = |v: f64, name| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(SimConfigError::Negative(name))
            }
        };
        pos(self.dt, "dt")?;
        pos(self.period, "period")?;
        pos(self.max_speed, "max_speed")?;
        if self.substeps == 0 {
            return Err(SimConfigError::NonPositive("substeps"));
        }
        nonneg(self.gravity, "gravity")?;
        nonneg(self.stiffness, "stiffness")?;
        nonneg(self.damping, "damping")?;
        nonneg(self.friction, "friction")?;
        if !(0.0..=1.0).contains(&self.restitution) {
            return Err(SimConfigError::Restitution);
        }
        if !(self.duration >= self.dt) {
            return Err(SimConfigError::TooShort);
        }
        Ok(())
    }

    pub fn frames(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    pub fn substep_dt(&self) -> f64 {
        self.dt / self.substeps as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spring {
    pub a: usize,
    pub b: usize,
    pub rest: f64,
    pub amplitude: f64,
    pub phase: f64,
}

impl Spring {
    pub fn rest_at(&self, t: f64, period: f64) -> f64 {
        if self.amplitude == 0.0 {
            self.rest
        } else {
            self.rest + self.amplitude * (TAU * (t / period + self.phase)).sin()
        }
    }
}

/// Mutable simulation state: joint positions and velocities at `time`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub time: f64,
    pub pos: Vec<Vec2>,
    pub vel: Vec<Vec2>,
    pub springs: Vec<Spring>,
    pub wall_contact: bool,
}

impl SimState {
    /// State for `spec` as-is, at rest, with no spawn translation.
    pub fn at_rest(spec: &WalkerSpec) -> Self {
        let springs = spec
            .muscles
            .iter()
            .map(|m| {
                let rest = spec.rest_length(m);
                let (amplitude, phase) = match m.kind {
                    MuscleKind::Distance => (0.0, 0.0),
                    MuscleKind::Oscillating { amplitude, phase } => (amplitude, phase),
                };
                Spring {
                    a: m.a,
                    b: m.b,
                    rest,
                    amplitude,
                    phase,
                }
            })
            .collect();
        Self {
            time: 0.0,
            pos: spec.joints.iter().map(|j| Vec2::new(j.x, j.y)).collect(),
            vel: vec![Vec2::ZERO; spec.joints.len()],
            springs,
            wall_contact: false,
        }
    }

    /// State with the walker translated so its bounding box is horizontally
    /// centered on `terrain.start_x` and its lowest joint sits 0.01 above
    /// the highest ground point under it.
    pub fn spawn(spec: &WalkerSpec, terrain: &TerrainProfile) -> Self {
        let mut state = Self::at_rest(spec);
        if state.pos.is_empty() {
            return state;
        }
        let (mut min_x, mut max_x, mut min_y) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY);
        for p in &state.pos {
            min_x = min_x.min(p.x);
            max_x = max_x.max(p.x);
            min_y = min_y.min(p.y);
        }
        let dx = terrain.start_x - 0.5 * (min_x + max_x);
        let floor = terrain.ground.max_over(min_x + dx, max_x + dx);
        let dy = floor + 0.01 - min_y;
        for p in &mut state.pos {
            *p = Vec2::new(p.x + dx, p.y + dy);
        }
        state
    }

    pub fn center_of_mass(&self) -> Vec2 {
        if self.pos.is_empty() {
            return Vec2::ZERO;
        }
        let sum = self.pos.iter().fold(Vec2::ZERO, |acc, p| acc + *p);
        sum * (1.0 / self.pos.len() as f64)
    }

    pub fn momentum(&self) -> Vec2 {
        self.vel.iter().fold(Vec2::ZERO, |acc, v| acc + *v * UNIT_MASS)
    }

    pub fn kinetic_energy(&self) -> f64 {
        self.vel.iter().map(|v| 0.5 * UNIT_MASS * v.dot(*v)).sum()
    }

    fn diverged(&self, max_speed: f64) -> bool {
        self.pos
            .iter()
            .zip(&self.vel)
            .any(|(p, v)| !p.is_finite() || !v.is_finite() || v.length() > max_speed)
    }
}

/// Resolves contact for one joint against a surface with outward normal `n`,
/// applying restitution to the normal velocity and Coulomb friction to the
/// tangential velocity.
fn contact_impulse(vel: &mut Vec2, n: Vec2, friction: f64, restitution: f64) {
    let vn = vel.dot(n);
    if vn >= 0.0 {
        return;
    }
    let dvn = -(1.0 + restitution) * vn;
    *vel += n * dvn;
    let vt = *vel - n * vel.dot(n);
    let speed = vt.length();
    let max_drop = friction * dvn;
    if speed <= max_drop {
        *vel -= vt;
    } else {
        *vel -= vt * (max_drop / speed);
    }
}

fn resolve_contacts(state: &mut SimState, terrain: &TerrainProfile, config: &SimConfig) {
    let (mu, e) = (config.friction, config.restitution);
    for i in 0..state.pos.len() {
        let mut p = state.pos[i];
        let mut v = state.vel[i];
        for wall in &terrain.walls {
            let (inside, n) = match wall.side {
                WallSide::BlocksRight => (p.x > wall.x, Vec2::new(-1.0, 0.0)),
                WallSide::BlocksLeft => (p.x < wall.x, Vec2::new(1.0, 0.0)),
            };
            if inside {
                p.x = wall.x;
                contact_impulse(&mut v, n, mu, e);
                state.wall_contact = true;
            }
        }
        if let Some(ceiling) = &terrain.ceiling {
            if p.x >= ceiling.start && p.x <= ceiling.end {
                let top = ceiling.profile.height(p.x);
                if p.y > top {
                    let down = p.y - top;
                    let left = p.x - ceiling.start;
                    let right = ceiling.end - p.x;
                    if down <= left && down <= right {
                        p.y = top;
                        let s = ceiling.profile.slope(p.x);
                        contact_impulse(&mut v, Vec2::new(s, -1.0).normalized(), mu, e);
                    } else if left <= right {
                        p.x = ceiling.start;
                        contact_impulse(&mut v, Vec2::new(-1.0, 0.0), mu, e);
                    } else {
                        p.x = ceiling.end;
                        contact_impulse(&mut v, Vec2::new(1.0, 0.0), mu, e);
                    }
                }
            }
        }
        let ground = terrain.ground.height(p.x);
        if p.y < ground {
            p.y = ground;
            let s = terrain.ground.slope(p.x);
            contact_impulse(&mut v, Vec2::new(-s, 1.0).normalized(), mu, e);
        }
        state.pos[i] = p;
        state.vel[i] = v;
    }
}

/// One semi-implicit Euler step of length `h`: forces from the current
/// positions and velocities update velocities, the new velocities update
/// positions, then contacts are projected out.
pub fn substep(state: &mut SimState, terrain: &TerrainProfile, config: &SimConfig, h: f64) {
    let n = state.pos.len();
    let mut force = vec![Vec2::new(0.0, -UNIT_MASS * config.gravity); n];
    for s in &state.springs {
        let d = state.pos[s.b] - state.pos[s.a];
        let len = d.length();
        if len < 1e-12 {
            continue;
        }
        let u = d * (1.0 / len);
        let stretch = len - s.rest_at(state.time, config.period);
        let closing = (state.vel[s.b] - state.vel[s.a]).dot(u);
        let f = u * (config.stiffness * stretch + config.damping * closing);
        force[s.a] += f;
        force[s.b] -= f;
    }
    for i in 0..n {
        state.vel[i] += force[i] * (h / UNIT_MASS);
        state.pos[i] += state.vel[i] * h;
    }
    state.time += h;
    resolve_contacts(state, terrain, config);
}

/// Advances one frame (`config.dt`) as `config.substeps` substeps.
pub fn step(state: &mut SimState, terrain: &TerrainProfile, config: &SimConfig) {
    let h = config.substep_dt();
    for _ in 0..config.substeps {
        substep(state, terrain, config, h);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SimFlags {
    pub diverged: bool,
    pub fell_through: bool,
    pub wall_contact: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    /// Absolute horizontal center-of-mass displacement; 0 if diverged.
    pub fitness: f64,
    /// Center of mass at spawn and after every frame.
    pub com_trajectory: Vec<ComSample>,
    pub flags: SimFlags,
}

/// Tolerance used for the `fell_through` flag.
pub const PENETRATION_TOLERANCE: f64 = 1e-3;

/// Simulates `spec` on `terrain`, calling `observe` with the spawn state and
/// after every frame.
pub fn simulate_observed(
    spec: &WalkerSpec,
    terrain: &TerrainProfile,
    config: &SimConfig,
    mut observe: impl FnMut(&SimState),
) -> SimResult {
    let mut state = SimState::spawn(spec, terrain);
    let start = state.center_of_mass();
    let mut trajectory = Vec::with_capacity(config.frames() + 1);
    trajectory.push(ComSample {
        t: 0.0,
        x: start.x,
        y: start.y,
    });
    observe(&state);
    let mut flags = SimFlags::default();
    for _ in 0..config.frames() {
        step(&mut state, terrain, config);
        if state.diverged(config.max_speed) {
            flags.diverged = true;
            break;
        }
        if state
            .pos
            .iter()
            .any(|p| p.y < terrain.ground.height(p.x) - PENETRATION_TOLERANCE)
        {
            flags.fell_through = true;
        }
        let com = state.center_of_mass();
        trajectory.push(ComSample {
            t: state.time,
            x: com.x,
            y: com.y,
        });
        observe(&state);
    }
    flags.wall_contact = state.wall_contact;
    let fitness = if flags.diverged {
        0.0
    } else {
        (trajectory.last().map_or(start.x, |s| s.x) - start.x).abs()
    };
    SimResult {
        fitness,
        com_trajectory: trajectory,
        flags,
    }
}

/// Simulates `spec` on `terrain` for `config.duration` seconds.
///
/// A pure function of its inputs: repeated calls are bit-identical.
pub fn simulate(spec: &WalkerSpec, terrain: &TerrainProfile, config: &SimConfig) -> SimResult {
    simulate_observed(spec, terrain, config, |_| {})
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("invalid walker: {0}")]
    Invalid(ValidationReport),
}

/// Validates, simulates, and characterizes a walker. The descriptor comes
/// from the walker as built, independent of terrain and simulated pose.
pub fn evaluate(
    spec: &WalkerSpec,
    terrain: &TerrainProfile,
    config: &SimConfig,
) -> Result<(f64, BehaviorDescriptor), EvalError> {
    let report = validate(spec);
    if !report.ok() {
        return Err(EvalError::Invalid(report));
    }
    let result = simulate(spec, terrain, config);
    Ok((result.fitness, behavior_descriptor(spec)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::terrain::{make_terrain, TerrainKind, TerrainParams};
    use crate::walker::{square_seed_spec, Joint, Muscle};

    fn flat() -> TerrainProfile {
        make_terrain(TerrainKind::Flat, &TerrainParams::default()).unwrap()
    }

    #[test]
    fn resting_mass_stays_put() {
        let spec = WalkerSpec::new(vec![Joint::new(0.0, 0.0)], vec![]);
        let mut state = SimState::at_rest(&spec);
        let before = state.pos[0];
        step(&mut state, &flat(), &SimConfig::default());
        assert_eq!(state.pos[0], before);
        assert_eq!(state.vel[0], Vec2::ZERO);
    }

    #[test]
    fn free_fall_velocity() {
        let spec = WalkerSpec::new(vec![Joint::new(0.0, 50.0)], vec![]);
        let config = SimConfig::default();
        let mut state = SimState::at_rest(&spec);
        step(&mut state, &flat(), &config);
        assert!((state.vel[0].y + config.gravity * config.dt).abs() < 1e-12);
        assert_eq!(state.vel[0].x, 0.0);
    }

    #[test]
    fn hooke_force_symmetric() {
        let eps = 0.25;
        let spec = WalkerSpec::new(
            vec![Joint::new(0.0, 50.0), Joint::new(2.0, 50.0)],
            vec![Muscle::distance(0, 1)],
        );
        let config = SimConfig {
            gravity: 0.0,
            damping: 0.0,
            ..SimConfig::default()
        };
        let mut state = SimState::at_rest(&spec);
        state.pos[1].x += eps;
        let h = 1e-3;
        substep(&mut state, &flat(), &config, h);
        let impulse_a = state.vel[0] * (UNIT_MASS / h);
        let impulse_b = state.vel[1] * (UNIT_MASS / h);
        assert!((impulse_a.x - config.stiffness * eps).abs() < 1e-9);
        assert!((impulse_b.x + config.stiffness * eps).abs() < 1e-9);
        assert_eq!(impulse_a.y, 0.0);
    }

    #[test]
    fn single_joint_does_not_move() {
        let spec = WalkerSpec::new(vec![Joint::new(0.0, 0.0)], vec![]);
        let r = simulate(&spec, &flat(), &SimConfig::default());
        assert_eq!(r.fitness, 0.0);
        assert!(!r.flags.diverged);
    }

    #[test]
    fn spawn_centers_on_start() {
        let spec = square_seed_spec();
        let state = SimState::spawn(&spec, &flat());
        let com = state.center_of_mass();
        assert!((com.x - 0.0).abs() < 1e-12);
        let min_y = state.pos.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
        assert!((min_y - 0.01).abs() < 1e-12);
    }

    #[test]
    fn oscillating_rest_length() {
        let s = Spring {
            a: 0,
            b: 1,
            rest: 10.0,
            amplitude: 2.0,
            phase: 0.25,
        };
        assert!((s.rest_at(0.0, 2.0) - 12.0).abs() < 1e-12);
        assert!((s.rest_at(1.0, 2.0) - 8.0).abs() < 1e-12);
    }

    #[test]
    fn divergence_flagged() {
        // a very stiff spring is unstable at the default step size
        let spec = WalkerSpec::new(
            vec![Joint::new(0.0, 0.0), Joint::new(1.0, 0.0), Joint::new(1.0, 1.0)],
            vec![Muscle::distance(0, 1), Muscle::oscillating(1, 2, 0.3, 0.0)],
        );
        let config = SimConfig {
            stiffness: 1e9,
            ..SimConfig::default()
        };
        let r = simulate(&spec, &flat(), &config);
        assert!(r.flags.diverged);
        assert_eq!(r.fitness, 0.0);
    }

    #[test]
    fn invalid_spec_not_simulated() {
        let spec = WalkerSpec::new(
            vec![Joint::new(0.0, 0.0), Joint::new(0.0, 0.0)],
            vec![],
        );
        assert!(matches!(
            evaluate(&spec, &flat(), &SimConfig::default()),
            Err(EvalError::Invalid(_))
        ));
    }

    #[test]
    fn config_checks() {
        assert!(SimConfig::default().check().is_ok());
        assert!(SimConfig { dt: 0.0, ..SimConfig::default() }.check().is_err());
        assert!(SimConfig { period: -1.0, ..SimConfig::default() }.check().is_err());
        assert!(SimConfig { duration: 0.001, ..SimConfig::default() }.check().is_err());
        assert_eq!(SimConfig::default().frames(), 600);
    }
}
