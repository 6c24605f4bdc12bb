use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TerrainError {
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("tunnel must end after it starts ({start} >= {end})")]
    EmptyTunnel { start: f64, end: f64 },
    #[error("heightfield breakpoints must be strictly increasing and finite")]
    BadBreakpoints,
    #[error("unknown terrain '{0}' (expected flat, left_wall, right_wall, tunnel, or bumpy)")]
    UnknownKind(String),
}

/// Piecewise-linear height profile, constant beyond its end breakpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heightfield {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl Heightfield {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self, TerrainError> {
        if xs.is_empty()
            || xs.len() != ys.len()
            || xs.iter().chain(&ys).any(|v| !v.is_finite())
            || xs.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(TerrainError::BadBreakpoints);
        }
        Ok(Self { xs, ys })
    }

    pub fn constant(height: f64) -> Self {
        Self {
            xs: vec![0.0],
            ys: vec![height],
        }
    }

    pub fn breakpoints(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.ys.iter().copied())
    }

    /// Index of the segment containing `x`, or `None` outside the breakpoints.
    fn segment(&self, x: f64) -> Option<usize> {
        let n = self.xs.len();
        if n < 2 || x <= self.xs[0] || x >= self.xs[n - 1] {
            return None;
        }
        let i = self.xs.partition_point(|&bx| bx <= x);
        Some(i - 1)
    }

    pub fn height(&self, x: f64) -> f64 {
        let n = self.xs.len();
        match self.segment(x) {
            Some(i) => {
                let t = (x - self.xs[i]) / (self.xs[i + 1] - self.xs[i]);
                self.ys[i] + t * (self.ys[i + 1] - self.ys[i])
            }
            None if x <= self.xs[0] => self.ys[0],
            None => self.ys[n - 1],
        }
    }

    pub fn slope(&self, x: f64) -> f64 {
        match self.segment(x) {
            Some(i) => (self.ys[i + 1] - self.ys[i]) / (self.xs[i + 1] - self.xs[i]),
            None => 0.0,
        }
    }

    /// Maximum height over `[a, b]`.
    pub fn max_over(&self, a: f64, b: f64) -> f64 {
        let mut m = self.height(a).max(self.height(b));
        for (x, y) in self.breakpoints() {
            if x > a && x < b {
                m = m.max(y);
            }
        }
        m
    }

    pub fn min_height(&self) -> f64 {
        self.ys.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WallSide {
    /// Solid for `x >= position`.
    BlocksRight,
    /// Solid for `x <= position`.
    BlocksLeft,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wall {
    pub x: f64,
    pub side: WallSide,
}

/// Solid slab above `profile` for `x` in `[start, end]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ceiling {
    pub start: f64,
    pub end: f64,
    pub profile: Heightfield,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerrainProfile {
    pub ground: Heightfield,
    pub walls: Vec<Wall>,
    pub ceiling: Option<Ceiling>,
    pub start_x: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerrainKind {
    Flat,
    LeftWall,
    RightWall,
    Tunnel,
    Bumpy,
}

impl TerrainKind {
    pub const ALL: [TerrainKind; 5] = [
        TerrainKind::Flat,
        TerrainKind::LeftWall,
        TerrainKind::RightWall,
        TerrainKind::Tunnel,
        TerrainKind::Bumpy,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            TerrainKind::Flat => "flat",
            TerrainKind::LeftWall => "left_wall",
            TerrainKind::RightWall => "right_wall",
            TerrainKind::Tunnel => "tunnel",
            TerrainKind::Bumpy => "bumpy",
        }
    }
}

impl fmt::Display for TerrainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TerrainKind {
    type Err = TerrainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let normalized = s.replace('-', "_");
        TerrainKind::ALL
            .into_iter()
            .find(|k| k.as_str() == normalized)
            .ok_or_else(|| TerrainError::UnknownKind(s.to_string()))
    }
}

/// Dimensions for [`make_terrain`]. Distances are relative to `start_x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TerrainParams {
    pub start_x: f64,
    pub wall_distance: f64,
    pub tunnel_height: f64,
    pub tunnel_start: f64,
    pub tunnel_end: f64,
    pub bump_amplitude: f64,
    pub bump_wavelength: f64,
    /// Bumps begin this far from the spawn point on either side.
    pub bump_start: f64,
    /// Half-width of the sampled bumpy region.
    pub extent: f64,
}

impl Default for TerrainParams {
    fn default() -> Self {
        Self {
            start_x: 0.0,
            wall_distance: 15.0,
            tunnel_height: 4.0,
            tunnel_start: 8.0,
            tunnel_end: 100.0,
            bump_amplitude: 0.5,
            bump_wavelength: 4.0,
            bump_start: 6.0,
            extent: 200.0,
        }
    }
}

fn positive(name: &'static str, value: f64) -> Result<(), TerrainError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(TerrainError::NonPositive { name, value })
    }
}

/// Builds one of the standard terrains. Ground is at height 0 except for
/// bumps; walls are infinitely tall.
pub fn make_terrain(kind: TerrainKind, params: &TerrainParams) -> Result<TerrainProfile, TerrainError> {
    let x0 = params.start_x;
    let flat = TerrainProfile {
        ground: Heightfield::constant(0.0),
        walls: Vec::new(),
        ceiling: None,
        start_x: x0,
    };
    match kind {
        TerrainKind::Flat => Ok(flat),
        TerrainKind::LeftWall => {
            positive("wall_distance", params.wall_distance)?;
            Ok(TerrainProfile {
                walls: vec![Wall {
                    x: x0 - params.wall_distance,
                    side: WallSide::BlocksLeft,
                }],
                ..flat
            })
        }
        TerrainKind::RightWall => {
            positive("wall_distance", params.wall_distance)?;
            Ok(TerrainProfile {
                walls: vec![Wall {
                    x: x0 + params.wall_distance,
                    side: WallSide::BlocksRight,
                }],
                ..flat
            })
        }
        TerrainKind::Tunnel => {
            positive("tunnel_height", params.tunnel_height)?;
            positive("tunnel_start", params.tunnel_start)?;
            if params.tunnel_end <= params.tunnel_start {
                return Err(TerrainError::EmptyTunnel {
                    start: params.tunnel_start,
                    end: params.tunnel_end,
                });
            }
            Ok(TerrainProfile {
                ceiling: Some(Ceiling {
                    start: x0 + params.tunnel_start,
                    end: x0 + params.tunnel_end,
                    profile: Heightfield::constant(params.tunnel_height),
                }),
                ..flat
            })
        }
        TerrainKind::Bumpy => {
            positive("bump_amplitude", params.bump_amplitude)?;
            positive("bump_wavelength", params.bump_wavelength)?;
            positive("extent", params.extent)?;
            if params.bump_start < 0.0 || params.bump_start >= params.extent {
                return Err(TerrainError::NonPositive {
                    name: "extent - bump_start",
                    value: params.extent - params.bump_start,
                });
            }
            let samples_per_bump = 16usize;
            let h = params.bump_wavelength / samples_per_bump as f64;
            let n = (params.extent / h).ceil() as usize;
            let mut xs = Vec::with_capacity(2 * n + 1);
            let mut ys = Vec::with_capacity(2 * n + 1);
            for i in -(n as i64)..=(n as i64) {
                let offset = i as f64 * h;
                let from_start = offset.abs() - params.bump_start;
                let y = if from_start <= 0.0 {
                    0.0
                } else {
                    let s = (std::f64::consts::PI * from_start / params.bump_wavelength).sin();
                    params.bump_amplitude * s * s
                };
                xs.push(x0 + offset);
                ys.push(y);
            }
            Ok(TerrainProfile {
                ground: Heightfield::new(xs, ys)?,
                ..flat
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_is_zero_everywhere() {
        let t = make_terrain(TerrainKind::Flat, &TerrainParams::default()).unwrap();
        for x in [-1e4, -3.0, 0.0, 7.5, 1e4] {
            assert_eq!(t.ground.height(x), 0.0);
        }
        assert!(t.walls.is_empty());
        assert!(t.ceiling.is_none());
    }

    #[test]
    fn tunnel_ceiling_height() {
        let params = TerrainParams {
            tunnel_height: 4.0,
            ..TerrainParams::default()
        };
        let t = make_terrain(TerrainKind::Tunnel, &params).unwrap();
        let c = t.ceiling.unwrap();
        let mid = 0.5 * (c.start + c.end);
        assert_eq!(c.profile.height(mid) - t.ground.height(mid), 4.0);
        assert!(c.start > t.start_x);
    }

    #[test]
    fn right_wall_position() {
        let params = TerrainParams {
            wall_distance: 15.0,
            ..TerrainParams::default()
        };
        let t = make_terrain(TerrainKind::RightWall, &params).unwrap();
        assert_eq!(
            t.walls,
            vec![Wall {
                x: 15.0,
                side: WallSide::BlocksRight
            }]
        );
        let l = make_terrain(TerrainKind::LeftWall, &params).unwrap();
        assert_eq!(l.walls[0].x, -15.0);
        assert_eq!(l.walls[0].side, WallSide::BlocksLeft);
    }

    #[test]
    fn bumpy_is_flat_near_spawn() {
        let t = make_terrain(TerrainKind::Bumpy, &TerrainParams::default()).unwrap();
        assert_eq!(t.ground.height(0.0), 0.0);
        assert_eq!(t.ground.height(5.9), 0.0);
        // peak half a wavelength past bump_start
        assert!((t.ground.height(8.0) - 0.5).abs() < 1e-12);
        assert!((t.ground.height(-8.0) - 0.5).abs() < 1e-12);
        assert!(t.ground.max_over(-100.0, 100.0) <= 0.5 + 1e-12);
    }

    #[test]
    fn non_positive_dimensions_rejected() {
        let bad = TerrainParams {
            wall_distance: 0.0,
            tunnel_height: -1.0,
            bump_wavelength: 0.0,
            ..TerrainParams::default()
        };
        assert!(make_terrain(TerrainKind::RightWall, &bad).is_err());
        assert!(make_terrain(TerrainKind::Tunnel, &bad).is_err());
        assert!(make_terrain(TerrainKind::Bumpy, &bad).is_err());
        assert!(make_terrain(TerrainKind::Flat, &bad).is_ok());
    }

    #[test]
    fn kind_names() {
        assert_eq!("right-wall".parse::<TerrainKind>(), Ok(TerrainKind::RightWall));
        assert_eq!("tunnel".parse::<TerrainKind>(), Ok(TerrainKind::Tunnel));
        assert!("lava".parse::<TerrainKind>().is_err());
    }

    #[test]
    fn heightfield_interpolates() {
        let h = Heightfield::new(vec![0.0, 2.0, 4.0], vec![0.0, 2.0, 0.0]).unwrap();
        assert_eq!(h.height(1.0), 1.0);
        assert_eq!(h.height(3.0), 1.0);
        assert_eq!(h.height(-5.0), 0.0);
        assert_eq!(h.slope(1.0), 1.0);
        assert_eq!(h.slope(3.0), -1.0);
        assert_eq!(h.max_over(0.5, 3.5), 2.0);
        assert!(Heightfield::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
    }
}
