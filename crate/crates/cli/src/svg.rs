//! Plain SVG writers. Coordinates are printed with fixed precision so the
//! same input always gives the same bytes.

use std::fmt::Write;

use elm_core::physics::{ComSample, SimState, TerrainProfile, WallSide};
use elm_core::qd::{GridConfig, MapState};
use elm_core::walker::WalkerSpec;

use crate::CliError;

const AXES: [&str; 3] = ["height", "width", "mass"];

struct Frame {
    min_x: f64,
    max_x: f64,
    min_y: f64,
    max_y: f64,
}

impl Frame {
    fn around(points: impl Iterator<Item = (f64, f64)>) -> Self {
        let mut f = Frame { min_x: f64::MAX, max_x: f64::MIN, min_y: 0.0, max_y: 1.0 };
        for (x, y) in points.filter(|p| p.0.is_finite() && p.1.is_finite()) {
            f.min_x = f.min_x.min(x);
            f.max_x = f.max_x.max(x);
            f.min_y = f.min_y.min(y);
            f.max_y = f.max_y.max(y);
        }
        if f.min_x > f.max_x {
            (f.min_x, f.max_x) = (-1.0, 1.0);
        }
        let pad = 0.1 * (f.max_x - f.min_x).max(f.max_y - f.min_y) + 1.0;
        Frame { min_x: f.min_x - pad, max_x: f.max_x + pad, min_y: f.min_y - pad, max_y: f.max_y + pad }
    }
}

fn draw_walker(out: &mut String, spec: &WalkerSpec, state: &SimState, stroke: &str) {
    for (m, s) in spec.muscles.iter().zip(&state.springs) {
        let (a, b) = (state.pos[s.a], state.pos[s.b]);
        let color = if m.kind.is_oscillating() { "#c0392b" } else { stroke };
        let _ = writeln!(
            out,
            r#"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="{color}" stroke-width="0.15"/>"#,
            a.x, a.y, b.x, b.y
        );
    }
    for p in &state.pos {
        let _ = writeln!(out, r#"<circle cx="{:.3}" cy="{:.3}" r="0.3" fill="{stroke}"/>"#, p.x, p.y);
    }
}

/// Terrain, the walker at spawn (grey) and at the end (black), and the
/// center-of-mass path.
pub fn simulation_svg(
    spec: &WalkerSpec,
    terrain: &TerrainProfile,
    first: &SimState,
    last: &SimState,
    path: &[ComSample],
) -> String {
    let pts = first.pos.iter().chain(&last.pos).map(|p| (p.x, p.y));
    let f = Frame::around(pts.chain(path.iter().map(|s| (s.x, s.y))));
    let (w, h) = (f.max_x - f.min_x, f.max_y - f.min_y);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{:.3} {:.3} {:.3} {:.3}" width="800" height="{:.0}">"#,
        f.min_x,
        -f.max_y,
        w,
        h,
        800.0 * h / w
    );
    out.push_str("<g transform=\"scale(1,-1)\">\n");

    let mut ground: Vec<(f64, f64)> = vec![(f.min_x, terrain.ground.height(f.min_x))];
    ground.extend(terrain.ground.breakpoints().filter(|(x, _)| *x > f.min_x && *x < f.max_x));
    ground.push((f.max_x, terrain.ground.height(f.max_x)));
    let mut poly: String = ground.iter().map(|(x, y)| format!("{x:.3},{y:.3} ")).collect();
    let _ = write!(poly, "{:.3},{:.3} {:.3},{:.3}", f.max_x, f.min_y, f.min_x, f.min_y);
    let _ = writeln!(out, r##"<polygon points="{poly}" fill="#8d6e63"/>"##);
    for wall in &terrain.walls {
        let x2 = match wall.side {
            WallSide::BlocksLeft => f.min_x,
            WallSide::BlocksRight => f.max_x,
        };
        let _ = writeln!(
            out,
            r##"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="#5d4037"/>"##,
            wall.x.min(x2),
            f.min_y,
            (x2 - wall.x).abs(),
            h
        );
    }
    if let Some(c) = &terrain.ceiling {
        let (a, b) = (c.start.max(f.min_x), c.end.min(f.max_x));
        if a < b {
            let _ = writeln!(
                out,
                r##"<polygon points="{a:.3},{:.3} {b:.3},{:.3} {b:.3},{:.3} {a:.3},{:.3}" fill="#5d4037"/>"##,
                c.profile.height(a),
                c.profile.height(b),
                f.max_y,
                f.max_y
            );
        }
    }
    let trail: String = path.iter().map(|s| format!("{:.3},{:.3} ", s.x, s.y)).collect();
    let _ = writeln!(
        out,
        r##"<polyline points="{}" fill="none" stroke="#2980b9" stroke-width="0.1"/>"##,
        trail.trim_end()
    );
    draw_walker(&mut out, spec, first, "#9e9e9e");
    draw_walker(&mut out, spec, last, "#212121");
    out.push_str("</g>\n</svg>\n");
    out
}

/// Parses a slice name such as `height-width` into its two axes, in order.
pub fn parse_slice(name: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Config(format!("bad slice '{name}': expected two of height, width, mass, e.g. height-width"));
    let (a, b) = name.split_once(['-', ',', ':']).ok_or_else(bad)?;
    let find = |s: &str| AXES.iter().position(|x| *x == s.trim());
    match (find(a), find(b)) {
        (Some(i), Some(j)) if i != j => Ok((i, j)),
        _ => Err(bad()),
    }
}

fn heat(t: f64) -> String {
    // pale yellow to dark red
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", lerp(255.0, 128.0), lerp(237.0, 0.0), lerp(160.0, 38.0))
}

/// Champion fitness over a 2D slice of the map. With `at`, the third axis is
/// fixed at that bin; without it, each cell shows the best champion along
/// the third axis.
pub fn map_svg(map: &MapState, slice: (usize, usize), at: Option<usize>) -> Result<String, CliError> {
    let grid: &GridConfig = &map.grid;
    let (ax, ay) = slice;
    let third = 3 - ax - ay;
    if let Some(i) = at {
        if i >= grid.dims[third] {
            return Err(CliError::Config(format!(
                "--at {i} is outside the {} axis (0..{})",
                AXES[third],
                grid.dims[third]
            )));
        }
    }
    let (nx, ny) = (grid.dims[ax], grid.dims[ay]);
    let mut cells = vec![vec![None::<f64>; ny]; nx];
    for (coord, rec) in &map.niches {
        if at.is_some_and(|i| coord[third] != i) {
            continue;
        }
        let cell = &mut cells[coord[ax]][coord[ay]];
        *cell = Some(cell.map_or(rec.fitness(), |f: f64| f.max(rec.fitness())));
    }
    let best = cells.iter().flatten().flatten().fold(0.0f64, |a, &b| a.max(b));
    let size = 30.0;
    let (margin, top) = (50.0, 30.0);
    let (w, h) = (margin + nx as f64 * size + 10.0, top + ny as f64 * size + margin);
    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" font-family="sans-serif" font-size="12">"#);
    let title = match at {
        Some(i) => format!("{}={i}", AXES[third]),
        None => format!("best over {}", AXES[third]),
    };
    let _ = writeln!(out, r#"<text x="{margin:.0}" y="20">champion fitness, {title}, max {best:.3}</text>"#);
    for (i, col) in cells.iter().enumerate() {
        for (j, cell) in col.iter().enumerate() {
            let x = margin + i as f64 * size;
            // higher bins at the top
            let y = top + (ny - 1 - j) as f64 * size;
            let fill = match cell {
                Some(f) if best > 0.0 => heat(f / best),
                Some(_) => heat(0.0),
                None => "#eeeeee".to_string(),
            };
            let _ = writeln!(
                out,
                r##"<rect x="{x:.0}" y="{y:.0}" width="{size:.0}" height="{size:.0}" fill="{fill}" stroke="#ffffff"/>"##
            );
        }
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.0}" y="{:.0}" text-anchor="middle">{}</text>"#,
        margin + nx as f64 * size / 2.0,
        h - 15.0,
        AXES[ax]
    );
    let _ = writeln!(
        out,
        r#"<text x="20" y="{:.0}" text-anchor="middle" transform="rotate(-90 20 {:.0})">{}</text>"#,
        top + ny as f64 * size / 2.0,
        top + ny as f64 * size / 2.0,
        AXES[ay]
    );
    out.push_str("</svg>\n");
    Ok(out)
}
