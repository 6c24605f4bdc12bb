//! Single-file run archive: a header line carrying a format version and the
//! SHA-256 of the JSON payload that follows.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::genotype::Genotype;
use super::grid::{GridConfig, NicheCoord};
use super::log::RunLog;
use super::map::{Admission, MapState, NicheRecord, RunMeta};
use crate::walker::parse_spec;
use crate::ElmRng;

pub const SNAPSHOT_MAGIC: &str = "elm-snapshot";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a snapshot: bad header")]
    BadHeader,
    #[error("unsupported snapshot version {0}")]
    Version(u32),
    #[error("checksum mismatch: archive is corrupted")]
    Checksum,
    #[error("malformed payload: {0}")]
    Payload(String),
    #[error("inconsistent archive: {0}")]
    Inconsistent(String),
}

#[derive(Serialize, Deserialize)]
struct NicheEntry {
    coord: NicheCoord,
    spec: String,
    history: Vec<Admission>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Payload {
    grid: GridConfig,
    meta: RunMeta,
    evals: u64,
    next_id: u64,
    iteration: u64,
    rng: ElmRng,
    niches: Vec<NicheEntry>,
    log: RunLog,
}

fn digest(payload: &str) -> String {
    hex::encode(Sha256::digest(payload.as_bytes()))
}

pub fn snapshot(map: &MapState) -> String {
    let payload = Payload {
        grid: map.grid.clone(),
        meta: map.meta.clone(),
        evals: map.evals,
        next_id: map.next_id,
        iteration: map.iteration,
        rng: map.rng.clone(),
        niches: map
            .niches
            .iter()
            .map(|(c, r)| NicheEntry {
                coord: *c,
                spec: r.spec.to_canonical(),
                history: r.history.clone(),
            })
            .collect(),
        log: map.log.clone(),
    };
    let body = serde_json::to_string(&payload).expect("snapshot payload serializes");
    format!("{SNAPSHOT_MAGIC} v{SNAPSHOT_VERSION} sha256={}\n{body}\n", digest(&body))
}

pub fn restore(text: &str) -> Result<MapState, SnapshotError> {
    let (header, rest) = text.split_once('\n').ok_or(SnapshotError::BadHeader)?;
    let mut parts = header.split(' ');
    if parts.next() != Some(SNAPSHOT_MAGIC) {
        return Err(SnapshotError::BadHeader);
    }
    let version: u32 = parts
        .next()
        .and_then(|v| v.strip_prefix('v'))
        .and_then(|v| v.parse().ok())
        .ok_or(SnapshotError::BadHeader)?;
    if version != SNAPSHOT_VERSION {
        return Err(SnapshotError::Version(version));
    }
    let sum = parts
        .next()
        .and_then(|s| s.strip_prefix("sha256="))
        .ok_or(SnapshotError::BadHeader)?;
    let body = rest.strip_suffix('\n').unwrap_or(rest);
    if digest(body) != sum {
        return Err(SnapshotError::Checksum);
    }
    let p: Payload = serde_json::from_str(body).map_err(|e| SnapshotError::Payload(e.to_string()))?;
    p.grid
        .check()
        .map_err(|e| SnapshotError::Inconsistent(e.to_string()))?;
    let mut map = MapState::new(p.grid, 0);
    map.meta = p.meta;
    map.evals = p.evals;
    map.next_id = p.next_id;
    map.iteration = p.iteration;
    map.rng = p.rng;
    map.log = p.log;
    for e in p.niches {
        let champ = e
            .history
            .last()
            .ok_or_else(|| SnapshotError::Inconsistent(format!("niche {:?} has no history", e.coord)))?;
        if map.grid.niche_index(&champ.descriptor) != e.coord {
            return Err(SnapshotError::Inconsistent(format!(
                "niche {:?} holds a champion from another niche",
                e.coord
            )));
        }
        let spec = parse_spec(&e.spec).map_err(|err| SnapshotError::Payload(err.to_string()))?;
        map.niches.insert(
            e.coord,
            NicheRecord {
                spec,
                history: e.history,
            },
        );
    }
    Ok(map)
}

pub fn save(map: &MapState, path: &Path) -> Result<(), SnapshotError> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, snapshot(map))?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<MapState, SnapshotError> {
    restore(&std::fs::read_to_string(path)?)
}

/// Looks up any admitted genotype by id.
pub fn find_genotype(map: &MapState, id: u64) -> Option<&Genotype> {
    map.admissions().map(|(_, a)| &a.genotype).find(|g| g.id == id)
}
