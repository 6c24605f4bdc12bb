//! Accepted-diff corpus: one JSON object per line, after a header line.
//!
//! Each record is a parent program, the commit message the model was given,
//! and the diff that produced an admitted child, so the file can be used to
//! fine-tune a diff model directly.

use std::collections::HashMap;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::diff::{apply_diff_text, diff_of};
use crate::qd::{Genotype, MapState};

pub const EXPORT_FORMAT: &str = "elm-accepted-diffs";
pub const EXPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExportHeader {
    pub format: String,
    pub version: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffRecord {
    pub parent: String,
    pub message: String,
    pub diff: String,
    pub fitness: f64,
    pub height: f64,
    pub width: f64,
    pub mass: f64,
}

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("genotype {child} names parent {parent}, which is not in the map")]
    MissingParent { child: u64, parent: u64 },
    #[error("genotype {0} has no parent")]
    Orphan(u64),
    #[error("diff for genotype {0} does not reproduce the child")]
    Unreproducible(u64),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
}

/// Records for every LLM-made admission in the map, ordered by genotype id.
pub fn accepted_diffs(map: &MapState) -> Result<Vec<DiffRecord>, ExportError> {
    let by_id: HashMap<u64, &Genotype> = map.admissions().map(|(_, a)| (a.genotype.id, &a.genotype)).collect();
    let mut accepted: Vec<_> = map
        .admissions()
        .filter(|(_, a)| a.genotype.operator.is_llm())
        .map(|(_, a)| a)
        .collect();
    accepted.sort_by_key(|a| a.genotype.id);
    accepted
        .into_iter()
        .map(|a| {
            let g = &a.genotype;
            let pid = g.parent_id.ok_or(ExportError::Orphan(g.id))?;
            let parent = by_id
                .get(&pid)
                .ok_or(ExportError::MissingParent { child: g.id, parent: pid })?;
            let diff = match &g.diff {
                Some(d) => d.clone(),
                None => diff_of(&parent.source, &g.source),
            };
            match apply_diff_text(&parent.source, &diff) {
                Ok(s) if s == g.source => {}
                _ => return Err(ExportError::Unreproducible(g.id)),
            }
            Ok(DiffRecord {
                parent: parent.source.clone(),
                message: g.commit_message.clone().unwrap_or_default(),
                diff,
                fitness: a.fitness,
                height: a.descriptor.height,
                width: a.descriptor.width,
                mass: a.descriptor.mass,
            })
        })
        .collect()
}

pub fn write_records<W: Write>(out: &mut W, records: &[DiffRecord]) -> io::Result<()> {
    let header = ExportHeader {
        format: EXPORT_FORMAT.into(),
        version: EXPORT_VERSION,
    };
    writeln!(out, "{}", serde_json::to_string(&header)?)?;
    for r in records {
        writeln!(out, "{}", serde_json::to_string(r)?)?;
    }
    out.flush()
}

/// Writes the accepted-diff file for `map`; returns the record count.
pub fn export_accepted_diffs<W: Write>(map: &MapState, out: &mut W) -> Result<usize, ExportError> {
    let records = accepted_diffs(map)?;
    write_records(out, &records)?;
    Ok(records.len())
}

pub fn read_records<R: BufRead>(input: R) -> Result<Vec<DiffRecord>, ExportError> {
    let mut lines = input.lines().enumerate();
    let bad = |line: usize, message: String| ExportError::Format { line: line + 1, message };
    let Some((_, first)) = lines.next() else {
        return Err(bad(0, "missing header".into()));
    };
    let header: ExportHeader = serde_json::from_str(&first?).map_err(|e| bad(0, e.to_string()))?;
    if header.format != EXPORT_FORMAT || header.version != EXPORT_VERSION {
        return Err(bad(0, format!("unsupported format {} v{}", header.format, header.version)));
    }
    let mut records = Vec::new();
    for (i, line) in lines {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line).map_err(|e| bad(i, e.to_string()))?);
    }
    Ok(records)
}
