//! Unified diffs: a strict parser, exact-position application, and a
//! line-based generator.
//!
//! Lines keep their terminators. A line without a trailing `\n` is written
//! with the `\ No newline at end of file` marker, so a parsed diff carries
//! exactly the bytes it removes and adds.

use std::fmt;

use thiserror::Error;

pub const NO_NEWLINE_MARKER: &str = "\\ No newline at end of file";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DiffLine {
    Context(String),
    Remove(String),
    Add(String),
}

impl DiffLine {
    fn text(&self) -> &str {
        match self {
            DiffLine::Context(s) | DiffLine::Remove(s) | DiffLine::Add(s) => s,
        }
    }

    fn text_mut(&mut self) -> &mut String {
        match self {
            DiffLine::Context(s) | DiffLine::Remove(s) | DiffLine::Add(s) => s,
        }
    }

    fn tag(&self) -> char {
        match self {
            DiffLine::Context(_) => ' ',
            DiffLine::Remove(_) => '-',
            DiffLine::Add(_) => '+',
        }
    }

    fn in_old(&self) -> bool {
        !matches!(self, DiffLine::Add(_))
    }

    fn in_new(&self) -> bool {
        !matches!(self, DiffLine::Remove(_))
    }
}

/// One hunk. `old_start` is 1-based; for an empty old range it is the line
/// after which the new lines go (0 = start of file), as in GNU diff.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hunk {
    pub old_start: usize,
    pub old_len: usize,
    pub new_start: usize,
    pub new_len: usize,
    pub lines: Vec<DiffLine>,
}

impl Hunk {
    fn old_offset(&self) -> usize {
        if self.old_len == 0 {
            self.old_start
        } else {
            self.old_start - 1
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct UnifiedDiff {
    pub hunks: Vec<Hunk>,
}

impl UnifiedDiff {
    pub fn is_empty(&self) -> bool {
        self.hunks.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("diff line {line}: {message}")]
pub struct DiffParseError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ApplyError {
    #[error("hunk {hunk} starts at line {start}, past end of source ({len} lines)")]
    OutOfRange { hunk: usize, start: usize, len: usize },
    #[error("hunk {hunk} overlaps the previous hunk")]
    Overlap { hunk: usize },
    #[error("hunk {hunk}: source line {line} does not match the diff")]
    Mismatch { hunk: usize, line: usize },
}

fn perr(line: usize, message: impl Into<String>) -> DiffParseError {
    DiffParseError {
        line,
        message: message.into(),
    }
}

fn parse_range(s: &str, line: usize) -> Result<(usize, usize), DiffParseError> {
    let num = |t: &str| {
        if t.is_empty() || !t.bytes().all(|b| b.is_ascii_digit()) {
            Err(perr(line, format!("bad number '{t}' in hunk header")))
        } else {
            t.parse::<usize>().map_err(|_| perr(line, "number too large"))
        }
    };
    match s.split_once(',') {
        Some((a, b)) => Ok((num(a)?, num(b)?)),
        None => Ok((num(s)?, 1)),
    }
}

fn parse_header(text: &str, line: usize) -> Result<(usize, usize, usize, usize), DiffParseError> {
    let rest = text
        .strip_prefix("@@ -")
        .ok_or_else(|| perr(line, "expected hunk header"))?;
    let (ranges, _) = rest
        .split_once(" @@")
        .ok_or_else(|| perr(line, "unterminated hunk header"))?;
    let (old, new) = ranges
        .split_once(" +")
        .ok_or_else(|| perr(line, "hunk header needs old and new ranges"))?;
    let (os, ol) = parse_range(old, line)?;
    let (ns, nl) = parse_range(new, line)?;
    if ol > 0 && os == 0 {
        return Err(perr(line, "old range starts at line 0"));
    }
    if nl > 0 && ns == 0 {
        return Err(perr(line, "new range starts at line 0"));
    }
    Ok((os, ol, ns, nl))
}

/// Parses a unified diff.
///
/// An optional `---`/`+++` file header pair may precede the first hunk.
/// Each hunk body must match its header counts exactly, and nothing may
/// follow the last hunk.
pub fn parse_unified_diff(text: &str) -> Result<UnifiedDiff, DiffParseError> {
    let mut lines: Vec<&str> = text.split('\n').collect();
    if lines.last() == Some(&"") {
        lines.pop();
    }
    let mut i = 0;
    if i < lines.len() && lines[i].starts_with("--- ") {
        if i + 1 >= lines.len() || !lines[i + 1].starts_with("+++ ") {
            return Err(perr(i + 2, "'---' header without '+++'"));
        }
        i += 2;
    }
    let mut hunks: Vec<Hunk> = Vec::new();
    while i < lines.len() {
        let (os, ol, ns, nl) = parse_header(lines[i], i + 1)?;
        i += 1;
        let (mut seen_old, mut seen_new) = (0, 0);
        let mut body = Vec::new();
        while seen_old < ol || seen_new < nl {
            let Some(raw) = lines.get(i) else {
                return Err(perr(i + 1, format!(
                    "hunk ends early: expected {ol} old/{nl} new lines, got {seen_old}/{seen_new}"
                )));
            };
            let (tag, rest) = match raw.chars().next() {
                Some(c) => (c, &raw[c.len_utf8()..]),
                // a bare empty line is an empty context line
                None => (' ', ""),
            };
            let line = match tag {
                ' ' => DiffLine::Context(format!("{rest}\n")),
                '-' => DiffLine::Remove(format!("{rest}\n")),
                '+' => DiffLine::Add(format!("{rest}\n")),
                '\\' => {
                    let Some(prev) = body.last_mut() else {
                        return Err(perr(i + 1, "no-newline marker before any line"));
                    };
                    let prev: &mut DiffLine = prev;
                    prev.text_mut().pop();
                    i += 1;
                    continue;
                }
                _ => {
                    return Err(perr(i + 1, format!(
                        "expected {ol} old/{nl} new lines, got {seen_old}/{seen_new} before '{raw}'"
                    )))
                }
            };
            if line.in_old() {
                seen_old += 1;
            }
            if line.in_new() {
                seen_new += 1;
            }
            if seen_old > ol || seen_new > nl {
                return Err(perr(i + 1, "hunk body longer than its header counts"));
            }
            body.push(line);
            i += 1;
        }
        if lines.get(i).is_some_and(|l| l.starts_with('\\')) {
            if let Some(last) = body.last_mut() {
                last.text_mut().pop();
            }
            i += 1;
        }
        let hunk = Hunk {
            old_start: os,
            old_len: ol,
            new_start: ns,
            new_len: nl,
            lines: body,
        };
        if let Some(prev) = hunks.last() {
            if hunk.old_offset() < prev.old_offset() + prev.old_len
                || (hunk.old_offset() == prev.old_offset() && prev.old_len == 0)
            {
                return Err(perr(i, "hunks overlap or are out of order"));
            }
        }
        hunks.push(hunk);
    }
    Ok(UnifiedDiff { hunks })
}

/// Splits text into lines that keep their `\n`.
pub fn split_lines(text: &str) -> Vec<&str> {
    text.split_inclusive('\n').collect()
}

/// Applies `diff` to `source`. Every context and removed line must match
/// the source exactly at the position its header states.
pub fn apply_diff(source: &str, diff: &UnifiedDiff) -> Result<String, ApplyError> {
    let src = split_lines(source);
    let mut out = String::with_capacity(source.len());
    let mut cursor = 0;
    for (h, hunk) in diff.hunks.iter().enumerate() {
        let start = hunk.old_offset();
        if start + hunk.old_len > src.len() {
            return Err(ApplyError::OutOfRange {
                hunk: h,
                start: hunk.old_start,
                len: src.len(),
            });
        }
        if start < cursor {
            return Err(ApplyError::Overlap { hunk: h });
        }
        for line in &src[cursor..start] {
            out.push_str(line);
        }
        let mut pos = start;
        for line in &hunk.lines {
            match line {
                DiffLine::Context(t) | DiffLine::Remove(t) => {
                    if src.get(pos) != Some(&t.as_str()) {
                        return Err(ApplyError::Mismatch { hunk: h, line: pos + 1 });
                    }
                    if let DiffLine::Context(t) = line {
                        out.push_str(t);
                    }
                    pos += 1;
                }
                DiffLine::Add(t) => out.push_str(t),
            }
        }
        cursor = pos;
    }
    for line in &src[cursor..] {
        out.push_str(line);
    }
    Ok(out)
}

/// Parses and applies in one step.
pub fn apply_diff_text(source: &str, diff: &str) -> Result<String, DiffError> {
    let parsed = parse_unified_diff(diff)?;
    Ok(apply_diff(source, &parsed)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiffError {
    #[error(transparent)]
    Parse(#[from] DiffParseError),
    #[error(transparent)]
    Apply(#[from] ApplyError),
}

fn write_range(f: &mut fmt::Formatter<'_>, start: usize, len: usize) -> fmt::Result {
    if len == 1 {
        write!(f, "{start}")
    } else {
        write!(f, "{start},{len}")
    }
}

impl fmt::Display for UnifiedDiff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for h in &self.hunks {
            f.write_str("@@ -")?;
            write_range(f, h.old_start, h.old_len)?;
            f.write_str(" +")?;
            write_range(f, h.new_start, h.new_len)?;
            f.write_str(" @@\n")?;
            for line in &h.lines {
                let text = line.text();
                write!(f, "{}{}", line.tag(), text)?;
                if !text.ends_with('\n') {
                    writeln!(f)?;
                    writeln!(f, "{NO_NEWLINE_MARKER}")?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    Equal(usize, usize),
    Delete(usize),
    Insert(usize),
}

/// Longest-common-subsequence edit script. Quadratic in line count, which is
/// fine for program-sized inputs.
fn edit_script(a: &[&str], b: &[&str]) -> Vec<Op> {
    // trim the common prefix and suffix first; most edits are local
    let mut pre = 0;
    while pre < a.len() && pre < b.len() && a[pre] == b[pre] {
        pre += 1;
    }
    let mut suf = 0;
    while suf < a.len() - pre && suf < b.len() - pre && a[a.len() - 1 - suf] == b[b.len() - 1 - suf] {
        suf += 1;
    }
    let (am, bm) = (&a[pre..a.len() - suf], &b[pre..b.len() - suf]);
    let (n, m) = (am.len(), bm.len());
    let mut table = vec![0u32; (n + 1) * (m + 1)];
    let at = |i: usize, j: usize| i * (m + 1) + j;
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            table[at(i, j)] = if am[i] == bm[j] {
                table[at(i + 1, j + 1)] + 1
            } else {
                table[at(i + 1, j)].max(table[at(i, j + 1)])
            };
        }
    }
    let mut ops: Vec<Op> = (0..pre).map(|k| Op::Equal(k, k)).collect();
    let (mut i, mut j) = (0, 0);
    while i < n || j < m {
        if i < n && j < m && am[i] == bm[j] {
            ops.push(Op::Equal(pre + i, pre + j));
            i += 1;
            j += 1;
        } else if j < m && (i == n || table[at(i, j + 1)] >= table[at(i + 1, j)]) {
            ops.push(Op::Insert(pre + j));
            j += 1;
        } else {
            ops.push(Op::Delete(pre + i));
            i += 1;
        }
    }
    ops.extend((0..suf).map(|k| Op::Equal(a.len() - suf + k, b.len() - suf + k)));
    // deletions before insertions within each change run reads more naturally
    let mut k = 0;
    while k < ops.len() {
        if matches!(ops[k], Op::Equal(..)) {
            k += 1;
            continue;
        }
        let end = ops[k..]
            .iter()
            .position(|o| matches!(o, Op::Equal(..)))
            .map_or(ops.len(), |p| k + p);
        ops[k..end].sort_by_key(|o| matches!(o, Op::Insert(_)));
        k = end;
    }
    ops
}

/// Computes a unified diff turning `a` into `b` with `context` lines of
/// context around each change.
pub fn diff_lines(a: &str, b: &str, context: usize) -> UnifiedDiff {
    let (al, bl) = (split_lines(a), split_lines(b));
    let ops = edit_script(&al, &bl);
    let changes: Vec<usize> = ops
        .iter()
        .enumerate()
        .filter(|(_, o)| !matches!(o, Op::Equal(..)))
        .map(|(k, _)| k)
        .collect();
    let mut hunks = Vec::new();
    let mut c = 0;
    while c < changes.len() {
        let first = changes[c];
        let mut last = first;
        while c + 1 < changes.len() && changes[c + 1] - last <= 2 * context + 1 {
            c += 1;
            last = changes[c];
        }
        c += 1;
        let lo = first.saturating_sub(context);
        let hi = (last + context + 1).min(ops.len());
        // old/new line positions at the start of the hunk
        let (mut old_pos, mut new_pos) = (0, 0);
        for op in &ops[..lo] {
            match op {
                Op::Equal(..) => {
                    old_pos += 1;
                    new_pos += 1;
                }
                Op::Delete(_) => old_pos += 1,
                Op::Insert(_) => new_pos += 1,
            }
        }
        let mut lines = Vec::new();
        for op in &ops[lo..hi] {
            lines.push(match *op {
                Op::Equal(i, _) => DiffLine::Context(al[i].to_string()),
                Op::Delete(i) => DiffLine::Remove(al[i].to_string()),
                Op::Insert(j) => DiffLine::Add(bl[j].to_string()),
            });
        }
        let old_len = lines.iter().filter(|l| l.in_old()).count();
        let new_len = lines.iter().filter(|l| l.in_new()).count();
        hunks.push(Hunk {
            old_start: if old_len == 0 { old_pos } else { old_pos + 1 },
            old_len,
            new_start: if new_len == 0 { new_pos } else { new_pos + 1 },
            new_len,
            lines,
        });
    }
    UnifiedDiff { hunks }
}

/// `diff_lines` with three lines of context, rendered as text.
pub fn diff_of(a: &str, b: &str) -> String {
    diff_lines(a, b, 3).to_string()
}
