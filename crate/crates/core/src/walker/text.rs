//! Canonical walker text.
//!
//! The canonical form is exactly what Python's `json.dumps` prints for the
//! walker dictionary: `", "` / `": "` separators, keys in fixed order, reals
//! formatted with [`pyfloat::repr`](super::pyfloat::repr):
//!
//! ```text
//! {"joints": [[0.0, 0.0], [0.0, 10.0]], "muscles": [[0, 1, {"type": "distance"}]]}
//! ```
//!
//! The parser accepts a superset: JSON plus Python literal syntax (tuples,
//! single-quoted strings, trailing commas, comments), which covers walker
//! dictionaries pasted straight from Python source.

use std::fmt::Write as _;

use thiserror::Error;

use super::pyfloat::repr;
use super::{Joint, Muscle, MuscleKind, WalkerSpec};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

pub(crate) fn serialize(spec: &WalkerSpec) -> String {
    let mut out = String::with_capacity(32 + 24 * spec.joints.len() + 64 * spec.muscles.len());
    out.push_str("{\"joints\": [");
    for (i, j) in spec.joints.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        let _ = write!(out, "[{}, {}]", repr(j.x), repr(j.y));
    }
    out.push_str("], \"muscles\": [");
    for (i, m) in spec.muscles.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        match m.kind {
            MuscleKind::Distance => {
                let _ = write!(out, "[{}, {}, {{\"type\": \"distance\"}}]", m.a, m.b);
            }
            MuscleKind::Oscillating { amplitude, phase } => {
                let _ = write!(
                    out,
                    "[{}, {}, {{\"type\": \"muscle\", \"amplitude\": {}, \"phase\": {}}}]",
                    m.a,
                    m.b,
                    repr(amplitude),
                    repr(phase)
                );
            }
        }
    }
    out.push_str("]}");
    out
}

/// Parses walker text (canonical form or a Python/JSON literal).
///
/// Only structure is checked here: shapes, muscle types, and joint indices.
/// Geometric invariants are left to [`validate`](super::validate).
pub fn parse_spec(text: &str) -> Result<WalkerSpec, ParseError> {
    let mut lexer = Reader::new(text);
    let value = lexer.value()?;
    lexer.skip_trivia();
    if lexer.peek().is_some() {
        return Err(lexer.error("trailing characters after walker"));
    }
    to_spec(&value)
}

#[derive(Debug, Clone, Copy)]
struct Pos {
    line: usize,
    column: usize,
}

#[derive(Debug)]
enum Node {
    Object(Vec<(String, Pos, Value)>),
    Array(Vec<Value>),
    Number { value: f64, integer: bool },
    Str(String),
    Bool,
    Null,
}

#[derive(Debug)]
struct Value {
    pos: Pos,
    node: Node,
}

fn err(pos: Pos, message: impl Into<String>) -> ParseError {
    ParseError {
        line: pos.line,
        column: pos.column,
        message: message.into(),
    }
}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            chars: text.chars().peekable(),
            line: 1,
            column: 1,
        }
    }

    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            column: self.column,
        }
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        err(self.pos(), message)
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '#' {
                while let Some(c) = self.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else {
                break;
            }
        }
    }

    fn expect(&mut self, want: char) -> Result<(), ParseError> {
        self.skip_trivia();
        match self.peek() {
            Some(c) if c == want => {
                self.bump();
                Ok(())
            }
            Some(c) => Err(self.error(format!("expected '{want}', found '{c}'"))),
            None => Err(self.error(format!("expected '{want}', found end of input"))),
        }
    }

    fn value(&mut self) -> Result<Value, ParseError> {
        self.skip_trivia();
        let pos = self.pos();
        let node = match self.peek() {
            None => return Err(self.error("unexpected end of input")),
            Some('{') => self.object()?,
            Some('[') => Node::Array(self.sequence('[', ']')?),
            Some('(') => Node::Array(self.sequence('(', ')')?),
            Some('"') | Some('\'') => Node::Str(self.string()?),
            Some(c) if c == '-' || c == '+' || c.is_ascii_digit() || c == '.' => self.number()?,
            Some(c) if c.is_ascii_alphabetic() => {
                let word = self.word();
                match word.as_str() {
                    "true" | "True" => Node::Bool,
                    "false" | "False" => Node::Bool,
                    "null" | "None" => Node::Null,
                    _ => return Err(err(pos, format!("unexpected identifier '{word}'"))),
                }
            }
            Some(c) => return Err(self.error(format!("unexpected character '{c}'"))),
        };
        Ok(Value { pos, node })
    }

    fn word(&mut self) -> String {
        let mut w = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '_' {
                w.push(c);
                self.bump();
            } else {
                break;
            }
        }
        w
    }

    fn sequence(&mut self, open: char, close: char) -> Result<Vec<Value>, ParseError> {
        self.expect(open)?;
        let mut items = Vec::new();
        loop {
            self.skip_trivia();
            if self.peek() == Some(close) {
                self.bump();
                return Ok(items);
            }
            items.push(self.value()?);
            self.skip_trivia();
            match self.peek() {
                Some(',') => {
                    self.bump();
                }
                Some(c) if c == close => {
                    self.bump();
                    return Ok(items);
                }
                Some(c) => return Err(self.error(format!("expected ',' or '{close}', found '{c}'"))),
                None => return Err(self.error(format!("unterminated sequence, expected '{close}'"))),
            }
        }
    }

    fn object(&mut self) -> Result<Node, ParseError> {
        self.expect('{')?;
        let mut entries: Vec<(String, Pos, Value)> = Vec::new();
        loop {
            self.skip_trivia();
            if self.peek() == Some('}') {
                self.bump();
                return Ok(Node::Object(entries));
            }
            let key_pos = self.pos();
            let key = match self.peek() {
                Some('"') | Some('\'') => self.string()?,
                _ => return Err(self.error("expected string key")),
            };
            if entries.iter().any(|(k, _, _)| *k == key) {
                return Err(err(key_pos, format!("duplicate key \"{key}\"")));
            }
            self.expect(':')?;
            let value = self.value()?;
            entries.push((key, key_pos, value));
            self.skip_trivia();
            match self.peek() {
                Some(',') => {
                    self.bump();
                }
                Some('}') => {
                    self.bump();
                    return Ok(Node::Object(entries));
                }
                Some(c) => return Err(self.error(format!("expected ',' or '}}', found '{c}'"))),
                None => return Err(self.error("unterminated object")),
            }
        }
    }

    fn string(&mut self) -> Result<String, ParseError> {
        let quote = self.bump().expect("caller checked quote");
        let mut s = String::new();
        loop {
            match self.bump() {
                None | Some('\n') => return Err(self.error("unterminated string")),
                Some(c) if c == quote => return Ok(s),
                Some('\\') => match self.bump() {
                    Some('n') => s.push('\n'),
                    Some('t') => s.push('\t'),
                    Some('r') => s.push('\r'),
                    Some(c @ ('\\' | '"' | '\'' | '/')) => s.push(c),
                    _ => return Err(self.error("unsupported escape sequence")),
                },
                Some(c) => s.push(c),
            }
        }
    }

    fn number(&mut self) -> Result<Node, ParseError> {
        let pos = self.pos();
        let mut text = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() || matches!(c, '-' | '+' | '.' | 'e' | 'E' | '_') {
                if c != '_' {
                    text.push(c);
                }
                self.bump();
            } else {
                break;
            }
        }
        let integer = !text.contains(['.', 'e', 'E']);
        let value: f64 = text
            .parse()
            .map_err(|_| err(pos, format!("malformed number '{text}'")))?;
        if !value.is_finite() {
            return Err(err(pos, format!("number out of range '{text}'")));
        }
        Ok(Node::Number { value, integer })
    }
}

fn describe(node: &Node) -> &'static str {
    match node {
        Node::Object(_) => "object",
        Node::Array(_) => "array",
        Node::Number { .. } => "number",
        Node::Str(_) => "string",
        Node::Bool => "boolean",
        Node::Null => "null",
    }
}

fn as_array<'v>(v: &'v Value, what: &str) -> Result<&'v [Value], ParseError> {
    match &v.node {
        Node::Array(items) => Ok(items),
        other => Err(err(v.pos, format!("{what}: expected array, found {}", describe(other)))),
    }
}

fn as_number(v: &Value, what: &str) -> Result<f64, ParseError> {
    match v.node {
        Node::Number { value, .. } => Ok(value),
        ref other => Err(err(v.pos, format!("{what}: expected number, found {}", describe(other)))),
    }
}

fn as_index(v: &Value, what: &str, joints: usize) -> Result<usize, ParseError> {
    match v.node {
        Node::Number {
            value,
            integer: true,
        } if value >= 0.0 => {
            let index = value as usize;
            if index >= joints {
                Err(err(
                    v.pos,
                    format!("{what}: joint index {index} out of range ({joints} joints)"),
                ))
            } else {
                Ok(index)
            }
        }
        _ => Err(err(v.pos, format!("{what}: expected non-negative integer joint index"))),
    }
}

fn to_spec(root: &Value) -> Result<WalkerSpec, ParseError> {
    let Node::Object(entries) = &root.node else {
        return Err(err(root.pos, "walker must be an object with \"joints\" and \"muscles\""));
    };
    let mut joints_v = None;
    let mut muscles_v = None;
    for (key, pos, value) in entries {
        match key.as_str() {
            "joints" => joints_v = Some(value),
            "muscles" => muscles_v = Some(value),
            other => return Err(err(*pos, format!("unknown key \"{other}\""))),
        }
    }
    let joints_v = joints_v.ok_or_else(|| err(root.pos, "missing key \"joints\""))?;
    let muscles_v = muscles_v.ok_or_else(|| err(root.pos, "missing key \"muscles\""))?;

    let mut joints = Vec::new();
    for (i, j) in as_array(joints_v, "joints")?.iter().enumerate() {
        let what = format!("joints[{i}]");
        let xy = as_array(j, &what)?;
        if xy.len() != 2 {
            return Err(err(j.pos, format!("{what}: expected [x, y], found {} items", xy.len())));
        }
        joints.push(Joint::new(as_number(&xy[0], &what)?, as_number(&xy[1], &what)?));
    }

    let mut muscles = Vec::new();
    for (i, m) in as_array(muscles_v, "muscles")?.iter().enumerate() {
        let what = format!("muscles[{i}]");
        let items = as_array(m, &what)?;
        if items.len() != 3 {
            return Err(err(
                m.pos,
                format!("{what}: expected [a, b, {{...}}], found {} items", items.len()),
            ));
        }
        let a = as_index(&items[0], &what, joints.len())?;
        let b = as_index(&items[1], &what, joints.len())?;
        let Node::Object(props) = &items[2].node else {
            return Err(err(items[2].pos, format!("{what}: expected muscle properties object")));
        };
        let get = |name: &str| props.iter().find(|(k, _, _)| k == name).map(|(_, _, v)| v);
        for (key, pos, _) in props {
            if !matches!(key.as_str(), "type" | "amplitude" | "phase") {
                return Err(err(*pos, format!("{what}: unknown muscle property \"{key}\"")));
            }
        }
        let kind_v = get("type").ok_or_else(|| err(items[2].pos, format!("{what}: missing \"type\"")))?;
        let kind = match &kind_v.node {
            Node::Str(t) if t == "distance" => {
                if let Some((key, pos, _)) = props.iter().find(|(k, _, _)| k != "type") {
                    return Err(err(*pos, format!("{what}: distance muscle cannot carry \"{key}\"")));
                }
                MuscleKind::Distance
            }
            Node::Str(t) if t == "muscle" => {
                let amp = get("amplitude")
                    .ok_or_else(|| err(items[2].pos, format!("{what}: missing \"amplitude\"")))?;
                let phase = get("phase")
                    .ok_or_else(|| err(items[2].pos, format!("{what}: missing \"phase\"")))?;
                MuscleKind::Oscillating {
                    amplitude: as_number(amp, &what)?,
                    phase: as_number(phase, &what)?,
                }
            }
            Node::Str(t) => return Err(err(kind_v.pos, format!("{what}: unknown muscle type \"{t}\""))),
            other => {
                return Err(err(kind_v.pos, format!("{what}: type must be a string, found {}", describe(other))))
            }
        };
        muscles.push(Muscle { a, b, kind });
    }
    Ok(WalkerSpec { joints, muscles })
}
