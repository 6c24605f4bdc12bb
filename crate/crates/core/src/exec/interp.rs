//! In-process executor for straight-line builder programs.
//!
//! Supported: a zero-argument (or all-defaulted) `make_walker` whose body is
//! assignments, expression statements and `return`, over numbers, the
//! builder methods, `math` functions, and `abs`/`min`/`max`/`float`/`int`.
//! Loops, conditionals, and helper functions need a full worker.

use std::collections::{HashMap, HashSet};

use super::{ExecFailure, ExecStatus, Executor};
use crate::walker::{validate, MuscleKind, WalkerBuilder, WalkerSpec};

#[derive(Debug, Clone, Default)]
pub struct ScriptInterpreter {
    pub entrypoint: String,
}

impl ScriptInterpreter {
    pub fn new() -> Self {
        Self {
            entrypoint: "make_walker".into(),
        }
    }
}

impl Executor for ScriptInterpreter {
    fn execute(&self, source: &str) -> Result<WalkerSpec, ExecFailure> {
        let name = if self.entrypoint.is_empty() {
            "make_walker"
        } else {
            &self.entrypoint
        };
        let lines = logical_lines(source).map_err(|e| e.into_failure(ExecStatus::SyntaxError))?;
        let (body, helpers) = find_entry(&lines, name)?;
        let mut env = Env {
            helpers,
            ..Env::default()
        };
        for line in &body {
            match exec_line(&mut env, line).map_err(|e| e.into_failure(ExecStatus::RuntimeError))? {
                Flow::Next => {}
                Flow::Return(v) => return finish(v),
            }
        }
        finish(Value::None)
    }
}

fn finish(v: Value) -> Result<WalkerSpec, ExecFailure> {
    match v {
        Value::Walker(spec) => {
            let report = validate(&spec);
            if report.ok() {
                Ok(spec)
            } else {
                Err(ExecFailure::new(ExecStatus::InvalidWalker, report.to_string()))
            }
        }
        other => Err(ExecFailure::new(
            ExecStatus::InvalidWalker,
            format!("make_walker returned {} instead of a walker", other.type_name()),
        )),
    }
}

#[derive(Debug)]
struct Error {
    line: usize,
    message: String,
}

impl Error {
    fn into_failure(self, status: ExecStatus) -> ExecFailure {
        ExecFailure::new(status, format!("line {}: {}", self.line, self.message))
    }
}

fn error<T>(line: usize, message: impl Into<String>) -> Result<T, Error> {
    Err(Error {
        line,
        message: message.into(),
    })
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Name(String),
    Int(i64),
    Float(f64),
    Str,
    Op(&'static str),
}

#[derive(Debug, Clone)]
struct Line {
    no: usize,
    indent: usize,
    toks: Vec<Tok>,
}

const OPS: [&str; 19] = [
    "**", "//", "==", "!=", "<=", ">=", "(", ")", "[", "]", ",", ":", ".", "=", "+", "-", "*", "/",
    "%",
];

/// Tokenizes into logical lines, joining physical lines inside brackets and
/// dropping comments, blank lines, and string-only lines.
fn logical_lines(src: &str) -> Result<Vec<Line>, Error> {
    let chars: Vec<char> = src.chars().collect();
    let mut lines = Vec::new();
    let mut i = 0;
    let mut line_no = 1;
    let mut depth: i32 = 0;
    let mut cur: Option<Line> = None;
    let mut at_line_start = true;
    let mut indent = 0;
    while i < chars.len() {
        let c = chars[i];
        if at_line_start {
            indent = 0;
            while i < chars.len() && (chars[i] == ' ' || chars[i] == '\t') {
                indent += if chars[i] == '\t' { 8 } else { 1 };
                i += 1;
            }
            at_line_start = false;
            continue;
        }
        match c {
            '\n' => {
                line_no += 1;
                i += 1;
                if depth == 0 {
                    if let Some(l) = cur.take() {
                        lines.push(l);
                    }
                    at_line_start = true;
                }
            }
            '\\' if chars.get(i + 1) == Some(&'\n') => {
                line_no += 1;
                i += 2;
            }
            ' ' | '\t' | '\r' => i += 1,
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '"' | '\'' => {
                let start = line_no;
                let triple = chars.get(i + 1) == Some(&c) && chars.get(i + 2) == Some(&c);
                i += if triple { 3 } else { 1 };
                loop {
                    let Some(&ch) = chars.get(i) else {
                        return error(start, "unterminated string");
                    };
                    if ch == '\\' {
                        i += 2;
                        continue;
                    }
                    if ch == '\n' {
                        if !triple {
                            return error(start, "unterminated string");
                        }
                        line_no += 1;
                    }
                    if ch == c && (!triple || (chars.get(i + 1) == Some(&c) && chars.get(i + 2) == Some(&c))) {
                        i += if triple { 3 } else { 1 };
                        break;
                    }
                    i += 1;
                }
                push_tok(&mut cur, line_no, indent, Tok::Str);
            }
            c if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '.' || chars[i] == '_') {
                    if (chars[i] == 'e' || chars[i] == 'E') && matches!(chars.get(i + 1), Some('+') | Some('-')) {
                        i += 1;
                    }
                    i += 1;
                }
                let text: String = chars[start..i].iter().filter(|c| **c != '_').collect();
                let tok = if text.chars().all(|c| c.is_ascii_digit()) {
                    match text.parse::<i64>() {
                        Ok(v) => Tok::Int(v),
                        Err(_) => Tok::Float(text.parse::<f64>().unwrap_or(f64::INFINITY)),
                    }
                } else {
                    match text.parse::<f64>() {
                        Ok(v) => Tok::Float(v),
                        Err(_) => return error(line_no, format!("invalid number literal '{text}'")),
                    }
                };
                push_tok(&mut cur, line_no, indent, tok);
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                push_tok(&mut cur, line_no, indent, Tok::Name(chars[start..i].iter().collect()));
            }
            _ => {
                let rest: String = chars[i..(i + 2).min(chars.len())].iter().collect();
                let Some(op) = OPS.iter().find(|op| rest.starts_with(**op)) else {
                    return error(line_no, format!("unexpected character '{c}'"));
                };
                match *op {
                    "(" | "[" => depth += 1,
                    ")" | "]" => {
                        depth -= 1;
                        if depth < 0 {
                            return error(line_no, format!("unmatched '{op}'"));
                        }
                    }
                    _ => {}
                }
                i += op.len();
                push_tok(&mut cur, line_no, indent, Tok::Op(op));
            }
        }
    }
    if depth != 0 {
        return error(line_no, "unclosed bracket at end of input");
    }
    if let Some(l) = cur.take() {
        lines.push(l);
    }
    lines.retain(|l| l.toks != [Tok::Str]);
    Ok(lines)
}

fn push_tok(cur: &mut Option<Line>, no: usize, indent: usize, tok: Tok) {
    cur.get_or_insert_with(|| Line {
        no,
        indent,
        toks: Vec::new(),
    })
    .toks
    .push(tok);
}

fn is_def(line: &Line) -> Option<&str> {
    match line.toks.as_slice() {
        [Tok::Name(d), Tok::Name(n), Tok::Op("("), ..] if d == "def" => Some(n),
        _ => None,
    }
}

/// Position of the `:` closing a `def` signature.
fn signature_end(l: &Line) -> Option<usize> {
    let mut depth = 0;
    for (i, t) in l.toks.iter().enumerate() {
        match t {
            Tok::Op("(") => depth += 1,
            Tok::Op(")") => depth -= 1,
            Tok::Op(":") if depth == 0 => return Some(i),
            _ => {}
        }
    }
    None
}

/// Locates the entrypoint body and checks the top level holds only imports
/// and function definitions.
/// Python's indentation rules for a function body: indent only after a
/// line ending in ':', dedent only to an enclosing level.
fn check_block_indents(body: &[Line]) -> Result<(), ExecFailure> {
    let syntax = |l: &Line, m: &str| ExecFailure::new(ExecStatus::SyntaxError, format!("line {}: {m}", l.no));
    let Some(first) = body.first() else { return Ok(()) };
    let mut levels = vec![first.indent];
    let mut opens = false;
    for l in body {
        let top = *levels.last().expect("never empty");
        if l.indent > top {
            if !opens {
                return Err(syntax(l, "unexpected indent"));
            }
            levels.push(l.indent);
        } else {
            if opens {
                return Err(syntax(l, "expected an indented block"));
            }
            while l.indent < *levels.last().expect("never empty") {
                levels.pop();
                if levels.is_empty() {
                    return Err(syntax(l, "inconsistent indentation"));
                }
            }
            if l.indent != *levels.last().expect("never empty") {
                return Err(syntax(l, "inconsistent indentation"));
            }
        }
        opens = matches!(l.toks.last(), Some(Tok::Op(":")));
    }
    if opens {
        return Err(syntax(body.last().expect("non-empty"), "expected an indented block"));
    }
    Ok(())
}

/// The entrypoint's body, plus the names of the other top-level functions.
fn find_entry(lines: &[Line], name: &str) -> Result<(Vec<Line>, HashSet<String>), ExecFailure> {
    let syntax = |l: &Line, m: &str| ExecFailure::new(ExecStatus::SyntaxError, format!("line {}: {m}", l.no));
    let mut entry = None;
    let mut helpers = HashSet::new();
    let mut i = 0;
    while i < lines.len() {
        let l = &lines[i];
        if l.indent != 0 {
            return Err(syntax(l, "unexpected indent"));
        }
        if let Some(fname) = is_def(l) {
            let colon = signature_end(l).ok_or_else(|| syntax(l, "expected ':' after function signature"))?;
            let start = i + 1;
            let mut end = start;
            while end < lines.len() && lines[end].indent > 0 {
                end += 1;
            }
            let inline = colon + 1 < l.toks.len();
            if inline && end > start {
                return Err(syntax(&lines[start], "unexpected indent"));
            }
            if !inline && end == start {
                return Err(syntax(l, "expected an indented block"));
            }
            check_block_indents(&lines[start..end])?;
            if fname == name {
                check_params(l, colon)?;
                let body = if inline {
                    vec![Line {
                        no: l.no,
                        indent: 1,
                        toks: l.toks[colon + 1..].to_vec(),
                    }]
                } else {
                    lines[start..end].to_vec()
                };
                entry = Some(body);
            } else {
                helpers.insert(fname.to_string());
            }
            i = end;
            continue;
        }
        match l.toks.first() {
            Some(Tok::Name(k)) if k == "import" || k == "from" => {}
            _ => {
                return Err(ExecFailure::new(
                    ExecStatus::RuntimeError,
                    format!("line {}: unsupported top-level statement", l.no),
                ))
            }
        }
        i += 1;
    }
    let body = entry.ok_or_else(|| ExecFailure::new(ExecStatus::RuntimeError, format!("name '{name}' is not defined")))?;
    Ok((body, helpers))
}

/// Every parameter must carry a default so the entrypoint is callable with
/// no arguments.
fn check_params(l: &Line, colon: usize) -> Result<(), ExecFailure> {
    if colon < 4 || l.toks[colon - 1] != Tok::Op(")") {
        return Err(ExecFailure::new(
            ExecStatus::SyntaxError,
            format!("line {}: malformed signature", l.no),
        ));
    }
    let inner = &l.toks[3..colon - 1];
    for param in inner.split(|t| *t == Tok::Op(",")) {
        if !param.is_empty() && !param.contains(&Tok::Op("=")) {
            return Err(ExecFailure::new(
                ExecStatus::RuntimeError,
                format!("line {}: entrypoint takes a required argument", l.no),
            ));
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
enum Value {
    None,
    Bool(bool),
    Int(i64),
    Float(f64),
    Builder(usize),
    Walker(WalkerSpec),
    Module,
    Func(&'static str),
}

impl Value {
    fn type_name(&self) -> &'static str {
        match self {
            Value::None => "None",
            Value::Bool(_) => "bool",
            Value::Int(_) => "int",
            Value::Float(_) => "float",
            Value::Builder(_) => "walker_creator",
            Value::Walker(_) => "walker",
            Value::Module => "module",
            Value::Func(_) => "function",
        }
    }

    fn num(&self) -> Option<f64> {
        match *self {
            Value::Int(v) => Some(v as f64),
            Value::Float(v) => Some(v),
            Value::Bool(b) => Some(b as i64 as f64),
            _ => None,
        }
    }
}

#[derive(Default)]
struct Env {
    vars: HashMap<String, Value>,
    helpers: HashSet<String>,
    builders: Vec<WalkerBuilder>,
}

enum Flow {
    Next,
    Return(Value),
}

struct Parser<'a> {
    toks: &'a [Tok],
    pos: usize,
    line: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Tok> {
        self.toks.get(self.pos)
    }

    fn eat(&mut self, op: &str) -> bool {
        if self.peek() == Some(&Tok::Op(leak(op))) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, op: &str) -> Result<(), Error> {
        if self.eat(op) {
            Ok(())
        } else {
            error(self.line, format!("expected '{op}'"))
        }
    }

    fn done(&self) -> bool {
        self.pos == self.toks.len()
    }
}

fn leak(op: &str) -> &'static str {
    OPS.iter().find(|o| **o == op).copied().unwrap_or("")
}

fn exec_line(env: &mut Env, line: &Line) -> Result<Flow, Error> {
    let toks = &line.toks;
    let mut p = Parser {
        toks,
        pos: 0,
        line: line.no,
    };
    match toks.as_slice() {
        [Tok::Name(k)] if k == "pass" => return Ok(Flow::Next),
        [Tok::Name(k), ..] if k == "return" => {
            p.pos = 1;
            let v = if p.done() { Value::None } else { expr(env, &mut p)? };
            if !p.done() {
                return error(line.no, "unexpected tokens after return value");
            }
            return Ok(Flow::Return(v));
        }
        [Tok::Name(k), ..] if matches!(k.as_str(), "for" | "while" | "if" | "def" | "with" | "try" | "class" | "lambda") => {
            return error(line.no, format!("'{k}' is not supported by the script interpreter"));
        }
        [Tok::Name(k), ..] if matches!(k.as_str(), "import" | "from") => return Ok(Flow::Next),
        [Tok::Name(target), Tok::Op("="), ..] => {
            p.pos = 2;
            let v = expr(env, &mut p)?;
            if !p.done() {
                return error(line.no, "unexpected tokens after expression");
            }
            env.vars.insert(target.clone(), v);
            return Ok(Flow::Next);
        }
        _ => {}
    }
    expr(env, &mut p)?;
    if !p.done() {
        return error(line.no, "unexpected tokens after expression");
    }
    Ok(Flow::Next)
}

fn expr(env: &mut Env, p: &mut Parser) -> Result<Value, Error> {
    let mut lhs = term(env, p)?;
    loop {
        let op = if p.eat("+") {
            "+"
        } else if p.eat("-") {
            "-"
        } else {
            return Ok(lhs);
        };
        let rhs = term(env, p)?;
        lhs = arith(p.line, op, lhs, rhs)?;
    }
}

fn term(env: &mut Env, p: &mut Parser) -> Result<Value, Error> {
    let mut lhs = unary(env, p)?;
    loop {
        let op = ["*", "//", "/", "%"].into_iter().find(|op| p.eat(op));
        let Some(op) = op else { return Ok(lhs) };
        let rhs = unary(env, p)?;
        lhs = arith(p.line, op, lhs, rhs)?;
    }
}

fn unary(env: &mut Env, p: &mut Parser) -> Result<Value, Error> {
    if p.eat("-") {
        let v = unary(env, p)?;
        return arith(p.line, "-", Value::Int(0), v);
    }
    if p.eat("+") {
        return unary(env, p);
    }
    power(env, p)
}

fn power(env: &mut Env, p: &mut Parser) -> Result<Value, Error> {
    let base = postfix(env, p)?;
    if p.eat("**") {
        let exp = unary(env, p)?;
        return arith(p.line, "**", base, exp);
    }
    Ok(base)
}

fn arith(line: usize, op: &str, a: Value, b: Value) -> Result<Value, Error> {
    if let (Value::Int(x), Value::Int(y)) = (&a, &b) {
        let (x, y) = (*x, *y);
        let r = match op {
            "+" => x.checked_add(y),
            "-" => x.checked_sub(y),
            "*" => x.checked_mul(y),
            "//" | "%" if y == 0 => return error(line, "integer division or modulo by zero"),
            "//" => x.checked_div(y).map(|q| if x % y != 0 && ((x < 0) != (y < 0)) { q - 1 } else { q }),
            "%" => x.checked_rem(y).map(|r| if r != 0 && ((r < 0) != (y < 0)) { r + y } else { r }),
            "**" if y >= 0 => u32::try_from(y).ok().and_then(|e| x.checked_pow(e)),
            _ => None,
        };
        if let Some(r) = r {
            return Ok(Value::Int(r));
        }
        if op != "/" && op != "**" {
            return error(line, "integer overflow");
        }
    }
    let (Some(x), Some(y)) = (a.num(), b.num()) else {
        return error(
            line,
            format!("unsupported operand types for {op}: {} and {}", a.type_name(), b.type_name()),
        );
    };
    let r = match op {
        "+" => x + y,
        "-" => x - y,
        "*" => x * y,
        "/" | "//" | "%" if y == 0.0 => return error(line, "float division by zero"),
        "/" => x / y,
        "//" => (x / y).floor(),
        "%" => x - y * (x / y).floor(),
        "**" => x.powf(y),
        _ => unreachable!("operator checked by parser"),
    };
    Ok(Value::Float(r))
}

fn args(env: &mut Env, p: &mut Parser) -> Result<Vec<Value>, Error> {
    let mut out = Vec::new();
    if p.eat(")") {
        return Ok(out);
    }
    loop {
        if let (Some(Tok::Name(_)), Some(Tok::Op("="))) = (p.toks.get(p.pos), p.toks.get(p.pos + 1)) {
            return error(p.line, "keyword arguments are not supported by the script interpreter");
        }
        out.push(expr(env, p)?);
        if p.eat(")") {
            return Ok(out);
        }
        p.expect(",")?;
        if p.eat(")") {
            return Ok(out);
        }
    }
}

fn postfix(env: &mut Env, p: &mut Parser) -> Result<Value, Error> {
    let line = p.line;
    let mut v = atom(env, p)?;
    loop {
        if p.eat(".") {
            let Some(Tok::Name(attr)) = p.peek() else {
                return error(line, "expected attribute name");
            };
            p.pos += 1;
            v = match (&v, attr.as_str()) {
                (Value::Module, "pi") => Value::Float(std::f64::consts::PI),
                (Value::Module, "e") => Value::Float(std::f64::consts::E),
                (Value::Module, f) => Value::Func(math_fn(line, f)?),
                (Value::Builder(b), m) => {
                    p.expect("(")?;
                    let a = args(env, p)?;
                    builder_call(env, line, *b, m, a)?
                }
                (other, a) => return error(line, format!("'{}' has no attribute '{a}'", other.type_name())),
            };
        } else if p.eat("(") {
            let a = args(env, p)?;
            v = call(env, line, &v, a)?;
        } else {
            return Ok(v);
        }
    }
}

fn math_fn(line: usize, name: &str) -> Result<&'static str, Error> {
    const FNS: [&str; 9] = ["sin", "cos", "tan", "sqrt", "floor", "ceil", "fabs", "atan2", "hypot"];
    FNS.iter()
        .find(|f| **f == name)
        .copied()
        .ok_or_else(|| Error {
            line,
            message: format!("module 'math' has no attribute '{name}'"),
        })
}

fn atom(env: &mut Env, p: &mut Parser) -> Result<Value, Error> {
    let line = p.line;
    let Some(tok) = p.peek() else {
        return error(line, "expected an expression");
    };
    p.pos += 1;
    match tok {
        Tok::Int(v) => Ok(Value::Int(*v)),
        Tok::Float(v) => Ok(Value::Float(*v)),
        Tok::Str => error(line, "strings are not supported here"),
        Tok::Op("(") => {
            let v = expr(env, p)?;
            p.expect(")")?;
            Ok(v)
        }
        Tok::Op(op) => error(line, format!("unexpected '{op}'")),
        Tok::Name(n) => match n.as_str() {
            "True" => Ok(Value::Bool(true)),
            "False" => Ok(Value::Bool(false)),
            "None" => Ok(Value::None),
            "math" => Ok(Value::Module),
            "walker_creator" => Ok(Value::Func("walker_creator")),
            "abs" => Ok(Value::Func("abs")),
            "min" => Ok(Value::Func("min")),
            "max" => Ok(Value::Func("max")),
            "float" => Ok(Value::Func("float")),
            "int" => Ok(Value::Func("int")),
            _ if env.helpers.contains(n) && !env.vars.contains_key(n) => error(
                line,
                format!("calling helper function '{n}' is not supported by the script interpreter"),
            ),
            _ => env
                .vars
                .get(n)
                .cloned()
                .ok_or_else(|| Error {
                    line,
                    message: format!("name '{n}' is not defined"),
                }),
        },
    }
}

fn nums(line: usize, name: &str, a: &[Value], n: usize) -> Result<Vec<f64>, Error> {
    if a.len() != n {
        return error(line, format!("{name}() takes {n} arguments ({} given)", a.len()));
    }
    a.iter()
        .map(|v| {
            v.num().ok_or_else(|| Error {
                line,
                message: format!("{name}() needs numbers, got {}", v.type_name()),
            })
        })
        .collect()
}

fn call(env: &mut Env, line: usize, f: &Value, a: Vec<Value>) -> Result<Value, Error> {
    let Value::Func(name) = f else {
        return error(line, format!("'{}' object is not callable", f.type_name()));
    };
    let one = |a: &[Value]| nums(line, name, a, 1).map(|v| v[0]);
    Ok(match *name {
        "walker_creator" => {
            if !a.is_empty() {
                return error(line, "walker_creator() takes no arguments");
            }
            env.builders.push(WalkerBuilder::new());
            Value::Builder(env.builders.len() - 1)
        }
        "abs" => match a.as_slice() {
            [Value::Int(v)] => Value::Int(v.checked_abs().ok_or_else(|| Error { line, message: "integer overflow".into() })?),
            _ => Value::Float(one(&a)?.abs()),
        },
        "min" | "max" => {
            if a.len() < 2 {
                return error(line, format!("{name}() needs at least two arguments"));
            }
            let mut best = a[0].clone();
            for v in &a[1..] {
                let (Some(x), Some(y)) = (best.num(), v.num()) else {
                    return error(line, format!("{name}() needs numbers"));
                };
                if (*name == "min" && y < x) || (*name == "max" && y > x) {
                    best = v.clone();
                }
            }
            best
        }
        "float" => Value::Float(one(&a)?),
        "int" => {
            let v = one(&a)?;
            if !v.is_finite() || v.abs() >= 9.2e18 {
                return error(line, "cannot convert to int");
            }
            Value::Int(v.trunc() as i64)
        }
        "atan2" | "hypot" => {
            let v = nums(line, name, &a, 2)?;
            Value::Float(if *name == "atan2" { v[0].atan2(v[1]) } else { v[0].hypot(v[1]) })
        }
        "floor" | "ceil" => {
            let v = one(&a)?;
            let r = if *name == "floor" { v.floor() } else { v.ceil() };
            if !r.is_finite() {
                return error(line, "cannot convert to int");
            }
            Value::Int(r as i64)
        }
        "sqrt" => {
            let v = one(&a)?;
            if v < 0.0 {
                return error(line, "math domain error");
            }
            Value::Float(v.sqrt())
        }
        "sin" => Value::Float(one(&a)?.sin()),
        "cos" => Value::Float(one(&a)?.cos()),
        "tan" => Value::Float(one(&a)?.tan()),
        "fabs" => Value::Float(one(&a)?.abs()),
        other => return error(line, format!("unknown function {other}")),
    })
}

fn joint_index(line: usize, v: &Value) -> Result<usize, Error> {
    match v {
        Value::Int(i) if *i >= 0 => Ok(*i as usize),
        Value::Int(i) => error(line, format!("joint index {i} is negative")),
        other => error(line, format!("joint index must be an int, got {}", other.type_name())),
    }
}

fn builder_call(env: &mut Env, line: usize, b: usize, method: &str, a: Vec<Value>) -> Result<Value, Error> {
    let builder = &mut env.builders[b];
    let fail = |e: crate::walker::BuildError| Error {
        line,
        message: e.to_string(),
    };
    match method {
        "add_joint" => {
            let v = nums(line, "add_joint", &a, 2)?;
            Ok(Value::Int(builder.add_joint(v[0], v[1]).map_err(fail)? as i64))
        }
        "add_muscle" => {
            if !(2..=5).contains(&a.len()) {
                return error(line, format!("add_muscle() takes 2 to 5 arguments ({} given)", a.len()));
            }
            let (ja, jb) = (joint_index(line, &a[0])?, joint_index(line, &a[1])?);
            let rigid = match a.get(2) {
                None => true,
                Some(Value::Bool(r)) => *r,
                Some(v) => v.num().map(|x| x != 0.0).ok_or_else(|| Error {
                    line,
                    message: "rigid flag must be a bool".into(),
                })?,
            };
            let rest = nums(line, "add_muscle", &a[3.min(a.len())..], a.len().saturating_sub(3))?;
            let kind = if rigid {
                MuscleKind::Distance
            } else {
                MuscleKind::Oscillating {
                    amplitude: rest.first().copied().unwrap_or(0.0),
                    phase: rest.get(1).copied().unwrap_or(0.0),
                }
            };
            builder.add_muscle(ja, jb, kind).map_err(fail)?;
            Ok(Value::None)
        }
        "get_walker" => {
            if !a.is_empty() {
                return error(line, "get_walker() takes no arguments");
            }
            Ok(Value::Walker(builder.snapshot()))
        }
        other => error(line, format!("'walker_creator' has no attribute '{other}'")),
    }
}
