//! Python text for expression trees, and a parser for the small subset of
//! Python that such programs (and plausible model rewrites of them) use.

use std::collections::HashMap;

use thiserror::Error;

use crate::task::Task;
use crate::tree::{ExprTree, Node, Op};

fn name(task: &Task, node: &Node) -> String {
    match node {
        Node::Var(v) => task.vars[*v].to_string(),
        Node::Const(c) if *c < 0 => format!("({c})"),
        Node::Const(c) => c.to_string(),
        Node::Op(_) => unreachable!("terminal expected"),
    }
}

fn precedence(node: &Node) -> u8 {
    match node {
        Node::Op(Op::Add | Op::Sub) => 1,
        Node::Op(Op::Mul | Op::Mod) => 2,
        _ => 3,
    }
}

fn infix(task: &Task, tree: &ExprTree, pos: usize, out: &mut String) -> usize {
    let node = tree.nodes()[pos];
    let Node::Op(op) = node else {
        out.push_str(&name(task, &node));
        return pos + 1;
    };
    let l = pos + 1;
    if op == Op::Pow {
        out.push_str("pow(");
        let r = infix(task, tree, l, out);
        out.push(',');
        let end = infix(task, tree, r, out);
        out.push(')');
        return end;
    }
    let r = tree.subtree_end(l);
    let wrap = |out: &mut String, at: usize, parens: bool| {
        if parens {
            out.push('(');
        }
        let end = infix(task, tree, at, out);
        if parens {
            out.push(')');
        }
        end
    };
    let p = precedence(&node);
    wrap(out, l, precedence(&tree.nodes()[l]) < p);
    out.push_str(op.symbol());
    wrap(out, r, precedence(&tree.nodes()[r]) <= p)
}

/// Terminals of a left-leaning `+` chain of at least three terminals.
fn sum_chain(tree: &ExprTree, pos: usize) -> Option<Vec<Node>> {
    let nodes = tree.nodes();
    let mut terms = Vec::new();
    let mut at = pos;
    while nodes[at] == Node::Op(Op::Add) {
        let right = tree.subtree_end(at + 1);
        if nodes[right].is_op() {
            return None;
        }
        terms.push(nodes[right]);
        at += 1;
    }
    if nodes[at].is_op() {
        return None;
    }
    terms.push(nodes[at]);
    terms.reverse();
    (terms.len() >= 3).then_some(terms)
}

/// Renders a tree as a Python function of the task's parameters.
///
/// A `sum(...) % m` tree is written with an intermediate `bit_sum`, the way
/// the parity program is usually written by hand; anything else is a single
/// return expression.
pub fn render(task: &Task, tree: &ExprTree) -> String {
    let mut out = format!(
        "#!/usr/bin/python3\ndef {}({}):\n    \"\"\"{}\"\"\"\n",
        task.function,
        task.params().join(","),
        task.docstring
    );
    let nodes = tree.nodes();
    let chain = (nodes[0] == Node::Op(Op::Mod)).then(|| sum_chain(tree, 1)).flatten();
    if let Some(terms) = chain {
        let names: Vec<String> = terms.iter().map(|t| name(task, t)).collect();
        out.push_str(&format!("    bit_sum = sum([{}])\n    return bit_sum % ", names.join(",")));
        let r = tree.subtree_end(1);
        let mut rhs = String::new();
        infix(task, tree, r, &mut rhs);
        if precedence(&nodes[r]) <= 2 {
            rhs = format!("({rhs})");
        }
        out.push_str(&rhs);
        out.push('\n');
    } else {
        let mut expr = String::new();
        infix(task, tree, 0, &mut expr);
        out.push_str(&format!("    return {expr}\n"));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("no function definition")]
    NoDef,
    #[error("no return statement")]
    NoReturn,
    #[error("unterminated docstring")]
    Docstring,
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unknown name '{name}'")]
    UnknownName { line: usize, name: String },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(i64),
    Name(String),
    Sym(&'static str),
}

fn tokenize(text: &str) -> Result<Vec<Tok>, String> {
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            toks.push(Tok::Int(s.parse().map_err(|_| format!("integer {s} out of range"))?));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            toks.push(Tok::Name(chars[start..i].iter().collect()));
        } else if c == '*' && chars.get(i + 1) == Some(&'*') {
            toks.push(Tok::Sym("**"));
            i += 2;
        } else if c == '#' {
            break;
        } else {
            let sym = match c {
                '+' => "+",
                '-' => "-",
                '*' => "*",
                '%' => "%",
                '(' => "(",
                ')' => ")",
                '[' => "[",
                ']' => "]",
                ',' => ",",
                other => return Err(format!("unexpected character '{other}'")),
            };
            toks.push(Tok::Sym(sym));
            i += 1;
        }
    }
    Ok(toks)
}

struct ExprParser<'a> {
    toks: Vec<Tok>,
    at: usize,
    task: &'a Task,
    locals: &'a HashMap<String, ExprTree>,
    line: usize,
}

impl ExprParser<'_> {
    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError::Syntax { line: self.line, msg: msg.into() }
    }

    fn peek_sym(&self, s: &str) -> bool {
        matches!(self.toks.get(self.at), Some(Tok::Sym(t)) if *t == s)
    }

    fn expect(&mut self, s: &str) -> Result<(), ParseError> {
        if self.peek_sym(s) {
            self.at += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected '{s}'")))
        }
    }

    fn expr(&mut self) -> Result<ExprTree, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.peek_sym("+") {
                Op::Add
            } else if self.peek_sym("-") {
                Op::Sub
            } else {
                return Ok(lhs);
            };
            self.at += 1;
            lhs = ExprTree::binary(op, lhs, self.term()?);
        }
    }

    fn term(&mut self) -> Result<ExprTree, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = if self.peek_sym("*") {
                Op::Mul
            } else if self.peek_sym("%") {
                Op::Mod
            } else {
                return Ok(lhs);
            };
            self.at += 1;
            lhs = ExprTree::binary(op, lhs, self.factor()?);
        }
    }

    fn factor(&mut self) -> Result<ExprTree, ParseError> {
        if self.peek_sym("-") {
            self.at += 1;
            if let Some(Tok::Int(n)) = self.toks.get(self.at) {
                // a negative literal, unless it is the base of a power
                let n = *n;
                if !matches!(self.toks.get(self.at + 1), Some(Tok::Sym("**"))) {
                    self.at += 1;
                    return Ok(ExprTree::leaf(Node::Const(-n)));
                }
            }
            let inner = self.factor()?;
            return Ok(ExprTree::binary(Op::Sub, ExprTree::leaf(Node::Const(0)), inner));
        }
        let base = self.atom()?;
        if self.peek_sym("**") {
            self.at += 1;
            return Ok(ExprTree::binary(Op::Pow, base, self.factor()?));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<ExprTree, ParseError> {
        let tok = self.toks.get(self.at).cloned().ok_or_else(|| self.err("unexpected end of expression"))?;
        self.at += 1;
        match tok {
            Tok::Int(n) => Ok(ExprTree::leaf(Node::Const(n))),
            Tok::Sym("(") => {
                let e = self.expr()?;
                self.expect(")")?;
                Ok(e)
            }
            Tok::Name(n) if n == "pow" && self.peek_sym("(") => {
                self.at += 1;
                let a = self.expr()?;
                self.expect(",")?;
                let b = self.expr()?;
                self.expect(")")?;
                Ok(ExprTree::binary(Op::Pow, a, b))
            }
            Tok::Name(n) if n == "sum" && self.peek_sym("(") => {
                self.at += 1;
                self.expect("[")?;
                let mut acc = self.expr()?;
                while self.peek_sym(",") {
                    self.at += 1;
                    if self.peek_sym("]") {
                        break;
                    }
                    acc = ExprTree::binary(Op::Add, acc, self.expr()?);
                }
                self.expect("]")?;
                self.expect(")")?;
                Ok(acc)
            }
            Tok::Name(n) => {
                if let Some(t) = self.locals.get(&n) {
                    Ok(t.clone())
                } else if let Some(i) = self.task.var_index(&n) {
                    Ok(ExprTree::leaf(Node::Var(i)))
                } else {
                    Err(ParseError::UnknownName { line: self.line, name: n })
                }
            }
            Tok::Sym(s) => Err(self.err(format!("unexpected '{s}'"))),
        }
    }
}

fn parse_expr(
    text: &str,
    task: &Task,
    locals: &HashMap<String, ExprTree>,
    line: usize,
) -> Result<ExprTree, ParseError> {
    let toks = tokenize(text).map_err(|msg| ParseError::Syntax { line, msg })?;
    let mut p = ExprParser { toks, at: 0, task, locals, line };
    let e = p.expr()?;
    if p.at != p.toks.len() {
        return Err(p.err("trailing tokens"));
    }
    Ok(e)
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_alphabetic() || c == '_') && chars.all(|c| c.is_alphanumeric() || c == '_')
}

/// Parses the first function in `source` into a tree.
///
/// The body may hold a docstring, comments, `name = expr` assignments (which
/// are inlined), and a return. Variables must be task variables or earlier
/// assignments.
pub fn parse(task: &Task, source: &str) -> Result<ExprTree, ParseError> {
    let lines: Vec<&str> = source.lines().collect();
    let def = lines.iter().position(|l| l.starts_with("def ")).ok_or(ParseError::NoDef)?;
    let header = lines[def].trim_end();
    if !header.ends_with(':') || !header.contains('(') {
        return Err(ParseError::Syntax { line: def + 1, msg: "malformed def line".into() });
    }
    let mut locals: HashMap<String, ExprTree> = HashMap::new();
    let mut i = def + 1;
    let mut first_statement = true;
    while i < lines.len() {
        let raw = lines[i];
        let line = raw.trim();
        let lineno = i + 1;
        i += 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !raw.starts_with([' ', '\t']) {
            break;
        }
        if first_statement && (line.starts_with("\"\"\"") || line.starts_with("'''")) {
            let quote = &line[..3];
            if !line[3..].contains(quote) {
                loop {
                    let next = lines.get(i).ok_or(ParseError::Docstring)?;
                    i += 1;
                    if next.contains(quote) {
                        break;
                    }
                }
            }
            first_statement = false;
            continue;
        }
        first_statement = false;
        if let Some(expr) = line.strip_prefix("return ") {
            return parse_expr(expr, task, &locals, lineno);
        }
        match line.split_once('=') {
            Some((lhs, rhs)) if is_identifier(lhs.trim()) && !rhs.starts_with('=') => {
                let value = parse_expr(rhs, task, &locals, lineno)?;
                locals.insert(lhs.trim().to_string(), value);
            }
            _ => {
                return Err(ParseError::Syntax { line: lineno, msg: format!("unsupported statement '{line}'") });
            }
        }
    }
    Err(ParseError::NoReturn)
}
