use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Binary operators. All evaluate over `i64` with Python semantics where
/// defined; anything Python would turn into a float or an exception is an
/// evaluation error here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Mod,
    Pow,
}

impl Op {
    pub const ALL: [Op; 5] = [Op::Add, Op::Sub, Op::Mul, Op::Mod, Op::Pow];

    pub fn apply(self, a: i64, b: i64) -> Option<i64> {
        match self {
            Op::Add => a.checked_add(b),
            Op::Sub => a.checked_sub(b),
            Op::Mul => a.checked_mul(b),
            Op::Mod => {
                let r = a.checked_rem(b)?;
                // result takes the divisor's sign
                Some(if r != 0 && (r < 0) != (b < 0) { r + b } else { r })
            }
            Op::Pow => a.checked_pow(u32::try_from(b).ok()?),
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Op::Add => "+",
            Op::Sub => "-",
            Op::Mul => "*",
            Op::Mod => "%",
            Op::Pow => "pow",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Node {
    Op(Op),
    /// Index into the task's variable list.
    Var(usize),
    Const(i64),
}

impl Node {
    pub fn is_op(&self) -> bool {
        matches!(self, Node::Op(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("operator at node {0} is missing operands")]
    MissingOperand(usize),
    #[error("{0} trailing nodes after a complete tree")]
    Trailing(usize),
    #[error("empty tree")]
    Empty,
}

/// An expression tree stored in preorder. Every operator is binary.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExprTree {
    nodes: Vec<Node>,
}

impl ExprTree {
    pub fn new(nodes: Vec<Node>) -> Result<Self, TreeError> {
        if nodes.is_empty() {
            return Err(TreeError::Empty);
        }
        let mut need = 1usize;
        for (i, n) in nodes.iter().enumerate() {
            if need == 0 {
                return Err(TreeError::Trailing(nodes.len() - i));
            }
            need = need - 1 + if n.is_op() { 2 } else { 0 };
        }
        if need > 0 {
            let last_op = nodes.iter().rposition(Node::is_op).unwrap_or(0);
            return Err(TreeError::MissingOperand(last_op));
        }
        Ok(Self { nodes })
    }

    pub fn leaf(node: Node) -> Self {
        assert!(!node.is_op(), "a leaf must be a terminal");
        Self { nodes: vec![node] }
    }

    pub fn binary(op: Op, left: ExprTree, right: ExprTree) -> Self {
        let mut nodes = Vec::with_capacity(1 + left.len() + right.len());
        nodes.push(Node::Op(op));
        nodes.extend(left.nodes);
        nodes.extend(right.nodes);
        Self { nodes }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn nodes_mut(&mut self) -> &mut [Node] {
        &mut self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Which positions hold operators; equal shapes mean equal structure.
    pub fn shape(&self) -> Vec<bool> {
        self.nodes.iter().map(Node::is_op).collect()
    }

    /// End (exclusive) of the subtree starting at `pos`.
    pub fn subtree_end(&self, pos: usize) -> usize {
        let mut need = 1usize;
        let mut i = pos;
        while need > 0 {
            need = need - 1 + if self.nodes[i].is_op() { 2 } else { 0 };
            i += 1;
        }
        i
    }

    pub fn eval(&self, env: &[i64]) -> Option<i64> {
        fn go(nodes: &[Node], pos: &mut usize, env: &[i64]) -> Option<i64> {
            let n = nodes[*pos];
            *pos += 1;
            match n {
                Node::Const(c) => Some(c),
                Node::Var(v) => Some(env[v]),
                Node::Op(op) => {
                    // both operands are evaluated, as Python would
                    let a = go(nodes, pos, env);
                    let b = go(nodes, pos, env);
                    op.apply(a?, b?)
                }
            }
        }
        go(&self.nodes, &mut 0, env)
    }

    /// Positions of operator nodes in left-to-right (in-order) reading order.
    pub fn inorder_ops(&self) -> Vec<usize> {
        fn go(t: &ExprTree, pos: usize, out: &mut Vec<usize>) -> usize {
            if !t.nodes[pos].is_op() {
                return pos + 1;
            }
            let right = go(t, pos + 1, out);
            out.push(pos);
            go(t, right, out)
        }
        let mut out = Vec::new();
        go(self, 0, &mut out);
        out
    }
}

impl fmt::Display for ExprTree {
    /// Prefix form with variable indices, for debugging.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, n) in self.nodes.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            match n {
                Node::Op(op) => f.write_str(op.symbol())?,
                Node::Var(v) => write!(f, "v{v}")?,
                Node::Const(c) => write!(f, "{c}")?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn python_mod_and_pow() {
        assert_eq!(Op::Mod.apply(-7, 3), Some(2));
        assert_eq!(Op::Mod.apply(7, -3), Some(-2));
        assert_eq!(Op::Mod.apply(6, -3), Some(0));
        assert_eq!(Op::Mod.apply(1, 0), None);
        assert_eq!(Op::Pow.apply(0, 0), Some(1));
        assert_eq!(Op::Pow.apply(2, -1), None);
        assert_eq!(Op::Pow.apply(3, 81), None);
        assert_eq!(Op::Add.apply(i64::MAX, 1), None);
    }

    #[test]
    fn arity_checked() {
        use Node::*;
        assert!(ExprTree::new(vec![Op(super::Op::Add), Var(0), Const(1)]).is_ok());
        assert_eq!(ExprTree::new(vec![Op(super::Op::Add), Var(0)]), Err(TreeError::MissingOperand(0)));
        assert_eq!(ExprTree::new(vec![Var(0), Var(1)]), Err(TreeError::Trailing(1)));
        assert_eq!(ExprTree::new(vec![]), Err(TreeError::Empty));
    }

    #[test]
    fn inorder_reading_order() {
        use Node::*;
        // (v0 + v1) - v2
        let t = ExprTree::new(vec![Op(super::Op::Sub), Op(super::Op::Add), Var(0), Var(1), Var(2)]).unwrap();
        assert_eq!(t.inorder_ops(), vec![1, 0]);
        assert_eq!(t.eval(&[5, 2, 10]), Some(-3));
        assert_eq!(t.subtree_end(1), 4);
    }
}
