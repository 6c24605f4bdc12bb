use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tree::{ExprTree, Node, Op};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskName {
    FourParity,
    Quadratic,
}

impl TaskName {
    pub const ALL: [TaskName; 2] = [TaskName::FourParity, TaskName::Quadratic];

    pub fn as_str(&self) -> &'static str {
        match self {
            TaskName::FourParity => "four_parity",
            TaskName::Quadratic => "quadratic",
        }
    }
}

impl fmt::Display for TaskName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown task '{0}' (expected four_parity or quadratic)")]
pub struct UnknownTask(pub String);

impl FromStr for TaskName {
    type Err = UnknownTask;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "four_parity" => Ok(TaskName::FourParity),
            "quadratic" => Ok(TaskName::Quadratic),
            other => Err(UnknownTask(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestCase {
    /// Values for every task variable, decoys included.
    pub env: Vec<i64>,
    pub expected: i64,
}

/// A benchmark problem: the correct program, its unit tests, and the symbols
/// mutation may draw from.
#[derive(Debug, Clone)]
pub struct Task {
    pub name: TaskName,
    /// Python function name.
    pub function: &'static str,
    pub docstring: &'static str,
    /// All variable names; the first `n_params` are the function parameters,
    /// the rest are decoys bound to 0.
    pub vars: Vec<&'static str>,
    pub n_params: usize,
    pub reference: ExprTree,
    pub terminals: Vec<Node>,
    pub cases: Vec<TestCase>,
    pub max_bugs: usize,
}

impl Task {
    pub fn passes(&self, tree: &ExprTree) -> bool {
        self.cases.iter().all(|c| tree.eval(&c.env) == Some(c.expected))
    }

    pub fn params(&self) -> &[&'static str] {
        &self.vars[..self.n_params]
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| *v == name)
    }
}

fn var(i: usize) -> ExprTree {
    ExprTree::leaf(Node::Var(i))
}

fn int(c: i64) -> ExprTree {
    ExprTree::leaf(Node::Const(c))
}

fn four_parity() -> Task {
    let vars = vec!["b1", "b2", "b3", "b4", "c1", "c2", "c3", "c4"];
    // (((b1 + b2) + b3) + b4) % 2
    let sum = ExprTree::binary(
        Op::Add,
        ExprTree::binary(Op::Add, ExprTree::binary(Op::Add, var(0), var(1)), var(2)),
        var(3),
    );
    let reference = ExprTree::binary(Op::Mod, sum, int(2));
    let mut terminals: Vec<Node> = (0..vars.len()).map(Node::Var).collect();
    terminals.extend([Node::Const(2), Node::Const(3)]);
    let cases = (0..16)
        .map(|bits: i64| {
            let mut env: Vec<i64> = (0..4).map(|i| (bits >> (3 - i)) & 1).collect();
            env.extend([0; 4]);
            TestCase {
                expected: env.iter().sum::<i64>() % 2,
                env,
            }
        })
        .collect();
    Task {
        name: TaskName::FourParity,
        function: "parity",
        docstring: " Return binary parity of a sequence of input bits. \n        Return 0 for even parity, 1 for odd parity ",
        vars,
        n_params: 4,
        reference,
        terminals,
        cases,
        max_bugs: 5,
    }
}

fn quadratic() -> Task {
    let vars = vec!["a", "b", "c", "x"];
    // ((a * pow(x, 2)) + (b * x)) + c
    let reference = ExprTree::binary(
        Op::Add,
        ExprTree::binary(
            Op::Add,
            ExprTree::binary(Op::Mul, var(0), ExprTree::binary(Op::Pow, var(3), int(2))),
            ExprTree::binary(Op::Mul, var(1), var(3)),
        ),
        var(2),
    );
    let mut terminals: Vec<Node> = (0..vars.len()).map(Node::Var).collect();
    terminals.push(Node::Const(2));
    let grid = -2..=2i64;
    let mut cases = Vec::with_capacity(625);
    for a in grid.clone() {
        for b in grid.clone() {
            for c in grid.clone() {
                for x in grid.clone() {
                    cases.push(TestCase {
                        env: vec![a, b, c, x],
                        expected: a * x * x + b * x + c,
                    });
                }
            }
        }
    }
    Task {
        name: TaskName::Quadratic,
        function: "quadratic",
        docstring: " Return quadratic: a,b,c are coefficients \n        and x is the independent variable.",
        vars,
        n_params: 4,
        reference,
        terminals,
        cases,
        max_bugs: 2,
    }
}

pub fn build_task(name: TaskName) -> Task {
    match name {
        TaskName::FourParity => four_parity(),
        TaskName::Quadratic => quadratic(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{task} supports at most {max} bugs, asked for {k}")]
pub struct TooManyBugs {
    pub task: TaskName,
    pub k: usize,
    pub max: usize,
}

/// The reference program with the first `k` scheduled bugs applied.
///
/// 4-Parity: bugs 1-4 rename b1..b4 to c1..c4 in turn; bug 5 turns `% 2`
/// into `% 3`. Quadratic: each bug turns the next `+`, reading left to
/// right, into `-`.
pub fn inject_bugs(task: &Task, k: usize) -> Result<ExprTree, TooManyBugs> {
    if k > task.max_bugs {
        return Err(TooManyBugs {
            task: task.name,
            k,
            max: task.max_bugs,
        });
    }
    let mut tree = task.reference.clone();
    match task.name {
        TaskName::FourParity => {
            for bug in 0..k {
                let nodes = tree.nodes_mut();
                if bug < 4 {
                    let pos = nodes.iter().position(|n| *n == Node::Var(bug)).expect("b var present");
                    nodes[pos] = Node::Var(bug + 4);
                } else {
                    let pos = nodes.iter().position(|n| *n == Node::Const(2)).expect("modulus present");
                    nodes[pos] = Node::Const(3);
                }
            }
        }
        TaskName::Quadratic => {
            let adds: Vec<usize> = tree
                .inorder_ops()
                .into_iter()
                .filter(|&p| tree.nodes()[p] == Node::Op(Op::Add))
                .collect();
            for &p in adds.iter().take(k) {
                tree.nodes_mut()[p] = Node::Op(Op::Sub);
            }
        }
    }
    Ok(tree)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(t: &Task, vals: &[i64]) -> Vec<i64> {
        let mut e = vals.to_vec();
        e.resize(t.vars.len(), 0);
        e
    }

    #[test]
    fn references_pass_their_suites() {
        for name in TaskName::ALL {
            let t = build_task(name);
            assert!(t.passes(&t.reference), "{name}");
        }
        assert_eq!(build_task(TaskName::Quadratic).cases.len(), 625);
        assert_eq!(build_task(TaskName::FourParity).cases.len(), 16);
    }

    #[test]
    fn reference_values() {
        let p = build_task(TaskName::FourParity);
        assert_eq!(p.reference.eval(&env(&p, &[1, 0, 1, 0])), Some(0));
        assert_eq!(p.reference.eval(&env(&p, &[1, 0, 0, 0])), Some(1));
        let q = build_task(TaskName::Quadratic);
        assert_eq!(q.reference.eval(&[1, 2, 3, 2]), Some(11));
    }

    #[test]
    fn bug_schedules() {
        let p = build_task(TaskName::FourParity);
        assert!(p.passes(&inject_bugs(&p, 0).unwrap()));
        for k in 1..=5 {
            assert!(!p.passes(&inject_bugs(&p, k).unwrap()), "k={k}");
        }
        // every b renamed: the sum is over zeros, and mod 3 of zero is 0
        let five = inject_bugs(&p, 5).unwrap();
        assert_eq!(five.eval(&env(&p, &[1, 1, 1, 1])), Some(0));
        assert!(inject_bugs(&p, 6).is_err());

        let q = build_task(TaskName::Quadratic);
        let one = inject_bugs(&q, 1).unwrap();
        assert_eq!(one.eval(&[1, 2, 3, 2]), Some(4 - 4 + 3));
        let two = inject_bugs(&q, 2).unwrap();
        assert_eq!(two.eval(&[1, 2, 3, 2]), Some(-3));
        assert!(inject_bugs(&q, 3).is_err());
    }

    #[test]
    fn names_parse() {
        for name in TaskName::ALL {
            assert_eq!(name.as_str().parse::<TaskName>().unwrap(), name);
        }
        assert!("sorting".parse::<TaskName>().is_err());
    }
}
