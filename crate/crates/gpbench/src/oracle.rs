//! Exact success probability of one `node_mutate` step.
//!
//! Every node's outcome is an independent categorical distribution, so the
//! child's behaviour on the suite is a product distribution over per-node
//! symbols. Subtrees are collapsed into distributions over their output
//! vectors (one value per test case), which merges the many symbol choices
//! that behave identically. Near the root the collapsed tables would get too
//! big, so those operator nodes are enumerated instead and checked case by
//! case.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::mutate::alphabet_for;
use crate::task::{inject_bugs, Task, TooManyBugs};
use crate::tree::{ExprTree, Node, Op};

/// Candidate rates for [`tune_rate`].
pub const RATE_GRID: [f64; 8] = [0.02, 0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5];

/// Largest `|left| * |right| * |ops|` product collapsed into one table.
const COLLAPSE_BUDGET: usize = 400_000;

type Dist = Vec<(Vec<i64>, f64)>;

enum Plan {
    Table(Dist),
    Expand {
        ops: Vec<(Op, f64)>,
        left: Box<Plan>,
        right: Box<Plan>,
    },
}

/// Outcome distribution of one node: it keeps its symbol with probability
/// `1 - rate + rate/|S|` and becomes each other symbol with `rate/|S|`.
fn outcomes(task: &Task, node: &Node, rate: f64) -> Vec<(Node, f64)> {
    let alphabet = alphabet_for(task, node);
    let each = rate / alphabet.len() as f64;
    alphabet
        .iter()
        .map(|s| (*s, if s == node { 1.0 - rate + each } else { each }))
        .filter(|(_, w)| *w > 0.0)
        .collect()
}

fn terminal_value(node: &Node, env: &[i64]) -> i64 {
    match node {
        Node::Var(v) => env[*v],
        Node::Const(c) => *c,
        Node::Op(_) => unreachable!("terminal expected"),
    }
}

fn collect(entries: impl IntoIterator<Item = (Vec<i64>, f64)>) -> Dist {
    let mut merged: HashMap<Vec<i64>, f64> = HashMap::new();
    for (v, w) in entries {
        *merged.entry(v).or_insert(0.0) += w;
    }
    let mut out: Dist = merged.into_iter().collect();
    // fixed order so the summation order, and so the result, is reproducible
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

fn combine(ops: &[(Op, f64)], left: &Dist, right: &Dist) -> Dist {
    let mut entries = Vec::new();
    for &(op, wo) in ops {
        for (lv, wl) in left {
            for (rv, wr) in right {
                let v: Option<Vec<i64>> = lv.iter().zip(rv).map(|(&a, &b)| op.apply(a, b)).collect();
                // a value error on any case fails the suite, so that mass is dropped
                if let Some(v) = v {
                    entries.push((v, wo * wl * wr));
                }
            }
        }
    }
    collect(entries)
}

fn build(task: &Task, tree: &ExprTree, pos: usize, rate: f64, is_root: bool) -> (Plan, usize) {
    let node = tree.nodes()[pos];
    match node {
        Node::Op(_) => {
            let (left, mid) = build(task, tree, pos + 1, rate, false);
            let (right, end) = build(task, tree, mid, rate, false);
            let ops: Vec<(Op, f64)> = outcomes(task, &node, rate)
                .into_iter()
                .map(|(n, w)| match n {
                    Node::Op(op) => (op, w),
                    _ => unreachable!(),
                })
                .collect();
            let plan = match (&left, &right) {
                (Plan::Table(l), Plan::Table(r))
                    if !is_root && l.len() * r.len() * ops.len() <= COLLAPSE_BUDGET =>
                {
                    Plan::Table(combine(&ops, l, r))
                }
                _ => Plan::Expand {
                    ops,
                    left: Box::new(left),
                    right: Box::new(right),
                },
            };
            (plan, end)
        }
        _ => {
            let dist = collect(outcomes(task, &node, rate).into_iter().map(|(n, w)| {
                let v = task.cases.iter().map(|c| terminal_value(&n, &c.env)).collect();
                (v, w)
            }));
            (Plan::Table(dist), pos + 1)
        }
    }
}

/// One enumerable choice: either an operator pick or a table row.
struct Slot<'a> {
    weights: Vec<f64>,
    kind: SlotKind<'a>,
}

enum SlotKind<'a> {
    Ops(&'a [(Op, f64)]),
    Table(&'a Dist),
}

/// Flattens the plan in preorder. The same order is used by `eval_case`.
fn slots<'a>(plan: &'a Plan, out: &mut Vec<Slot<'a>>) {
    match plan {
        Plan::Table(d) => out.push(Slot {
            weights: d.iter().map(|e| e.1).collect(),
            kind: SlotKind::Table(d),
        }),
        Plan::Expand { ops, left, right } => {
            out.push(Slot {
                weights: ops.iter().map(|e| e.1).collect(),
                kind: SlotKind::Ops(ops),
            });
            slots(left, out);
            slots(right, out);
        }
    }
}

fn eval_case(slots: &[Slot], choice: &[usize], at: &mut usize, case: usize) -> Option<i64> {
    let i = *at;
    *at += 1;
    match slots[i].kind {
        SlotKind::Table(d) => Some(d[choice[i]].0[case]),
        SlotKind::Ops(ops) => {
            let a = eval_case(slots, choice, at, case);
            let b = eval_case(slots, choice, at, case);
            ops[choice[i]].0.apply(a?, b?)
        }
    }
}

fn enumerate(slots: &[Slot], expected: &[i64], choice: &mut Vec<usize>, weight: f64) -> f64 {
    let depth = choice.len();
    if depth == slots.len() {
        let passes = (0..expected.len()).all(|j| eval_case(slots, choice, &mut 0, j) == Some(expected[j]));
        return if passes { weight } else { 0.0 };
    }
    let mut total = 0.0;
    for (i, w) in slots[depth].weights.iter().enumerate() {
        choice.push(i);
        total += enumerate(slots, expected, choice, weight * w);
        choice.pop();
    }
    total
}

/// Probability that one `node_mutate(tree, rate)` step yields a tree passing
/// the task's whole suite.
pub fn tree_success_prob(task: &Task, tree: &ExprTree, rate: f64) -> f64 {
    assert!((0.0..=1.0).contains(&rate), "rate {rate} outside [0, 1]");
    let expected: Vec<i64> = task.cases.iter().map(|c| c.expected).collect();
    let (plan, _) = build(task, tree, 0, rate, true);
    if let Plan::Table(d) = &plan {
        // a bare terminal
        return d.iter().filter(|(v, _)| *v == expected).map(|e| e.1).sum();
    }
    let mut flat = Vec::new();
    slots(&plan, &mut flat);
    // split on the root operator and its left child for parallelism
    let first: Vec<(usize, usize)> = (0..flat[0].weights.len())
        .flat_map(|i| (0..flat[1].weights.len()).map(move |j| (i, j)))
        .collect();
    let parts: Vec<f64> = first
        .par_iter()
        .map(|&(i, j)| {
            let mut choice = vec![i, j];
            enumerate(&flat, &expected, &mut choice, flat[0].weights[i] * flat[1].weights[j])
        })
        .collect();
    parts.iter().sum()
}

/// Exact success probability of node mutation on the task with `k` bugs.
pub fn exact_success_prob(task: &Task, k: usize, rate: f64) -> Result<f64, TooManyBugs> {
    Ok(tree_success_prob(task, &inject_bugs(task, k)?, rate))
}

/// The rate in [`RATE_GRID`] with the best exact one-bug success probability.
pub fn tune_rate(task: &Task) -> f64 {
    let mut best = (RATE_GRID[0], f64::MIN);
    for &r in &RATE_GRID {
        let p = exact_success_prob(task, 1.min(task.max_bugs), r).expect("one bug is always allowed");
        if p > best.1 {
            best = (r, p);
        }
    }
    best.0
}
