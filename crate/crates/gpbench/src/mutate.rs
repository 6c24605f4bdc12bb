use rand::seq::IndexedRandom;
use rand::Rng;

use crate::task::Task;
use crate::tree::{ExprTree, Node, Op};

/// Symbols a node at this position may be resampled to.
pub fn alphabet_for<'a>(task: &'a Task, node: &Node) -> &'a [Node] {
    match node {
        Node::Op(_) => &OP_NODES,
        _ => &task.terminals,
    }
}

const OP_NODES: [Node; 5] = [
    Node::Op(Op::Add),
    Node::Op(Op::Sub),
    Node::Op(Op::Mul),
    Node::Op(Op::Mod),
    Node::Op(Op::Pow),
];

/// Point mutation: every node is independently resampled with probability
/// `rate`, uniformly over the symbols of its arity. A resample may pick the
/// symbol already there.
pub fn node_mutate<R: Rng + ?Sized>(tree: &ExprTree, task: &Task, rate: f64, rng: &mut R) -> ExprTree {
    assert!((0.0..=1.0).contains(&rate), "rate {rate} outside [0, 1]");
    let mut out = tree.clone();
    for node in out.nodes_mut() {
        if rng.random_bool(rate) {
            *node = *alphabet_for(task, node).choose(rng).expect("non-empty alphabet");
        }
    }
    out
}
