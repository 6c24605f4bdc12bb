use elm_core::ElmRng;
use elm_gpbench::mutate::alphabet_for;
use elm_gpbench::*;
use rand::SeedableRng;

/// Sums over every joint assignment of every node. Only feasible for tiny trees.
fn brute_force(task: &Task, tree: &ExprTree, rate: f64) -> f64 {
    let nodes = tree.nodes();
    let alphabets: Vec<&[Node]> = nodes.iter().map(|n| alphabet_for(task, n)).collect();
    let mut idx = vec![0usize; nodes.len()];
    let mut total = 0.0;
    loop {
        let mut weight = 1.0;
        let mut child = Vec::with_capacity(nodes.len());
        for (i, a) in alphabets.iter().enumerate() {
            let s = a[idx[i]];
            let each = rate / a.len() as f64;
            weight *= if s == nodes[i] { 1.0 - rate + each } else { each };
            child.push(s);
        }
        if task.passes(&ExprTree::new(child).unwrap()) {
            total += weight;
        }
        let mut d = 0;
        loop {
            if d == idx.len() {
                return total;
            }
            idx[d] += 1;
            if idx[d] < alphabets[d].len() {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

fn var(i: usize) -> ExprTree {
    ExprTree::leaf(Node::Var(i))
}

#[test]
fn matches_brute_force_on_small_trees() {
    let p = build_task(TaskName::FourParity);
    let q = build_task(TaskName::Quadratic);
    // shrink the targets so small trees can hit them
    let mut tiny = p.clone();
    tiny.reference = ExprTree::binary(Op::Mod, ExprTree::binary(Op::Add, var(0), var(1)), ExprTree::leaf(Node::Const(2)));
    for c in &mut tiny.cases {
        c.expected = (c.env[0] + c.env[1]) % 2;
    }
    let broken = ExprTree::binary(Op::Mod, ExprTree::binary(Op::Add, var(0), var(5)), ExprTree::leaf(Node::Const(3)));
    let mut quad = q.clone();
    quad.reference = ExprTree::binary(Op::Mul, var(1), var(3));
    for c in &mut quad.cases {
        c.expected = c.env[1] * c.env[3];
    }
    let cases = [
        (&tiny, tiny.reference.clone()),
        (&tiny, broken),
        (&quad, quad.reference.clone()),
        (&quad, ExprTree::binary(Op::Sub, var(0), var(3))),
        (&quad, ExprTree::binary(Op::Pow, var(3), var(3))),
    ];
    for (task, tree) in cases {
        for rate in [0.0, 0.1, 0.35, 1.0] {
            let exact = tree_success_prob(task, &tree, rate);
            let brute = brute_force(task, &tree, rate);
            assert!((exact - brute).abs() < 1e-12, "{tree} rate {rate}: {exact} vs {brute}");
        }
    }
}

#[test]
fn rate_zero_cases() {
    for name in TaskName::ALL {
        let t = build_task(name);
        assert_eq!(exact_success_prob(&t, 0, 0.0).unwrap(), 1.0);
        for k in 1..=t.max_bugs {
            assert_eq!(exact_success_prob(&t, k, 0.0).unwrap(), 0.0);
        }
        let r = run_trials(&t, 0, 0.0, 200, &mut ElmRng::seed_from_u64(1)).unwrap();
        assert_eq!(r.success_rate, 1.0);
        assert!(inject_bugs(&t, t.max_bugs + 1).is_err());
    }
}

#[test]
fn difficulty_is_monotone_in_bugs() {
    for name in TaskName::ALL {
        let t = build_task(name);
        for rate in [0.05, 0.1, 0.2] {
            let probs: Vec<f64> = (0..=t.max_bugs).map(|k| exact_success_prob(&t, k, rate).unwrap()).collect();
            for w in probs.windows(2) {
                assert!(w[1] <= w[0], "{name} at {rate}: {probs:?}");
            }
        }
    }
}

#[test]
fn one_bug_beats_the_single_fix_bound() {
    let p = build_task(TaskName::FourParity);
    let n = p.reference.len() as i32;
    let a = p.terminals.len() as f64;
    for rate in RATE_GRID {
        let bound = rate * (1.0 / a) * (1.0 - rate).powi(n - 1);
        let exact = exact_success_prob(&p, 1, rate).unwrap();
        assert!(exact >= bound, "rate {rate}: {exact} < {bound}");
    }
}

#[test]
fn tuned_rate_is_a_grid_maximum() {
    for name in TaskName::ALL {
        let t = build_task(name);
        let tuned = tune_rate(&t);
        let best = exact_success_prob(&t, 1, tuned).unwrap();
        for r in RATE_GRID {
            assert!(exact_success_prob(&t, 1, r).unwrap() <= best);
        }
    }
}

#[test]
fn trials_are_reproducible_and_agree_with_the_oracle() {
    let q = build_task(TaskName::Quadratic);
    let rate = 0.2;
    let a = run_trials(&q, 1, rate, 20_000, &mut ElmRng::seed_from_u64(3)).unwrap();
    let b = run_trials(&q, 1, rate, 20_000, &mut ElmRng::seed_from_u64(3)).unwrap();
    assert_eq!(a, b);
    let p = exact_success_prob(&q, 1, rate).unwrap();
    assert!((a.success_rate - p).abs() <= 3.0 * a.sigma(p), "{} vs {p}", a.success_rate);
}

#[test]
fn csv_table() {
    let mut r = TrialReport::new(TaskName::FourParity, 2, OperatorKind::NodeMutation, 10, 3);
    r.oracle_rate = Some(0.25);
    let mut out = Vec::new();
    write_csv(&[r], &mut out).unwrap();
    assert_eq!(
        String::from_utf8(out).unwrap(),
        format!("{CSV_HEADER}\nfour_parity,2,node_mutation,10,3,3e-1,2.5e-1\n")
    );
}
