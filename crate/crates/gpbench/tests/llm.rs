use std::sync::Arc;

use elm_core::mutation::{diff_of, LlmClient, LlmResponse, MockTransport, TransportError, FIX_BUGS_MESSAGE};
use elm_gpbench::*;

fn client(replies: Vec<Result<LlmResponse, TransportError>>) -> (Arc<MockTransport>, LlmClient) {
    let mock = Arc::new(MockTransport::queue(replies));
    (mock.clone(), LlmClient::with_transport(mock))
}

/// What a prompt-operator completion looks like: everything after the `def ` cue.
fn as_completion(source: &str) -> String {
    let start = source.find("def ").unwrap() + 4;
    format!("{}\n# A buggy implementation\ndef other():\n    return 1\n", &source[start..])
}

#[test]
fn reference_completion_is_a_success() {
    let p = build_task(TaskName::FourParity);
    let (mock, c) = client(vec![Ok(LlmResponse::texts([as_completion(&render(&p, &p.reference))]))]);
    let r = llm_fix(&p, 3, &c, 1, GpOperator::Prompt).unwrap();
    assert_eq!((r.report.successes, r.wrong, r.unusable), (1, 0, 0));
    let prompt = &mock.calls()[0].prompt;
    assert!(prompt.starts_with("# A buggy implementation\n#!/usr/bin/python3\ndef parity(b1,b2,b3,b4):\n"));
    assert!(prompt.contains("sum([c1,c2,c3,b4])"));
    assert!(prompt.ends_with("return bit_sum % 2\n\n# Fixed Bugs\ndef "));
}

#[test]
fn broken_text_is_a_counted_failure() {
    let q = build_task(TaskName::Quadratic);
    let (_, c) = client(vec![Ok(LlmResponse::texts(["quadratic(a,b,c,x):\n    return a*(x+\n"]))]);
    let r = llm_fix(&q, 1, &c, 1, GpOperator::Prompt).unwrap();
    assert_eq!((r.report.successes, r.report.n_trials, r.unusable), (0, 1, 1));
}

#[test]
fn mixed_batch_accounting() {
    let q = build_task(TaskName::Quadratic);
    let buggy = render(&q, &inject_bugs(&q, 2).unwrap());
    let fixed = render(&q, &q.reference);
    let good_diff = diff_of(&buggy, &fixed).to_string();
    let half_diff = diff_of(&buggy, &render(&q, &inject_bugs(&q, 1).unwrap())).to_string();
    let replies = vec![
        Ok(LlmResponse::texts([
            format!("Here you go:\n{good_diff}"),
            half_diff,
            "no diff here".to_string(),
        ])),
        Ok(LlmResponse::texts([good_diff.clone(), good_diff])),
    ];
    let (mock, c) = client(replies);
    let r = llm_fix(&q, 2, &c, 3, GpOperator::Diff).unwrap();
    assert_eq!((r.report.successes, r.wrong, r.unusable), (1, 1, 1));
    assert_eq!(r.report.successes + r.wrong + r.unusable, r.report.n_trials);
    assert!(mock.calls()[0].prompt.ends_with(&format!("commit message: {FIX_BUGS_MESSAGE}\n\ndiff")));
    let r = llm_fix(&q, 2, &c, 2, GpOperator::Diff).unwrap();
    assert_eq!(r.report.success_rate, 1.0);
}

#[test]
fn short_replies_and_outages() {
    let p = build_task(TaskName::FourParity);
    let (_, c) = client(vec![Ok(LlmResponse::texts(Vec::<String>::new()))]);
    let r = llm_fix(&p, 1, &c, 4, GpOperator::Prompt).unwrap();
    assert_eq!((r.report.successes, r.unusable), (0, 4));
    let (_, c) = client(vec![Err(TransportError::Http { status: 400, body: "bad".into() })]);
    assert!(matches!(llm_fix(&p, 1, &c, 1, GpOperator::Prompt), Err(FixError::Transport(_))));
}

#[test]
fn completion_stops_at_the_next_top_level_block() {
    let f = completion_function("parity(b1,b2,b3,b4):\n    return 1\n\n# next\ndef parity(b1):\n");
    assert_eq!(f, "def parity(b1,b2,b3,b4):\n    return 1\n\n");
}
