use std::sync::Arc;

use elm_core::exec::ScriptInterpreter;
use elm_core::mutation::{
    apply_diff_text, diff_prompt, export_accepted_diffs, read_records, CommitCatalog, LlmClient, LlmDiffOperator,
    LlmResponse, MockTransport, PromptOperator, TransportError, ENTRY_STUB,
};
use elm_core::physics::{make_terrain, SimConfig, TerrainKind, TerrainParams, TerrainProfile};
use elm_core::qd::*;
use elm_core::walker::{render_program, square_seed_spec};

fn reply(texts: &[&str]) -> Result<LlmResponse, TransportError> {
    Ok(LlmResponse {
        completions: texts.iter().map(|t| t.to_string()).collect(),
        usage: Default::default(),
    })
}

fn flat() -> TerrainProfile {
    make_terrain(TerrainKind::Flat, &TerrainParams::default()).unwrap()
}

// Each scripted diff anchors on the first three lines, which every parent in
// this run shares, so the outcome does not depend on which niche is picked.
const TALL_JOINT: &str = "@@ -3,1 +3,3 @@\n     j0 = wc.add_joint(0.0, 0.0)\n+    j9 = wc.add_joint(0.0, 20.0)\n+    wc.add_muscle(j0, j9)\n";
const COMMENT_ONLY: &str = "Sure, here it is.\n@@ -2,1 +2,2 @@\n     wc = walker_creator()\n+    # same walker, longer program\n";
const SHORTER_LITERAL: &str = "@@ -3,1 +3,1 @@\n-    j0 = wc.add_joint(0.0, 0.0)\n+    j0 = wc.add_joint(0, 0)\n";
const STALE: &str = "@@ -2,1 +2,1 @@\n-    wc = something_else()\n+    wc = walker_creator()\n";
const BREAKS_SYNTAX: &str = "@@ -2,1 +2,1 @@\n-    wc = walker_creator()\n+    wc = walker_creator(\n";

#[test]
fn scripted_diff_run_produces_expected_outcomes() {
    let mock = Arc::new(MockTransport::queue([
        Err(TransportError::Http { status: 503, body: "busy".into() }),
        reply(&[TALL_JOINT]),
        reply(&[COMMENT_ONLY]),
        reply(&[SHORTER_LITERAL]),
        reply(&["I am not able to write a diff for this."]),
        reply(&[STALE]),
        Err(TransportError::Http { status: 400, body: "bad request".into() }),
        reply(&[BREAKS_SYNTAX]),
        reply(&[]),
    ]));
    let client = Arc::new(LlmClient::with_transport(mock.clone()));
    let op = LlmDiffOperator::new(client.clone(), CommitCatalog::default());
    let (interp, terrain, sim) = (ScriptInterpreter::new(), flat(), SimConfig::default());
    let ctx = EvalContext { executor: &interp, terrain: &terrain, sim: &sim };

    let seed = render_program(&square_seed_spec());
    let mut map = MapState::new(GridConfig::default(), 42);
    seed_map(&mut map, &seed, &ctx).unwrap();
    evolve(&mut map, &op, &ctx, 8, 1, 1).unwrap();

    let outcomes: Vec<SlotOutcome> = map.log.outcomes().collect();
    use SlotOutcome::*;
    assert_eq!(outcomes, vec![NewNiche, Rejected, Improved, Invalid, Invalid, Invalid, NotRunnable, Invalid]);
    assert_eq!(map.niches_filled(), 2);
    assert_eq!(map.evals, 8);

    // the 503 was retried inside one proposal; the 400 was not
    let calls = mock.calls();
    assert_eq!(calls.len(), 9);
    assert_eq!(calls[0], calls[1]);
    let messages: Vec<String> = CommitCatalog::default().entries().iter().map(|m| m.text.clone()).collect();
    assert!(messages.iter().any(|m| calls[0].prompt == diff_prompt(&seed, m)));
    assert!(calls.iter().all(|c| c.n == 1 && c.prompt.ends_with("\n\ndiff")));

    let mut buf = Vec::new();
    let written = export_accepted_diffs(&map, &mut buf).unwrap();
    assert_eq!(written, map.log.count(NewNiche) + map.log.count(Improved));
    let records = read_records(buf.as_slice()).unwrap();
    assert_eq!(records.len(), 2);
    for r in &records {
        let child = apply_diff_text(&r.parent, &r.diff).unwrap();
        assert!(map.admissions().any(|(_, a)| a.genotype.source == child && a.fitness == r.fitness));
        assert!(messages.contains(&r.message));
    }
    assert_eq!(records[0].height, 20.0);
    assert!(records[1].diff.contains("+    j0 = wc.add_joint(0, 0)\n"));
}

#[test]
fn transport_outage_marks_whole_group_invalid() {
    let mock = Arc::new(MockTransport::from_fn(|_| Err(TransportError::Network("down".into()))));
    let client = Arc::new(LlmClient::with_transport(mock.clone()));
    let op = LlmDiffOperator::new(client, CommitCatalog::default());
    let (interp, terrain, sim) = (ScriptInterpreter::new(), flat(), SimConfig::default());
    let ctx = EvalContext { executor: &interp, terrain: &terrain, sim: &sim };
    let mut map = MapState::new(GridConfig::default(), 1);
    seed_map(&mut map, &render_program(&square_seed_spec()), &ctx).unwrap();
    let before_qd = map.qd_score();
    let rows = evolve(&mut map, &op, &ctx, 2, 4, 2).unwrap();
    assert!(rows.iter().all(|r| r.valid_pct == 0.0 && r.outcomes.len() == 4));
    assert_eq!(map.qd_score(), before_qd);
    // 2 iterations x 2 groups x 3 attempts
    assert_eq!(mock.calls().len(), 12);
}

#[test]
fn prompt_operator_splices_completions() {
    let seed = render_program(&square_seed_spec());
    let body = seed[ENTRY_STUB.len()..].to_string();
    let taller = body.replace(
        "    return wc.get_walker()\n",
        "    j9 = wc.add_joint(0.0, 20.0)\n    wc.add_muscle(j0, j9)\n    return wc.get_walker()\n",
    );
    let texts = [body.clone(), format!("{taller}\n# A walker implementation\ndef extra():\n"), "   ".to_string()];
    let mock = Arc::new(MockTransport::from_fn(move |req| {
        assert!(req.prompt.starts_with("# A walker implementation\n"));
        assert!(req.prompt.ends_with(ENTRY_STUB));
        Ok(LlmResponse {
            completions: texts.to_vec(),
            usage: Default::default(),
        })
    }));
    let op = PromptOperator::new(Arc::new(LlmClient::with_transport(mock)), CommitCatalog::default());
    let (interp, terrain, sim) = (ScriptInterpreter::new(), flat(), SimConfig::default());
    let ctx = EvalContext { executor: &interp, terrain: &terrain, sim: &sim };
    let mut map = MapState::new(GridConfig::default(), 9);
    seed_map(&mut map, &seed, &ctx).unwrap();
    evolve(&mut map, &op, &ctx, 1, 3, 3).unwrap();
    use SlotOutcome::*;
    assert_eq!(map.log.outcomes().collect::<Vec<_>>(), vec![Rejected, NewNiche, Invalid]);

    let mut buf = Vec::new();
    assert_eq!(export_accepted_diffs(&map, &mut buf).unwrap(), 1);
    let records = read_records(buf.as_slice()).unwrap();
    assert_eq!(apply_diff_text(&records[0].parent, &records[0].diff).unwrap(), format!("{ENTRY_STUB}{taller}"));
}
