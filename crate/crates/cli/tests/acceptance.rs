//! End-to-end acceptance checks. Each prints one PASS or FAIL line with its
//! measured values and wall time; the process exits non-zero on any FAIL.

use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::{Duration, Instant};

use elm_core::dataset::{final_map_distill, threshold_distill, RunArchive};
use elm_core::exec::ScriptInterpreter;
use elm_core::mutation::diff::{ApplyError, DiffError};
use elm_core::mutation::{
    apply_diff_text, diff_of, export_accepted_diffs, parse_unified_diff, read_records, CommitCatalog, LlmClient,
    LlmDiffOperator, LlmResponse, MockTransport, SpecMutator, TransportError,
};
use elm_core::physics::*;
use elm_core::qd::snapshot::{restore, snapshot};
use elm_core::qd::*;
use elm_core::walker::{
    behavior_descriptor, parse_spec, render_program, square_seed_spec, validate, BehaviorDescriptor, MuscleKind,
    WalkerBuilder, WalkerSpec,
};
use elm_core::ElmRng;
use elm_gpbench::{build_task, exact_success_prob, run_trials, tune_rate, TaskName};
use rand::{Rng, SeedableRng};
use statrs::distribution::{ChiSquared, ContinuousCDF};

const SQUARE_TEXT: &str = include_str!("../../core/tests/fixtures/square_walker.txt");

type Check = fn() -> Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn flat() -> TerrainProfile {
    make_terrain(TerrainKind::Flat, &TerrainParams::default()).unwrap()
}

fn square_fidelity() -> Result<String, String> {
    let mut wc = WalkerBuilder::new();
    let sides: Vec<usize> = [(0.0, 0.0), (0.0, 10.0), (10.0, 10.0), (10.0, 0.0)]
        .into_iter()
        .map(|(x, y)| wc.add_joint(x, y).unwrap())
        .collect();
    let center = wc.add_joint(5.0, 5.0).unwrap();
    for k in 0..3 {
        wc.add_muscle(sides[k], sides[k + 1], MuscleKind::Distance).unwrap();
    }
    wc.add_muscle(sides[3], sides[0], MuscleKind::Distance).unwrap();
    wc.add_muscle(sides[3], center, MuscleKind::Distance).unwrap();
    for (side, amplitude) in [(0, 5.0), (1, 10.0), (2, 2.0)] {
        wc.add_muscle(sides[side], center, MuscleKind::Oscillating { amplitude, phase: 0.0 }).unwrap();
    }
    let built = wc.build();

    let joints: Vec<(f64, f64)> = built.joints.iter().map(|j| (j.x, j.y)).collect();
    ensure(joints == [(0.0, 0.0), (0.0, 10.0), (10.0, 10.0), (10.0, 0.0), (5.0, 5.0)], || format!("joints {joints:?}"))?;
    let kinds: String = built.muscles.iter().map(|m| if m.kind.is_oscillating() { 'o' } else { 'd' }).collect();
    ensure(kinds == "dddddooo", || format!("muscle kinds {kinds}"))?;

    let reference = parse_spec(SQUARE_TEXT).map_err(|e| format!("reference text: {e}"))?;
    ensure(validate(&reference).ok(), || "reference walker fails validation".into())?;
    ensure(reference.joints == built.joints, || "reference joints differ".into())?;
    let pairs = |s: &WalkerSpec| s.muscles.iter().map(|m| (m.pair(), m.kind.is_oscillating())).collect::<Vec<_>>();
    ensure(pairs(&reference) == pairs(&built), || "reference muscles differ".into())?;

    let amps: Vec<f64> = built
        .muscles
        .iter()
        .filter_map(|m| match m.kind {
            MuscleKind::Oscillating { amplitude, .. } => Some(amplitude),
            MuscleKind::Distance => None,
        })
        .collect();
    let cap = 0.3 * 50f64.sqrt();
    ensure(amps == [cap, cap, 2.0], || format!("amplitudes {amps:?}"))?;
    ensure(built == square_seed_spec(), || "builtin seed differs".into())?;
    Ok(format!(
        "amplitudes {:.4} {:.4} {:.4}; reference text prints 2.12 for all three",
        amps[0], amps[1], amps[2]
    ))
}

fn check_run_rows(rows: &[LogRow], batch: u64) -> Result<(), String> {
    for (i, r) in rows.iter().enumerate() {
        ensure(r.evals == batch * (i as u64 + 1) && r.outcomes.len() as u64 == batch, || {
            format!("row {i}: evals {} outcomes {}", r.evals, r.outcomes.len())
        })?;
    }
    for w in rows.windows(2) {
        ensure(w[1].qd >= w[0].qd, || format!("qd fell at iteration {}", w[1].iteration))?;
        ensure(w[1].niches >= w[0].niches, || format!("niches fell at iteration {}", w[1].iteration))?;
    }
    Ok(())
}

fn map_elites_invariants() -> Result<String, String> {
    let (interp, terrain, sim) = (ScriptInterpreter::new(), flat(), SimConfig::default());
    let ctx = EvalContext { executor: &interp, terrain: &terrain, sim: &sim };
    let op = SpecMutator::new();
    let seeded = || {
        let mut map = MapState::new(GridConfig::default(), 7);
        seed_map(&mut map, &render_program(&square_seed_spec()), &ctx).unwrap();
        map
    };
    let err = |e: EvolveError| e.to_string();

    let mut straight = seeded();
    let rows = evolve(&mut straight, &op, &ctx, 250, 40, 1).map_err(err)?;
    check_run_rows(&rows, 40)?;
    ensure(straight.evals == 10_000, || format!("evals {}", straight.evals))?;
    let evaluated = straight
        .log
        .outcomes()
        .filter(|o| !matches!(o, SlotOutcome::Invalid | SlotOutcome::NotRunnable))
        .count();
    ensure(straight.next_id == 1 + evaluated as u64, || "genotype ids do not match evaluations".into())?;
    ensure(straight.niches_filled() > 1, || format!("niches {}", straight.niches_filled()))?;

    let mut first = seeded();
    evolve(&mut first, &op, &ctx, 125, 40, 1).map_err(err)?;
    let mut resumed = restore(&snapshot(&first)).map_err(|e| e.to_string())?;
    ensure(resumed == first, || "restored map differs".into())?;
    evolve(&mut resumed, &op, &ctx, 125, 40, 1).map_err(err)?;
    ensure(snapshot(&resumed) == snapshot(&straight), || "resumed run diverged".into())?;
    Ok(format!(
        "evals {} niches {} qd {:.2}, resume at 5000 identical",
        straight.evals,
        straight.niches_filled(),
        straight.qd_score()
    ))
}

fn grid_size() -> Result<String, String> {
    let n = GridConfig::default().total_niches();
    ensure(n == 1728, || format!("{n} niches"))?;
    let restored = restore(&snapshot(&MapState::new(GridConfig::default(), 0))).map_err(|e| e.to_string())?;
    ensure(restored.grid.total_niches() == n, || "grid changed through a snapshot".into())?;
    Ok(format!("{n} niches"))
}

fn parity_node_mutation() -> Result<String, String> {
    let task = build_task(TaskName::FourParity);
    let rate = tune_rate(&task);
    let mut rng = ElmRng::seed_from_u64(0);
    let mut observed = Vec::new();
    let mut detail = format!("rate {rate}");
    for k in 1..=5 {
        let r = run_trials(&task, k, rate, 100_000, &mut rng).map_err(|e| e.to_string())?;
        let p = exact_success_prob(&task, k, rate).map_err(|e| e.to_string())?;
        if k <= 4 {
            let dev = (r.success_rate - p).abs();
            ensure(dev <= 3.0 * r.sigma(p), || format!("k={k}: rate {} oracle {p:e}", r.success_rate))?;
        } else {
            ensure(r.success_rate < 1e-4 && p < 1e-4, || format!("k=5: rate {} oracle {p:e}", r.success_rate))?;
        }
        detail += &format!("; k={k} {}/1e5 vs {p:.3e}", r.successes);
        observed.push(r.success_rate);
    }
    ensure(observed.windows(2).all(|w| w[1] <= w[0]), || format!("not monotone: {observed:?}"))?;
    Ok(detail)
}

fn quadratic_node_mutation() -> Result<String, String> {
    let task = build_task(TaskName::Quadratic);
    let rate = tune_rate(&task);
    let mut rng = ElmRng::seed_from_u64(0);
    let mut detail = format!("rate {rate}");
    for k in 1..=2 {
        let r = run_trials(&task, k, rate, 100_000, &mut rng).map_err(|e| e.to_string())?;
        let p = exact_success_prob(&task, k, rate).map_err(|e| e.to_string())?;
        ensure((r.success_rate - p).abs() <= 3.0 * r.sigma(p), || format!("k={k}: rate {} oracle {p:e}", r.success_rate))?;
        detail += &format!("; k={k} {}/1e5 vs {p:.3e}", r.successes);
    }
    Ok(detail)
}

fn random_text(rng: &mut ElmRng) -> String {
    const LINES: [&str; 6] = ["a", "b", "c", "    j0 = wc.add_joint(0, 1)", "", "    x"];
    let n = rng.random_range(0..25);
    let mut s = (0..n).map(|_| LINES[rng.random_range(0..LINES.len())]).collect::<Vec<_>>().join("\n");
    if n > 0 && rng.random_bool(0.5) {
        s.push('\n');
    }
    s
}

fn diff_round_trip() -> Result<String, String> {
    let mut rng = ElmRng::seed_from_u64(1000);
    for i in 0..1000 {
        let (a, b) = (random_text(&mut rng), random_text(&mut rng));
        let d = diff_of(&a, &b);
        let applied = apply_diff_text(&a, &d).map_err(|e| format!("pair {i}: {e}"))?;
        ensure(applied == b, || format!("pair {i}: wrong result"))?;
        let reprinted = parse_unified_diff(&d).map_err(|e| format!("pair {i}: {e}"))?.to_string();
        ensure(reprinted == d, || format!("pair {i}: reprint differs"))?;
    }
    let a = "def make_walker():\n    wc = walker_creator()\n    j0 = wc.add_joint(0, 0)\n    return wc.get_walker()\n";
    let d = diff_of(a, &a.replace("(0, 0)", "(1, 0)"));
    let drifted = a.replace("wc = walker_creator()", "wc = walker_creator() # edited");
    match apply_diff_text(&drifted, &d) {
        Err(DiffError::Apply(ApplyError::Mismatch { .. })) => Ok("1000 pairs; stale context rejected".into()),
        other => Err(format!("stale context: {other:?}")),
    }
}

fn trajectory_bits(r: &SimResult) -> Vec<u64> {
    let mut out = vec![r.fitness.to_bits()];
    for s in &r.com_trajectory {
        out.extend([s.t.to_bits(), s.x.to_bits(), s.y.to_bits()]);
    }
    out
}

fn physics_properties() -> Result<String, String> {
    let config = SimConfig::default();
    let spec = square_seed_spec();
    let first = trajectory_bits(&simulate(&spec, &flat(), &config));
    for run in 1..5 {
        ensure(trajectory_bits(&simulate(&spec, &flat(), &config)) == first, || format!("run {run} differs"))?;
    }

    let mut worst = 0.0f64;
    for kind in TerrainKind::ALL {
        let t = make_terrain(kind, &TerrainParams::default()).unwrap();
        simulate_observed(&spec, &t, &config, |s| {
            for p in &s.pos {
                worst = worst.max(t.ground.height(p.x) - p.y);
                for w in &t.walls {
                    worst = worst.max(match w.side {
                        WallSide::BlocksRight => p.x - w.x,
                        WallSide::BlocksLeft => w.x - p.x,
                    });
                }
            }
        });
    }
    ensure(worst <= 1e-3, || format!("penetration {worst:e}"))?;

    let mut lifted = spec.clone();
    for j in &mut lifted.joints {
        j.y += 100.0;
    }
    let free = SimConfig { gravity: 0.0, friction: 0.0, ..config };
    let mut state = SimState::at_rest(&lifted);
    state.vel[0] = Vec2::new(1.0, 0.5);
    state.vel[2] = Vec2::new(-0.3, 0.2);
    let mut prev = state.momentum();
    let mut drift = 0.0f64;
    for _ in 0..600 {
        step(&mut state, &flat(), &free);
        let p = state.momentum();
        drift = drift.max((p - prev).length());
        prev = p;
    }
    ensure(drift < 1e-6, || format!("momentum drift {drift:e} per step"))?;
    Ok(format!("5 identical runs; max penetration {worst:.2e}; max drift {drift:.2e}/step"))
}

fn right_wall() -> Result<String, String> {
    let params = TerrainParams { wall_distance: 5.0, ..TerrainParams::default() };
    let t = make_terrain(TerrainKind::RightWall, &params).unwrap();
    let spec = square_seed_spec();
    let bound = 5.0 + behavior_descriptor(&spec).width / 2.0;
    let r = simulate(&spec, &t, &SimConfig::default());
    let max_x = r.com_trajectory.iter().map(|s| s.x).fold(f64::MIN, f64::max);
    ensure(max_x <= bound, || format!("com x {max_x} > {bound}"))?;
    Ok(format!("max com x {max_x:.4} <= {bound}"))
}

fn synthetic_run(id: &str, seed: &str, inserts: &[(usize, f64)]) -> RunArchive {
    let mut map = MapState::new(GridConfig::default(), 0).with_meta(id, seed);
    for (i, &(n, f)) in inserts.iter().enumerate() {
        let g = Genotype {
            id: i as u64,
            source: format!("{id}-{i}"),
            parent_id: None,
            operator: OperatorTag::SpecMutate,
            commit_message: None,
            diff: None,
            generation: 0,
        };
        let d = BehaviorDescriptor { height: 2.5 * n as f64 + 1.0, width: 1.0, mass: 1.0 };
        map.try_insert(g, square_seed_spec(), f, d);
    }
    RunArchive::from_map(map).unwrap()
}

fn distillation() -> Result<String, String> {
    let archives = vec![
        synthetic_run("r2", "square", &[(0, 3.0), (1, 1.0), (1, 4.0)]),
        synthetic_run("r1", "square", &[(0, 2.0), (0, 5.0), (0, 10.0), (2, 7.0)]),
        synthetic_run("r3", "radial", &[(0, 9.0), (3, 0.5), (3, 0.6), (3, 0.4)]),
    ];
    let keys = |pct: f64| -> Result<BTreeSet<(String, String)>, String> {
        let ds = threshold_distill(&archives, pct).map_err(|e| e.to_string())?;
        Ok(ds.examples.into_iter().map(|e| (e.run, e.source)).collect())
    };
    let pcts = [0.1, 0.5, 0.8, 1.0];
    let sets: Vec<_> = pcts.iter().map(|&p| keys(p)).collect::<Result<_, _>>()?;
    for (i, w) in sets.windows(2).enumerate() {
        ensure(w[1].is_subset(&w[0]), || format!("pct {} not inside pct {}", pcts[i + 1], pcts[i]))?;
    }
    let counts: Vec<usize> = sets.iter().map(BTreeSet::len).collect();
    ensure(counts == [10, 7, 6, 4], || format!("threshold counts {counts:?}"))?;
    let finals = final_map_distill(&archives).map_err(|e| e.to_string())?;
    let filled: usize = archives.iter().map(|a| a.map.niches_filled()).sum();
    ensure(finals.examples.len() == filled && filled == 6, || format!("final {} filled {filled}", finals.examples.len()))?;
    Ok(format!("threshold counts {counts:?} nest; final map {filled}"))
}

fn commit_messages() -> Result<String, String> {
    let catalog = CommitCatalog::default();
    let weights: Vec<f64> = catalog.entries().iter().map(|m| m.weight).collect();
    let total: f64 = weights.iter().sum();
    let expected: Vec<f64> = weights.iter().map(|w| w / total).collect();
    ensure(expected.len() == 3, || "catalog size".into())?;
    let mut rng = ElmRng::seed_from_u64(2024);
    let mut counts = [0u64; 3];
    let n = 100_000;
    for _ in 0..n {
        let m = catalog.sample(&mut rng);
        counts[catalog.entries().iter().position(|e| e.text == m.text).unwrap()] += 1;
    }
    let stat: f64 = counts
        .iter()
        .zip([0.4, 0.3, 0.3])
        .map(|(&o, p)| (o as f64 - p * n as f64).powi(2) / (p * n as f64))
        .sum();
    let p = 1.0 - ChiSquared::new(2.0).unwrap().cdf(stat);
    ensure(p > 0.01, || format!("counts {counts:?} p {p}"))?;
    Ok(format!("counts {counts:?} p {p:.3}"))
}

const TALL_JOINT: &str = "@@ -3,1 +3,3 @@\n     j0 = wc.add_joint(0.0, 0.0)\n+    j9 = wc.add_joint(0.0, 20.0)\n+    wc.add_muscle(j0, j9)\n";
const COMMENT_ONLY: &str = "Sure, here it is.\n@@ -2,1 +2,2 @@\n     wc = walker_creator()\n+    # same walker, longer program\n";
const SHORTER_LITERAL: &str = "@@ -3,1 +3,1 @@\n-    j0 = wc.add_joint(0.0, 0.0)\n+    j0 = wc.add_joint(0, 0)\n";
const STALE: &str = "@@ -2,1 +2,1 @@\n-    wc = something_else()\n+    wc = walker_creator()\n";
const BREAKS_SYNTAX: &str = "@@ -2,1 +2,1 @@\n-    wc = walker_creator()\n+    wc = walker_creator(\n";

fn mock_llm_run() -> Result<String, String> {
    let reply = |t: &[&str]| Ok(LlmResponse::texts(t.iter().map(|s| s.to_string()).collect::<Vec<_>>()));
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
    let op = LlmDiffOperator::new(client, CommitCatalog::default());
    let (interp, terrain, sim) = (ScriptInterpreter::new(), flat(), SimConfig::default());
    let ctx = EvalContext { executor: &interp, terrain: &terrain, sim: &sim };
    let mut map = MapState::new(GridConfig::default(), 42);
    seed_map(&mut map, &render_program(&square_seed_spec()), &ctx).map_err(|e| e.to_string())?;
    evolve(&mut map, &op, &ctx, 8, 1, 1).map_err(|e| e.to_string())?;

    use SlotOutcome::*;
    let outcomes: Vec<SlotOutcome> = map.log.outcomes().collect();
    let want = [NewNiche, Rejected, Improved, Invalid, Invalid, Invalid, NotRunnable, Invalid];
    ensure(outcomes == want, || format!("outcomes {outcomes:?}"))?;
    ensure(mock.calls().len() == 9, || format!("{} transport calls", mock.calls().len()))?;

    let mut buf = Vec::new();
    export_accepted_diffs(&map, &mut buf).map_err(|e| e.to_string())?;
    let records = read_records(buf.as_slice()).map_err(|e| e.to_string())?;
    ensure(records.len() == 2, || format!("{} exported diffs", records.len()))?;
    for r in &records {
        let child = apply_diff_text(&r.parent, &r.diff).map_err(|e| format!("exported diff: {e}"))?;
        ensure(map.admissions().any(|(_, a)| a.genotype.source == child && a.fitness == r.fitness), || {
            "exported diff does not rebuild an admitted program".into()
        })?;
    }
    Ok(format!("{outcomes:?}; 2 exported diffs apply"))
}

fn main() {
    let checks: [(&str, Check, u64); 11] = [
        ("square walker fidelity", square_fidelity, 1),
        ("map-elites invariants over 10k evals", map_elites_invariants, 120),
        ("default grid size", grid_size, 1),
        ("four_parity node mutation vs exact oracle", parity_node_mutation, 300),
        ("quadratic node mutation vs exact oracle", quadratic_node_mutation, 60),
        ("unified diff round trip", diff_round_trip, 60),
        ("physics determinism, contact, momentum", physics_properties, 30),
        ("right wall bounds center of mass", right_wall, 30),
        ("dataset distillation", distillation, 30),
        ("commit message weights", commit_messages, 30),
        ("mock model end to end", mock_llm_run, 60),
    ];
    let mut failed = 0;
    for (name, check, budget) in checks {
        let start = Instant::now();
        let result = check();
        let took = start.elapsed();
        let over = took > Duration::from_secs(budget);
        match result {
            Ok(detail) if !over => println!("PASS {name}: {detail} ({:.2}s)", took.as_secs_f64()),
            Ok(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail} ({:.2}s over the {budget}s budget)", took.as_secs_f64());
            }
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why} ({:.2}s)", took.as_secs_f64());
            }
        }
    }
    println!("{} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
