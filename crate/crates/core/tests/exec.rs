use std::io::Cursor;
use std::sync::atomic::Ordering;

use elm_core::exec::protocol::{ExecResponse, Handshake};
use elm_core::exec::*;
use elm_core::walker::{render_program, square_seed_spec};
use rayon::prelude::*;

const FAKE_WORKER: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/fake_worker.py");
const SQUARE_SEED: &str = include_str!("fixtures/square_seed.py");

fn pool(workers: usize, tweak: impl FnOnce(&mut PoolConfig)) -> WorkerPool {
    let mut config = PoolConfig::new(vec!["python3".into(), FAKE_WORKER.into()]);
    config.workers = workers;
    config.timeout_ms = 300;
    config.grace_ms = 200;
    tweak(&mut config);
    WorkerPool::start(config).expect("fake worker starts")
}

fn square_text() -> String {
    square_seed_spec().to_canonical()
}

#[test]
fn echoed_walker_is_accepted() {
    let p = pool(1, |_| {});
    assert_eq!(p.execute(&square_text()).unwrap(), square_seed_spec());
    let err = p.execute("SYNTAX").unwrap_err();
    assert_eq!(err.status, ExecStatus::SyntaxError);
    // a worker claiming success with a non-walker is still refused
    assert_eq!(p.execute("not a walker").unwrap_err().status, ExecStatus::InvalidWalker);
}

#[test]
fn hung_worker_is_killed_and_replaced() {
    let p = pool(1, |_| {});
    let start = std::time::Instant::now();
    assert_eq!(p.execute("HANG").unwrap_err().status, ExecStatus::Timeout);
    assert!(start.elapsed().as_millis() < 5000);
    assert_eq!(p.stats.killed_on_timeout.load(Ordering::Relaxed), 1);
    assert!(p.execute(&square_text()).is_ok());
    assert_eq!(p.stats.spawned.load(Ordering::Relaxed), 2);
}

#[test]
fn dying_worker_reports_resource_failure() {
    let p = pool(1, |_| {});
    assert_eq!(p.execute("EXIT").unwrap_err().status, ExecStatus::Resource);
    assert!(p.execute(&square_text()).is_ok());
}

#[test]
fn protocol_violations_discard_the_worker() {
    let p = pool(1, |_| {});
    assert_eq!(p.execute("WRONGID").unwrap_err().status, ExecStatus::RuntimeError);
    assert_eq!(p.execute("GARBAGE").unwrap_err().status, ExecStatus::RuntimeError);
    assert!(p.execute(&square_text()).is_ok());
    assert_eq!(p.stats.spawned.load(Ordering::Relaxed), 3);
}

#[test]
fn workers_are_recycled() {
    let p = pool(1, |c| c.recycle_after = 2);
    let pids: Vec<String> = (0..4).map(|_| p.execute("PID").unwrap_err().detail).collect();
    assert_eq!(pids[0], pids[1]);
    assert_eq!(pids[2], pids[3]);
    assert_ne!(pids[1], pids[2]);
    assert_eq!(p.stats.recycled.load(Ordering::Relaxed), 2);
}

#[test]
fn concurrent_callers_share_the_pool() {
    let p = pool(3, |_| {});
    let src = format!("SLOW{}", square_text());
    let results: Vec<_> = (0..12).into_par_iter().map(|_| p.execute(&src)).collect();
    assert!(results.iter().all(|r| r.as_ref().is_ok_and(|s| *s == square_seed_spec())));
    assert_eq!(p.stats.spawned.load(Ordering::Relaxed), 3);
}

#[test]
fn startup_failures() {
    assert!(matches!(WorkerPool::start(PoolConfig::new(vec![])), Err(PoolError::NoCommand)));
    let missing = PoolConfig::new(vec!["/nonexistent/worker".into()]);
    assert!(matches!(WorkerPool::start(missing), Err(PoolError::Spawn(_))));
    let mut rude = PoolConfig::new(vec!["python3".into(), "-c".into(), "print('hello')".into()]);
    rude.workers = 1;
    assert!(matches!(WorkerPool::start(rude), Err(PoolError::Handshake(_))));
}

#[test]
fn serve_speaks_the_protocol() {
    let program = render_program(&square_seed_spec());
    let requests = format!(
        "{}\n\nnot json\n{}\n",
        serde_json::json!({"id": 1, "source": program, "timeout_ms": 100, "memory_mb": 64}),
        serde_json::json!({"id": 2, "source": "def make_walker(:", "timeout_ms": 100, "memory_mb": 64}),
    );
    let mut out = Vec::new();
    serve(&ScriptInterpreter::new(), Cursor::new(requests), &mut out).unwrap();
    let lines: Vec<&str> = std::str::from_utf8(&out).unwrap().lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(serde_json::from_str::<Handshake>(lines[0]).unwrap(), Handshake::current());
    let r: Vec<ExecResponse> = lines[1..].iter().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!((r[0].id, r[0].status), (Some(1), ExecStatus::Ok));
    assert_eq!(r[0].walker.as_deref(), Some(square_seed_spec().to_canonical().as_str()));
    assert_eq!((r[1].id, r[1].status), (None, ExecStatus::RuntimeError));
    assert_eq!((r[2].id, r[2].status), (Some(2), ExecStatus::SyntaxError));
}

#[test]
fn interpreter_refuses_loops_without_crashing() {
    // programs with helpers and loops need an external worker
    let err = ScriptInterpreter::new().execute(SQUARE_SEED).unwrap_err();
    assert_eq!(err.status, ExecStatus::RuntimeError, "{}", err.detail);
    assert!(err.detail.contains("not supported"), "{}", err.detail);
}

#[test]
fn interpreter_arithmetic_and_math() {
    let src = "import math\n\ndef make_walker():\n    wc = walker_creator()\n    r = 2 ** 3 - 7 // 2\n    a = wc.add_joint(0, 0)\n    b = wc.add_joint(r, math.sqrt(16))\n    wc.add_muscle(a, b, False, abs(-1.5), 0.25)\n    return wc.get_walker()\n";
    let spec = ScriptInterpreter::new().execute(src).unwrap();
    assert_eq!(spec.joints[1].x, 5.0);
    assert_eq!(spec.joints[1].y, 4.0);
    assert!(spec.muscles[0].kind.is_oscillating());
}
