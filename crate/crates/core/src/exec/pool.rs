use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use thiserror::Error;

use super::protocol::{ExecRequest, ExecResponse, Handshake, PROTOCOL_NAME, PROTOCOL_VERSION};
use super::{accept_walker_text, ExecFailure, ExecStatus, Executor};
use crate::walker::WalkerSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct PoolConfig {
    /// Program and arguments that start one worker.
    pub command: Vec<String>,
    pub workers: usize,
    pub timeout_ms: u64,
    pub memory_mb: u64,
    /// Extra time past `timeout_ms` before the engine kills a silent worker.
    pub grace_ms: u64,
    pub handshake_ms: u64,
    /// Restart each worker after this many executions.
    pub recycle_after: u64,
    pub entrypoint: String,
}

impl PoolConfig {
    pub fn new(command: Vec<String>) -> Self {
        Self {
            command,
            workers: 4,
            timeout_ms: 2000,
            memory_mb: 256,
            grace_ms: 1000,
            handshake_ms: 10_000,
            recycle_after: 500,
            entrypoint: "make_walker".into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum PoolError {
    #[error("empty worker command")]
    NoCommand,
    #[error("cannot start worker: {0}")]
    Spawn(std::io::Error),
    #[error("worker handshake failed: {0}")]
    Handshake(String),
}

#[derive(Debug, Default)]
pub struct PoolStats {
    pub executions: AtomicU64,
    pub spawned: AtomicU64,
    pub killed_on_timeout: AtomicU64,
    pub crashed: AtomicU64,
    pub recycled: AtomicU64,
}

struct Worker {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
    served: u64,
}

impl Worker {
    fn kill(mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Executes sources on a fixed number of worker subprocesses.
///
/// Each worker handles one request at a time. A worker that misses its
/// deadline is killed and replaced; workers are also replaced after
/// `recycle_after` executions.
pub struct WorkerPool {
    config: PoolConfig,
    slots: Mutex<Vec<Option<Worker>>>,
    available: Condvar,
    next_id: AtomicU64,
    pub stats: PoolStats,
}

impl WorkerPool {
    /// Starts all workers eagerly and checks their handshakes.
    pub fn start(config: PoolConfig) -> Result<Self, PoolError> {
        if config.command.is_empty() {
            return Err(PoolError::NoCommand);
        }
        let pool = Self {
            slots: Mutex::new(Vec::new()),
            available: Condvar::new(),
            next_id: AtomicU64::new(0),
            stats: PoolStats::default(),
            config,
        };
        let mut slots = Vec::new();
        for _ in 0..pool.config.workers.max(1) {
            slots.push(Some(pool.spawn()?));
        }
        *pool.slots.lock().unwrap() = slots;
        Ok(pool)
    }

    pub fn config(&self) -> &PoolConfig {
        &self.config
    }

    fn spawn(&self) -> Result<Worker, PoolError> {
        let mut child = Command::new(&self.config.command[0])
            .args(&self.config.command[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(PoolError::Spawn)?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        self.stats.spawned.fetch_add(1, Ordering::Relaxed);
        let worker = Worker {
            child,
            stdin,
            lines: rx,
            served: 0,
        };
        let hello = match worker.lines.recv_timeout(Duration::from_millis(self.config.handshake_ms)) {
            Ok(line) => line,
            Err(e) => {
                worker.kill();
                return Err(PoolError::Handshake(format!("no handshake line ({e})")));
            }
        };
        match serde_json::from_str::<Handshake>(&hello) {
            Ok(h) if h.protocol == PROTOCOL_NAME && h.version == PROTOCOL_VERSION => Ok(worker),
            _ => {
                worker.kill();
                Err(PoolError::Handshake(format!("unexpected handshake '{hello}'")))
            }
        }
    }

    fn checkout(&self) -> Option<Worker> {
        let mut slots = self.slots.lock().unwrap();
        loop {
            if let Some(i) = slots.iter().position(|s| s.is_some()) {
                return slots.swap_remove(i);
            }
            if let Some(i) = slots.iter().position(Option::is_none) {
                // a dead slot: the caller respawns it
                slots.swap_remove(i);
                return None;
            }
            slots = self.available.wait(slots).unwrap();
        }
    }

    fn checkin(&self, worker: Option<Worker>) {
        self.slots.lock().unwrap().push(worker);
        self.available.notify_one();
    }

    fn run_on(&self, worker: &mut Worker, source: &str) -> Result<ExecResponse, (ExecFailure, bool)> {
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        let req = ExecRequest {
            id,
            source: source.to_string(),
            entrypoint: self.config.entrypoint.clone(),
            timeout_ms: self.config.timeout_ms,
            memory_mb: self.config.memory_mb,
        };
        let line = serde_json::to_string(&req).expect("request serializes");
        let sent = writeln!(worker.stdin, "{line}").and_then(|_| worker.stdin.flush());
        if sent.is_err() {
            self.stats.crashed.fetch_add(1, Ordering::Relaxed);
            return Err((ExecFailure::new(ExecStatus::RuntimeError, "worker exited"), true));
        }
        let deadline = Duration::from_millis(self.config.timeout_ms + self.config.grace_ms);
        match worker.lines.recv_timeout(deadline) {
            Ok(reply) => {
                let resp: ExecResponse = serde_json::from_str(&reply).map_err(|e| {
                    (
                        ExecFailure::new(ExecStatus::RuntimeError, format!("bad worker response: {e}")),
                        true,
                    )
                })?;
                if resp.id != Some(id) || !resp.well_formed() {
                    return Err((
                        ExecFailure::new(ExecStatus::RuntimeError, "worker response out of protocol"),
                        true,
                    ));
                }
                Ok(resp)
            }
            Err(RecvTimeoutError::Timeout) => {
                self.stats.killed_on_timeout.fetch_add(1, Ordering::Relaxed);
                Err((
                    ExecFailure::new(ExecStatus::Timeout, format!("no response within {} ms", deadline.as_millis())),
                    true,
                ))
            }
            Err(RecvTimeoutError::Disconnected) => {
                self.stats.crashed.fetch_add(1, Ordering::Relaxed);
                Err((ExecFailure::new(ExecStatus::Resource, "worker died during execution"), true))
            }
        }
    }
}

impl Executor for WorkerPool {
    fn execute(&self, source: &str) -> Result<WalkerSpec, ExecFailure> {
        self.stats.executions.fetch_add(1, Ordering::Relaxed);
        let mut worker = match self.checkout() {
            Some(w) => w,
            None => match self.spawn() {
                Ok(w) => w,
                Err(e) => {
                    self.checkin(None);
                    return Err(ExecFailure::new(ExecStatus::RuntimeError, e.to_string()));
                }
            },
        };
        let result = self.run_on(&mut worker, source);
        worker.served += 1;
        let discard = matches!(result, Err((_, true)));
        let worn = worker.served >= self.config.recycle_after;
        if discard || worn {
            if worn && !discard {
                self.stats.recycled.fetch_add(1, Ordering::Relaxed);
            }
            worker.kill();
            self.checkin(self.spawn().ok());
        } else {
            self.checkin(Some(worker));
        }
        match result {
            Err((f, _)) => Err(f),
            Ok(resp) => match resp.status {
                ExecStatus::Ok => accept_walker_text(resp.walker.as_deref().unwrap_or_default()),
                status => Err(ExecFailure::new(status, resp.error.unwrap_or_default())),
            },
        }
    }
}

impl Drop for WorkerPool {
    fn drop(&mut self) {
        let slots = std::mem::take(&mut *self.slots.lock().unwrap());
        for w in slots.into_iter().flatten() {
            // closing stdin lets a well-behaved worker exit on its own
            let Worker { mut child, stdin, .. } = w;
            drop(stdin);
            let mut waited = 0;
            while waited < 50 {
                if let Ok(Some(_)) = child.try_wait() {
                    break;
                }
                std::thread::sleep(Duration::from_millis(10));
                waited += 1;
            }
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}
