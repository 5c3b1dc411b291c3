//! Persistent-worker execution for small-batch query streams.
//!
//! A bounded multi-producer ring feeds long-lived worker threads; nothing is
//! spawned per query. Submission applies backpressure: a job occupies its
//! queue slot from submit until completion, so at most `capacity` jobs are in
//! flight. Each ticket resolves exactly once (enforced by move semantics on
//! `wait`). Workers spin briefly on an empty queue, then park until new work
//! or shutdown.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use crossbeam_queue::ArrayQueue;

use crate::engine::FilteredIndex;
use crate::error::{Error, Result};
use crate::hs_graph::SearchParams;
use crate::multilabel::{AndPolicy, LabelExpr};
use crate::topk::TopKResult;

/// One queued search request.
#[derive(Debug, Clone)]
pub struct SearchJob {
    pub query: Vec<f32>,
    pub expr: LabelExpr,
    pub policy: AndPolicy,
    pub params: SearchParams,
}

struct Slot {
    result: Mutex<Option<Result<TopKResult>>>,
    done: Condvar,
}

/// Handle to one submitted job. `wait` consumes the ticket, so a result can
/// only be taken once.
pub struct JobTicket {
    id: u64,
    slot: Arc<Slot>,
}

impl JobTicket {
    pub fn id(&self) -> u64 {
        self.id
    }

    /// Blocks until the job completes and returns what the synchronous
    /// engine call would have produced.
    pub fn wait(self) -> Result<TopKResult> {
        let mut guard = self
            .slot
            .result
            .lock()
            .unwrap_or_else(|p| p.into_inner());
        loop {
            if let Some(res) = guard.take() {
                return res;
            }
            guard = self
                .slot
                .done
                .wait(guard)
                .unwrap_or_else(|p| p.into_inner());
        }
    }
}

struct Shared {
    engine: Arc<FilteredIndex>,
    queue: ArrayQueue<(u64, SearchJob, Arc<Slot>)>,
    accepting: AtomicBool,
    exit: AtomicBool,
    in_flight: AtomicUsize,
    high_water: AtomicUsize,
    next_id: AtomicU64,
    capacity: usize,
    work_signal: (Mutex<()>, Condvar),
    space_signal: (Mutex<()>, Condvar),
}

pub struct Executor {
    shared: Arc<Shared>,
    workers: Mutex<Vec<JoinHandle<()>>>,
    shut_down: Mutex<bool>,
}

impl Executor {
    /// Spawns `n_workers` persistent workers over a ring of `capacity` slots.
    pub fn start(engine: Arc<FilteredIndex>, n_workers: usize, capacity: usize) -> Result<Self> {
        if n_workers == 0 || capacity == 0 {
            return Err(Error::Param(
                "executor needs at least one worker and one queue slot".to_string(),
            ));
        }
        let shared = Arc::new(Shared {
            engine,
            queue: ArrayQueue::new(capacity),
            accepting: AtomicBool::new(true),
            exit: AtomicBool::new(false),
            in_flight: AtomicUsize::new(0),
            high_water: AtomicUsize::new(0),
            next_id: AtomicU64::new(0),
            capacity,
            work_signal: (Mutex::new(()), Condvar::new()),
            space_signal: (Mutex::new(()), Condvar::new()),
        });
        let workers = (0..n_workers)
            .map(|_| {
                let shared = Arc::clone(&shared);
                std::thread::spawn(move || worker_loop(shared))
            })
            .collect();
        Ok(Self {
            shared,
            workers: Mutex::new(workers),
            shut_down: Mutex::new(false),
        })
    }

    /// Workers = available parallelism, capacity = 4x workers.
    pub fn with_defaults(engine: Arc<FilteredIndex>) -> Result<Self> {
        let workers = std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1);
        Self::start(engine, workers, workers * 4)
    }

    /// Enqueues a job. Non-blocking while the ring has free slots; blocks for
    /// space once `capacity` jobs are in flight. Fails after shutdown.
    pub fn submit(&self, job: SearchJob) -> Result<JobTicket> {
        let shared = &self.shared;
        if !shared.accepting.load(Ordering::SeqCst) {
            return Err(Error::Lifecycle("submit after shutdown".to_string()));
        }
        // Reserve an in-flight slot (held until the job completes).
        loop {
            let cur = shared.in_flight.load(Ordering::SeqCst);
            if cur < shared.capacity {
                if shared
                    .in_flight
                    .compare_exchange(cur, cur + 1, Ordering::SeqCst, Ordering::SeqCst)
                    .is_ok()
                {
                    break;
                }
                continue;
            }
            let (lock, cv) = &shared.space_signal;
            let guard = lock.lock().unwrap_or_else(|p| p.into_inner());
            // Re-check under the lock so a concurrent completion cannot be missed.
            if shared.in_flight.load(Ordering::SeqCst) < shared.capacity {
                continue;
            }
            let _ = cv
                .wait_timeout(guard, Duration::from_millis(1))
                .unwrap_or_else(|p| p.into_inner());
        }
        shared
            .high_water
            .fetch_max(shared.in_flight.load(Ordering::SeqCst), Ordering::SeqCst);
        if !shared.accepting.load(Ordering::SeqCst) {
            shared.in_flight.fetch_sub(1, Ordering::SeqCst);
            self.notify_space();
            return Err(Error::Lifecycle("submit after shutdown".to_string()));
        }

        let id = shared.next_id.fetch_add(1, Ordering::SeqCst);
        let slot = Arc::new(Slot {
            result: Mutex::new(None),
            done: Condvar::new(),
        });
        let mut item = (id, job, Arc::clone(&slot));
        // The in-flight reservation guarantees a free ring slot.
        while let Err(rejected) = shared.queue.push(item) {
            item = rejected;
            std::hint::spin_loop();
        }
        let (_, cv) = &shared.work_signal;
        cv.notify_one();
        Ok(JobTicket { id, slot })
    }

    /// Drains in-flight jobs, rejects new submissions, joins all workers.
    /// Idempotent.
    pub fn shutdown(&self) {
        let mut done = self.shut_down.lock().unwrap_or_else(|p| p.into_inner());
        if *done {
            return;
        }
        let shared = &self.shared;
        shared.accepting.store(false, Ordering::SeqCst);
        // Wait for every accepted job to complete.
        {
            let (lock, cv) = &shared.space_signal;
            let mut guard = lock.lock().unwrap_or_else(|p| p.into_inner());
            while shared.in_flight.load(Ordering::SeqCst) > 0 {
                let (g, _) = cv
                    .wait_timeout(guard, Duration::from_millis(1))
                    .unwrap_or_else(|p| p.into_inner());
                guard = g;
            }
        }
        shared.exit.store(true, Ordering::SeqCst);
        let (_, cv) = &shared.work_signal;
        cv.notify_all();
        let handles = std::mem::take(&mut *self.workers.lock().unwrap_or_else(|p| p.into_inner()));
        for h in handles {
            let _ = h.join();
        }
        *done = true;
    }

    /// Highest number of simultaneously in-flight jobs observed.
    pub fn high_water(&self) -> usize {
        self.shared.high_water.load(Ordering::SeqCst)
    }

    fn notify_space(&self) {
        let (_, cv) = &self.shared.space_signal;
        cv.notify_all();
    }
}

impl Drop for Executor {
    fn drop(&mut self) {
        self.shutdown();
    }
}

fn worker_loop(shared: Arc<Shared>) {
    const SPIN: usize = 64;
    loop {
        if let Some((_, job, slot)) = shared.queue.pop() {
            run_job(&shared, job, slot);
            continue;
        }
        if shared.exit.load(Ordering::SeqCst) && shared.queue.is_empty() {
            return;
        }
        let mut got = false;
        for _ in 0..SPIN {
            if !shared.queue.is_empty() {
                got = true;
                break;
            }
            std::hint::spin_loop();
        }
        if !got {
            let (lock, cv) = &shared.work_signal;
            let guard = lock.lock().unwrap_or_else(|p| p.into_inner());
            if shared.queue.is_empty() && !shared.exit.load(Ordering::SeqCst) {
                let _ = cv
                    .wait_timeout(guard, Duration::from_millis(1))
                    .unwrap_or_else(|p| p.into_inner());
            }
        }
    }
}

fn run_job(shared: &Shared, job: SearchJob, slot: Arc<Slot>) {
    let engine = &shared.engine;
    let outcome = catch_unwind(AssertUnwindSafe(|| {
        engine.search(&job.query, &job.expr, job.policy, &job.params)
    }))
    .unwrap_or_else(|_| Err(Error::Cancelled("worker panicked while searching".to_string())));

    {
        let mut guard = slot.result.lock().unwrap_or_else(|p| p.into_inner());
        *guard = Some(outcome);
        slot.done.notify_all();
    }
    shared.in_flight.fetch_sub(1, Ordering::SeqCst);
    let (_, cv) = &shared.space_signal;
    cv.notify_all();
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::IndexConfig;
    use crate::rng::mix;
    use crate::synthetic::{gen_uniform_vectors, gen_zipf_labels};

    fn test_engine() -> Arc<FilteredIndex> {
        let n = 2_000;
        let data = gen_uniform_vectors(n, 8, 41);
        let labels = gen_zipf_labels(n, 10, 2.0, 1.0, 42).unwrap();
        Arc::new(
            FilteredIndex::build(
                data,
                &labels,
                IndexConfig {
                    threshold: 300,
                    graph_degree: 8,
                    group_width: 32,
                    metric: crate::distance::Metric::SquaredL2,
                },
            )
            .unwrap(),
        )
    }

    fn jobs_for(engine: &FilteredIndex, n: usize, seed: u64) -> Vec<SearchJob> {
        let queries = gen_uniform_vectors(n, 8, seed);
        let qm = queries.to_f32_matrix();
        let labels: Vec<u32> = engine.posting().labels().collect();
        (0..n)
            .map(|i| SearchJob {
                query: qm[i * 8..(i + 1) * 8].to_vec(),
                expr: LabelExpr::single(labels[i % labels.len()]),
                policy: AndPolicy::Greedy,
                params: SearchParams {
                    itopk: 16,
                    k: 5,
                    seed: mix(7, i as u64),
                    ..Default::default()
                },
            })
            .collect()
    }

    #[test]
    fn single_worker_matches_direct_calls() {
        let engine = test_engine();
        let jobs = jobs_for(&engine, 50, 1);
        let exec = Executor::start(Arc::clone(&engine), 1, 4).unwrap();
        for job in jobs {
            let direct = engine
                .search(&job.query, &job.expr, job.policy, &job.params)
                .unwrap();
            let ticket = exec.submit(job).unwrap();
            assert_eq!(ticket.wait().unwrap(), direct);
        }
        exec.shutdown();
    }

    #[test]
    fn concurrent_submitters_lose_nothing() {
        let engine = test_engine();
        let exec = Arc::new(Executor::start(Arc::clone(&engine), 4, 8).unwrap());
        let n_producers = 4;
        let per_producer = 200;
        let mut handles = Vec::new();
        for p in 0..n_producers {
            let exec = Arc::clone(&exec);
            let engine = Arc::clone(&engine);
            handles.push(std::thread::spawn(move || {
                let jobs = jobs_for(&engine, per_producer, 100 + p as u64);
                let mut out = Vec::new();
                for job in jobs {
                    let expected = engine
                        .search(&job.query, &job.expr, job.policy, &job.params)
                        .unwrap();
                    let ticket = exec.submit(job).unwrap();
                    out.push((ticket.id(), ticket.wait().unwrap(), expected));
                }
                out
            }));
        }
        let mut ids = std::collections::HashSet::new();
        for h in handles {
            for (id, got, expected) in h.join().unwrap() {
                assert!(ids.insert(id), "duplicate job id {id}");
                assert_eq!(got, expected);
            }
        }
        assert_eq!(ids.len(), n_producers * per_producer);
        assert!(exec.high_water() <= 8);
        exec.shutdown();
    }

    #[test]
    fn ticket_ids_are_strictly_increasing() {
        let engine = test_engine();
        let exec = Executor::start(Arc::clone(&engine), 2, 4).unwrap();
        let jobs = jobs_for(&engine, 20, 5);
        let mut last = None;
        for job in jobs {
            let t = exec.submit(job).unwrap();
            if let Some(prev) = last {
                assert!(t.id() > prev);
            }
            last = Some(t.id());
            t.wait().unwrap();
        }
        exec.shutdown();
    }

    #[test]
    fn capacity_bounds_in_flight_jobs() {
        let engine = test_engine();
        let exec = Arc::new(Executor::start(Arc::clone(&engine), 2, 1).unwrap());
        let jobs = jobs_for(&engine, 40, 6);
        let mut tickets = Vec::new();
        for job in jobs {
            tickets.push(exec.submit(job).unwrap());
        }
        for t in tickets {
            t.wait().unwrap();
        }
        assert_eq!(exec.high_water(), 1);
        exec.shutdown();
    }

    #[test]
    fn shutdown_drains_queued_jobs_then_rejects() {
        let engine = test_engine();
        let exec = Executor::start(Arc::clone(&engine), 2, 128).unwrap();
        let jobs = jobs_for(&engine, 100, 7);
        let tickets: Vec<JobTicket> = jobs.into_iter().map(|j| exec.submit(j).unwrap()).collect();
        exec.shutdown();
        exec.shutdown(); // idempotent
        for t in tickets {
            t.wait().unwrap();
        }
        let late = jobs_for(&engine, 1, 8).pop().unwrap();
        assert!(matches!(exec.submit(late), Err(Error::Lifecycle(_))));
    }

    #[test]
    fn failing_job_reports_through_ticket() {
        let engine = test_engine();
        let exec = Executor::start(Arc::clone(&engine), 1, 2).unwrap();
        let bad = SearchJob {
            query: vec![0.0; 3], // wrong dimension
            expr: LabelExpr::single(0),
            policy: AndPolicy::Greedy,
            params: SearchParams::default(),
        };
        let t = exec.submit(bad).unwrap();
        assert!(matches!(t.wait(), Err(Error::DimensionMismatch { .. })));
        exec.shutdown();
    }
}
