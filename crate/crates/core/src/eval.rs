//! Evaluation harness: exact ground-truth oracle, recall@k, and the
//! QPS/recall bench sweep in batch and streaming modes.
//!
//! The oracle works off the raw dataset and label assignment only, never the
//! index under test. Bench timing covers search alone: ground truth, index
//! builds, and file I/O happen outside the clock.

use std::sync::Arc;
use std::time::Instant;

use crate::dataset::{LabelAssignment, QuerySet, VectorDataset};
use crate::distance::{distance, Metric};
use crate::engine::{FilteredIndex, IndexConfig};
use crate::error::{Error, Result};
use crate::executor::{Executor, SearchJob};
use crate::hs_graph::SearchParams;
use crate::multilabel::{AndPolicy, LabelExpr, QueryOp};
use crate::rng::mix;
use crate::topk::{BoundedTopK, Neighbor, TopKResult};

/// Exact filtered top-k by full scan. AND requires every query label, OR any,
/// a single label itself.
pub fn brute_force_oracle(
    dataset: &VectorDataset,
    labels: &LabelAssignment,
    query: &[f32],
    expr: &LabelExpr,
    k: usize,
    metric: Metric,
) -> TopKResult {
    let dim = dataset.dim();
    assert_eq!(query.len(), dim, "oracle query dimension mismatch");
    let mut top = BoundedTopK::new(k);
    crate::dataset::with_elems!(dataset.data(), s => {
        for i in 0..dataset.n_points() {
            let point_labels = labels.labels_of(i);
            let keep = match expr.op {
                QueryOp::And => expr
                    .labels
                    .iter()
                    .all(|l| point_labels.binary_search(l).is_ok()),
                QueryOp::Or => expr
                    .labels
                    .iter()
                    .any(|l| point_labels.binary_search(l).is_ok()),
                QueryOp::Single => point_labels.binary_search(&expr.labels[0]).is_ok(),
            };
            if !keep {
                continue;
            }
            let d = distance(metric, query, &s[i * dim..(i + 1) * dim]);
            top.push(Neighbor::new(i as u32, d));
        }
    });
    top.into_result()
}

/// Oracle over a whole query set.
pub fn oracle_batch(
    dataset: &VectorDataset,
    labels: &LabelAssignment,
    queries: &QuerySet,
    k: usize,
    metric: Metric,
) -> Vec<TopKResult> {
    let dim = dataset.dim();
    let matrix = queries.queries.to_f32_matrix();
    crate::par::map_indexed(queries.len(), |i| {
        brute_force_oracle(
            dataset,
            labels,
            &matrix[i * dim..(i + 1) * dim],
            &queries.exprs[i],
            k,
            metric,
        )
    })
}

/// Mean recall@k. The per-query denominator is `min(k, |GT|)`; queries whose
/// ground truth is empty count as fully recalled.
pub fn recall_at_k(results: &[TopKResult], ground_truth: &[Vec<u32>], k: usize) -> Result<f64> {
    if results.len() != ground_truth.len() {
        return Err(Error::Param(format!(
            "{} results but {} ground-truth lists",
            results.len(),
            ground_truth.len()
        )));
    }
    if results.is_empty() {
        return Ok(1.0);
    }
    let mut total = 0.0;
    for (res, gt) in results.iter().zip(ground_truth) {
        let denom = k.min(gt.len());
        if denom == 0 {
            total += 1.0;
            continue;
        }
        let truth: std::collections::HashSet<u32> = gt[..denom].iter().copied().collect();
        let hits = res
            .hits
            .iter()
            .take(k)
            .filter(|n| truth.contains(&n.id))
            .count();
        total += hits as f64 / denom as f64;
    }
    Ok(total / results.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchMode {
    /// Whole query set as one batch.
    Batch,
    /// Batch-size-1 round trips through the persistent executor.
    Streaming,
}

impl BenchMode {
    fn name(self) -> &'static str {
        match self {
            BenchMode::Batch => "batch",
            BenchMode::Streaming => "streaming",
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub k: usize,
    pub policy: AndPolicy,
    pub seed: u64,
    /// Warm repetitions per grid point; the median time is reported.
    pub repetitions: usize,
    /// Worker threads for streaming mode.
    pub workers: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            k: 10,
            policy: AndPolicy::Greedy,
            seed: 0,
            repetitions: 3,
            workers: std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchRow {
    pub threshold: String,
    pub itopk: usize,
    pub k: usize,
    pub mode: String,
    pub recall: f64,
    pub qps: f64,
    pub mean_latency_s: f64,
}

#[derive(Debug, Clone, Default)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("threshold,itopk,k,mode,recall,qps,mean_latency_s\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{:.6},{:.2},{:.9}\n",
                r.threshold, r.itopk, r.k, r.mode, r.recall, r.qps, r.mean_latency_s
            ));
        }
        out
    }
}

/// Builds per-query jobs with the same per-ordinal seeds `search_batch`
/// derives, so streaming and batch execution return identical results.
pub fn make_jobs(queries: &QuerySet, policy: AndPolicy, params: &SearchParams) -> Vec<SearchJob> {
    let dim = queries.queries.dim();
    let matrix = queries.queries.to_f32_matrix();
    (0..queries.len())
        .map(|i| SearchJob {
            query: matrix[i * dim..(i + 1) * dim].to_vec(),
            expr: queries.exprs[i].clone(),
            policy,
            params: params.with_seed(mix(params.seed, i as u64)),
        })
        .collect()
}

/// Runs every job through the executor one at a time (submit, wait, next).
pub fn run_streaming(exec: &Executor, jobs: &[SearchJob]) -> Result<Vec<TopKResult>> {
    let mut out = Vec::with_capacity(jobs.len());
    for job in jobs {
        let ticket = exec.submit(job.clone())?;
        out.push(ticket.wait()?);
    }
    Ok(out)
}

/// Baseline the streaming mode is measured against: a fresh worker thread is
/// spawned and joined for every query, paying dispatch cost per batch.
pub fn dispatch_per_batch(engine: &Arc<FilteredIndex>, jobs: &[SearchJob]) -> Result<Vec<TopKResult>> {
    let mut out = Vec::with_capacity(jobs.len());
    for job in jobs {
        let engine = Arc::clone(engine);
        let job = job.clone();
        let handle = std::thread::spawn(move || {
            engine.search(&job.query, &job.expr, job.policy, &job.params)
        });
        out.push(handle.join().map_err(|_| {
            Error::Cancelled("dispatch worker panicked".to_string())
        })??);
    }
    Ok(out)
}

fn median(mut times: Vec<f64>) -> f64 {
    times.sort_by(|a, b| a.total_cmp(b));
    times[times.len() / 2]
}

/// One row per itopk grid point: recall against the supplied ground truth
/// plus median-of-repetitions QPS and mean per-query latency.
pub fn bench_sweep(
    index: &Arc<FilteredIndex>,
    queries: &QuerySet,
    ground_truth: &[Vec<u32>],
    itopk_grid: &[usize],
    mode: BenchMode,
    opts: &BenchOptions,
) -> Result<BenchReport> {
    let mut report = BenchReport::default();
    let reps = opts.repetitions.max(1);
    let threshold_label = threshold_name(index.config().threshold);
    for &itopk in itopk_grid {
        let params = SearchParams {
            itopk: itopk.max(opts.k),
            k: opts.k,
            max_iterations: usize::MAX,
            seed: opts.seed,
        };
        let n = queries.len();
        let (results, secs) = match mode {
            BenchMode::Batch => {
                let results = index.search_batch(queries, opts.policy, &params)?;
                let mut times = Vec::with_capacity(reps);
                for _ in 0..reps {
                    let t0 = Instant::now();
                    let r = index.search_batch(queries, opts.policy, &params)?;
                    times.push(t0.elapsed().as_secs_f64());
                    debug_assert_eq!(r.len(), n);
                }
                (results, median(times))
            }
            BenchMode::Streaming => {
                let jobs = make_jobs(queries, opts.policy, &params);
                let exec = Executor::start(Arc::clone(index), opts.workers, opts.workers * 4)?;
                let results = run_streaming(&exec, &jobs)?;
                let mut times = Vec::with_capacity(reps);
                for _ in 0..reps {
                    let t0 = Instant::now();
                    let r = run_streaming(&exec, &jobs)?;
                    times.push(t0.elapsed().as_secs_f64());
                    debug_assert_eq!(r.len(), n);
                }
                exec.shutdown();
                (results, median(times))
            }
        };
        let recall = recall_at_k(&results, ground_truth, opts.k)?;
        report.rows.push(BenchRow {
            threshold: threshold_label.clone(),
            itopk,
            k: opts.k,
            mode: mode.name().to_string(),
            recall,
            qps: n as f64 / secs,
            mean_latency_s: secs / n as f64,
        });
    }
    Ok(report)
}

pub fn threshold_name(t: u32) -> String {
    if t == u32::MAX {
        "inf".to_string()
    } else {
        t.to_string()
    }
}

pub fn parse_threshold(s: &str) -> Result<u32> {
    if s == "inf" {
        return Ok(u32::MAX);
    }
    s.parse::<u32>()
        .map_err(|_| Error::Param(format!("invalid threshold '{s}'")))
}

/// Rebuilds the index at each threshold and benches it over the itopk grid.
/// Build time stays outside the timed region.
#[allow(clippy::too_many_arguments)]
pub fn threshold_sweep(
    dataset: &VectorDataset,
    labels: &LabelAssignment,
    thresholds: &[u32],
    base_config: IndexConfig,
    queries: &QuerySet,
    ground_truth: &[Vec<u32>],
    itopk_grid: &[usize],
    opts: &BenchOptions,
) -> Result<BenchReport> {
    let mut report = BenchReport::default();
    for &t in thresholds {
        let config = IndexConfig {
            threshold: t,
            ..base_config
        };
        let index = Arc::new(FilteredIndex::build(dataset.clone(), labels, config)?);
        let sub = bench_sweep(&index, queries, ground_truth, itopk_grid, BenchMode::Batch, opts)?;
        report.rows.extend(sub.rows);
    }
    Ok(report)
}

/// Canonical text form of a result list, one line per query:
/// `id:distance` pairs separated by spaces. Stable across runs for fixed
/// seeds, so reports can be compared byte for byte.
pub fn format_results(results: &[TopKResult]) -> String {
    let mut out = String::new();
    for r in results {
        let parts: Vec<String> = r
            .hits
            .iter()
            .map(|n| format!("{}:{}", n.id, n.distance))
            .collect();
        out.push_str(&parts.join(" "));
        out.push('\n');
    }
    out
}
