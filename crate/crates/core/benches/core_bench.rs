//! Criterion benches comparing the rayon data-parallel paths against a
//! single-thread pool, plus streaming vs dispatch-per-batch query serving.
//! Run with `cargo bench -p filtervec`.

use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use filtervec::dataset::QuerySet;
use filtervec::eval::{dispatch_per_batch, make_jobs, run_streaming};
use filtervec::executor::Executor;
use filtervec::hs_graph::SearchParams;
use filtervec::multilabel::{AndPolicy, LabelExpr};
use filtervec::synthetic::{gen_clustered_vectors, gen_zipf_labels};
use filtervec::{FilteredIndex, IndexConfig, Metric};

const N: usize = 20_000;
const DIM: usize = 16;

fn fixture() -> (Arc<FilteredIndex>, QuerySet) {
    let data = gen_clustered_vectors(N, DIM, 15, 0.2, 3, 4);
    let labels = gen_zipf_labels(N, 16, 2.5, 1.0, 5).unwrap();
    let index = FilteredIndex::build(
        data,
        &labels,
        IndexConfig {
            threshold: 800,
            graph_degree: 12,
            group_width: 32,
            metric: Metric::SquaredL2,
        },
    )
    .unwrap();
    let all: Vec<u32> = index.posting().labels().collect();
    let n_q = 512;
    let queries = QuerySet::new(
        gen_clustered_vectors(n_q, DIM, 15, 0.2, 3, 9),
        (0..n_q)
            .map(|i| LabelExpr::single(all[i % all.len()]))
            .collect(),
    )
    .unwrap();
    (Arc::new(index), queries)
}

/// Index build: default rayon pool vs an explicit single-thread pool (the
/// sequential fallback the `parallel` feature would compile to).
fn bench_build(c: &mut Criterion) {
    let data = gen_clustered_vectors(N, DIM, 15, 0.2, 3, 4);
    let labels = gen_zipf_labels(N, 16, 2.5, 1.0, 5).unwrap();
    let config = IndexConfig {
        threshold: 800,
        graph_degree: 12,
        group_width: 32,
        metric: Metric::SquaredL2,
    };
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();

    let mut group = c.benchmark_group("build");
    group.sample_size(10);
    group.bench_function(BenchmarkId::new("threads", "all"), |b| {
        b.iter(|| FilteredIndex::build(data.clone(), &labels, config).unwrap())
    });
    group.bench_function(BenchmarkId::new("threads", "1"), |b| {
        b.iter(|| single.install(|| FilteredIndex::build(data.clone(), &labels, config).unwrap()))
    });
    group.finish();
}

/// Batch search throughput, parallel vs single-thread pool.
fn bench_batch_search(c: &mut Criterion) {
    let (index, queries) = fixture();
    let params = SearchParams {
        itopk: 64,
        k: 10,
        seed: 1,
        ..Default::default()
    };
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();

    let mut group = c.benchmark_group("batch_search");
    group.throughput(Throughput::Elements(queries.len() as u64));
    group.bench_function(BenchmarkId::new("threads", "all"), |b| {
        b.iter(|| index.search_batch(&queries, AndPolicy::Greedy, &params).unwrap())
    });
    group.bench_function(BenchmarkId::new("threads", "1"), |b| {
        b.iter(|| {
            single.install(|| index.search_batch(&queries, AndPolicy::Greedy, &params).unwrap())
        })
    });
    group.finish();
}

/// Batch-size-1 serving: persistent workers vs a fresh thread per query.
fn bench_streaming(c: &mut Criterion) {
    let (index, queries) = fixture();
    let params = SearchParams {
        itopk: 64,
        k: 10,
        seed: 1,
        ..Default::default()
    };
    let jobs = make_jobs(&queries, AndPolicy::Greedy, &params);
    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);

    let mut group = c.benchmark_group("batch_size_1");
    group.sample_size(10);
    group.throughput(Throughput::Elements(jobs.len() as u64));
    group.bench_function("persistent_workers", |b| {
        let exec = Executor::start(Arc::clone(&index), workers, workers * 4).unwrap();
        b.iter(|| run_streaming(&exec, &jobs).unwrap());
        exec.shutdown();
    });
    group.bench_function("dispatch_per_batch", |b| {
        b.iter(|| dispatch_per_batch(&index, &jobs).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_build, bench_batch_search, bench_streaming);
criterion_main!(benches);
