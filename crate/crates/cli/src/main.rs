//! Command-line harness: dataset generation, index build, search, ground
//! truth, QPS/recall benchmarks, and memory estimation.

use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use filtervec::dataset::{QueryMode, QuerySet, VectorDataset};
use filtervec::eval::{
    self, bench_sweep, threshold_sweep, BenchMode, BenchOptions, BenchReport,
};
use filtervec::formats::{self, VectorFileFormat};
use filtervec::hs_graph::SearchParams;
use filtervec::memory::{bytes_to_gib, estimate_memory, MemoryParams};
use filtervec::multilabel::AndPolicy;
use filtervec::synthetic;
use filtervec::{FilteredIndex, IndexConfig, Metric};

#[derive(Parser)]
#[command(name = "filtervec", version, about = "Filtered vector search engine and benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic fvecs vector file.
    GenVectors(GenVectorsArgs),
    /// Write a Zipf-distributed label file (one comma-separated line per point).
    GenLabels(GenLabelsArgs),
    /// Build an index from a vector file and a label file.
    Build(BuildArgs),
    /// Search an index with a query file and per-query label expressions.
    Search(SearchArgs),
    /// Compute exact filtered ground truth by brute force.
    GroundTruth(GroundTruthArgs),
    /// Sweep search parameters and report recall/QPS rows.
    Bench(BenchArgs),
    /// Evaluate the memory-footprint formulas.
    EstimateMem(EstimateMemArgs),
}

#[derive(Args)]
struct GenVectorsArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Blob count; 0 means fully uniform vectors.
    #[arg(long, default_value_t = 25)]
    clusters: usize,
    #[arg(long, default_value_t = 0.15)]
    spread: f32,
    /// Seed for the blob centers; keep it fixed across a base set and its
    /// query set so they share structure.
    #[arg(long, default_value_t = 7)]
    centers_seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenLabelsArgs {
    #[arg(long)]
    n_points: usize,
    #[arg(long)]
    n_labels: u32,
    /// Target mean labels per point.
    #[arg(long, default_value_t = 3.17)]
    f_target: f64,
    /// Zipf exponent.
    #[arg(long, default_value_t = 1.0)]
    s: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "fvecs")]
    format: String,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    index: PathBuf,
    /// Specificity threshold (clusters this large get graphs).
    #[arg(long = "T", default_value = "2000")]
    threshold: String,
    /// Graph out-degree.
    #[arg(long = "R", default_value_t = 16)]
    degree: u32,
    /// Interleave group width.
    #[arg(long = "W", default_value_t = 32)]
    group_width: u32,
    #[arg(long, default_value = "l2")]
    metric: String,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long)]
    query_labels: PathBuf,
    #[arg(long, default_value = "fvecs")]
    format: String,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 64)]
    itopk: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Expected query mode; fails if the expression file disagrees.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long, default_value = "greedy")]
    policy: String,
    /// Write results here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GroundTruthArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "fvecs")]
    format: String,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long)]
    query_labels: PathBuf,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value = "l2")]
    metric: String,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Prebuilt index; or give --data/--labels/--T to build per threshold.
    #[arg(long)]
    index: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Comma-separated thresholds for a sweep ("0", numbers, or "inf").
    #[arg(long = "T", value_delimiter = ',')]
    thresholds: Vec<String>,
    #[arg(long, default_value = "fvecs")]
    format: String,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long)]
    query_labels: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    /// Comma-separated itopk grid.
    #[arg(long, value_delimiter = ',', default_value = "32,64,128")]
    itopk: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long = "R", default_value_t = 16)]
    degree: u32,
    #[arg(long = "W", default_value_t = 32)]
    group_width: u32,
    #[arg(long, default_value = "l2")]
    metric: String,
    #[arg(long, default_value = "greedy")]
    policy: String,
    /// Drive queries one at a time through the persistent executor.
    #[arg(long, default_value_t = false)]
    streaming: bool,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    reps: usize,
    /// Write the CSV report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateMemArgs {
    #[arg(long)]
    n: u64,
    #[arg(long)]
    dim: u64,
    /// Mean labels per point (F).
    #[arg(long)]
    f: f64,
    #[arg(long)]
    f_hs: f64,
    #[arg(long)]
    f_ls: f64,
    /// Bytes per vector element.
    #[arg(long, default_value_t = 4)]
    bytes: u64,
    /// Per-label graph out-degree (R').
    #[arg(long, default_value_t = 16)]
    graph_degree: u64,
    /// Degree of the single-index reference figure.
    #[arg(long, default_value_t = 64)]
    single_degree: u64,
    #[arg(long, default_value_t = 0)]
    n_labels: u64,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenVectors(a) => gen_vectors(a),
        Command::GenLabels(a) => gen_labels(a),
        Command::Build(a) => build(a),
        Command::Search(a) => search(a),
        Command::GroundTruth(a) => ground_truth(a),
        Command::Bench(a) => bench(a),
        Command::EstimateMem(a) => estimate_mem(a),
    }
}

fn parse_format(s: &str) -> Result<VectorFileFormat> {
    Ok(s.parse::<VectorFileFormat>()?)
}

fn parse_metric(s: &str) -> Result<Metric> {
    Ok(s.parse::<Metric>()?)
}

fn parse_policy(s: &str) -> Result<AndPolicy> {
    Ok(s.parse::<AndPolicy>()?)
}

fn read_dataset(path: &PathBuf, format: &str) -> Result<VectorDataset> {
    formats::read_vectors(path, parse_format(format)?)
        .with_context(|| format!("reading vectors from {}", path.display()))
}

fn read_query_set(queries: &PathBuf, query_labels: &PathBuf, format: &str) -> Result<QuerySet> {
    let qv = read_dataset(queries, format)?;
    let exprs = formats::read_query_labels(query_labels)
        .with_context(|| format!("reading query labels from {}", query_labels.display()))?;
    Ok(QuerySet::new(qv, exprs)?)
}

fn check_mode(qs: &QuerySet, expected: &Option<String>) -> Result<()> {
    let Some(expected) = expected else {
        return Ok(());
    };
    let want = match expected.as_str() {
        "single" => QueryMode::Single,
        "and" => QueryMode::And,
        "or" => QueryMode::Or,
        other => bail!("unknown mode '{other}' (expected single|and|or)"),
    };
    if qs.mode != want {
        bail!(
            "query label file is {:?} but --mode asked for {:?}",
            qs.mode,
            want
        );
    }
    Ok(())
}

fn gen_vectors(a: GenVectorsArgs) -> Result<()> {
    let data = if a.clusters == 0 {
        synthetic::gen_uniform_vectors(a.n, a.dim, a.seed)
    } else {
        synthetic::gen_clustered_vectors(a.n, a.dim, a.clusters, a.spread, a.centers_seed, a.seed)
    };
    formats::write_vectors(&a.out, &data)?;
    eprintln!("wrote {} vectors of dim {} to {}", a.n, a.dim, a.out.display());
    Ok(())
}

fn gen_labels(a: GenLabelsArgs) -> Result<()> {
    let labels = synthetic::gen_zipf_labels(a.n_points, a.n_labels, a.f_target, a.s, a.seed)?;
    formats::write_labels(&a.out, &labels)?;
    eprintln!(
        "wrote labels for {} points ({} labels, mean {:.3}/point) to {}",
        a.n_points,
        a.n_labels,
        labels.mean_labels_per_point(),
        a.out.display()
    );
    Ok(())
}

fn build(a: BuildArgs) -> Result<()> {
    let data = read_dataset(&a.data, &a.format)?;
    let labels = formats::read_labels(&a.labels)
        .with_context(|| format!("reading labels from {}", a.labels.display()))?;
    let config = IndexConfig {
        threshold: eval::parse_threshold(&a.threshold)?,
        graph_degree: a.degree,
        group_width: a.group_width,
        metric: parse_metric(&a.metric)?,
    };
    let t0 = std::time::Instant::now();
    let index = FilteredIndex::build(data, &labels, config)?;
    let build_s = t0.elapsed().as_secs_f64();
    filtervec::index_io::save_index(&index, &a.index)?;
    eprintln!(
        "built index: {} points, {} graph labels, {} scan labels, {:.2}s; wrote {}",
        index.n_points(),
        index.partition().hs_labels().len(),
        index.partition().ls_labels().len(),
        build_s,
        a.index.display()
    );
    Ok(())
}

fn search(a: SearchArgs) -> Result<()> {
    let index = filtervec::index_io::load_index(&a.index)
        .with_context(|| format!("loading index from {}", a.index.display()))?;
    let qs = read_query_set(&a.queries, &a.query_labels, &a.format)?;
    check_mode(&qs, &a.mode)?;
    let params = SearchParams {
        itopk: a.itopk.max(a.k),
        k: a.k,
        max_iterations: usize::MAX,
        seed: a.seed,
    };
    let results = index.search_batch(&qs, parse_policy(&a.policy)?, &params)?;
    let text = eval::format_results(&results);
    match &a.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn ground_truth(a: GroundTruthArgs) -> Result<()> {
    let data = read_dataset(&a.data, &a.format)?;
    let labels = formats::read_labels(&a.labels)?;
    if labels.n_points() != data.n_points() {
        bail!(
            "label file covers {} points but dataset has {}",
            labels.n_points(),
            data.n_points()
        );
    }
    let qs = read_query_set(&a.queries, &a.query_labels, &a.format)?;
    check_mode(&qs, &a.mode)?;
    let metric = parse_metric(&a.metric)?;
    let results = eval::oracle_batch(&data, &labels, &qs, a.k, metric);
    // Pad ragged lists so the ivecs records stay uniform; the recall
    // denominator adjusts for short ground truth at evaluation time.
    let ids: Vec<Vec<u32>> = results
        .iter()
        .map(|r| {
            let mut v = r.ids();
            v.resize(a.k, u32::MAX);
            v
        })
        .collect();
    formats::write_ground_truth(&a.out, &ids)?;
    eprintln!("wrote ground truth for {} queries to {}", ids.len(), a.out.display());
    Ok(())
}

fn bench(a: BenchArgs) -> Result<()> {
    let qs = read_query_set(&a.queries, &a.query_labels, &a.format)?;
    if !a.gt.exists() {
        bail!("ground-truth file not found: {}", a.gt.display());
    }
    let gt_raw = formats::read_ground_truth(&a.gt)?;
    // Drop the padding sentinels written by ground-truth.
    let gt: Vec<Vec<u32>> = gt_raw
        .into_iter()
        .map(|v| v.into_iter().filter(|&id| id != u32::MAX).collect())
        .collect();
    if gt.len() != qs.len() {
        bail!("{} ground-truth records for {} queries", gt.len(), qs.len());
    }
    let opts = BenchOptions {
        k: a.k,
        policy: parse_policy(&a.policy)?,
        seed: a.seed,
        repetitions: a.reps,
        workers: a.workers.unwrap_or_else(|| {
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
        }),
    };

    let report: BenchReport = if !a.thresholds.is_empty() {
        let (Some(data_path), Some(labels_path)) = (&a.data, &a.labels) else {
            bail!("--T sweep needs --data and --labels to rebuild the index");
        };
        let data = read_dataset(data_path, &a.format)?;
        let labels = formats::read_labels(labels_path)?;
        let thresholds = a
            .thresholds
            .iter()
            .map(|s| eval::parse_threshold(s))
            .collect::<filtervec::Result<Vec<u32>>>()?;
        let base = IndexConfig {
            threshold: 0,
            graph_degree: a.degree,
            group_width: a.group_width,
            metric: parse_metric(&a.metric)?,
        };
        threshold_sweep(&data, &labels, &thresholds, base, &qs, &gt, &a.itopk, &opts)?
    } else {
        let Some(index_path) = &a.index else {
            bail!("give --index, or --data/--labels with a --T list");
        };
        let index = Arc::new(filtervec::index_io::load_index(index_path)?);
        let mode = if a.streaming { BenchMode::Streaming } else { BenchMode::Batch };
        bench_sweep(&index, &qs, &gt, &a.itopk, mode, &opts)?
    };

    let csv = report.to_csv();
    match &a.out {
        Some(path) => std::fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn estimate_mem(a: EstimateMemArgs) -> Result<()> {
    let est = estimate_memory(&MemoryParams {
        n_points: a.n,
        dim: a.dim,
        labels_per_point: a.f,
        hs_labels_per_point: a.f_hs,
        ls_labels_per_point: a.f_ls,
        bytes_per_element: a.bytes,
        graph_degree: a.graph_degree,
        single_index_degree: a.single_degree,
        n_labels: a.n_labels,
    });
    println!("graph partition:    {:>10.2} GiB", bytes_to_gib(est.hs_bytes));
    println!("scan partition:     {:>10.2} GiB", bytes_to_gib(est.ls_bytes));
    println!("total:              {:>10.2} GiB", bytes_to_gib(est.total_bytes));
    println!("index mapping:      {:>10.2} GiB", bytes_to_gib(est.mapping_bytes));
    println!(
        "label metadata:     {:>10.3} MiB",
        est.label_metadata_bytes / (1u64 << 20) as f64
    );
    println!(
        "single-index ref:   {:>10.2} GiB",
        bytes_to_gib(est.single_index_bytes)
    );
    Ok(())
}
