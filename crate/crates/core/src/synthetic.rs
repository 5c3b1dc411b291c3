//! Synthetic workload generation: Zipf-distributed label assignments and
//! random vector sets for benchmarks and tests.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{LabelAssignment, VectorDataset};
use crate::error::{Error, Result};

/// Assigns labels to points independently: label of rank j (1-indexed) is
/// included with probability `min(1, c / j^s)`, with `c` solved numerically
/// so the expected labels per point equals `f_target`. Points that draw an
/// empty list are resampled until non-empty. Deterministic for a fixed seed.
pub fn gen_zipf_labels(
    n_points: usize,
    n_labels: u32,
    f_target: f64,
    s: f64,
    seed: u64,
) -> Result<LabelAssignment> {
    if n_labels == 0 {
        return Err(Error::Param("n_labels must be at least 1".to_string()));
    }
    if !(f_target > 0.0) {
        return Err(Error::Param(format!(
            "f_target must be positive, got {f_target}"
        )));
    }
    if f_target > n_labels as f64 {
        return Err(Error::Param(format!(
            "f_target {f_target} exceeds n_labels {n_labels}"
        )));
    }
    if n_labels > 1 && f_target <= 1.0 {
        // Every point keeps at least one label, so means at or below 1 are
        // unreachable once more than one label exists.
        return Err(Error::Param(format!(
            "f_target must exceed 1.0 with multiple labels, got {f_target}"
        )));
    }
    if s < 0.0 {
        return Err(Error::Param(format!("exponent s must be >= 0, got {s}")));
    }

    let probs = inclusion_probabilities(n_labels, f_target, s);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lists = Vec::with_capacity(n_points);
    for _ in 0..n_points {
        let mut labels = Vec::new();
        loop {
            labels.clear();
            for (j, p) in probs.iter().enumerate() {
                if rng.gen::<f64>() < *p {
                    labels.push(j as u32);
                }
            }
            if !labels.is_empty() {
                break;
            }
        }
        lists.push(labels);
    }
    Ok(LabelAssignment::from_lists(lists))
}

/// Per-rank inclusion probabilities `min(1, c / j^s)`.
///
/// Resampling empty lists conditions the output on "at least one label",
/// which lifts the raw mean `sum_j p_j` by the factor `1 / (1 - P(empty))`.
/// The bisection therefore targets the conditional mean, so the generated
/// assignment's empirical labels-per-point lands on `f_target`.
fn inclusion_probabilities(n_labels: u32, f_target: f64, s: f64) -> Vec<f64> {
    if n_labels == 1 {
        return vec![1.0];
    }
    let weights: Vec<f64> = (1..=n_labels as u64)
        .map(|j| (j as f64).powf(-s))
        .collect();
    let conditional_mean = |c: f64| -> f64 {
        let mut sum = 0.0;
        let mut p_empty = 1.0;
        for w in &weights {
            let p = (c * w).min(1.0);
            sum += p;
            p_empty *= 1.0 - p;
        }
        sum / (1.0 - p_empty)
    };

    let mut hi = 1.0f64;
    while conditional_mean(hi) < f_target && hi < 1e18 {
        hi *= 2.0;
    }
    let mut lo = 0.0f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if conditional_mean(mid) < f_target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let c = 0.5 * (lo + hi);
    weights.iter().map(|w| (c * w).min(1.0)).collect()
}

/// Uniform random vectors in [0, 1)^dim.
pub fn gen_uniform_vectors(n: usize, dim: usize, seed: u64) -> VectorDataset {
    let mut rng = StdRng::seed_from_u64(seed);
    let data: Vec<f32> = (0..n * dim).map(|_| rng.gen::<f32>()).collect();
    VectorDataset::from_f32(n, dim, data).expect("non-empty synthetic shape")
}

/// Blob-structured vectors: `n_centers` uniform centers, each point is a
/// uniformly chosen center plus per-coordinate noise in [-spread, spread].
/// Centers come from `centers_seed` alone, so a base set and a query set
/// generated with different `sample_seed`s share the same blob structure.
pub fn gen_clustered_vectors(
    n: usize,
    dim: usize,
    n_centers: usize,
    spread: f32,
    centers_seed: u64,
    sample_seed: u64,
) -> VectorDataset {
    assert!(n_centers >= 1);
    let mut centers_rng = StdRng::seed_from_u64(centers_seed);
    let centers: Vec<f32> = (0..n_centers * dim)
        .map(|_| centers_rng.gen::<f32>())
        .collect();
    let mut rng = StdRng::seed_from_u64(sample_seed);
    let mut data = Vec::with_capacity(n * dim);
    for _ in 0..n {
        let c = rng.gen_range(0..n_centers);
        for j in 0..dim {
            let noise = rng.gen::<f32>() * 2.0 * spread - spread;
            data.push(centers[c * dim + j] + noise);
        }
    }
    VectorDataset::from_f32(n, dim, data).expect("non-empty synthetic shape")
}
