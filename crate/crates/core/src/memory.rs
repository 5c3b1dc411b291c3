//! Memory accounting: closed-form footprint estimates for planning, and
//! exact byte measurement of built indexes.
//!
//! With one shared copy of the vectors, the graph partition costs
//! `N * (D + F_hs * R) * b` bytes instead of the `N * F_hs * (D + R) * b`
//! a vector-copying layout would need; the scan partition copies vectors per
//! label and costs `N * D * F_ls * b`. The local-to-global mapping adds
//! `N * F * b` and per-label metadata is two integers per label.

use crate::engine::FilteredIndex;

pub const GIB: f64 = (1u64 << 30) as f64;

pub fn bytes_to_gib(bytes: f64) -> f64 {
    bytes / GIB
}

/// Inputs for the closed-form estimate.
#[derive(Debug, Clone, Copy)]
pub struct MemoryParams {
    pub n_points: u64,
    pub dim: u64,
    /// Average labels per point (F), all labels.
    pub labels_per_point: f64,
    /// Average high-specificity labels per point (F_hs).
    pub hs_labels_per_point: f64,
    /// Average low-specificity labels per point (F_ls).
    pub ls_labels_per_point: f64,
    pub bytes_per_element: u64,
    /// Out-degree of the per-label graphs (the reduced R').
    pub graph_degree: u64,
    /// Out-degree a single whole-dataset graph would use, for the reference
    /// figure `N * (D + R) * b`.
    pub single_index_degree: u64,
    /// Distinct labels (drives the two-integers-per-label metadata).
    pub n_labels: u64,
}

/// Closed-form estimate, bytes as f64 (fractional label averages make the
/// formulas fractional).
#[derive(Debug, Clone, Copy)]
pub struct MemoryEstimate {
    /// Graph partition: shared vectors plus per-label graph rows.
    pub hs_bytes: f64,
    /// Scan partition: per-label interleaved vector copies.
    pub ls_bytes: f64,
    /// hs + ls.
    pub total_bytes: f64,
    /// Local-to-global mapping across both partitions.
    pub mapping_bytes: f64,
    /// Two integers per label (size + offset).
    pub label_metadata_bytes: f64,
    /// Reference: one graph over the whole dataset, no per-label structure.
    pub single_index_bytes: f64,
}

/// Graph-partition bytes: `n * (d + f_hs * r) * b`.
pub fn estimate_hs_memory(n: u64, d: u64, f_hs: f64, r: u64, b: u64) -> f64 {
    n as f64 * (d as f64 + f_hs * r as f64) * b as f64
}

/// Scan-partition bytes: `n * d * f_ls * b`.
pub fn estimate_ls_memory(n: u64, d: u64, f_ls: f64, b: u64) -> f64 {
    n as f64 * d as f64 * f_ls * b as f64
}

pub fn estimate_memory(p: &MemoryParams) -> MemoryEstimate {
    let hs = estimate_hs_memory(p.n_points, p.dim, p.hs_labels_per_point, p.graph_degree, p.bytes_per_element);
    let ls = estimate_ls_memory(p.n_points, p.dim, p.ls_labels_per_point, p.bytes_per_element);
    let mapping = p.n_points as f64 * p.labels_per_point * p.bytes_per_element as f64;
    let single = p.n_points as f64
        * (p.dim as f64 + p.single_index_degree as f64)
        * p.bytes_per_element as f64;
    MemoryEstimate {
        hs_bytes: hs,
        ls_bytes: ls,
        total_bytes: hs + ls,
        mapping_bytes: mapping,
        label_metadata_bytes: (p.n_labels * 8) as f64,
        single_index_bytes: single,
    }
}

/// Exact byte counts of a built index's components.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeasuredBytes {
    pub global_vectors: u64,
    pub hs_graph: u64,
    pub hs_mapping: u64,
    pub hs_metadata: u64,
    pub ls_blocks: u64,
    pub ls_mapping: u64,
    pub ls_metadata: u64,
    pub predicate_table: u64,
}

impl MeasuredBytes {
    pub fn measure(index: &FilteredIndex) -> Self {
        Self {
            global_vectors: index.vectors().byte_len() as u64,
            hs_graph: index.hs().graph_bytes() as u64,
            hs_mapping: index.hs().mapping_bytes() as u64,
            hs_metadata: index.hs().metadata_bytes() as u64,
            ls_blocks: index.ls().blocks_bytes() as u64,
            ls_mapping: index.ls().mapping_bytes() as u64,
            ls_metadata: index.ls().metadata_bytes() as u64,
            predicate_table: index.predicate_table().byte_len() as u64,
        }
    }

    /// Serving footprint of the graph partition: shared vectors + graphs +
    /// mapping.
    pub fn hs_total(&self) -> u64 {
        self.global_vectors + self.hs_graph + self.hs_mapping
    }

    /// Bytes the graph partition itself stores (vectors excluded: they are
    /// the dataset's single copy).
    pub fn hs_stored(&self) -> u64 {
        self.hs_graph + self.hs_mapping
    }

    pub fn ls_total(&self) -> u64 {
        self.ls_blocks + self.ls_mapping
    }

    pub fn grand_total(&self) -> u64 {
        self.global_vectors
            + self.hs_graph
            + self.hs_mapping
            + self.hs_metadata
            + self.ls_blocks
            + self.ls_mapping
            + self.ls_metadata
            + self.predicate_table
    }
}

/// What the graph partition would cost if each label's cluster stored its own
/// vector copies next to its graph (same graphs, same mapping).
pub fn copying_reference_bytes(index: &FilteredIndex) -> u64 {
    let d = index.dim() as u64;
    let b = index.vectors().element_kind().bytes_per_element() as u64;
    let duplicated_vectors: u64 = index
        .hs()
        .sizes()
        .iter()
        .map(|&s| s as u64 * d * b)
        .sum();
    index.hs().graph_bytes() as u64 + index.hs().mapping_bytes() as u64 + duplicated_vectors
}

#[cfg(test)]
mod tests {
    use super::*;

    fn worked_example() -> MemoryParams {
        MemoryParams {
            n_points: 100_000_000,
            dim: 128,
            labels_per_point: 3.17,
            hs_labels_per_point: 3.0,
            ls_labels_per_point: 0.17,
            bytes_per_element: 4,
            graph_degree: 16,
            single_index_degree: 64,
            n_labels: 200_000,
        }
    }

    #[test]
    fn worked_example_components() {
        let e = estimate_memory(&worked_example());
        assert!((bytes_to_gib(e.hs_bytes) - 65.57).abs() < 0.01);
        assert!((bytes_to_gib(e.ls_bytes) - 8.11).abs() < 0.01);
        assert!((bytes_to_gib(e.total_bytes) - 73.67).abs() < 0.01);
        assert!((bytes_to_gib(e.single_index_bytes) - 71.53).abs() < 0.01);
        assert!((bytes_to_gib(e.mapping_bytes) - 1.18).abs() < 0.01);
    }

    #[test]
    fn label_metadata_is_megabytes_even_for_200k_labels() {
        let e = estimate_memory(&worked_example());
        let mb = e.label_metadata_bytes / (1u64 << 20) as f64;
        assert!((mb - 1.526).abs() < 0.01, "got {mb} MiB");
    }

    #[test]
    fn no_graphs_means_vectors_only() {
        assert_eq!(
            estimate_hs_memory(1000, 32, 0.0, 16, 4),
            (1000 * 32 * 4) as f64
        );
        assert_eq!(estimate_ls_memory(1000, 32, 0.0, 4), 0.0);
    }

    #[test]
    fn copy_multiplier_scales_with_list_count() {
        // Full duplication across an average of 10.8 lists costs 10.8x one
        // copy-plus-graph index.
        let n = 10_000_000u64;
        let f = 10.8;
        let copying = n as f64 * f * (192.0 + 32.0) * 1.0;
        let single = n as f64 * (192.0 + 32.0) * 1.0;
        assert!((copying / single - f).abs() < 1e-9);
    }

    #[test]
    fn ls_overhead_is_the_mean_list_count() {
        // 5.95M points averaging 3.54 scan lists each: 3.54x one copy.
        let n = 5_950_000u64;
        let d = 192u64;
        let e = estimate_ls_memory(n, d, 3.54, 1);
        let one_copy = (n * d) as f64;
        assert!((e / one_copy - 3.54).abs() < 1e-9);
    }
}
