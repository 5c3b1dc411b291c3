//! High-specificity partition: one fixed-out-degree proximity graph per HS
//! label, compacted into a single flat row array. Graph rows hold *local*
//! vertex ids; a local-to-global index mapping lets every per-label graph
//! share the one global vector store instead of copying vectors per label.

use crate::dataset::{Element, VectorDataset};
use crate::distance::{distance, distance_rows, Metric};
use crate::error::{Error, Result};
use crate::ivf::{Partition, PostingLists};
use crate::rng::SplitRng;
use crate::topk::{BoundedTopK, Neighbor, TopKResult};

/// Knobs for one graph search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchParams {
    /// Width of the internal best-first candidate list (top-M).
    pub itopk: usize,
    /// Requested result count.
    pub k: usize,
    /// Upper bound on expansion iterations; the search also stops on its own
    /// once every list entry has been expanded.
    pub max_iterations: usize,
    /// Seed for the counter-based generator that draws the initial random
    /// vertices. Batch drivers derive a distinct seed per query ordinal.
    pub seed: u64,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            itopk: 64,
            k: 10,
            max_iterations: usize::MAX,
            seed: 0,
        }
    }
}

impl SearchParams {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Param("k must be at least 1".to_string()));
        }
        if self.itopk < self.k {
            return Err(Error::Param(format!(
                "itopk {} must be at least k {}",
                self.itopk, self.k
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::Param("max_iterations must be at least 1".to_string()));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Builds the exact k-NN graph of a local point set: row `j` holds the
/// `min(r, m-1)` nearest neighbors of vertex `j` (ties broken by lower local
/// id), padded to width `r` by repeating the last neighbor, or by the vertex
/// itself when it has no neighbors at all (m = 1).
pub fn build_knn_graph<E: Element>(
    vectors: &[E],
    m: usize,
    dim: usize,
    r: usize,
    metric: Metric,
) -> Vec<u32> {
    assert!(m >= 1 && r >= 1);
    assert_eq!(vectors.len(), m * dim);
    if m == 1 {
        return vec![0u32; r];
    }
    let effective = r.min(m - 1);
    let rows: Vec<Vec<u32>> = crate::par::map_indexed(m, |j| {
        let vj = &vectors[j * dim..(j + 1) * dim];
        let mut top = BoundedTopK::new(effective);
        for (i, vi) in vectors.chunks_exact(dim).enumerate() {
            if i == j {
                continue;
            }
            let d = distance_rows(metric, vj, vi);
            top.push(Neighbor::new(i as u32, d));
        }
        let mut row: Vec<u32> = top.into_result().hits.iter().map(|n| n.id).collect();
        let last = *row.last().expect("m > 1 guarantees a neighbor");
        row.resize(r, last);
        row
    });
    let mut flat = Vec::with_capacity(m * r);
    for row in rows {
        flat.extend_from_slice(&row);
    }
    flat
}

/// Compacted per-label graphs plus metadata. Vectors are never copied here:
/// only graph rows, sizes, offsets, and the local-to-global mapping are
/// materialized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HsIndex {
    /// Sorted HS label ids, defining section order.
    labels: Vec<u32>,
    /// Cluster size per label (S).
    sizes: Vec<u32>,
    /// Starting row of each label's graph (O); prefix sums of `sizes`.
    offsets: Vec<u64>,
    /// Flat rows of local vertex ids, `degree` entries per row.
    graph: Vec<u32>,
    /// Global point id of each local vertex (M), same row order as `graph`.
    mapping: Vec<u32>,
    degree: u32,
}

/// Zero-copy view of one label's graph section.
#[derive(Debug, Clone, Copy)]
pub struct ClusterView<'a> {
    pub rows: &'a [u32],
    pub mapping: &'a [u32],
    pub size: usize,
    pub degree: usize,
}

/// Builds the compacted HS index: for each HS label (ascending), an exact
/// k-NN graph over its cluster and the mapping row back to global ids.
pub fn build_hs_index(
    dataset: &VectorDataset,
    posting: &PostingLists,
    partition: &Partition,
    r: u32,
    metric: Metric,
) -> Result<HsIndex> {
    if r == 0 {
        return Err(Error::Param("graph degree must be at least 1".to_string()));
    }
    let dim = dataset.dim();
    let n_points = dataset.n_points();
    let hs_labels = partition.hs_labels().to_vec();

    for &l in &hs_labels {
        let members = posting
            .get(l)
            .ok_or(Error::UnknownLabel(l))?;
        if let Some(&bad) = members.iter().find(|&&i| (i as usize) >= n_points) {
            return Err(Error::PointOutOfRange {
                index: bad as u64,
                n_points: n_points as u64,
            });
        }
    }

    // Per-label builds are independent; gather the cluster's vectors into a
    // transient buffer, build its graph, and discard the buffer.
    let built: Vec<(Vec<u32>, Vec<u32>)> = crate::par::map_slice(&hs_labels, |&l| {
        let members = posting.get(l).expect("validated above");
        let m = members.len();
        let rows = crate::dataset::with_elems!(dataset.data(), s => {
            let mut cluster = Vec::with_capacity(m * dim);
            for &i in members {
                let start = i as usize * dim;
                cluster.extend_from_slice(&s[start..start + dim]);
            }
            build_knn_graph(&cluster, m, dim, r as usize, metric)
        });
        (rows, members.to_vec())
    });

    let mut sizes = Vec::with_capacity(hs_labels.len());
    let mut offsets = Vec::with_capacity(hs_labels.len());
    let mut graph = Vec::new();
    let mut mapping = Vec::new();
    let mut next_row = 0u64;
    for (rows, members) in built {
        offsets.push(next_row);
        sizes.push(members.len() as u32);
        next_row += members.len() as u64;
        graph.extend_from_slice(&rows);
        mapping.extend_from_slice(&members);
    }

    Ok(HsIndex {
        labels: hs_labels,
        sizes,
        offsets,
        graph,
        mapping,
        degree: r,
    })
}

impl HsIndex {
    pub(crate) fn from_parts(
        labels: Vec<u32>,
        sizes: Vec<u32>,
        offsets: Vec<u64>,
        graph: Vec<u32>,
        mapping: Vec<u32>,
        degree: u32,
    ) -> Result<Self> {
        if labels.len() != sizes.len() || labels.len() != offsets.len() {
            return Err(Error::CorruptIndex("hs metadata length mismatch".to_string()));
        }
        let mut expected = 0u64;
        for (i, (&o, &s)) in offsets.iter().zip(&sizes).enumerate() {
            if o != expected {
                return Err(Error::CorruptIndex(format!(
                    "hs offset {o} at slot {i}, expected {expected}"
                )));
            }
            expected += s as u64;
        }
        if mapping.len() as u64 != expected {
            return Err(Error::CorruptIndex("hs mapping length mismatch".to_string()));
        }
        if degree == 0 || graph.len() as u64 != expected * degree as u64 {
            return Err(Error::CorruptIndex("hs graph length mismatch".to_string()));
        }
        Ok(Self {
            labels,
            sizes,
            offsets,
            graph,
            mapping,
            degree,
        })
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn sizes(&self) -> &[u32] {
        &self.sizes
    }

    pub fn offsets(&self) -> &[u64] {
        &self.offsets
    }

    pub(crate) fn graph(&self) -> &[u32] {
        &self.graph
    }

    pub(crate) fn mapping(&self) -> &[u32] {
        &self.mapping
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn total_rows(&self) -> usize {
        self.mapping.len()
    }

    pub fn n_labels(&self) -> usize {
        self.labels.len()
    }

    fn slot(&self, label: u32) -> Option<usize> {
        self.labels.binary_search(&label).ok()
    }

    pub fn cluster_size(&self, label: u32) -> Option<usize> {
        self.slot(label).map(|s| self.sizes[s] as usize)
    }

    /// View of rows `[O[l], O[l] + S[l])` and the matching mapping section.
    pub fn slice_graph(&self, label: u32) -> Result<ClusterView<'_>> {
        let slot = self.slot(label).ok_or(Error::NotHsLabel(label))?;
        let start = self.offsets[slot] as usize;
        let size = self.sizes[slot] as usize;
        let degree = self.degree as usize;
        Ok(ClusterView {
            rows: &self.graph[start * degree..(start + size) * degree],
            mapping: &self.mapping[start..start + size],
            size,
            degree,
        })
    }

    pub fn graph_bytes(&self) -> usize {
        self.graph.len() * 4
    }

    pub fn mapping_bytes(&self) -> usize {
        self.mapping.len() * 4
    }

    /// Label ids, sizes, and offsets.
    pub fn metadata_bytes(&self) -> usize {
        self.labels.len() * 4 + self.sizes.len() * 4 + self.offsets.len() * 8
    }
}

/// Best-first search over one label's graph.
///
/// The candidate list is seeded with `min(itopk, S)` distinct random local
/// vertices, then repeatedly expands the best unexpanded entry, scoring its
/// neighbors through the global mapping. Candidates failing the optional
/// predicate are dropped after their distance is computed and never enter the
/// list. Stops when the list has no unexpanded entry or after
/// `max_iterations` expansions, whichever comes first.
pub fn graph_search(
    index: &HsIndex,
    dataset: &VectorDataset,
    metric: Metric,
    query: &[f32],
    label: u32,
    params: &SearchParams,
    predicate: Option<&(dyn Fn(u32) -> bool + Sync)>,
) -> Result<TopKResult> {
    params.validate()?;
    if query.len() != dataset.dim() {
        return Err(Error::DimensionMismatch {
            expected: dataset.dim(),
            got: query.len(),
        });
    }
    let view = index.slice_graph(label)?;
    crate::dataset::with_elems!(dataset.data(), s => Ok(search_cluster(
        &view,
        s,
        dataset.dim(),
        metric,
        query,
        label,
        params,
        predicate,
    )))
}

struct BeamEntry {
    distance: f32,
    local: u32,
    global: u32,
    expanded: bool,
}

#[allow(clippy::too_many_arguments)]
fn search_cluster<E: Element>(
    view: &ClusterView<'_>,
    data: &[E],
    dim: usize,
    metric: Metric,
    query: &[f32],
    label: u32,
    params: &SearchParams,
    predicate: Option<&(dyn Fn(u32) -> bool + Sync)>,
) -> TopKResult {
    let size = view.size;
    let itopk = params.itopk;

    let mut beam: Vec<BeamEntry> = Vec::with_capacity(itopk.min(size) + 1);
    let mut seen = vec![false; size];

    let insert = |beam: &mut Vec<BeamEntry>, distance: f32, local: u32, global: u32| {
        let pos = beam
            .binary_search_by(|e| {
                e.distance
                    .total_cmp(&distance)
                    .then_with(|| e.global.cmp(&global))
            })
            .unwrap_or_else(|p| p);
        if pos >= itopk {
            return;
        }
        beam.insert(
            pos,
            BeamEntry {
                distance,
                local,
                global,
                expanded: false,
            },
        );
        beam.truncate(itopk);
    };

    let score = |local: u32| -> (f32, u32) {
        let global = view.mapping[local as usize];
        let start = global as usize * dim;
        let d = distance(metric, query, &data[start..start + dim]);
        (d, global)
    };

    // Initial random sample, confined to [0, size). Drawing the whole
    // cluster is enumeration; otherwise rejection-sample distinct vertices.
    let want = itopk.min(size);
    if want == size {
        for local in 0..size as u32 {
            seen[local as usize] = true;
            let (d, global) = score(local);
            if predicate.map_or(true, |p| p(global)) {
                insert(&mut beam, d, local, global);
            }
        }
    } else {
        let mut rng = SplitRng::new(crate::rng::mix(params.seed, label as u64));
        let mut drawn = 0;
        while drawn < want {
            let local = rng.below(size as u64) as u32;
            if seen[local as usize] {
                continue;
            }
            seen[local as usize] = true;
            drawn += 1;
            let (d, global) = score(local);
            if predicate.map_or(true, |p| p(global)) {
                insert(&mut beam, d, local, global);
            }
        }
    }

    let mut iterations = 0usize;
    loop {
        if iterations >= params.max_iterations {
            break;
        }
        let Some(parent_pos) = beam.iter().position(|e| !e.expanded) else {
            break;
        };
        beam[parent_pos].expanded = true;
        iterations += 1;
        let parent_local = beam[parent_pos].local as usize;
        let row = &view.rows[parent_local * view.degree..(parent_local + 1) * view.degree];
        for &nb in row {
            let nb_idx = nb as usize;
            if seen[nb_idx] {
                continue;
            }
            seen[nb_idx] = true;
            let (d, global) = score(nb);
            if predicate.map_or(true, |p| p(global)) {
                insert(&mut beam, d, nb, global);
            }
        }
    }

    let take = params.k.min(beam.len());
    TopKResult::from_sorted(
        beam[..take]
            .iter()
            .map(|e| Neighbor::new(e.global, e.distance))
            .collect(),
    )
}
