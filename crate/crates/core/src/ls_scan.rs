//! Low-specificity partition: per-label vector blocks stored in an
//! interleaved group layout, searched by exact scan with fused top-k
//! selection.
//!
//! Within a group of `W` vectors, elements are laid out chunk-round by
//! chunk-round: `(v0[0..c], v1[0..c], ..., v{W-1}[0..c], v0[c..2c], ...)`
//! with `c` elements per 16-byte chunk. Slots past a label's size and the
//! tail of a vector's last chunk are zero padded; padding never reaches
//! results.

use crate::dataset::{Element, ElementKind, VectorData, VectorDataset};
use crate::distance::{distance, Metric};
use crate::error::{Error, Result};
use crate::ivf::{Partition, PostingLists};
use crate::topk::{BoundedTopK, Neighbor, TopKResult};

/// Elements per 16-byte chunk for a scalar kind (4 for f32, 16 for u8).
pub fn chunk_elems_for(kind: ElementKind) -> usize {
    16 / kind.bytes_per_element()
}

/// Interleaves an `m x dim` row-major matrix into the group layout.
/// Invertible for every shape; `dim` need not divide `chunk_elems`.
pub fn interleave_layout<E: Element>(
    vectors: &[E],
    m: usize,
    dim: usize,
    group_width: usize,
    chunk_elems: usize,
) -> Vec<E> {
    assert!(group_width >= 1 && chunk_elems >= 1);
    assert_eq!(vectors.len(), m * dim);
    let rounds = dim.div_ceil(chunk_elems);
    let group_elems = group_width * rounds * chunk_elems;
    let n_groups = m.div_ceil(group_width);
    let mut out = vec![E::ZERO; n_groups * group_elems];
    for i in 0..m {
        let g = i / group_width;
        let slot = i % group_width;
        let row = &vectors[i * dim..(i + 1) * dim];
        for (e, &x) in row.iter().enumerate() {
            let round = e / chunk_elems;
            let within = e % chunk_elems;
            let idx = g * group_elems
                + round * (group_width * chunk_elems)
                + slot * chunk_elems
                + within;
            out[idx] = x;
        }
    }
    out
}

/// Exact inverse of [`interleave_layout`].
pub fn deinterleave_layout<E: Element>(
    flat: &[E],
    m: usize,
    dim: usize,
    group_width: usize,
    chunk_elems: usize,
) -> Vec<E> {
    let rounds = dim.div_ceil(chunk_elems);
    let group_elems = group_width * rounds * chunk_elems;
    assert_eq!(flat.len(), m.div_ceil(group_width) * group_elems);
    let mut out = vec![E::ZERO; m * dim];
    for i in 0..m {
        let g = i / group_width;
        let slot = i % group_width;
        for e in 0..dim {
            let round = e / chunk_elems;
            let within = e % chunk_elems;
            let idx = g * group_elems
                + round * (group_width * chunk_elems)
                + slot * chunk_elems
                + within;
            out[i * dim + e] = flat[idx];
        }
    }
    out
}

/// Interleaved vector blocks for every LS label, plus sizes, slot offsets,
/// and the slot-to-global-id mapping. Unlike the graph partition, vectors
/// *are* copied here, once per LS label carrying them.
#[derive(Debug, Clone, PartialEq)]
pub struct LsIndex {
    labels: Vec<u32>,
    sizes: Vec<u32>,
    /// Starting storage slot of each label's region (multiples of the group
    /// width, since regions are whole groups).
    slot_offsets: Vec<u64>,
    /// Starting position of each label's section in `mapping` (prefix sums
    /// of `sizes`).
    map_offsets: Vec<u64>,
    blocks: VectorData,
    mapping: Vec<u32>,
    dim: usize,
    group_width: u32,
    chunk_elems: u32,
}

pub fn build_ls_index(
    dataset: &VectorDataset,
    posting: &PostingLists,
    partition: &Partition,
    group_width: u32,
) -> Result<LsIndex> {
    if group_width == 0 {
        return Err(Error::Param("group width must be at least 1".to_string()));
    }
    let dim = dataset.dim();
    let n_points = dataset.n_points();
    let w = group_width as usize;
    let c = chunk_elems_for(dataset.element_kind());
    let ls_labels = partition.ls_labels().to_vec();

    let mut labels = Vec::with_capacity(ls_labels.len());
    let mut sizes = Vec::with_capacity(ls_labels.len());
    let mut slot_offsets = Vec::with_capacity(ls_labels.len());
    let mut map_offsets = Vec::with_capacity(ls_labels.len());
    let mut mapping = Vec::new();
    let mut next_slot = 0u64;
    let mut next_map = 0u64;

    let blocks = crate::dataset::with_elems!(dataset.data(), s => {
        let mut flat = Vec::new();
        for &l in &ls_labels {
            let members = posting.get(l).ok_or(Error::UnknownLabel(l))?;
            if let Some(&bad) = members.iter().find(|&&i| (i as usize) >= n_points) {
                return Err(Error::PointOutOfRange {
                    index: bad as u64,
                    n_points: n_points as u64,
                });
            }
            let m = members.len();
            let mut cluster = Vec::with_capacity(m * dim);
            for &i in members {
                let start = i as usize * dim;
                cluster.extend_from_slice(&s[start..start + dim]);
            }
            let region = interleave_layout(&cluster, m, dim, w, c);
            labels.push(l);
            sizes.push(m as u32);
            slot_offsets.push(next_slot);
            map_offsets.push(next_map);
            next_slot += (m.div_ceil(w) * w) as u64;
            next_map += m as u64;
            mapping.extend_from_slice(members);
            flat.extend_from_slice(&region);
        }
        Element::wrap_vec(flat)
    });

    Ok(LsIndex {
        labels,
        sizes,
        slot_offsets,
        map_offsets,
        blocks,
        mapping,
        dim,
        group_width,
        chunk_elems: c as u32,
    })
}

impl LsIndex {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        labels: Vec<u32>,
        sizes: Vec<u32>,
        slot_offsets: Vec<u64>,
        blocks: VectorData,
        mapping: Vec<u32>,
        dim: usize,
        group_width: u32,
        chunk_elems: u32,
    ) -> Result<Self> {
        if labels.len() != sizes.len() || labels.len() != slot_offsets.len() {
            return Err(Error::CorruptIndex("ls metadata length mismatch".to_string()));
        }
        let w = group_width as usize;
        if w == 0 || chunk_elems == 0 {
            return Err(Error::CorruptIndex("ls layout parameters are zero".to_string()));
        }
        let mut map_offsets = Vec::with_capacity(labels.len());
        let mut next_slot = 0u64;
        let mut next_map = 0u64;
        for (i, (&o, &s)) in slot_offsets.iter().zip(&sizes).enumerate() {
            if o != next_slot {
                return Err(Error::CorruptIndex(format!(
                    "ls slot offset {o} at slot {i}, expected {next_slot}"
                )));
            }
            map_offsets.push(next_map);
            next_slot += ((s as usize).div_ceil(w) * w) as u64;
            next_map += s as u64;
        }
        if mapping.len() as u64 != next_map {
            return Err(Error::CorruptIndex("ls mapping length mismatch".to_string()));
        }
        let rounds = dim.div_ceil(chunk_elems as usize);
        let group_elems = w * rounds * chunk_elems as usize;
        let expected_elems = next_slot as usize / w * group_elems;
        if blocks.len() != expected_elems {
            return Err(Error::CorruptIndex(format!(
                "ls block length {} does not match layout ({expected_elems})",
                blocks.len()
            )));
        }
        Ok(Self {
            labels,
            sizes,
            slot_offsets,
            map_offsets,
            blocks,
            mapping,
            dim,
            group_width,
            chunk_elems,
        })
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn sizes(&self) -> &[u32] {
        &self.sizes
    }

    pub fn slot_offsets(&self) -> &[u64] {
        &self.slot_offsets
    }

    pub(crate) fn mapping(&self) -> &[u32] {
        &self.mapping
    }

    pub(crate) fn blocks(&self) -> &VectorData {
        &self.blocks
    }

    pub fn group_width(&self) -> u32 {
        self.group_width
    }

    pub fn chunk_elems(&self) -> u32 {
        self.chunk_elems
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

    /// Total storage slots including padding: sum of ceil(S/W)*W.
    pub fn total_slots(&self) -> usize {
        self.sizes
            .iter()
            .map(|&s| (s as usize).div_ceil(self.group_width as usize) * self.group_width as usize)
            .sum()
    }

    pub fn blocks_bytes(&self) -> usize {
        self.blocks.byte_len()
    }

    pub fn mapping_bytes(&self) -> usize {
        self.mapping.len() * 4
    }

    pub fn metadata_bytes(&self) -> usize {
        self.labels.len() * 4 + self.sizes.len() * 4 + self.slot_offsets.len() * 8
    }

    /// De-interleaves one label's region back to row-major vectors.
    pub fn region_rows_f32(&self, label: u32) -> Result<Vec<f32>> {
        let slot = self.slot(label).ok_or(Error::NotLsLabel(label))?;
        let m = self.sizes[slot] as usize;
        let w = self.group_width as usize;
        let c = self.chunk_elems as usize;
        let rounds = self.dim.div_ceil(c);
        let group_elems = w * rounds * c;
        let start = self.slot_offsets[slot] as usize / w * group_elems;
        let len = m.div_ceil(w) * group_elems;
        crate::dataset::with_elems!(&self.blocks, s => {
            let rows = deinterleave_layout(&s[start..start + len], m, self.dim, w, c);
            Ok(rows.iter().map(|e| e.to_f32()).collect())
        })
    }
}

/// Exact scan of one LS label's region. The optional predicate runs per slot
/// *before* any distance work; survivors are gathered from the interleaved
/// chunks and scored with the shared distance kernel. Returns the exact
/// top-`min(k, survivors)` under the canonical tie-break.
pub fn bfs_search(
    index: &LsIndex,
    metric: Metric,
    query: &[f32],
    label: u32,
    k: usize,
    predicate: Option<&(dyn Fn(u32) -> bool + Sync)>,
) -> Result<TopKResult> {
    if query.len() != index.dim {
        return Err(Error::DimensionMismatch {
            expected: index.dim,
            got: query.len(),
        });
    }
    let slot = index.slot(label).ok_or(Error::NotLsLabel(label))?;
    let m = index.sizes[slot] as usize;
    let w = index.group_width as usize;
    let c = index.chunk_elems as usize;
    let rounds = index.dim.div_ceil(c);
    let group_elems = w * rounds * c;
    let region_start = index.slot_offsets[slot] as usize / w * group_elems;
    let map_start = index.map_offsets[slot] as usize;
    let map = &index.mapping[map_start..map_start + m];

    crate::dataset::with_elems!(&index.blocks, s => Ok(scan_region(
        &s[region_start..],
        m,
        index.dim,
        w,
        c,
        map,
        metric,
        query,
        k,
        predicate,
    )))
}

#[allow(clippy::too_many_arguments)]
fn scan_region<E: Element>(
    region: &[E],
    m: usize,
    dim: usize,
    group_width: usize,
    chunk_elems: usize,
    map: &[u32],
    metric: Metric,
    query: &[f32],
    k: usize,
    predicate: Option<&(dyn Fn(u32) -> bool + Sync)>,
) -> TopKResult {
    let mut top = BoundedTopK::new(k);
    let mut row = vec![E::ZERO; dim];
    for j in 0..m {
        let global = map[j];
        if let Some(p) = predicate {
            if !p(global) {
                continue;
            }
        }
        gather_slot(region, j, dim, group_width, chunk_elems, &mut row);
        let d = distance(metric, query, &row);
        top.push(Neighbor::new(global, d));
    }
    top.into_result()
}

/// Copies slot `j`'s elements out of the interleaved region into `row`.
#[inline]
fn gather_slot<E: Element>(
    region: &[E],
    j: usize,
    dim: usize,
    group_width: usize,
    chunk_elems: usize,
    row: &mut [E],
) {
    let rounds = dim.div_ceil(chunk_elems);
    let group_elems = group_width * rounds * chunk_elems;
    let g = j / group_width;
    let slot = j % group_width;
    let base = g * group_elems + slot * chunk_elems;
    let mut e = 0;
    for round in 0..rounds {
        let src = base + round * group_width * chunk_elems;
        let take = chunk_elems.min(dim - e);
        row[e..e + take].copy_from_slice(&region[src..src + take]);
        e += take;
    }
}
