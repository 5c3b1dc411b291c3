//! Compact multi-label verification: every point's sorted label list is
//! flattened into one global array with per-point offsets and counts, and
//! subset checks narrow the search range from both ends before probing the
//! middle labels.

use crate::dataset::LabelAssignment;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateTable {
    global_labels: Vec<u32>,
    offsets: Vec<u64>,
    counts: Vec<u32>,
}

/// Flattens the assignment, keeping each point's segment contiguous and
/// sorted.
pub fn build_predicate_table(labels: &LabelAssignment) -> PredicateTable {
    let mut global = Vec::with_capacity(labels.total_assignments());
    let mut offsets = Vec::with_capacity(labels.n_points());
    let mut counts = Vec::with_capacity(labels.n_points());
    for list in labels.iter() {
        offsets.push(global.len() as u64);
        counts.push(list.len() as u32);
        global.extend_from_slice(list);
    }
    PredicateTable {
        global_labels: global,
        offsets,
        counts,
    }
}

impl PredicateTable {
    pub(crate) fn from_parts(
        global_labels: Vec<u32>,
        offsets: Vec<u64>,
        counts: Vec<u32>,
    ) -> Result<Self> {
        if offsets.len() != counts.len() {
            return Err(Error::CorruptIndex(
                "predicate offsets/counts length mismatch".to_string(),
            ));
        }
        let mut expected = 0u64;
        for (i, (&o, &c)) in offsets.iter().zip(&counts).enumerate() {
            if o != expected {
                return Err(Error::CorruptIndex(format!(
                    "predicate offset {o} at point {i}, expected {expected}"
                )));
            }
            expected += c as u64;
        }
        if expected != global_labels.len() as u64 {
            return Err(Error::CorruptIndex(
                "predicate global array length mismatch".to_string(),
            ));
        }
        Ok(Self {
            global_labels,
            offsets,
            counts,
        })
    }

    pub fn n_points(&self) -> usize {
        self.offsets.len()
    }

    pub fn total_labels(&self) -> usize {
        self.global_labels.len()
    }

    pub fn point_labels(&self, point: usize) -> &[u32] {
        let start = self.offsets[point] as usize;
        let len = self.counts[point] as usize;
        &self.global_labels[start..start + len]
    }

    pub fn global_labels(&self) -> &[u32] {
        &self.global_labels
    }

    pub fn offsets(&self) -> &[u64] {
        &self.offsets
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// True iff `query_labels` (sorted ascending, non-empty) is a subset of
    /// the point's label set.
    pub fn verify(&self, point: u32, query_labels: &[u32]) -> Result<bool> {
        if (point as usize) >= self.n_points() {
            return Err(Error::PointOutOfRange {
                index: point as u64,
                n_points: self.n_points() as u64,
            });
        }
        Ok(self.matches_all(point as usize, query_labels))
    }

    /// Unchecked subset test used on ids coming from the index itself.
    ///
    /// The smallest and largest query labels are located first; when both are
    /// present they bracket the index range that must contain every middle
    /// label, so the middle probes run on a narrowed slice.
    #[inline]
    pub(crate) fn matches_all(&self, point: usize, query_labels: &[u32]) -> bool {
        debug_assert!(!query_labels.is_empty());
        debug_assert!(query_labels.windows(2).all(|w| w[0] < w[1]));
        let seg = self.point_labels(point);
        let lo = match seg.binary_search(&query_labels[0]) {
            Ok(i) => i,
            Err(_) => return false,
        };
        if query_labels.len() == 1 {
            return true;
        }
        let last = query_labels[query_labels.len() - 1];
        let hi = match seg.binary_search(&last) {
            Ok(i) => i,
            Err(_) => return false,
        };
        let inner = &seg[lo + 1..hi];
        for l in &query_labels[1..query_labels.len() - 1] {
            if inner.binary_search(l).is_err() {
                return false;
            }
        }
        true
    }

    /// True iff the point carries at least one of the query labels.
    pub fn matches_any(&self, point: usize, query_labels: &[u32]) -> bool {
        let seg = self.point_labels(point);
        query_labels.iter().any(|l| seg.binary_search(l).is_ok())
    }

    /// Rebuilds the per-point assignment.
    pub fn to_label_assignment(&self) -> LabelAssignment {
        let lists = (0..self.n_points())
            .map(|i| self.point_labels(i).to_vec())
            .collect();
        LabelAssignment::from_lists(lists)
    }

    pub fn byte_len(&self) -> usize {
        self.global_labels.len() * 4 + self.offsets.len() * 8 + self.counts.len() * 4
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn flattening_matches_definition() {
        let a = LabelAssignment::from_lists(vec![vec![1, 3], vec![7]]);
        let t = build_predicate_table(&a);
        assert_eq!(t.global_labels(), &[1, 3, 7]);
        assert_eq!(t.offsets(), &[0, 2]);
        assert_eq!(t.counts(), &[2, 1]);
    }

    #[test]
    fn worked_example_with_narrowed_range() {
        let a = LabelAssignment::from_lists(vec![vec![1, 3, 5, 7, 9, 11, 13, 15]]);
        let t = build_predicate_table(&a);
        assert!(t.verify(0, &[5, 9, 11]).unwrap());
        assert!(!t.verify(0, &[5, 8, 11]).unwrap());
        assert!(!t.verify(0, &[0, 9, 11]).unwrap());
        assert!(!t.verify(0, &[5, 9, 16]).unwrap());
    }

    #[test]
    fn subset_extremes() {
        let a = LabelAssignment::from_lists(vec![vec![2, 4, 6], vec![10]]);
        let t = build_predicate_table(&a);
        assert!(t.verify(0, &[2, 4, 6]).unwrap());
        assert!(!t.verify(1, &[2]).unwrap());
        assert!(t.verify(1, &[10]).unwrap());
    }

    #[test]
    fn out_of_range_point_is_an_error() {
        let a = LabelAssignment::from_lists(vec![vec![1]]);
        let t = build_predicate_table(&a);
        assert!(matches!(
            t.verify(5, &[1]),
            Err(Error::PointOutOfRange { .. })
        ));
    }

    #[test]
    fn agrees_with_naive_subset_on_random_pairs() {
        let mut rng = StdRng::seed_from_u64(2024);
        let n_points = 500;
        let lists: Vec<Vec<u32>> = (0..n_points)
            .map(|_| {
                let len = rng.gen_range(0..12);
                (0..len).map(|_| rng.gen_range(0u32..40)).collect()
            })
            .collect();
        let a = LabelAssignment::from_lists(lists);
        let t = build_predicate_table(&a);
        for _ in 0..10_000 {
            let point = rng.gen_range(0..n_points);
            let qlen = rng.gen_range(1..5);
            let mut q: Vec<u32> = (0..qlen).map(|_| rng.gen_range(0u32..40)).collect();
            q.sort_unstable();
            q.dedup();
            let naive = q
                .iter()
                .all(|l| a.labels_of(point).contains(l));
            assert_eq!(t.verify(point as u32, &q).unwrap(), naive);
        }
    }

    proptest! {
        #[test]
        fn round_trips_to_assignment(lists in proptest::collection::vec(
            proptest::collection::vec(0u32..30, 0..8), 1..50)) {
            let a = LabelAssignment::from_lists(lists);
            let t = build_predicate_table(&a);
            prop_assert_eq!(t.to_label_assignment(), a);
        }
    }
}
