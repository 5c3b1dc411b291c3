//! Label-centric inverted file index: posting lists, label specificity, the
//! high/low-specificity partition, and query routing.

use std::collections::BTreeMap;

use crate::dataset::LabelAssignment;
use crate::error::{Error, Result};

/// For each label `l`, the sorted global indices of the points carrying it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PostingLists {
    lists: BTreeMap<u32, Vec<u32>>,
    n_points: usize,
}

/// Exact inversion of a label assignment. Labels carried by no point do not
/// appear; each list is sorted ascending and duplicate free.
pub fn build_posting_lists(labels: &LabelAssignment) -> PostingLists {
    let mut lists: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for (i, point_labels) in labels.iter().enumerate() {
        for &l in point_labels {
            lists.entry(l).or_default().push(i as u32);
        }
    }
    // Point ids were visited in ascending order, so each list is sorted.
    PostingLists {
        lists,
        n_points: labels.n_points(),
    }
}

impl PostingLists {
    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn n_labels(&self) -> usize {
        self.lists.len()
    }

    pub fn get(&self, label: u32) -> Option<&[u32]> {
        self.lists.get(&label).map(|v| v.as_slice())
    }

    pub fn cluster_size(&self, label: u32) -> Option<usize> {
        self.lists.get(&label).map(|v| v.len())
    }

    pub fn labels(&self) -> impl Iterator<Item = u32> + '_ {
        self.lists.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &[u32])> {
        self.lists.iter().map(|(l, v)| (*l, v.as_slice()))
    }

    /// Total posting entries: sum of |C_l| over all labels.
    pub fn total_entries(&self) -> usize {
        self.lists.values().map(|v| v.len()).sum()
    }

    /// Fraction of the dataset carrying `label`.
    pub fn specificity(&self, label: u32) -> Result<f64> {
        let size = self
            .cluster_size(label)
            .ok_or(Error::UnknownLabel(label))?;
        Ok(size as f64 / self.n_points as f64)
    }

    /// Rebuilds the per-point assignment (exact inverse of
    /// [`build_posting_lists`] for points that have at least one label).
    pub fn to_label_assignment(&self) -> LabelAssignment {
        let mut lists = vec![Vec::new(); self.n_points];
        for (l, members) in self.iter() {
            for &i in members {
                lists[i as usize].push(l);
            }
        }
        LabelAssignment::from_lists(lists)
    }
}

/// Where a single-label query is sent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    /// Proximity-graph search over the label's cluster.
    Graph,
    /// Exact scan over the label's cluster.
    Bfs,
    /// Label never appears in the dataset; result set is empty.
    NotIndexed,
}

/// Split of the non-empty labels at threshold `T`: high specificity
/// (`|C_l| >= T`, graph-searched) vs low specificity (scanned).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    threshold: u32,
    hs_labels: Vec<u32>,
    ls_labels: Vec<u32>,
}

/// Classifies every non-empty label. `T = 0` behaves like `T = 1` (all
/// non-empty labels are high specificity); `T = u32::MAX` routes everything
/// to the scan side at any practical dataset size.
pub fn partition_labels(posting: &PostingLists, threshold: u32) -> Partition {
    let mut hs = Vec::new();
    let mut ls = Vec::new();
    for (l, members) in posting.iter() {
        if members.len() >= threshold as usize {
            hs.push(l);
        } else {
            ls.push(l);
        }
    }
    Partition {
        threshold,
        hs_labels: hs,
        ls_labels: ls,
    }
}

impl Partition {
    pub fn threshold(&self) -> u32 {
        self.threshold
    }

    pub fn hs_labels(&self) -> &[u32] {
        &self.hs_labels
    }

    pub fn ls_labels(&self) -> &[u32] {
        &self.ls_labels
    }

    pub fn is_hs(&self, label: u32) -> bool {
        self.hs_labels.binary_search(&label).is_ok()
    }

    pub fn is_ls(&self, label: u32) -> bool {
        self.ls_labels.binary_search(&label).is_ok()
    }

    /// Pure function of cluster size and threshold.
    pub fn route(&self, label: u32) -> Route {
        if self.is_hs(label) {
            Route::Graph
        } else if self.is_ls(label) {
            Route::Bfs
        } else {
            Route::NotIndexed
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn assignment(lists: Vec<Vec<u32>>) -> LabelAssignment {
        LabelAssignment::from_lists(lists)
    }

    #[test]
    fn inversion_matches_definition() {
        let a = assignment(vec![vec![1, 3], vec![3]]);
        let p = build_posting_lists(&a);
        assert_eq!(p.get(1), Some(&[0u32][..]));
        assert_eq!(p.get(3), Some(&[0u32, 1][..]));
        assert_eq!(p.total_entries(), 3);
    }

    #[test]
    fn all_empty_assignment_yields_empty_map() {
        let a = assignment(vec![vec![], vec![], vec![]]);
        let p = build_posting_lists(&a);
        assert_eq!(p.n_labels(), 0);
        assert_eq!(p.n_points(), 3);
    }

    #[test]
    fn inversion_agrees_with_naive_scan() {
        let a = crate::synthetic::gen_zipf_labels(10_000, 40, 3.0, 1.0, 11).unwrap();
        let p = build_posting_lists(&a);
        // Naive double loop over (point, label) pairs.
        for l in p.labels() {
            let naive: Vec<u32> = (0..a.n_points())
                .filter(|&i| a.labels_of(i).contains(&l))
                .map(|i| i as u32)
                .collect();
            assert_eq!(p.get(l).unwrap(), naive.as_slice());
        }
        assert_eq!(p.total_entries(), a.total_assignments());
    }

    #[test]
    fn specificity_is_a_quotient() {
        let mut lists = vec![vec![0u32]; 1000];
        lists.extend(vec![vec![]; 9000]);
        let a = assignment(lists);
        let p = build_posting_lists(&a);
        assert!((p.specificity(0).unwrap() - 0.1).abs() < 1e-12);
        assert!(matches!(p.specificity(42), Err(Error::UnknownLabel(42))));
    }

    #[test]
    fn label_on_every_point_has_specificity_one() {
        let a = assignment(vec![vec![5]; 64]);
        let p = build_posting_lists(&a);
        assert_eq!(p.specificity(5).unwrap(), 1.0);
    }

    #[test]
    fn partition_boundary_is_inclusive() {
        let mut lists = Vec::new();
        for i in 0..4000 {
            let mut l = Vec::new();
            if i < 2000 {
                l.push(0); // exactly T members
            }
            if i < 1999 {
                l.push(1); // one short of T
            }
            lists.push(l);
        }
        let a = assignment(lists);
        let p = build_posting_lists(&a);
        let part = partition_labels(&p, 2000);
        assert!(part.is_hs(0));
        assert!(part.is_ls(1));
        assert_eq!(part.route(0), Route::Graph);
        assert_eq!(part.route(1), Route::Bfs);
        assert_eq!(part.route(99), Route::NotIndexed);
    }

    #[test]
    fn threshold_one_puts_everything_in_hs() {
        let a = crate::synthetic::gen_zipf_labels(500, 10, 2.0, 1.0, 3).unwrap();
        let p = build_posting_lists(&a);
        let part = partition_labels(&p, 1);
        assert!(part.ls_labels().is_empty());
        assert_eq!(part.hs_labels().len(), p.n_labels());
    }

    #[test]
    fn partition_matches_naive_classifier() {
        let a = crate::synthetic::gen_zipf_labels(5_000, 25, 3.0, 1.0, 21).unwrap();
        let p = build_posting_lists(&a);
        for t in [1u32, 50, 200, 1000, 10_000] {
            let part = partition_labels(&p, t);
            for l in p.labels() {
                let expect_hs = p.cluster_size(l).unwrap() >= t as usize;
                assert_eq!(part.is_hs(l), expect_hs, "label {l} at T={t}");
                assert_eq!(part.is_ls(l), !expect_hs, "label {l} at T={t}");
            }
        }
    }

    #[test]
    fn routing_matches_partition_membership() {
        let a = crate::synthetic::gen_zipf_labels(3_000, 20, 2.5, 1.0, 9).unwrap();
        let p = build_posting_lists(&a);
        let part = partition_labels(&p, 150);
        for l in p.labels() {
            let expected = if part.is_hs(l) { Route::Graph } else { Route::Bfs };
            assert_eq!(part.route(l), expected);
        }
    }

    proptest! {
        #[test]
        fn inversion_round_trips(lists in proptest::collection::vec(
            proptest::collection::vec(0u32..16, 0..6), 1..80)) {
            let a = assignment(lists);
            let p = build_posting_lists(&a);
            prop_assert_eq!(p.to_label_assignment(), a);
        }

        #[test]
        fn partition_is_a_disjoint_cover(
            lists in proptest::collection::vec(proptest::collection::vec(0u32..8, 0..4), 1..60),
            t in 0u32..20,
        ) {
            let a = assignment(lists);
            let p = build_posting_lists(&a);
            let part = partition_labels(&p, t);
            let mut covered: Vec<u32> =
                part.hs_labels().iter().chain(part.ls_labels()).copied().collect();
            covered.sort_unstable();
            let all: Vec<u32> = p.labels().collect();
            prop_assert_eq!(covered, all);
            for l in part.hs_labels() {
                prop_assert!(!part.is_ls(*l));
            }
        }
    }
}
