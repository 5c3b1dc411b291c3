//! Top-k result containers and bounded selection.
//!
//! Every result in the crate is ordered by the canonical tie-break
//! `(distance ascending, global id ascending)` so searches, merges, and
//! oracles are byte-for-byte reproducible.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// One search hit: a global point id and its distance to the query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub id: u32,
    pub distance: f32,
}

impl Neighbor {
    pub fn new(id: u32, distance: f32) -> Self {
        Self { id, distance }
    }
}

impl Eq for Neighbor {}

impl Ord for Neighbor {
    #[inline]
    fn cmp(&self, other: &Self) -> Ordering {
        // total_cmp keeps the order total even for non-finite distances.
        self.distance
            .total_cmp(&other.distance)
            .then_with(|| self.id.cmp(&other.id))
    }
}

impl PartialOrd for Neighbor {
    #[inline]
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Search output: hits sorted by the canonical tie-break, duplicate-free by
/// id, possibly shorter than the requested k when fewer matches exist.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TopKResult {
    pub hits: Vec<Neighbor>,
}

impl TopKResult {
    pub fn empty() -> Self {
        Self { hits: Vec::new() }
    }

    /// Builds from hits already in canonical order.
    pub fn from_sorted(hits: Vec<Neighbor>) -> Self {
        debug_assert!(hits.windows(2).all(|w| w[0] < w[1]));
        Self { hits }
    }

    /// Sorts, dedups by id, truncates to `k`.
    pub fn from_unsorted(mut hits: Vec<Neighbor>, k: usize) -> Self {
        hits.sort_unstable();
        hits.dedup_by_key(|n| n.id);
        hits.truncate(k);
        Self { hits }
    }

    pub fn ids(&self) -> Vec<u32> {
        self.hits.iter().map(|n| n.id).collect()
    }

    pub fn len(&self) -> usize {
        self.hits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hits.is_empty()
    }
}

/// Max-heap keeping the k best (smallest) neighbors seen so far. A cached
/// copy of the current worst distance keeps the common reject path to a
/// single float compare.
#[derive(Debug)]
pub struct BoundedTopK {
    k: usize,
    heap: BinaryHeap<Neighbor>,
    bound: f32,
}

impl BoundedTopK {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            heap: BinaryHeap::with_capacity(k.min(4096) + 1),
            bound: f32::INFINITY,
        }
    }

    #[inline]
    pub fn push(&mut self, n: Neighbor) {
        if self.heap.len() < self.k {
            self.heap.push(n);
            if self.heap.len() == self.k {
                self.bound = self.heap.peek().expect("k > 0").distance;
            }
            return;
        }
        if n.distance > self.bound || self.k == 0 {
            return;
        }
        // Equal distances fall through to the full (distance, id) tie-break.
        let worst = self.heap.peek().expect("heap is full here");
        if n < *worst {
            self.heap.pop();
            self.heap.push(n);
            self.bound = self.heap.peek().expect("k > 0").distance;
        }
    }

    pub fn into_result(self) -> TopKResult {
        TopKResult::from_sorted(self.heap.into_sorted_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neighbor_order_breaks_ties_by_id() {
        let a = Neighbor::new(5, 1.0);
        let b = Neighbor::new(3, 1.0);
        let c = Neighbor::new(9, 0.5);
        let mut v = vec![a, b, c];
        v.sort_unstable();
        assert_eq!(v, vec![c, b, a]);
    }

    #[test]
    fn bounded_topk_keeps_smallest() {
        let mut t = BoundedTopK::new(3);
        for (id, d) in [(0u32, 9.0f32), (1, 1.0), (2, 5.0), (3, 0.5), (4, 7.0)] {
            t.push(Neighbor::new(id, d));
        }
        let r = t.into_result();
        assert_eq!(r.ids(), vec![3, 1, 2]);
    }

    #[test]
    fn k_zero_returns_nothing() {
        let mut t = BoundedTopK::new(0);
        t.push(Neighbor::new(0, 0.0));
        assert!(t.into_result().is_empty());
    }

    #[test]
    fn from_unsorted_dedups_by_id() {
        let r = TopKResult::from_unsorted(
            vec![
                Neighbor::new(7, 2.0),
                Neighbor::new(7, 2.0),
                Neighbor::new(1, 3.0),
            ],
            10,
        );
        assert_eq!(r.ids(), vec![7, 1]);
    }
}
