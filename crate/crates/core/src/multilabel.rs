//! Multi-label query processing: the label expression grammar, candidate
//! list merging, OR fan-out, and the two AND policies (greedy and parallel).

use std::collections::HashSet;
use std::fmt;

use crate::engine::FilteredIndex;
use crate::error::{Error, Result};
use crate::hs_graph::SearchParams;
use crate::ivf::Route;
use crate::topk::{Neighbor, TopKResult};

/// Operator joining a query's labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryOp {
    Single,
    And,
    Or,
}

/// Which AND strategy to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AndPolicy {
    /// Search only the least-populated label's cluster, filtering on the
    /// remaining labels inline.
    #[default]
    Greedy,
    /// Search every label's cluster with cross-filtering, then merge.
    Parallel,
}

impl std::str::FromStr for AndPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(AndPolicy::Greedy),
            "parallel" => Ok(AndPolicy::Parallel),
            other => Err(Error::Param(format!("unknown AND policy '{other}'"))),
        }
    }
}

/// A parsed label constraint: sorted, duplicate-free labels joined by one
/// operator. Grammar, one expression per line: `L`, `L1 & L2 & ...`, or
/// `L1 | L2 | ...`. Mixing `&` and `|` is not supported.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelExpr {
    pub labels: Vec<u32>,
    pub op: QueryOp,
}

impl LabelExpr {
    pub fn single(label: u32) -> Self {
        Self {
            labels: vec![label],
            op: QueryOp::Single,
        }
    }

    pub fn and(labels: Vec<u32>) -> Self {
        Self::with_op(labels, QueryOp::And)
    }

    pub fn or(labels: Vec<u32>) -> Self {
        Self::with_op(labels, QueryOp::Or)
    }

    fn with_op(mut labels: Vec<u32>, op: QueryOp) -> Self {
        labels.sort_unstable();
        labels.dedup();
        Self { labels, op }
    }

    pub fn parse(line: &str) -> Result<Self> {
        let line = line.trim();
        if line.is_empty() {
            return Err(Error::Param("empty label expression".to_string()));
        }
        let has_and = line.contains('&');
        let has_or = line.contains('|');
        if has_and && has_or {
            return Err(Error::Param(format!(
                "expression '{line}' mixes '&' and '|'"
            )));
        }
        let (sep, op) = if has_and {
            ('&', QueryOp::And)
        } else if has_or {
            ('|', QueryOp::Or)
        } else {
            (',', QueryOp::Single)
        };
        let mut labels = Vec::new();
        for token in line.split(sep) {
            let token = token.trim();
            let value: u32 = token
                .parse()
                .map_err(|_| Error::Param(format!("invalid label token '{token}'")))?;
            labels.push(value);
        }
        if op == QueryOp::Single && labels.len() != 1 {
            return Err(Error::Param(format!(
                "bare expression '{line}' must contain exactly one label"
            )));
        }
        Ok(Self::with_op(labels, op))
    }
}

impl fmt::Display for LabelExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sep = match self.op {
            QueryOp::And => " & ",
            QueryOp::Or => " | ",
            QueryOp::Single => " ",
        };
        let parts: Vec<String> = self.labels.iter().map(|l| l.to_string()).collect();
        write!(f, "{}", parts.join(sep))
    }
}

/// Merges candidate lists (each already in canonical order) into one list:
/// deduplicated by global id, globally sorted by `(distance, id)`, truncated
/// to `k`. Idempotent.
pub fn merge_topk(lists: &[TopKResult], k: usize) -> TopKResult {
    let mut all: Vec<Neighbor> = Vec::with_capacity(lists.iter().map(|l| l.len()).sum());
    for list in lists {
        debug_assert!(list.hits.windows(2).all(|w| w[0] < w[1]));
        all.extend_from_slice(&list.hits);
    }
    all.sort_unstable();
    let mut seen = HashSet::with_capacity(all.len());
    let mut hits = Vec::with_capacity(k.min(all.len()));
    for n in all {
        if hits.len() == k {
            break;
        }
        if seen.insert(n.id) {
            hits.push(n);
        }
    }
    TopKResult::from_sorted(hits)
}

/// OR query: one routed single-label search per query label, merged. Labels
/// absent from the index contribute an empty branch.
pub fn search_or(
    index: &FilteredIndex,
    query: &[f32],
    labels: &[u32],
    params: &SearchParams,
) -> Result<TopKResult> {
    if labels.is_empty() {
        return Err(Error::Param("OR query needs at least one label".to_string()));
    }
    let branches = run_branches(index, query, labels, params, None)?;
    Ok(merge_topk(&branches, params.k))
}

/// Greedy AND: pick the label with the smallest cluster (ties to the lower
/// label id) and search only that cluster, verifying the remaining labels
/// inline. Any label absent from the index makes the result empty.
pub fn search_and_greedy(
    index: &FilteredIndex,
    query: &[f32],
    labels: &[u32],
    params: &SearchParams,
) -> Result<TopKResult> {
    if labels.len() < 2 {
        return Err(Error::Param("AND query needs at least two labels".to_string()));
    }
    let Some(target) = greedy_target(index, labels) else {
        return Ok(TopKResult::empty());
    };
    let rest: Vec<u32> = labels.iter().copied().filter(|&l| l != target).collect();
    search_filtered_branch(index, query, target, &rest, params)
}

/// Parallel AND: one search per label, each filtering on the other labels,
/// merged. Strictly more coverage than greedy at the same parameters.
pub fn search_and_parallel(
    index: &FilteredIndex,
    query: &[f32],
    labels: &[u32],
    params: &SearchParams,
) -> Result<TopKResult> {
    if labels.len() < 2 {
        return Err(Error::Param("AND query needs at least two labels".to_string()));
    }
    if labels
        .iter()
        .any(|&l| index.posting().cluster_size(l).is_none())
    {
        return Ok(TopKResult::empty());
    }
    let branches: Vec<Result<TopKResult>> = crate::par::map_slice(labels, |&l| {
        let rest: Vec<u32> = labels.iter().copied().filter(|&x| x != l).collect();
        search_filtered_branch(index, query, l, &rest, params)
    });
    let branches = branches.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(merge_topk(&branches, params.k))
}

/// Least-populated query label, or None when any label is missing from the
/// index (AND with an empty cluster is empty).
pub fn greedy_target(index: &FilteredIndex, labels: &[u32]) -> Option<u32> {
    let mut best: Option<(usize, u32)> = None;
    for &l in labels {
        let size = index.posting().cluster_size(l)?;
        best = match best {
            None => Some((size, l)),
            Some((bs, bl)) if (size, l) < (bs, bl) => Some((size, l)),
            keep => keep,
        };
    }
    best.map(|(_, l)| l)
}

/// Routed single-cluster search with a subset predicate on `rest`.
fn search_filtered_branch(
    index: &FilteredIndex,
    query: &[f32],
    label: u32,
    rest: &[u32],
    params: &SearchParams,
) -> Result<TopKResult> {
    debug_assert!(rest.windows(2).all(|w| w[0] < w[1]));
    let table = index.predicate_table();
    let pred = move |id: u32| table.matches_all(id as usize, rest);
    match index.route(label) {
        Route::NotIndexed => Ok(TopKResult::empty()),
        Route::Graph => crate::hs_graph::graph_search(
            index.hs(),
            index.vectors(),
            index.config().metric,
            query,
            label,
            params,
            Some(&pred),
        ),
        Route::Bfs => crate::ls_scan::bfs_search(
            index.ls(),
            index.config().metric,
            query,
            label,
            params.k,
            Some(&pred),
        ),
    }
}

/// Unfiltered routed branches for OR queries.
fn run_branches(
    index: &FilteredIndex,
    query: &[f32],
    labels: &[u32],
    params: &SearchParams,
    predicate: Option<&(dyn Fn(u32) -> bool + Sync)>,
) -> Result<Vec<TopKResult>> {
    let results: Vec<Result<TopKResult>> = crate::par::map_slice(labels, |&l| {
        match index.route(l) {
            Route::NotIndexed => Ok(TopKResult::empty()),
            Route::Graph => crate::hs_graph::graph_search(
                index.hs(),
                index.vectors(),
                index.config().metric,
                query,
                l,
                params,
                predicate,
            ),
            Route::Bfs => crate::ls_scan::bfs_search(
                index.ls(),
                index.config().metric,
                query,
                l,
                params.k,
                predicate,
            ),
        }
    });
    results.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_all_forms() {
        assert_eq!(LabelExpr::parse("7").unwrap(), LabelExpr::single(7));
        assert_eq!(
            LabelExpr::parse("3 & 1 & 3").unwrap(),
            LabelExpr::and(vec![1, 3])
        );
        assert_eq!(
            LabelExpr::parse("2 | 9").unwrap(),
            LabelExpr::or(vec![2, 9])
        );
        assert!(LabelExpr::parse("1 & 2 | 3").is_err());
        assert!(LabelExpr::parse("").is_err());
        assert!(LabelExpr::parse("a & 2").is_err());
    }

    #[test]
    fn display_roundtrips_through_parse() {
        for text in ["5", "1 & 4", "2 | 3 | 8"] {
            let e = LabelExpr::parse(text).unwrap();
            assert_eq!(LabelExpr::parse(&e.to_string()).unwrap(), e);
        }
    }

    fn result(pairs: &[(u32, f32)]) -> TopKResult {
        TopKResult::from_sorted(pairs.iter().map(|&(id, d)| Neighbor::new(id, d)).collect())
    }

    #[test]
    fn merge_of_one_list_truncates() {
        let a = result(&[(1, 0.1), (2, 0.2), (3, 0.3)]);
        assert_eq!(merge_topk(&[a.clone()], 2), result(&[(1, 0.1), (2, 0.2)]));
    }

    #[test]
    fn merge_dedups_shared_ids() {
        let a = result(&[(1, 0.1), (7, 0.5)]);
        let b = result(&[(7, 0.5), (9, 0.9)]);
        let merged = merge_topk(&[a, b], 10);
        assert_eq!(merged.ids(), vec![1, 7, 9]);
    }

    #[test]
    fn merge_is_idempotent() {
        let a = result(&[(4, 0.4), (5, 0.5)]);
        let once = merge_topk(&[a.clone(), a.clone()], 2);
        let twice = merge_topk(&[once.clone(), once.clone()], 2);
        assert_eq!(once, twice);
        assert_eq!(once, a);
    }

    #[test]
    fn merge_matches_sort_concat_dedup_oracle() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..200 {
            let mut lists = Vec::new();
            for _ in 0..rng.gen_range(1..4) {
                let mut hits: Vec<Neighbor> = (0..rng.gen_range(0..8))
                    .map(|_| Neighbor::new(rng.gen_range(0..20), rng.gen_range(0..10) as f32))
                    .collect();
                hits.sort_unstable();
                hits.dedup_by_key(|n| n.id);
                // Keep one entry per id per list, sorted: a valid input list.
                let mut seen = std::collections::HashSet::new();
                hits.retain(|n| seen.insert(n.id));
                lists.push(TopKResult::from_unsorted(hits, usize::MAX));
            }
            let k = rng.gen_range(0..6);
            // Oracle: concat, sort, keep first occurrence per id, truncate.
            let mut all: Vec<Neighbor> = lists.iter().flat_map(|l| l.hits.clone()).collect();
            all.sort_unstable();
            let mut seen = std::collections::HashSet::new();
            all.retain(|n| seen.insert(n.id));
            all.truncate(k);
            assert_eq!(merge_topk(&lists, k).hits, all);
        }
    }
}
