//! End-to-end index lifecycle: build both partitions from a dataset and its
//! label assignment, then route and dispatch queries.

use crate::dataset::{LabelAssignment, QuerySet, VectorDataset};
use crate::distance::Metric;
use crate::error::{Error, Result};
use crate::hs_graph::{build_hs_index, graph_search, HsIndex, SearchParams};
use crate::ivf::{build_posting_lists, partition_labels, Partition, PostingLists, Route};
use crate::ls_scan::{bfs_search, build_ls_index, LsIndex};
use crate::multilabel::{self, AndPolicy, LabelExpr, QueryOp};
use crate::predicate::{build_predicate_table, PredicateTable};
use crate::rng::mix;
use crate::topk::TopKResult;

/// Build-time configuration, stored in the index header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexConfig {
    /// Specificity threshold T: clusters with at least T members get graphs.
    pub threshold: u32,
    /// Graph out-degree R for the high-specificity partition.
    pub graph_degree: u32,
    /// Interleave group width W for the low-specificity partition.
    pub group_width: u32,
    pub metric: Metric,
}

impl Default for IndexConfig {
    fn default() -> Self {
        Self {
            threshold: 2000,
            graph_degree: 16,
            group_width: 32,
            metric: Metric::SquaredL2,
        }
    }
}

/// The dual-structured index: one global vector copy, graph partitions for
/// populous labels, interleaved scan blocks for rare ones, and the predicate
/// table for multi-label verification. Immutable once built; searches are
/// read-only and freely concurrent.
#[derive(Debug, Clone)]
pub struct FilteredIndex {
    config: IndexConfig,
    vectors: VectorDataset,
    posting: PostingLists,
    partition: Partition,
    hs: HsIndex,
    ls: LsIndex,
    predicate: PredicateTable,
}

impl FilteredIndex {
    /// Builds every component. Deterministic for a fixed dataset, assignment,
    /// and config.
    pub fn build(
        vectors: VectorDataset,
        labels: &LabelAssignment,
        config: IndexConfig,
    ) -> Result<Self> {
        if labels.n_points() != vectors.n_points() {
            return Err(Error::Param(format!(
                "label assignment covers {} points but dataset has {}",
                labels.n_points(),
                vectors.n_points()
            )));
        }
        let posting = build_posting_lists(labels);
        let partition = partition_labels(&posting, config.threshold);
        let hs = build_hs_index(
            &vectors,
            &posting,
            &partition,
            config.graph_degree,
            config.metric,
        )?;
        let ls = build_ls_index(&vectors, &posting, &partition, config.group_width)?;
        let predicate = build_predicate_table(labels);
        Ok(Self {
            config,
            vectors,
            posting,
            partition,
            hs,
            ls,
            predicate,
        })
    }

    pub(crate) fn from_parts(
        config: IndexConfig,
        vectors: VectorDataset,
        hs: HsIndex,
        ls: LsIndex,
        predicate: PredicateTable,
    ) -> Result<Self> {
        if predicate.n_points() != vectors.n_points() {
            return Err(Error::CorruptIndex(
                "predicate table does not cover the vector set".to_string(),
            ));
        }
        let labels = predicate.to_label_assignment();
        let posting = build_posting_lists(&labels);
        let partition = partition_labels(&posting, config.threshold);
        if partition.hs_labels() != hs.labels() || partition.ls_labels() != ls.labels() {
            return Err(Error::CorruptIndex(
                "stored partition disagrees with posting lists".to_string(),
            ));
        }
        Ok(Self {
            config,
            vectors,
            posting,
            partition,
            hs,
            ls,
            predicate,
        })
    }

    pub fn config(&self) -> &IndexConfig {
        &self.config
    }

    pub fn vectors(&self) -> &VectorDataset {
        &self.vectors
    }

    pub fn posting(&self) -> &PostingLists {
        &self.posting
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn hs(&self) -> &HsIndex {
        &self.hs
    }

    pub fn ls(&self) -> &LsIndex {
        &self.ls
    }

    pub fn predicate_table(&self) -> &PredicateTable {
        &self.predicate
    }

    pub fn n_points(&self) -> usize {
        self.vectors.n_points()
    }

    pub fn dim(&self) -> usize {
        self.vectors.dim()
    }

    pub fn route(&self, label: u32) -> Route {
        self.partition.route(label)
    }

    /// Single-label routed search. Unknown labels return an empty result
    /// (their route is `NotIndexed`).
    pub fn search_single(&self, query: &[f32], label: u32, params: &SearchParams) -> Result<TopKResult> {
        self.check_dim(query)?;
        match self.route(label) {
            Route::NotIndexed => Ok(TopKResult::empty()),
            Route::Graph => graph_search(
                &self.hs,
                &self.vectors,
                self.config.metric,
                query,
                label,
                params,
                None,
            ),
            Route::Bfs => bfs_search(&self.ls, self.config.metric, query, label, params.k, None),
        }
    }

    /// Dispatches one query by its label expression. Expressions with one
    /// label behave exactly like a single-label search under any operator.
    pub fn search(
        &self,
        query: &[f32],
        expr: &LabelExpr,
        policy: AndPolicy,
        params: &SearchParams,
    ) -> Result<TopKResult> {
        self.check_dim(query)?;
        params.validate()?;
        if expr.labels.is_empty() {
            return Err(Error::Param("query has no labels".to_string()));
        }
        if expr.labels.len() == 1 {
            return self.search_single(query, expr.labels[0], params);
        }
        match expr.op {
            QueryOp::Or => multilabel::search_or(self, query, &expr.labels, params),
            QueryOp::And => match policy {
                AndPolicy::Greedy => {
                    multilabel::search_and_greedy(self, query, &expr.labels, params)
                }
                AndPolicy::Parallel => {
                    multilabel::search_and_parallel(self, query, &expr.labels, params)
                }
            },
            QueryOp::Single => Err(Error::Param(
                "single-label expression with multiple labels".to_string(),
            )),
        }
    }

    /// Runs a query set, deriving an independent seed per query ordinal so
    /// results do not depend on batch order or grouping.
    pub fn search_batch(
        &self,
        queries: &QuerySet,
        policy: AndPolicy,
        params: &SearchParams,
    ) -> Result<Vec<TopKResult>> {
        if queries.queries.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: queries.queries.dim(),
            });
        }
        let dim = self.dim();
        let matrix = queries.queries.to_f32_matrix();
        let results: Vec<Result<TopKResult>> = crate::par::map_indexed(queries.len(), |i| {
            let q = &matrix[i * dim..(i + 1) * dim];
            let per_query = params.with_seed(mix(params.seed, i as u64));
            self.search(q, &queries.exprs[i], policy, &per_query)
        });
        results.into_iter().collect()
    }

    fn check_dim(&self, query: &[f32]) -> Result<()> {
        if query.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: query.len(),
            });
        }
        Ok(())
    }
}
