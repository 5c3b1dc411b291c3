//! Filtered approximate nearest neighbor search over a label-centric
//! inverted file index.
//!
//! Points carry label sets; queries ask for the nearest vectors whose labels
//! satisfy a constraint (one label, an AND of several, or an OR). Instead of
//! one big spatial index, the engine keeps one posting list per label and
//! splits labels by how many points carry them:
//!
//! * populous ("high specificity") labels get a fixed-out-degree proximity
//!   graph per label, all compacted into one structure whose rows use local
//!   vertex ids translated through a mapping to the single shared vector
//!   store (no per-label vector copies);
//! * rare ("low specificity") labels store their members in interleaved
//!   blocks and are answered by exact scan.
//!
//! A query routes by its label's cluster size relative to the build-time
//! threshold `T`. Multi-label queries run per-label branch searches with a
//! compact predicate table for subset verification; AND supports a greedy
//! (smallest cluster only) and a parallel (all clusters, merged) policy.
//! A persistent-worker executor serves batch-size-1 query streams without
//! per-query dispatch cost.
//!
//! Data-parallel loops (index build, batch search, branch fan-out) use rayon
//! under the default `parallel` feature and fall back to sequential
//! iteration without it; results are identical either way.

pub mod dataset;
pub mod distance;
pub mod engine;
pub mod error;
pub mod eval;
pub mod executor;
pub mod formats;
pub mod hs_graph;
pub mod index_io;
pub mod ivf;
pub mod ls_scan;
pub mod memory;
pub mod multilabel;
mod par;
pub mod predicate;
pub mod rng;
pub mod synthetic;
pub mod topk;

pub use dataset::{ElementKind, LabelAssignment, QueryMode, QuerySet, VectorData, VectorDataset};
pub use distance::Metric;
pub use engine::{FilteredIndex, IndexConfig};
pub use error::{Error, Result};
pub use executor::{Executor, JobTicket, SearchJob};
pub use hs_graph::SearchParams;
pub use ivf::Route;
pub use multilabel::{AndPolicy, LabelExpr, QueryOp};
pub use topk::{Neighbor, TopKResult};
