//! Core data containers: the global vector set, per-point label assignments,
//! and query sets.

use crate::error::{Error, Result};
use crate::multilabel::{LabelExpr, QueryOp};

/// Scalar type stored in a vector file / dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementKind {
    F32,
    U8,
}

impl ElementKind {
    pub fn bytes_per_element(self) -> usize {
        match self {
            ElementKind::F32 => 4,
            ElementKind::U8 => 1,
        }
    }
}

/// Storage element. Implemented for the two on-disk scalar kinds.
pub trait Element: Copy + Send + Sync + 'static {
    const KIND: ElementKind;
    const ZERO: Self;
    fn to_f32(self) -> f32;
    fn wrap_vec(v: Vec<Self>) -> VectorData
    where
        Self: Sized;
}

impl Element for f32 {
    const KIND: ElementKind = ElementKind::F32;
    const ZERO: Self = 0.0;
    #[inline(always)]
    fn to_f32(self) -> f32 {
        self
    }
    fn wrap_vec(v: Vec<Self>) -> VectorData {
        VectorData::F32(v)
    }
}

impl Element for u8 {
    const KIND: ElementKind = ElementKind::U8;
    const ZERO: Self = 0;
    #[inline(always)]
    fn to_f32(self) -> f32 {
        self as f32
    }
    fn wrap_vec(v: Vec<Self>) -> VectorData {
        VectorData::U8(v)
    }
}

/// Raw row-major element storage for one of the supported scalar kinds.
#[derive(Debug, Clone, PartialEq)]
pub enum VectorData {
    F32(Vec<f32>),
    U8(Vec<u8>),
}

impl VectorData {
    pub fn len(&self) -> usize {
        match self {
            VectorData::F32(v) => v.len(),
            VectorData::U8(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> ElementKind {
        match self {
            VectorData::F32(_) => ElementKind::F32,
            VectorData::U8(_) => ElementKind::U8,
        }
    }

    pub fn byte_len(&self) -> usize {
        self.len() * self.kind().bytes_per_element()
    }
}

/// Dispatches a block of code over the concrete element slice held by a
/// [`VectorData`], monomorphizing the body for each scalar kind.
macro_rules! with_elems {
    ($data:expr, $slice:ident => $body:expr) => {
        match $data {
            $crate::dataset::VectorData::F32($slice) => $body,
            $crate::dataset::VectorData::U8($slice) => $body,
        }
    };
}
pub(crate) use with_elems;

/// The global point set: `n_points` row-major vectors of dimension `dim`,
/// kept as a single canonical copy.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorDataset {
    n_points: usize,
    dim: usize,
    pub(crate) data: VectorData,
}

impl VectorDataset {
    pub fn new(n_points: usize, dim: usize, data: VectorData) -> Result<Self> {
        if n_points == 0 || dim == 0 {
            return Err(Error::Param(format!(
                "dataset must be non-empty: n_points={n_points}, dim={dim}"
            )));
        }
        if data.len() != n_points * dim {
            return Err(Error::Param(format!(
                "data length {} does not equal n_points * dim = {}",
                data.len(),
                n_points * dim
            )));
        }
        Ok(Self { n_points, dim, data })
    }

    pub fn from_f32(n_points: usize, dim: usize, data: Vec<f32>) -> Result<Self> {
        Self::new(n_points, dim, VectorData::F32(data))
    }

    pub fn from_u8(n_points: usize, dim: usize, data: Vec<u8>) -> Result<Self> {
        Self::new(n_points, dim, VectorData::U8(data))
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn element_kind(&self) -> ElementKind {
        self.data.kind()
    }

    pub fn data(&self) -> &VectorData {
        &self.data
    }

    /// Copies row `i` into `out` as f32 (exact for both scalar kinds).
    pub fn row_to_f32(&self, i: usize, out: &mut [f32]) {
        assert!(i < self.n_points, "row {i} out of range");
        assert_eq!(out.len(), self.dim);
        let start = i * self.dim;
        with_elems!(&self.data, s => {
            for (o, e) in out.iter_mut().zip(&s[start..start + self.dim]) {
                *o = e.to_f32();
            }
        });
    }

    /// Flattens the whole dataset to a row-major f32 matrix.
    pub fn to_f32_matrix(&self) -> Vec<f32> {
        with_elems!(&self.data, s => s.iter().map(|e| e.to_f32()).collect())
    }

    pub fn byte_len(&self) -> usize {
        self.data.byte_len()
    }
}

/// Per-point label lists. Each list is kept sorted ascending and duplicate
/// free regardless of the constructor input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelAssignment {
    per_point: Vec<Vec<u32>>,
}

impl LabelAssignment {
    /// Normalizes every list (sort + dedup).
    pub fn from_lists(mut lists: Vec<Vec<u32>>) -> Self {
        for list in &mut lists {
            list.sort_unstable();
            list.dedup();
        }
        Self { per_point: lists }
    }

    pub fn n_points(&self) -> usize {
        self.per_point.len()
    }

    pub fn labels_of(&self, point: usize) -> &[u32] {
        &self.per_point[point]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u32]> {
        self.per_point.iter().map(|v| v.as_slice())
    }

    /// Distinct label identifiers present, ascending.
    pub fn label_universe(&self) -> Vec<u32> {
        let mut all: Vec<u32> = self.per_point.iter().flatten().copied().collect();
        all.sort_unstable();
        all.dedup();
        all
    }

    pub fn total_assignments(&self) -> usize {
        self.per_point.iter().map(|v| v.len()).sum()
    }

    /// Average labels per point (F).
    pub fn mean_labels_per_point(&self) -> f64 {
        if self.per_point.is_empty() {
            return 0.0;
        }
        self.total_assignments() as f64 / self.per_point.len() as f64
    }
}

/// How often each query mode appears in a parsed query-label file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryMode {
    Single,
    Or,
    And,
}

/// A batch of query vectors with one label expression per query.
#[derive(Debug, Clone)]
pub struct QuerySet {
    pub queries: VectorDataset,
    pub exprs: Vec<LabelExpr>,
    pub mode: QueryMode,
}

impl QuerySet {
    pub fn new(queries: VectorDataset, exprs: Vec<LabelExpr>) -> Result<Self> {
        if queries.n_points() != exprs.len() {
            return Err(Error::Param(format!(
                "{} query vectors but {} label expressions",
                queries.n_points(),
                exprs.len()
            )));
        }
        let mode = Self::infer_mode(&exprs)?;
        if mode == QueryMode::Single {
            for (i, e) in exprs.iter().enumerate() {
                if e.labels.len() != 1 {
                    return Err(Error::Param(format!(
                        "single-label query set, but query {i} has {} labels",
                        e.labels.len()
                    )));
                }
            }
        }
        Ok(Self { queries, exprs, mode })
    }

    /// A file may mix bare single labels with AND lines or with OR lines, but
    /// never AND with OR.
    fn infer_mode(exprs: &[LabelExpr]) -> Result<QueryMode> {
        let mut saw_and = false;
        let mut saw_or = false;
        for e in exprs {
            match e.op {
                QueryOp::And => saw_and = true,
                QueryOp::Or => saw_or = true,
                QueryOp::Single => {}
            }
        }
        match (saw_and, saw_or) {
            (true, true) => Err(Error::Param(
                "query set mixes AND and OR expressions".to_string(),
            )),
            (true, false) => Ok(QueryMode::And),
            (false, true) => Ok(QueryMode::Or),
            (false, false) => Ok(QueryMode::Single),
        }
    }

    pub fn len(&self) -> usize {
        self.exprs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exprs.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset_rejects_bad_shapes() {
        assert!(VectorDataset::from_f32(0, 4, vec![]).is_err());
        assert!(VectorDataset::from_f32(2, 3, vec![0.0; 5]).is_err());
        assert!(VectorDataset::from_f32(2, 3, vec![0.0; 6]).is_ok());
    }

    #[test]
    fn assignment_sorts_and_dedups() {
        let a = LabelAssignment::from_lists(vec![vec![3, 1, 1], vec![7], vec![]]);
        assert_eq!(a.labels_of(0), &[1, 3]);
        assert_eq!(a.labels_of(1), &[7]);
        assert_eq!(a.labels_of(2), &[] as &[u32]);
        assert_eq!(a.label_universe(), vec![1, 3, 7]);
        assert!((a.mean_labels_per_point() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn u8_rows_convert_exactly() {
        let d = VectorDataset::from_u8(2, 3, vec![0, 127, 255, 1, 2, 3]).unwrap();
        let mut row = vec![0f32; 3];
        d.row_to_f32(0, &mut row);
        assert_eq!(row, vec![0.0, 127.0, 255.0]);
        assert_eq!(d.to_f32_matrix()[5], 3.0);
    }

    #[test]
    fn query_set_mode_inference() {
        let q = VectorDataset::from_f32(2, 2, vec![0.0; 4]).unwrap();
        let exprs = vec![
            LabelExpr::parse("1 & 2").unwrap(),
            LabelExpr::parse("5").unwrap(),
        ];
        let qs = QuerySet::new(q.clone(), exprs).unwrap();
        assert_eq!(qs.mode, QueryMode::And);

        let mixed = vec![
            LabelExpr::parse("1 & 2").unwrap(),
            LabelExpr::parse("1 | 2").unwrap(),
        ];
        assert!(QuerySet::new(q, mixed).is_err());
    }
}
