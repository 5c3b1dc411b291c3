//! Distance kernels.
//!
//! Exactly one kernel per metric is used by every code path (graph search,
//! exhaustive scan, k-NN graph build, and the evaluation oracle), so
//! distances compare bit-identically across routes. The kernels accumulate
//! into a fixed number of lanes in a fixed order: deterministic, and wide
//! enough for the compiler to vectorize.

use std::fmt;
use std::str::FromStr;

use crate::dataset::Element;
use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    /// Squared Euclidean distance (no square root; order-equivalent to L2).
    SquaredL2,
    /// Negated inner product, so smaller is closer under the shared
    /// ascending-distance convention.
    InnerProduct,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::SquaredL2 => write!(f, "l2"),
            Metric::InnerProduct => write!(f, "ip"),
        }
    }
}

impl FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "l2" => Ok(Metric::SquaredL2),
            "ip" => Ok(Metric::InnerProduct),
            other => Err(Error::Param(format!("unknown metric '{other}'"))),
        }
    }
}

impl Metric {
    pub fn to_tag(self) -> u8 {
        match self {
            Metric::SquaredL2 => 0,
            Metric::InnerProduct => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self, Error> {
        match tag {
            0 => Ok(Metric::SquaredL2),
            1 => Ok(Metric::InnerProduct),
            t => Err(Error::CorruptIndex(format!("unknown metric tag {t}"))),
        }
    }
}

const LANES: usize = 8;

#[inline]
pub fn squared_l2<E: Element>(q: &[f32], v: &[E]) -> f32 {
    debug_assert_eq!(q.len(), v.len());
    let mut acc = [0f32; LANES];
    let q_chunks = q.chunks_exact(LANES);
    let v_chunks = v.chunks_exact(LANES);
    let q_tail = q_chunks.remainder();
    let v_tail = v_chunks.remainder();
    for (qa, va) in q_chunks.zip(v_chunks) {
        for l in 0..LANES {
            let d = qa[l] - va[l].to_f32();
            acc[l] += d * d;
        }
    }
    let mut tail = 0f32;
    for (a, b) in q_tail.iter().zip(v_tail) {
        let d = a - b.to_f32();
        tail += d * d;
    }
    let mut total = tail;
    for a in acc {
        total += a;
    }
    total
}

#[inline]
pub fn neg_inner_product<E: Element>(q: &[f32], v: &[E]) -> f32 {
    debug_assert_eq!(q.len(), v.len());
    let mut acc = [0f32; LANES];
    let q_chunks = q.chunks_exact(LANES);
    let v_chunks = v.chunks_exact(LANES);
    let q_tail = q_chunks.remainder();
    let v_tail = v_chunks.remainder();
    for (qa, va) in q_chunks.zip(v_chunks) {
        for l in 0..LANES {
            acc[l] += qa[l] * va[l].to_f32();
        }
    }
    let mut tail = 0f32;
    for (a, b) in q_tail.iter().zip(v_tail) {
        tail += a * b.to_f32();
    }
    let mut total = tail;
    for a in acc {
        total += a;
    }
    -total
}

#[inline]
pub fn distance<E: Element>(metric: Metric, q: &[f32], v: &[E]) -> f32 {
    match metric {
        Metric::SquaredL2 => squared_l2(q, v),
        Metric::InnerProduct => neg_inner_product(q, v),
    }
}

/// Distance between two stored rows (used by graph construction).
#[inline]
pub fn distance_rows<E: Element>(metric: Metric, a: &[E], b: &[E]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    match metric {
        Metric::SquaredL2 => {
            let mut acc = [0f32; LANES];
            let a_chunks = a.chunks_exact(LANES);
            let b_chunks = b.chunks_exact(LANES);
            let a_tail = a_chunks.remainder();
            let b_tail = b_chunks.remainder();
            for (xa, xb) in a_chunks.zip(b_chunks) {
                for l in 0..LANES {
                    let d = xa[l].to_f32() - xb[l].to_f32();
                    acc[l] += d * d;
                }
            }
            let mut tail = 0f32;
            for (x, y) in a_tail.iter().zip(b_tail) {
                let d = x.to_f32() - y.to_f32();
                tail += d * d;
            }
            let mut total = tail;
            for x in acc {
                total += x;
            }
            total
        }
        Metric::InnerProduct => {
            let mut acc = [0f32; LANES];
            let a_chunks = a.chunks_exact(LANES);
            let b_chunks = b.chunks_exact(LANES);
            let a_tail = a_chunks.remainder();
            let b_tail = b_chunks.remainder();
            for (xa, xb) in a_chunks.zip(b_chunks) {
                for l in 0..LANES {
                    acc[l] += xa[l].to_f32() * xb[l].to_f32();
                }
            }
            let mut tail = 0f32;
            for (x, y) in a_tail.iter().zip(b_tail) {
                tail += x.to_f32() * y.to_f32();
            }
            let mut total = tail;
            for x in acc {
                total += x;
            }
            -total
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l2_matches_naive_on_f32() {
        let q: Vec<f32> = (0..19).map(|i| i as f32 * 0.25).collect();
        let v: Vec<f32> = (0..19).map(|i| (18 - i) as f32 * 0.5).collect();
        let naive: f32 = q
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let got = squared_l2(&q, &v);
        assert!((got - naive).abs() <= naive * 1e-5);
    }

    #[test]
    fn u8_and_f32_agree() {
        let raw: Vec<u8> = (0..37).map(|i| (i * 7 % 256) as u8).collect();
        let as_f: Vec<f32> = raw.iter().map(|&b| b as f32).collect();
        let q: Vec<f32> = (0..37).map(|i| i as f32).collect();
        assert_eq!(squared_l2(&q, &raw), squared_l2(&q, as_f.as_slice()));
        assert_eq!(
            neg_inner_product(&q, &raw),
            neg_inner_product(&q, as_f.as_slice())
        );
    }

    #[test]
    fn inner_product_is_negated() {
        let q = [1.0f32, 2.0];
        let v = [3.0f32, 4.0];
        assert_eq!(neg_inner_product(&q, v.as_slice()), -11.0);
    }

    #[test]
    fn row_distance_matches_query_distance() {
        let a: Vec<f32> = (0..33).map(|i| i as f32 * 0.125).collect();
        let b: Vec<f32> = (0..33).map(|i| (i * 3 % 17) as f32).collect();
        assert_eq!(
            distance_rows(Metric::SquaredL2, a.as_slice(), b.as_slice()),
            squared_l2(&a, b.as_slice())
        );
    }
}
