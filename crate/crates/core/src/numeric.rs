//! Stateless vector math shared by the classifier, the ensemble and the
//! evaluation code.
//!
//! Embeddings are stored as `f32`, but every reduction here accumulates in
//! `f64` so results do not depend on batch layout beyond the last few ulps.

use std::cmp::Ordering;
use std::ops::Deref;

use crate::error::{Error, Result};

/// Tolerance on `| ‖v‖₂ − 1 |` for a vector to count as unit-norm.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-3;
/// Tolerance on `| Σp − 1 |` for a probability vector.
pub const PROB_SUM_TOLERANCE: f64 = 1e-6;
/// Norms at or below this are treated as zero.
pub const ZERO_NORM: f64 = 1e-12;

/// Scalar types an embedding may be stored in.
pub trait Component: Copy + Send + Sync + 'static {
    fn widen(self) -> f64;
    fn narrow(x: f64) -> Self;
}

impl Component for f32 {
    #[inline(always)]
    fn widen(self) -> f64 {
        self as f64
    }
    #[inline(always)]
    fn narrow(x: f64) -> Self {
        x as f32
    }
}

impl Component for f64 {
    #[inline(always)]
    fn widen(self) -> f64 {
        self
    }
    #[inline(always)]
    fn narrow(x: f64) -> Self {
        x
    }
}

/// Dot product accumulated in `f64` over eight independent lanes.
///
/// The summation order depends only on the slice length, never on the caller,
/// so a given pair of vectors always produces the same bits.
#[inline]
pub fn dot<T: Component>(a: &[T], b: &[T]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 8];
    let mut ca = a.chunks_exact(8);
    let mut cb = b.chunks_exact(8);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for lane in 0..8 {
            acc[lane] += x[lane].widen() * y[lane].widen();
        }
    }
    let mut tail = 0.0;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += x.widen() * y.widen();
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail
}

pub fn l2_norm<T: Component>(v: &[T]) -> f64 {
    dot(v, v).sqrt()
}

pub fn is_unit_norm<T: Component>(v: &[T]) -> bool {
    norm_is_unit(l2_norm(v))
}

/// False for NaN.
pub fn norm_is_unit(norm: f64) -> bool {
    (norm - 1.0).abs() <= UNIT_NORM_TOLERANCE
}

fn check_finite<T: Component>(v: &[T]) -> Result<()> {
    if v.iter().all(|x| x.widen().is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

pub fn l2_normalize<T: Component>(v: &[T]) -> Result<Vec<T>> {
    check_finite(v)?;
    let norm = l2_norm(v);
    if norm <= ZERO_NORM {
        return Err(Error::ZeroVector);
    }
    Ok(v.iter().map(|x| T::narrow(x.widen() / norm)).collect())
}

/// `dot(a, b) / (‖a‖ ‖b‖)`, clamped to `[-1, 1]`.
pub fn cosine_similarity<T: Component>(a: &[T], b: &[T]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::EmptyInput);
    }
    check_finite(a)?;
    check_finite(b)?;
    let (na, nb) = (l2_norm(a), l2_norm(b));
    if na <= ZERO_NORM || nb <= ZERO_NORM {
        return Err(Error::ZeroVector);
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

/// A probability distribution over taxonomy classes, indexed by class id.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(bad) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::InvalidProbVector(format!(
                "entry {bad} is not a probability"
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
            return Err(Error::InvalidProbVector(format!("entries sum to {sum}")));
        }
        Ok(Self(probs))
    }

    /// Caller guarantees the invariants (non-empty, non-negative, sums to 1).
    pub(crate) fn from_normalized(probs: Vec<f64>) -> Self {
        debug_assert!(!probs.is_empty());
        debug_assert!((probs.iter().sum::<f64>() - 1.0).abs() <= PROB_SUM_TOLERANCE);
        Self(probs)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Index of the largest entry; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        argmax(&self.0).expect("probability vectors are non-empty")
    }

    pub fn max(&self) -> f64 {
        self.0[self.argmax()]
    }
}

impl Deref for ProbVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// First index holding the maximum value, or `None` for an empty slice.
pub fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, v) in values.iter().enumerate() {
        match best {
            Some(b) if values[b] >= *v => {}
            _ => best = Some(i),
        }
    }
    best
}

/// Temperature-scaled softmax, stabilised by subtracting the largest scaled
/// logit before exponentiating.
pub fn softmax_scaled(logits: &[f64], scale: f64) -> Result<ProbVector> {
    if logits.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "softmax scale must be positive, got {scale}"
        )));
    }
    let mut out: Vec<f64> = Vec::with_capacity(logits.len());
    let mut max = f64::NEG_INFINITY;
    for &l in logits {
        if !l.is_finite() {
            return Err(Error::NonFinite);
        }
        let s = scale * l;
        max = max.max(s);
        out.push(s);
    }
    let mut sum = 0.0;
    for x in out.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in out.iter_mut() {
        *x /= sum;
    }
    Ok(ProbVector::from_normalized(out))
}

fn rank_order(a: &(usize, f64), b: &(usize, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

/// The `k` most probable classes, highest first; equal probabilities are
/// ordered by ascending class index.
pub fn top_k(p: &ProbVector, k: usize) -> Result<Vec<(usize, f64)>> {
    if k == 0 || k > p.len() {
        return Err(Error::KOutOfRange { k, len: p.len() });
    }
    let mut ranked: Vec<(usize, f64)> = p.iter().copied().enumerate().collect();
    if k < ranked.len() {
        ranked.select_nth_unstable_by(k - 1, rank_order);
        ranked.truncate(k);
    }
    ranked.sort_unstable_by(rank_order);
    Ok(ranked)
}

/// `w·p + (1 − w)·q`, element-wise.
pub fn convex_blend(p: &ProbVector, q: &ProbVector, w: f64) -> Result<ProbVector> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            found: q.len(),
        });
    }
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::WeightOutOfRange(w));
    }
    let blended = p
        .iter()
        .zip(q.iter())
        .map(|(a, b)| w * a + (1.0 - w) * b)
        .collect();
    Ok(ProbVector::from_normalized(blended))
}
