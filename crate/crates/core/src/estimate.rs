//! Estimators on finished sketches, exact reference similarities, and
//! sketch algebra (merge and inclusion-exclusion).

use serde::Serialize;

use crate::error::{Result, SketchError};
use crate::scalar::Scalar;
use crate::sketch::{GumbelMaxSketch, WeightedVector};

/// Fraction of matching `s` registers; always a multiple of `1/k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimilarityEstimate {
    pub value: f64,
    pub matches: usize,
    pub k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CardinalityEstimate<T = f64> {
    pub value: T,
    pub k: usize,
}

/// Weighted-set quantities for a pair of sketches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SetAlgebraEstimate {
    pub a_w: f64,
    pub b_w: f64,
    pub union_w: f64,
    pub intersection_w: f64,
    pub a_minus_b_w: f64,
    pub jaccard_w: f64,
}

fn check_compatible<T: Scalar>(a: &GumbelMaxSketch<T>, b: &GumbelMaxSketch<T>) -> Result<()> {
    if a.k() != b.k() {
        return Err(SketchError::MismatchedK(a.k(), b.k()));
    }
    if a.fingerprint() != b.fingerprint() {
        return Err(SketchError::MismatchedScheme(
            a.fingerprint(),
            b.fingerprint(),
        ));
    }
    Ok(())
}

/// Register-match estimate of the probability Jaccard similarity.
///
/// Unbiased with variance `J(1 - J) / k`.
pub fn estimate_jaccard_p<T: Scalar>(
    a: &GumbelMaxSketch<T>,
    b: &GumbelMaxSketch<T>,
) -> Result<SimilarityEstimate> {
    check_compatible(a, b)?;
    let matches = a.s().iter().zip(b.s()).filter(|(x, y)| x == y).count();
    Ok(SimilarityEstimate {
        value: matches as f64 / a.k() as f64,
        matches,
        k: a.k(),
    })
}

/// Exact probability Jaccard similarity.
///
/// For every element `i` in both supports, adds `1 / sum_l max(u_l/u_i, v_l/v_i)`
/// over the union of supports.
pub fn exact_jaccard_p<T: Scalar>(u: &WeightedVector<T>, v: &WeightedVector<T>) -> f64 {
    let union = merged_support(u, v);
    let mut total = 0.0;
    for &(_, ui, vi) in union.iter().filter(|(_, a, b)| *a > 0.0 && *b > 0.0) {
        let denom: f64 = union
            .iter()
            .map(|&(_, ul, vl)| f64::max(ul / ui, vl / vi))
            .sum();
        total += 1.0 / denom;
    }
    total
}

/// Exact weighted Jaccard similarity `sum min / sum max`; 0 for disjoint supports.
pub fn exact_jaccard_w<T: Scalar>(u: &WeightedVector<T>, v: &WeightedVector<T>) -> f64 {
    let (mut lo, mut hi) = (0.0, 0.0);
    for (_, a, b) in merged_support(u, v) {
        lo += f64::min(a, b);
        hi += f64::max(a, b);
    }
    if hi > 0.0 {
        lo / hi
    } else {
        0.0
    }
}

/// Sorted union of supports as `(element, u weight, v weight)`, zeros filled in.
fn merged_support<T: Scalar>(u: &WeightedVector<T>, v: &WeightedVector<T>) -> Vec<(u64, f64, f64)> {
    let mut out = Vec::with_capacity(u.n_plus() + v.n_plus());
    let mut a = u.iter().peekable();
    let mut b = v.iter().peekable();
    loop {
        match (a.peek().copied(), b.peek().copied()) {
            (Some((ea, wa)), Some((eb, wb))) if ea == eb => {
                out.push((ea, wa.to_f64_lossless(), wb.to_f64_lossless()));
                a.next();
                b.next();
            }
            (Some((ea, wa)), Some((eb, _))) if ea < eb => {
                out.push((ea, wa.to_f64_lossless(), 0.0));
                a.next();
            }
            (_, Some((eb, wb))) => {
                out.push((eb, 0.0, wb.to_f64_lossless()));
                b.next();
            }
            (Some((ea, wa)), None) => {
                out.push((ea, wa.to_f64_lossless(), 0.0));
                a.next();
            }
            (None, None) => break,
        }
    }
    out
}

/// Weighted cardinality estimate `(k - 1) / sum_j y[j]`.
///
/// The registers are i.i.d. `EXP(c)`, so the sum is `Gamma(k, c)` and the
/// estimate is unbiased.
pub fn estimate_cardinality<T: Scalar>(sk: &GumbelMaxSketch<T>) -> Result<CardinalityEstimate<T>> {
    let k = sk.k();
    if k < 2 {
        return Err(SketchError::KTooSmall(k));
    }
    let total: T = sk.y().iter().copied().sum();
    Ok(CardinalityEstimate {
        value: T::from_count(k - 1) / total,
        k,
    })
}

/// Sketch of the union: per register, the input holding the smallest `y`.
///
/// Ties keep the earliest input.
pub fn merge<T: Scalar>(sketches: &[&GumbelMaxSketch<T>]) -> Result<GumbelMaxSketch<T>> {
    let (first, rest) = sketches.split_first().ok_or(SketchError::EmptyInput)?;
    let mut s = first.s().to_vec();
    let mut y = first.y().to_vec();
    for other in rest {
        check_compatible(first, other)?;
        for j in 0..y.len() {
            if other.y()[j] < y[j] {
                y[j] = other.y()[j];
                s[j] = other.s()[j];
            }
        }
    }
    GumbelMaxSketch::from_parts(s, y, first.fingerprint())
}

/// Pairwise union/intersection/difference estimates by inclusion-exclusion.
///
/// Negative intermediate values are floored at 0 and the Jaccard ratio is
/// clamped to `[0, 1]`.
pub fn estimate_set_algebra<T: Scalar>(
    a: &GumbelMaxSketch<T>,
    b: &GumbelMaxSketch<T>,
) -> Result<SetAlgebraEstimate> {
    check_compatible(a, b)?;
    let card = |sk: &GumbelMaxSketch<T>| -> Result<f64> {
        Ok(estimate_cardinality(sk)?.value.to_f64_lossless())
    };
    let a_w = card(a)?;
    let b_w = card(b)?;
    let union_w = card(&merge(&[a, b])?)?;
    let intersection_w = (a_w + b_w - union_w).max(0.0);
    let a_minus_b_w = (union_w - b_w).max(0.0);
    let jaccard_w = if union_w > 0.0 {
        (intersection_w / union_w).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok(SetAlgebraEstimate {
        a_w,
        b_w,
        union_w,
        intersection_w,
        a_minus_b_w,
        jaccard_w,
    })
}

/// `|A \ (B_1 u ... u B_r)|_w` as `c(A u B...) - c(B...)`, floored at 0.
pub fn estimate_difference<T: Scalar>(
    a: &GumbelMaxSketch<T>,
    others: &[&GumbelMaxSketch<T>],
) -> Result<f64> {
    if others.is_empty() {
        return Ok(estimate_cardinality(a)?.value.to_f64_lossless());
    }
    let rest = merge(others)?;
    let whole = merge(&[a, &rest])?;
    let diff = estimate_cardinality(&whole)?.value - estimate_cardinality(&rest)?.value;
    Ok(diff.to_f64_lossless().max(0.0))
}
