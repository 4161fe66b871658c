//! Weighted input vectors, Gumbel-Max sketches and their generators.

mod codec;
mod generate;

pub use codec::{decode, encode, read_sketch, write_sketch, FORMAT_VERSION, MAGIC};
pub use generate::{compute_ri, sketch_fastgm, sketch_naive, GenerationStats};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SketchError};
use crate::randgen::SeedScheme;
use crate::scalar::Scalar;

/// Sparse non-negative vector: element id (>= 1) to strictly positive weight.
///
/// Entries are kept sorted by id. Zero weights are never stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedVector<T = f64> {
    entries: Vec<(u64, T)>,
    weight_sum: T,
}

impl<T: Scalar> WeightedVector<T> {
    pub fn empty() -> Self {
        Self {
            entries: Vec::new(),
            weight_sum: T::zero(),
        }
    }

    /// Builds a vector from `(element, weight)` pairs in any order.
    ///
    /// Rejects element 0, repeated ids and weights that are not finite or
    /// fall below [`Scalar::min_weight`].
    pub fn from_pairs<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u64, T)>,
    {
        let mut entries: Vec<(u64, T)> = pairs.into_iter().collect();
        for &(element, weight) in &entries {
            check_entry(element, weight)?;
        }
        entries.sort_unstable_by_key(|&(e, _)| e);
        if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(SketchError::DuplicateElement(w[0].0));
        }
        let weight_sum = entries.iter().map(|&(_, w)| w).sum();
        Ok(Self {
            entries,
            weight_sum,
        })
    }

    /// Dense slice with 1-based ids; zeros are skipped, negatives rejected.
    pub fn from_dense(values: &[T]) -> Result<Self> {
        Self::from_pairs(
            values
                .iter()
                .enumerate()
                .filter(|(_, w)| !w.is_zero())
                .map(|(i, &w)| (i as u64 + 1, w)),
        )
    }

    /// Number of positive entries.
    pub fn n_plus(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn weight_sum(&self) -> T {
        self.weight_sum
    }

    pub fn get(&self, element: u64) -> Option<T> {
        self.entries
            .binary_search_by_key(&element, |&(e, _)| e)
            .ok()
            .map(|i| self.entries[i].1)
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = (u64, T)> + '_ {
        self.entries.iter().copied()
    }

    pub fn elements(&self) -> impl ExactSizeIterator<Item = u64> + '_ {
        self.entries.iter().map(|&(e, _)| e)
    }

    /// Largest element id, 0 when empty.
    pub fn max_element(&self) -> u64 {
        self.entries.last().map_or(0, |&(e, _)| e)
    }

    pub fn scaled(&self, factor: T) -> Result<Self> {
        Self::from_pairs(self.iter().map(|(e, w)| (e, w * factor)))
    }

    /// The vector divided by its weight sum.
    pub fn normalized(&self) -> Result<Self> {
        if self.is_empty() {
            return Err(SketchError::EmptyVector);
        }
        self.scaled(T::one() / self.weight_sum)
    }
}

fn check_entry<T: Scalar>(element: u64, weight: T) -> Result<()> {
    if element == 0 {
        return Err(SketchError::ZeroElement);
    }
    if !weight.is_finite() || weight < T::min_weight() {
        return Err(SketchError::InvalidWeight {
            element,
            weight: weight.to_f64_lossless(),
            min: T::min_weight().to_f64_lossless(),
        });
    }
    Ok(())
}

/// A finished Gumbel-Max sketch.
///
/// Register `j` holds `s[j]`, the element whose order statistic reached
/// server `j` first, and `y[j]`, that arrival time. Across vectors sharing a
/// [`SeedScheme`], `P(s_u[j] == s_v[j])` is the probability Jaccard
/// similarity and each `y[j]` is `EXP(weight_sum)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GumbelMaxSketch<T = f64> {
    s: Vec<u64>,
    y: Vec<T>,
    fingerprint: u64,
}

impl<T: Scalar> GumbelMaxSketch<T> {
    /// Assembles a sketch from raw registers; used by decoding and merging.
    pub fn from_parts(s: Vec<u64>, y: Vec<T>, fingerprint: u64) -> Result<Self> {
        if s.is_empty() {
            return Err(SketchError::InvalidK(0));
        }
        if s.len() != y.len() {
            return Err(SketchError::MismatchedK(s.len(), y.len()));
        }
        if let Some(j) = y.iter().position(|&v| v.is_nan() || v <= T::zero() || !v.is_finite()) {
            return Err(SketchError::Format(format!(
                "register {j} is not a positive finite value"
            )));
        }
        Ok(Self { s, y, fingerprint })
    }

    pub fn k(&self) -> usize {
        self.s.len()
    }

    /// Winning element per register.
    pub fn s(&self) -> &[u64] {
        &self.s
    }

    /// Minimal arrival time per register.
    pub fn y(&self) -> &[T] {
        &self.y
    }

    /// Gumbel-Max values, `x[j] = -ln y[j]`.
    pub fn gumbel_values(&self) -> Vec<T> {
        self.y.iter().map(|y| -y.ln()).collect()
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// Equality on both register arrays down to the bit pattern.
    pub fn bit_eq(&self, other: &Self) -> bool {
        self.fingerprint == other.fingerprint
            && self.s == other.s
            && self.y.len() == other.y.len()
            && self
                .y
                .iter()
                .zip(&other.y)
                .all(|(a, b)| a.to_f64_lossless().to_bits() == b.to_f64_lossless().to_bits())
    }
}

/// Parameters shared by all generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenerationParams {
    pub k: usize,
    /// Growth of the release budget `R` per round; defaults to `k`.
    pub delta: usize,
    pub scheme: SeedScheme,
}

impl GenerationParams {
    pub fn new(k: usize, scheme: SeedScheme) -> Self {
        Self {
            k,
            delta: k.max(1),
            scheme,
        }
    }

    pub fn with_delta(mut self, delta: usize) -> Self {
        self.delta = delta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(SketchError::InvalidK(self.k));
        }
        if self.k > u32::MAX as usize {
            return Err(SketchError::InvalidConfig(format!(
                "k = {} is too large",
                self.k
            )));
        }
        if self.delta == 0 {
            return Err(SketchError::InvalidDelta(self.delta));
        }
        Ok(())
    }
}

/// Outcome of offering a customer to its server.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Offer {
    Filled,
    Improved,
    Rejected,
}

/// Register bank under construction; tracks which servers are still unset.
#[derive(Debug, Clone)]
pub(crate) struct Registers<T> {
    s: Vec<u64>,
    y: Vec<T>,
    set: Vec<bool>,
    unset: usize,
}

impl<T: Scalar> Registers<T> {
    pub(crate) fn new(k: usize) -> Self {
        Self {
            s: vec![0; k],
            y: vec![T::zero(); k],
            set: vec![false; k],
            unset: k,
        }
    }

    pub(crate) fn unset(&self) -> usize {
        self.unset
    }

    #[inline]
    pub(crate) fn y(&self, j: usize) -> T {
        self.y[j]
    }

    /// First arrival fills an unset server; later ones must be strictly smaller.
    #[inline]
    pub(crate) fn offer(&mut self, server: usize, time: T, element: u64) -> Offer {
        if !self.set[server] {
            self.set[server] = true;
            self.unset -= 1;
            self.y[server] = time;
            self.s[server] = element;
            Offer::Filled
        } else if time < self.y[server] {
            self.y[server] = time;
            self.s[server] = element;
            Offer::Improved
        } else {
            Offer::Rejected
        }
    }

    /// Index of the largest register (first one on ties). All must be set.
    pub(crate) fn argmax(&self) -> usize {
        let mut best = 0;
        for j in 1..self.y.len() {
            if self.y[j] > self.y[best] {
                best = j;
            }
        }
        best
    }

    pub(crate) fn unset_indices(&self) -> Vec<usize> {
        (0..self.set.len()).filter(|&j| !self.set[j]).collect()
    }

    pub(crate) fn to_sketch(&self, fingerprint: u64) -> Result<GumbelMaxSketch<T>> {
        if self.unset > 0 {
            return Err(SketchError::IncompleteSketch(self.unset_indices()));
        }
        Ok(GumbelMaxSketch {
            s: self.s.clone(),
            y: self.y.clone(),
            fingerprint,
        })
    }

    pub(crate) fn into_sketch(self, fingerprint: u64) -> Result<GumbelMaxSketch<T>> {
        if self.unset > 0 {
            return Err(SketchError::IncompleteSketch(self.unset_indices()));
        }
        Ok(GumbelMaxSketch {
            s: self.s,
            y: self.y,
            fingerprint,
        })
    }
}
