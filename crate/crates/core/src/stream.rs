//! One-pass sketch maintenance over a stream of `(element, weight)` items.
//!
//! Each arriving element replays its queue from the start. Until every
//! register has been reserved the whole queue is drained; afterwards the
//! queue stops at the first arrival above the current maximum register.
//! Because the randomness is keyed by element id and step, arrival order and
//! repeated items never change the final sketch.

use std::collections::hash_map::Entry;
use std::collections::HashMap;

use crate::error::{Result, SketchError};
use crate::randgen::{ElementQueueState, SeedScheme};
use crate::scalar::Scalar;
use crate::sketch::{GumbelMaxSketch, Offer, Registers, WeightedVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamItem<T = f64> {
    pub element: u64,
    pub weight: T,
}

impl<T> StreamItem<T> {
    pub fn new(element: u64, weight: T) -> Self {
        Self { element, weight }
    }
}

#[derive(Debug, Clone)]
pub struct StreamSketchState<T = f64> {
    k: usize,
    scheme: SeedScheme,
    registers: Registers<T>,
    jstar: usize,
    prune_enabled: bool,
    seen: HashMap<u64, T>,
    skip_duplicates: bool,
    emitted: u64,
}

impl<T: Scalar> StreamSketchState<T> {
    pub fn new(k: usize, scheme: SeedScheme) -> Result<Self> {
        if k == 0 {
            return Err(SketchError::InvalidK(k));
        }
        Ok(Self {
            k,
            scheme,
            registers: Registers::new(k),
            jstar: 0,
            prune_enabled: false,
            seen: HashMap::new(),
            skip_duplicates: true,
            emitted: 0,
        })
    }

    /// When off, repeated items are replayed in full instead of skipped.
    /// The sketch is the same either way; only the work differs.
    pub fn with_skip_duplicates(mut self, skip: bool) -> Self {
        self.skip_duplicates = skip;
        self
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn scheme(&self) -> &SeedScheme {
        &self.scheme
    }

    pub fn unset_count(&self) -> usize {
        self.registers.unset()
    }

    pub fn prune_enabled(&self) -> bool {
        self.prune_enabled
    }

    /// Index of the maximum register once pruning is on.
    pub fn jstar(&self) -> Option<usize> {
        self.prune_enabled.then_some(self.jstar)
    }

    /// Distinct elements seen so far.
    pub fn distinct(&self) -> usize {
        self.seen.len()
    }

    /// Total order statistics drawn.
    pub fn emitted(&self) -> u64 {
        self.emitted
    }

    /// Processes one item and returns how many order statistics it drew.
    pub fn update(&mut self, item: StreamItem<T>) -> Result<usize> {
        let StreamItem { element, weight } = item;
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
        match self.seen.entry(element) {
            Entry::Occupied(prev) => {
                let expected = *prev.get();
                if expected != weight {
                    return Err(SketchError::InconsistentWeight {
                        element,
                        expected: expected.to_f64_lossless(),
                        got: weight.to_f64_lossless(),
                    });
                }
                if self.skip_duplicates {
                    return Ok(0);
                }
            }
            Entry::Vacant(slot) => {
                slot.insert(weight);
            }
        }

        let mut queue = ElementQueueState::new(element, weight, self.k);
        let mut drawn = 0;
        while !queue.is_exhausted() {
            let (time, server) = queue.next_order_statistic(&self.scheme)?;
            drawn += 1;
            if !self.prune_enabled {
                let offer = self.registers.offer(server, time, element);
                if offer == Offer::Filled && self.registers.unset() == 0 {
                    self.prune_enabled = true;
                    self.jstar = self.registers.argmax();
                }
            }
            if self.prune_enabled {
                if time > self.registers.y(self.jstar) {
                    break;
                }
                if self.registers.offer(server, time, element) == Offer::Improved
                    && server == self.jstar
                {
                    self.jstar = self.registers.argmax();
                }
            }
        }
        self.emitted += drawn as u64;
        Ok(drawn)
    }

    pub fn extend<I: IntoIterator<Item = StreamItem<T>>>(&mut self, items: I) -> Result<()> {
        for item in items {
            self.update(item)?;
        }
        Ok(())
    }

    /// Snapshot of the sketch; fails while any register is unset.
    pub fn finalize(&self) -> Result<GumbelMaxSketch<T>> {
        self.registers.to_sketch(self.scheme.fingerprint())
    }

    pub fn into_sketch(self) -> Result<GumbelMaxSketch<T>> {
        self.registers.into_sketch(self.scheme.fingerprint())
    }
}

/// Streams the entries of `v` in id order.
pub fn sketch_stream<T: Scalar>(
    v: &WeightedVector<T>,
    k: usize,
    scheme: SeedScheme,
) -> Result<(GumbelMaxSketch<T>, u64)> {
    if v.is_empty() {
        return Err(SketchError::EmptyVector);
    }
    let mut state = StreamSketchState::new(k, scheme)?;
    state.extend(v.iter().map(|(e, w)| StreamItem::new(e, w)))?;
    let emitted = state.emitted();
    Ok((state.into_sketch()?, emitted))
}
