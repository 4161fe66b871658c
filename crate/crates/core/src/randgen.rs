//! Seed-consistent randomness for the queue model.
//!
//! Every random quantity used by the generators is a pure function of a
//! [`SeedScheme`], an element id and a 1-based step counter. Two sketches of
//! different vectors that share an element therefore see the same uniforms
//! and the same server permutation for that element, which is what makes
//! register comparison across vectors meaningful.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SketchError};
use crate::scalar::Scalar;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const ELEMENT_MUL: u64 = 0xD6E8_FEB8_6659_FD93;
const STEP_MUL: u64 = 0xA076_1D64_78BD_642F;

/// Salt separating the permutation stream from the uniform stream.
pub const DEFAULT_STREAM_SALT: u64 = 0x5851_F42D_4C95_7F2D;

/// splitmix64 finalizer.
#[inline]
pub fn fmix64(mut x: u64) -> u64 {
    x ^= x >> 30;
    x = x.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Keyed mix of `(seed, a, b)` into 64 bits.
///
/// Three chained finalizer rounds; each input is spread by an odd multiplier
/// before being xored into the running state.
#[inline]
pub fn mix3(seed: u64, a: u64, b: u64) -> u64 {
    let h = fmix64(seed.wrapping_add(GOLDEN));
    let h = fmix64(h ^ a.wrapping_mul(ELEMENT_MUL)).wrapping_add(GOLDEN);
    fmix64(h ^ b.wrapping_mul(STEP_MUL))
}

/// Derives an independent 64-bit seed for trial `index` of a run keyed by `master`.
#[inline]
pub fn derive_seed(master: u64, index: u64) -> u64 {
    mix3(master, index, 0x7472_6961_6C73)
}

/// The canonical source of all per-element randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedScheme {
    pub global_seed: u64,
    pub stream_salt: u64,
}

impl SeedScheme {
    pub fn new(global_seed: u64) -> Self {
        Self {
            global_seed,
            stream_salt: DEFAULT_STREAM_SALT,
        }
    }

    pub fn with_salt(global_seed: u64, stream_salt: u64) -> Self {
        Self {
            global_seed,
            stream_salt,
        }
    }

    /// 64-bit identity of the scheme; stored in every sketch.
    pub fn fingerprint(&self) -> u64 {
        mix3(self.global_seed, self.stream_salt, 0x6670)
    }

    /// Raw bits behind the uniform for `(element, step)`.
    #[inline]
    pub fn uniform_bits(&self, element: u64, step: u64) -> u64 {
        mix3(self.global_seed, element, step)
    }

    /// Uniform draw strictly inside `(0, 1)` for `(element, step)`, `step >= 1`.
    #[inline]
    pub fn uniform_open<T: Scalar>(&self, element: u64, step: u64) -> T {
        debug_assert!(step >= 1);
        T::unit_open(self.uniform_bits(element, step))
    }

    /// Unbiased integer in `lo..=hi` from the permutation stream of `(element, step)`.
    ///
    /// Lemire's multiply-shift with rejection; retries walk a deterministic
    /// chain so the result is still a pure function of the inputs.
    #[inline]
    pub fn rand_int(&self, element: u64, step: u64, lo: u64, hi: u64) -> u64 {
        debug_assert!(lo <= hi);
        let range = hi - lo + 1;
        let mut x = mix3(self.global_seed ^ self.stream_salt, element, step);
        let mut m = (x as u128) * (range as u128);
        let mut low = m as u64;
        if low < range {
            let threshold = range.wrapping_neg() % range;
            while low < threshold {
                x = fmix64(x.wrapping_add(GOLDEN));
                m = (x as u128) * (range as u128);
                low = m as u64;
            }
        }
        lo + (m >> 64) as u64
    }
}

impl Default for SeedScheme {
    fn default() -> Self {
        Self::new(0)
    }
}

// Past this many displaced slots the permutation switches to a dense array.
const SPARSE_LIMIT: usize = 24;

/// Fisher-Yates state over `0..k`, stored sparsely while few swaps happened.
///
/// FastGM typically draws only a handful of customers per queue, so paying
/// `O(k)` to materialize `(0, .., k-1)` for every element would dominate.
#[derive(Debug, Clone)]
enum Permutation {
    /// `(position, value)` pairs for positions that differ from identity.
    Sparse(Vec<(u32, u32)>),
    Dense(Vec<u32>),
}

impl Permutation {
    #[inline]
    fn get(&self, pos: u32) -> u32 {
        match self {
            Permutation::Sparse(slots) => slots
                .iter()
                .find(|(p, _)| *p == pos)
                .map_or(pos, |&(_, v)| v),
            Permutation::Dense(values) => values[pos as usize],
        }
    }

    #[inline]
    fn set(&mut self, pos: u32, value: u32) {
        match self {
            Permutation::Sparse(slots) => {
                if let Some(i) = slots.iter().position(|(p, _)| *p == pos) {
                    if value == pos {
                        slots.swap_remove(i);
                    } else {
                        slots[i].1 = value;
                    }
                } else if value != pos {
                    slots.push((pos, value));
                }
            }
            Permutation::Dense(values) => values[pos as usize] = value,
        }
    }

    /// Swaps positions `a` and `b`, returning the new value at `a`.
    #[inline]
    fn swap(&mut self, a: u32, b: u32, k: usize) -> u32 {
        if let Permutation::Sparse(slots) = self {
            if slots.len() >= SPARSE_LIMIT {
                let mut dense: Vec<u32> = (0..k as u32).collect();
                for &(p, v) in slots.iter() {
                    dense[p as usize] = v;
                }
                *self = Permutation::Dense(dense);
            }
        }
        if let Permutation::Dense(values) = self {
            values.swap(a as usize, b as usize);
            return values[a as usize];
        }
        let va = self.get(a);
        let vb = self.get(b);
        self.set(a, vb);
        self.set(b, va);
        vb
    }
}

/// Generation cursor for one element's queue of `k` customers.
///
/// Customers come out in ascending arrival time, each tagged with the server
/// (register) it selects. Over a full run the times are the sorted values of
/// `k` i.i.d. `EXP(weight)` draws and the servers form a uniform random
/// permutation of `0..k`.
#[derive(Debug, Clone)]
pub struct ElementQueueState<T> {
    element: u64,
    weight: T,
    k: usize,
    z: usize,
    b: T,
    perm: Permutation,
}

impl<T: Scalar> ElementQueueState<T> {
    pub fn new(element: u64, weight: T, k: usize) -> Self {
        Self {
            element,
            weight,
            k,
            z: 0,
            b: T::zero(),
            perm: Permutation::Sparse(Vec::new()),
        }
    }

    pub fn element(&self) -> u64 {
        self.element
    }

    pub fn weight(&self) -> T {
        self.weight
    }

    /// Customers emitted so far.
    pub fn emitted(&self) -> usize {
        self.z
    }

    /// Arrival time of the last emitted customer (zero before the first).
    pub fn last_time(&self) -> T {
        self.b
    }

    pub fn is_exhausted(&self) -> bool {
        self.z == self.k
    }

    /// Releases the next customer: `(arrival time, server in 0..k)`.
    ///
    /// The time advances by `(-ln u / (k - z + 1)) / weight`. The division by
    /// the weight is applied per increment so that scaling the weight by a
    /// power of two scales every returned time exactly.
    #[inline]
    pub fn next_order_statistic(&mut self, scheme: &SeedScheme) -> Result<(T, usize)> {
        if self.z == self.k {
            return Err(SketchError::ExhaustedQueue {
                element: self.element,
                k: self.k,
            });
        }
        self.z += 1;
        let step = self.z as u64;
        let u: T = scheme.uniform_open(self.element, step);
        let remaining = T::from_count(self.k - self.z + 1);
        self.b = self.b + (-u.ln() / remaining) / self.weight;

        let j = scheme.rand_int(self.element, step, step, self.k as u64);
        let server = self.perm.swap((step - 1) as u32, (j - 1) as u32, self.k);
        Ok((self.b, server as usize))
    }
}
