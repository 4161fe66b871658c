//! Floating-point abstraction shared by the generators and estimators.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// A binary floating-point type usable for sketch registers.
///
/// Everything in the crate is written against this trait; `f64` is the
/// default everywhere and `f32` is supported for memory-constrained callers.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Number of random bits used to build an open-interval uniform.
    const UNIT_BITS: u32;

    /// Smallest accepted element weight; below it `1 / w` is not safely finite.
    fn min_weight() -> Self;

    /// Maps 64 random bits to a value strictly inside `(0, 1)`.
    ///
    /// The top `UNIT_BITS` bits form an integer `m` and the result is
    /// `(m + 1/2) * 2^-UNIT_BITS`. `UNIT_BITS` is one less than the mantissa
    /// width so `2m + 1` is always exactly representable and the largest
    /// output is `1 - 2^-(UNIT_BITS + 1)`, never a rounded 1.0.
    fn unit_open(bits: u64) -> Self;

    /// Lossless widening used by the on-disk format.
    fn to_f64_lossless(self) -> f64;

    /// Narrowing used when reading the on-disk format.
    fn from_f64_lossy(x: f64) -> Self;

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable as float")
    }
}

impl Scalar for f64 {
    const UNIT_BITS: u32 = 52;

    fn min_weight() -> Self {
        1e-300
    }

    #[inline]
    fn unit_open(bits: u64) -> Self {
        let m = bits >> (64 - Self::UNIT_BITS);
        ((2 * m + 1) as f64) * f64::powi(2.0, -(Self::UNIT_BITS as i32 + 1))
    }

    #[inline]
    fn to_f64_lossless(self) -> f64 {
        self
    }

    #[inline]
    fn from_f64_lossy(x: f64) -> Self {
        x
    }
}

impl Scalar for f32 {
    const UNIT_BITS: u32 = 23;

    fn min_weight() -> Self {
        1e-30
    }

    #[inline]
    fn unit_open(bits: u64) -> Self {
        let m = bits >> (64 - Self::UNIT_BITS);
        ((2 * m + 1) as f32) * f32::powi(2.0, -(Self::UNIT_BITS as i32 + 1))
    }

    #[inline]
    fn to_f64_lossless(self) -> f64 {
        self as f64
    }

    #[inline]
    fn from_f64_lossy(x: f64) -> Self {
        x as f32
    }
}
