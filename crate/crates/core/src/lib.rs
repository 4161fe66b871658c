//! Gumbel-Max sketches: fast generation, streaming, merging and estimation.
//!
//! A sketch of a non-negative weighted vector holds `k` registers. Register
//! `j` records the element whose exponential draw `-ln(a_ij) / v_i` is
//! smallest (`s[j]`) and that value (`y[j]`). Matching `s` registers between
//! two sketches estimate the probability Jaccard similarity; the `y`
//! registers estimate the weighted cardinality, and sketches merge by
//! elementwise minimum.
//!
//! [`sketch_fastgm`] generates the same sketch as the `O(k n)` baseline
//! [`sketch_naive`] while drawing each element's values lazily in ascending
//! order and stopping queues that can no longer win a register.
//!
//! ```
//! use fastgm::randgen::SeedScheme;
//! use fastgm::{estimate_cardinality, estimate_jaccard_p, merge, sketch_fastgm, GenerationParams, Vector64};
//!
//! let params = GenerationParams::new(256, SeedScheme::new(42));
//! let u = Vector64::from_pairs([(1, 0.5), (4, 1.25), (9, 2.0)])?;
//! let v = Vector64::from_pairs([(1, 0.5), (4, 1.25), (12, 0.75)])?;
//!
//! let (su, _) = sketch_fastgm(&u, &params)?;
//! let (sv, _) = sketch_fastgm(&v, &params)?;
//! let similarity = estimate_jaccard_p(&su, &sv)?.value;
//! let union_weight = estimate_cardinality(&merge(&[&su, &sv])?)?.value;
//! assert!((0.0..=1.0).contains(&similarity) && union_weight > 0.0);
//! # Ok::<(), fastgm::SketchError>(())
//! ```
//!
//! All numeric code is generic over [`Scalar`] (`f64` or `f32`); the
//! aliases below fix the common choices.

pub mod bench;
pub mod error;
pub mod estimate;
pub mod netsim;
pub mod randgen;
pub mod scalar;
pub mod sketch;
pub mod stream;

pub use error::{Result, SketchError};
pub use estimate::{
    estimate_cardinality, estimate_difference, estimate_jaccard_p, estimate_set_algebra,
    exact_jaccard_p, exact_jaccard_w, merge, CardinalityEstimate, SetAlgebraEstimate,
    SimilarityEstimate,
};
pub use randgen::{ElementQueueState, SeedScheme};
pub use scalar::Scalar;
pub use sketch::{
    compute_ri, sketch_fastgm, sketch_naive, GenerationParams, GenerationStats, GumbelMaxSketch,
    WeightedVector,
};
pub use stream::{sketch_stream, StreamItem, StreamSketchState};

pub type Vector64 = WeightedVector<f64>;
pub type Vector32 = WeightedVector<f32>;
pub type Sketch64 = GumbelMaxSketch<f64>;
pub type Sketch32 = GumbelMaxSketch<f32>;
pub type StreamState64 = StreamSketchState<f64>;
pub type StreamState32 = StreamSketchState<f32>;
