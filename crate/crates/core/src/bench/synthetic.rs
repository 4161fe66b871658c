//! Synthetic weight generators.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Exp1, Normal, Open01};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SketchError};
use crate::sketch::WeightedVector;

/// Weight distribution for generated vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WeightDist {
    /// UNI(0, 1), open interval.
    Uniform01,
    /// EXP(1).
    Exp1,
    /// N(1, 0.1) with 0.1 the standard deviation, redrawn until positive.
    Normal,
    /// Beta(5, 5).
    Beta55,
}

impl WeightDist {
    pub const ALL: [WeightDist; 4] = [
        WeightDist::Uniform01,
        WeightDist::Exp1,
        WeightDist::Normal,
        WeightDist::Beta55,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            WeightDist::Uniform01 => "uniform01",
            WeightDist::Exp1 => "exp1",
            WeightDist::Normal => "normal",
            WeightDist::Beta55 => "beta55",
        }
    }

    /// One positive draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let draw = |rng: &mut R| -> f64 {
            match self {
                WeightDist::Uniform01 => Open01.sample(rng),
                WeightDist::Exp1 => Exp1.sample(rng),
                WeightDist::Normal => Normal::new(1.0, 0.1).unwrap().sample(rng),
                WeightDist::Beta55 => Beta::new(5.0, 5.0).unwrap().sample(rng),
            }
        };
        loop {
            let w = draw(rng);
            if w >= f64::MIN_POSITIVE && w.is_finite() {
                return w;
            }
        }
    }
}

impl fmt::Display for WeightDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WeightDist {
    type Err = SketchError;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "uniform01" | "uniform" | "uni" | "uni(0,1)" => Ok(WeightDist::Uniform01),
            "exp1" | "exp" | "exp(1)" => Ok(WeightDist::Exp1),
            "normal" | "normal(1,0.1)" | "n(1,0.1)" => Ok(WeightDist::Normal),
            "beta55" | "beta" | "beta(5,5)" => Ok(WeightDist::Beta55),
            _ => Err(SketchError::UnknownDistribution(s.to_string())),
        }
    }
}

/// `n` weights on ids `1..=n`, deterministic in `seed`.
pub fn gen_synthetic(n: usize, dist: WeightDist, seed: u64) -> Result<WeightedVector> {
    if n == 0 {
        return Err(SketchError::InvalidConfig("n must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    WeightedVector::from_pairs((1..=n as u64).map(|i| (i, dist.sample(&mut rng))))
}
