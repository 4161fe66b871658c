//! Versioned little-endian binary record for a single sketch.
//!
//! ```text
//! offset  size  field
//!      0     4  magic "GMSK"
//!      4     2  format version (1)
//!      6     2  producer scalar width in bits (32 or 64)
//!      8     8  seed-scheme fingerprint
//!     16     8  k
//!     24  16*k  k pairs (s[j]: u64, y[j]: IEEE-754 binary64)
//! ```
//!
//! Registers are always stored as binary64 so `f32` sketches widen losslessly.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Result, SketchError};
use crate::scalar::Scalar;

use super::GumbelMaxSketch;

pub const MAGIC: [u8; 4] = *b"GMSK";
pub const FORMAT_VERSION: u16 = 1;
const HEADER_LEN: usize = 24;

pub fn encode<T: Scalar>(sketch: &GumbelMaxSketch<T>) -> Vec<u8> {
    let k = sketch.k();
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * k);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&((std::mem::size_of::<T>() * 8) as u16).to_le_bytes());
    out.extend_from_slice(&sketch.fingerprint().to_le_bytes());
    out.extend_from_slice(&(k as u64).to_le_bytes());
    for (s, y) in sketch.s().iter().zip(sketch.y()) {
        out.extend_from_slice(&s.to_le_bytes());
        out.extend_from_slice(&y.to_f64_lossless().to_le_bytes());
    }
    out
}

fn le_u64(bytes: &[u8]) -> u64 {
    u64::from_le_bytes(bytes.try_into().expect("8-byte slice"))
}

pub fn decode<T: Scalar>(bytes: &[u8]) -> Result<GumbelMaxSketch<T>> {
    if bytes.len() < HEADER_LEN {
        return Err(SketchError::Format(format!(
            "{} bytes is shorter than the header",
            bytes.len()
        )));
    }
    if bytes[0..4] != MAGIC {
        return Err(SketchError::Format("bad magic".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != FORMAT_VERSION {
        return Err(SketchError::Format(format!(
            "unsupported version {version}"
        )));
    }
    let width = u16::from_le_bytes([bytes[6], bytes[7]]);
    if width != 32 && width != 64 {
        return Err(SketchError::Format(format!(
            "unsupported scalar width {width}"
        )));
    }
    let fingerprint = le_u64(&bytes[8..16]);
    let k = le_u64(&bytes[16..24]);
    let body = &bytes[HEADER_LEN..];
    if k == 0 || body.len() as u64 != k.saturating_mul(16) {
        return Err(SketchError::Format(format!(
            "k = {k} does not match a {}-byte body",
            body.len()
        )));
    }
    let (s, y): (Vec<u64>, Vec<T>) = body
        .chunks_exact(16)
        .map(|rec| {
            (
                le_u64(&rec[..8]),
                T::from_f64_lossy(f64::from_le_bytes(rec[8..].try_into().unwrap())),
            )
        })
        .unzip();
    GumbelMaxSketch::from_parts(s, y, fingerprint)
}

pub fn write_sketch<T: Scalar, W: Write>(sketch: &GumbelMaxSketch<T>, mut out: W) -> Result<()> {
    out.write_all(&encode(sketch))?;
    Ok(())
}

pub fn read_sketch<T: Scalar, R: Read>(mut input: R) -> Result<GumbelMaxSketch<T>> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    decode(&bytes)
}

impl<T: Scalar> GumbelMaxSketch<T> {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, encode(self))?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        decode(&std::fs::read(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randgen::SeedScheme;
    use crate::sketch::{sketch_fastgm, GenerationParams, WeightedVector};
    use proptest::prelude::*;

    #[test]
    fn layout_is_fixed() {
        let sk = GumbelMaxSketch::<f64>::from_parts(vec![3, 9], vec![0.5, 2.0], 0x0102).unwrap();
        let bytes = encode(&sk);
        assert_eq!(bytes.len(), 24 + 32);
        assert_eq!(&bytes[0..4], b"GMSK");
        assert_eq!(&bytes[4..8], &[1, 0, 64, 0]);
        assert_eq!(le_u64(&bytes[8..16]), 0x0102);
        assert_eq!(le_u64(&bytes[16..24]), 2);
        assert_eq!(le_u64(&bytes[24..32]), 3);
        assert_eq!(f64::from_le_bytes(bytes[32..40].try_into().unwrap()), 0.5);
        assert_eq!(le_u64(&bytes[40..48]), 9);
    }

    #[test]
    fn rejects_corrupt_records() {
        let sk = GumbelMaxSketch::<f64>::from_parts(vec![1], vec![1.0], 0).unwrap();
        let good = encode(&sk);
        assert!(decode::<f64>(&good[..10]).is_err());
        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(decode::<f64>(&bad).is_err());
        let mut bad = good.clone();
        bad[4] = 2;
        assert!(decode::<f64>(&bad).is_err());
        let mut bad = good.clone();
        bad.push(0);
        assert!(decode::<f64>(&bad).is_err());
    }

    #[test]
    fn f32_sketch_widens_and_narrows_exactly() {
        let v = WeightedVector::<f32>::from_dense(&[0.25, 1.5, 3.0]).unwrap();
        let (sk, _) = sketch_fastgm(&v, &GenerationParams::new(16, SeedScheme::new(2))).unwrap();
        let bytes = encode(&sk);
        assert_eq!(&bytes[6..8], &[32, 0]);
        assert!(decode::<f32>(&bytes).unwrap().bit_eq(&sk));
    }

    proptest! {
        #[test]
        fn roundtrip(seed in any::<u64>(), k in 1usize..64, n in 1usize..20) {
            let weights: Vec<f64> = (0..n).map(|i| 0.1 + i as f64).collect();
            let v = WeightedVector::from_dense(&weights).unwrap();
            let (sk, _) = sketch_fastgm(&v, &GenerationParams::new(k, SeedScheme::new(seed))).unwrap();
            let mut buf = Vec::new();
            write_sketch(&sk, &mut buf).unwrap();
            let back: GumbelMaxSketch<f64> = read_sketch(&buf[..]).unwrap();
            prop_assert!(back.bit_eq(&sk));
        }
    }
}
