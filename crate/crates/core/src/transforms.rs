//! Width-preserving bijections on bit vectors, and the quantizer that moves
//! real-valued features into the binary domain.
//!
//! Bit index 0 is the most significant bit throughout.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{PscnnError, Result};

/// Fixed-width binary word, MSB first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitVector {
    bits: Vec<bool>,
}

impl BitVector {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        BitVector { bits }
    }

    pub fn zeros(width: usize) -> Self {
        BitVector {
            bits: vec![false; width],
        }
    }

    /// The low `width` bits of `value`, MSB first.
    pub fn from_u64(value: u64, width: usize) -> Self {
        assert!(width <= 64, "width {width} does not fit in u64");
        let bits = (0..width)
            .map(|i| (value >> (width - 1 - i)) & 1 == 1)
            .collect();
        BitVector { bits }
    }

    /// Panics if the width exceeds 64.
    pub fn to_u64(&self) -> u64 {
        assert!(self.width() <= 64, "width {} does not fit in u64", self.width());
        self.bits
            .iter()
            .fold(0u64, |acc, &bit| (acc << 1) | u64::from(bit))
    }

    pub fn width(&self) -> usize {
        self.bits.len()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }
}

impl FromStr for BitVector {
    type Err = PscnnError;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(PscnnError::InvalidParameters(format!(
                    "`{other}` is not a binary digit"
                ))),
            })
            .collect::<Result<Vec<_>>>()
            .map(BitVector::from_bits)
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &bit in &self.bits {
            f.write_str(if bit { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Reflected binary Gray code: `g[0] = b[0]`, `g[i] = b[i-1] ^ b[i]`.
pub fn gray_encode(b: &BitVector) -> BitVector {
    let bits = b
        .bits
        .iter()
        .enumerate()
        .map(|(i, &bit)| if i == 0 { bit } else { b.bits[i - 1] ^ bit })
        .collect();
    BitVector { bits }
}

/// Inverse of [`gray_encode`], a prefix-XOR scan from the MSB.
pub fn gray_decode(g: &BitVector) -> BitVector {
    let bits = g
        .bits
        .iter()
        .scan(false, |acc, &bit| {
            *acc ^= bit;
            Some(*acc)
        })
        .collect();
    BitVector { bits }
}

/// Riffles the two halves together: `out[2i] = b[i]`, `out[2i+1] = b[w/2 + i]`.
pub fn perfect_shuffle(b: &BitVector) -> Result<BitVector> {
    let w = b.width();
    if !w.is_multiple_of(2) {
        return Err(PscnnError::OddWidth(w));
    }
    let half = w / 2;
    let mut bits = Vec::with_capacity(w);
    for i in 0..half {
        bits.push(b.bits[i]);
        bits.push(b.bits[half + i]);
    }
    Ok(BitVector { bits })
}

pub fn perfect_unshuffle(b: &BitVector) -> Result<BitVector> {
    let w = b.width();
    if !w.is_multiple_of(2) {
        return Err(PscnnError::OddWidth(w));
    }
    let evens = b.bits.iter().step_by(2);
    let odds = b.bits.iter().skip(1).step_by(2);
    Ok(BitVector {
        bits: evens.chain(odds).copied().collect(),
    })
}

pub fn ones_complement(b: &BitVector) -> BitVector {
    BitVector {
        bits: b.bits.iter().map(|&bit| !bit).collect(),
    }
}

/// `(!b + 1) mod 2^w`. Its own inverse.
pub fn twos_complement(b: &BitVector) -> BitVector {
    let mut bits: Vec<bool> = b.bits.iter().map(|&bit| !bit).collect();
    // ripple the +1 up from the LSB
    for bit in bits.iter_mut().rev() {
        *bit = !*bit;
        if *bit {
            break;
        }
    }
    BitVector { bits }
}

/// The nonlinear input transform a module's pipeline is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformKind {
    Identity,
    GrayCode,
    PerfectShuffle,
    OnesComplement,
    TwosComplement,
}

impl TransformKind {
    pub const ALL: [TransformKind; 5] = [
        TransformKind::Identity,
        TransformKind::GrayCode,
        TransformKind::PerfectShuffle,
        TransformKind::OnesComplement,
        TransformKind::TwosComplement,
    ];

    pub fn apply(self, b: &BitVector) -> Result<BitVector> {
        match self {
            TransformKind::Identity => Ok(b.clone()),
            TransformKind::GrayCode => Ok(gray_encode(b)),
            TransformKind::PerfectShuffle => perfect_shuffle(b),
            TransformKind::OnesComplement => Ok(ones_complement(b)),
            TransformKind::TwosComplement => Ok(twos_complement(b)),
        }
    }

    pub fn invert(self, b: &BitVector) -> Result<BitVector> {
        match self {
            TransformKind::Identity => Ok(b.clone()),
            TransformKind::GrayCode => Ok(gray_decode(b)),
            TransformKind::PerfectShuffle => perfect_unshuffle(b),
            TransformKind::OnesComplement => Ok(ones_complement(b)),
            TransformKind::TwosComplement => Ok(twos_complement(b)),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TransformKind::Identity => "identity",
            TransformKind::GrayCode => "gray",
            TransformKind::PerfectShuffle => "shuffle",
            TransformKind::OnesComplement => "ones",
            TransformKind::TwosComplement => "twos",
        }
    }
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TransformKind {
    type Err = PscnnError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "identity" | "none" => Ok(TransformKind::Identity),
            "gray" | "graycode" | "gray_code" => Ok(TransformKind::GrayCode),
            "shuffle" | "perfect_shuffle" | "perfectshuffle" => Ok(TransformKind::PerfectShuffle),
            "ones" | "ones_complement" => Ok(TransformKind::OnesComplement),
            "twos" | "twos_complement" => Ok(TransformKind::TwosComplement),
            _ => Err(PscnnError::UnknownName {
                what: "transform",
                value: s.to_string(),
            }),
        }
    }
}

/// Applies `kind` to `b` exactly `module_index` times.
pub fn apply_pipeline(kind: TransformKind, module_index: usize, b: &BitVector) -> Result<BitVector> {
    let mut out = b.clone();
    for _ in 0..module_index {
        out = kind.apply(&out)?;
    }
    Ok(out)
}

/// Maps bit 0 to -1.0 and bit 1 to +1.0.
pub fn to_bipolar(b: &BitVector) -> Vec<f64> {
    b.bits
        .iter()
        .map(|&bit| if bit { 1.0 } else { -1.0 })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureRange {
    pub lo: f64,
    pub hi: f64,
}

/// Uniform per-feature quantizer. Each feature becomes a `bits_per_feature`
/// wide unsigned code; codes are concatenated MSB first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizationSpec {
    bits_per_feature: u32,
    ranges: Vec<FeatureRange>,
}

impl QuantizationSpec {
    pub const MAX_BITS: u32 = 32;

    pub fn new(bits_per_feature: u32, ranges: Vec<FeatureRange>) -> Result<Self> {
        if bits_per_feature == 0 || bits_per_feature > Self::MAX_BITS {
            return Err(PscnnError::InvalidParameters(format!(
                "bits per feature must be in 1..={}, got {bits_per_feature}",
                Self::MAX_BITS
            )));
        }
        if ranges.is_empty() {
            return Err(PscnnError::InvalidParameters(
                "quantization needs at least one feature range".into(),
            ));
        }
        for (i, r) in ranges.iter().enumerate() {
            if !(r.lo.is_finite() && r.hi.is_finite() && r.lo < r.hi) {
                return Err(PscnnError::InvalidParameters(format!(
                    "feature {i} range ({}, {}) needs finite lo < hi",
                    r.lo, r.hi
                )));
            }
        }
        Ok(QuantizationSpec {
            bits_per_feature,
            ranges,
        })
    }

    /// Ranges taken from the observed per-feature minimum and maximum.
    /// A constant feature gets a unit-wide range centred on its value.
    pub fn fit(features: &[Vec<f64>], bits_per_feature: u32) -> Result<Self> {
        let first = features.first().ok_or(PscnnError::EmptyDataset)?;
        let dim = first.len();
        let mut ranges = vec![
            FeatureRange {
                lo: f64::INFINITY,
                hi: f64::NEG_INFINITY,
            };
            dim
        ];
        for row in features {
            if row.len() != dim {
                return Err(PscnnError::DimensionMismatch {
                    expected: dim,
                    actual: row.len(),
                });
            }
            for (r, &v) in ranges.iter_mut().zip(row) {
                r.lo = r.lo.min(v);
                r.hi = r.hi.max(v);
            }
        }
        for r in &mut ranges {
            if r.lo >= r.hi {
                let mid = r.lo;
                r.lo = mid - 0.5;
                r.hi = mid + 0.5;
            }
        }
        Self::new(bits_per_feature, ranges)
    }

    pub fn bits_per_feature(&self) -> u32 {
        self.bits_per_feature
    }

    pub fn ranges(&self) -> &[FeatureRange] {
        &self.ranges
    }

    pub fn dim(&self) -> usize {
        self.ranges.len()
    }

    pub fn width(&self) -> usize {
        self.dim() * self.bits_per_feature as usize
    }

    fn levels(&self) -> u64 {
        (1u64 << self.bits_per_feature) - 1
    }

    /// Integer code per feature: clamp, map linearly onto `[0, 2^bits - 1]`,
    /// round to nearest with ties going up.
    pub fn codes(&self, x: &[f64]) -> Result<Vec<u64>> {
        if x.len() != self.dim() {
            return Err(PscnnError::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        let levels = self.levels() as f64;
        Ok(x.iter()
            .zip(&self.ranges)
            .map(|(&v, r)| {
                let v = if v.is_nan() { r.lo } else { v.clamp(r.lo, r.hi) };
                let scaled = (v - r.lo) / (r.hi - r.lo) * levels;
                ((scaled + 0.5).floor() as u64).min(self.levels())
            })
            .collect())
    }

    pub fn quantize(&self, x: &[f64]) -> Result<BitVector> {
        let width = self.bits_per_feature as usize;
        let mut bits = Vec::with_capacity(self.width());
        for code in self.codes(x)? {
            bits.extend_from_slice(BitVector::from_u64(code, width).bits());
        }
        Ok(BitVector { bits })
    }

    /// Centre value of each feature's code.
    pub fn dequantize(&self, b: &BitVector) -> Result<Vec<f64>> {
        if b.width() != self.width() {
            return Err(PscnnError::DimensionMismatch {
                expected: self.width(),
                actual: b.width(),
            });
        }
        let width = self.bits_per_feature as usize;
        let levels = self.levels() as f64;
        Ok(b.bits
            .chunks(width)
            .zip(&self.ranges)
            .map(|(chunk, r)| {
                let code = BitVector::from_bits(chunk.to_vec()).to_u64() as f64;
                r.lo + code / levels * (r.hi - r.lo)
            })
            .collect())
    }

    /// One quantization step for each feature.
    pub fn steps(&self) -> Vec<f64> {
        let levels = self.levels() as f64;
        self.ranges.iter().map(|r| (r.hi - r.lo) / levels).collect()
    }
}

/// Free-function form of [`QuantizationSpec::quantize`].
pub fn quantize(x: &[f64], spec: &QuantizationSpec) -> Result<BitVector> {
    spec.quantize(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bv(s: &str) -> BitVector {
        s.parse().unwrap()
    }

    // g = b ^ (b >> 1) on integers.
    fn gray_oracle(n: u64) -> u64 {
        n ^ (n >> 1)
    }

    // out[2i] = b[i], out[2i+1] = b[w/2+i] straight from the index formula.
    fn shuffle_oracle(n: u64, w: usize) -> u64 {
        let bit = |i: usize| (n >> (w - 1 - i)) & 1;
        let mut out = 0u64;
        for j in 0..w {
            let src = if j % 2 == 0 { j / 2 } else { w / 2 + j / 2 };
            out = (out << 1) | bit(src);
        }
        out
    }

    #[test]
    fn gray_examples() {
        assert_eq!(gray_encode(&bv("000")), bv("000"));
        assert_eq!(gray_encode(&bv("011")), bv("010"));
        assert_eq!(gray_encode(&bv("111")), bv("100"));
        assert_eq!(gray_decode(&bv("000")), bv("000"));
        assert_eq!(gray_decode(&bv("010")), bv("011"));
        assert_eq!(gray_decode(&bv("100")), bv("111"));
    }

    #[test]
    fn gray_matches_integer_oracle_on_all_3_bit_words() {
        for n in 0..8u64 {
            let b = BitVector::from_u64(n, 3);
            assert_eq!(gray_encode(&b).to_u64(), gray_oracle(n), "n = {n}");
        }
    }

    #[test]
    fn shuffle_examples() {
        assert_eq!(perfect_shuffle(&bv("0000")).unwrap(), bv("0000"));
        assert_eq!(perfect_shuffle(&bv("0101")).unwrap(), bv("0011"));
        assert_eq!(perfect_shuffle(&bv("000111")).unwrap(), bv("010101"));
        for n in 0..16u64 {
            let b = BitVector::from_u64(n, 4);
            assert_eq!(perfect_shuffle(&b).unwrap().to_u64(), shuffle_oracle(n, 4));
        }
    }

    #[test]
    fn shuffle_rejects_odd_width() {
        assert!(matches!(perfect_shuffle(&bv("010")), Err(PscnnError::OddWidth(3))));
        assert!(matches!(
            apply_pipeline(TransformKind::PerfectShuffle, 2, &bv("01011")),
            Err(PscnnError::OddWidth(5))
        ));
        // zero applications never touch the transform
        assert!(apply_pipeline(TransformKind::PerfectShuffle, 0, &bv("010")).is_ok());
    }

    #[test]
    fn complements() {
        assert_eq!(ones_complement(&bv("0000")), bv("1111"));
        assert_eq!(twos_complement(&bv("0000")), bv("0000"));
        assert_eq!(twos_complement(&bv("0001")), bv("1111"));
        for n in 0..16u64 {
            let b = BitVector::from_u64(n, 4);
            assert_eq!(twos_complement(&b).to_u64(), (16 - n) % 16);
        }
    }

    #[test]
    fn pipeline_examples() {
        let k = TransformKind::GrayCode;
        assert_eq!(apply_pipeline(k, 0, &bv("011")).unwrap(), bv("011"));
        assert_eq!(apply_pipeline(k, 1, &bv("011")).unwrap(), bv("010"));
        assert_eq!(apply_pipeline(k, 2, &bv("011")).unwrap(), bv("011"));
    }

    #[test]
    fn bipolar() {
        assert_eq!(to_bipolar(&bv("01")), vec![-1.0, 1.0]);
        assert_eq!(to_bipolar(&bv("00")), vec![-1.0, -1.0]);
        assert_eq!(to_bipolar(&bv("1111")), vec![1.0; 4]);
    }

    #[test]
    fn quantize_examples() {
        let spec = QuantizationSpec::new(2, vec![FeatureRange { lo: 0.0, hi: 3.0 }]).unwrap();
        assert_eq!(spec.quantize(&[0.0]).unwrap(), bv("00"));
        assert_eq!(spec.quantize(&[3.0]).unwrap(), bv("11"));
        assert_eq!(spec.quantize(&[2.0]).unwrap(), bv("10"));
        // clamped
        assert_eq!(spec.quantize(&[-7.0]).unwrap(), bv("00"));
        assert_eq!(spec.quantize(&[70.0]).unwrap(), bv("11"));
        // ties go up: 0.5 step lands exactly halfway between codes 0 and 1
        assert_eq!(spec.quantize(&[0.5]).unwrap(), bv("01"));
        assert!(matches!(
            spec.quantize(&[1.0, 2.0]),
            Err(PscnnError::DimensionMismatch { expected: 1, actual: 2 })
        ));
    }

    #[test]
    fn quantization_spec_validation() {
        assert!(QuantizationSpec::new(0, vec![FeatureRange { lo: 0.0, hi: 1.0 }]).is_err());
        assert!(QuantizationSpec::new(2, vec![FeatureRange { lo: 1.0, hi: 1.0 }]).is_err());
        let fitted = QuantizationSpec::fit(&[vec![2.0, 0.0], vec![2.0, 4.0]], 3).unwrap();
        assert_eq!(fitted.ranges()[0], FeatureRange { lo: 1.5, hi: 2.5 });
        assert_eq!(fitted.ranges()[1], FeatureRange { lo: 0.0, hi: 4.0 });
        assert_eq!(fitted.width(), 6);
    }

    #[test]
    fn parse_and_display() {
        assert_eq!(bv("1010").to_string(), "1010");
        assert!("10a".parse::<BitVector>().is_err());
        for kind in TransformKind::ALL {
            assert_eq!(kind.name().parse::<TransformKind>().unwrap(), kind);
        }
        assert!("fft".parse::<TransformKind>().is_err());
    }

    fn even_bits() -> impl Strategy<Value = BitVector> {
        (1usize..40).prop_flat_map(|half| {
            prop::collection::vec(any::<bool>(), half * 2).prop_map(BitVector::from_bits)
        })
    }

    proptest! {
        #[test]
        fn every_transform_inverts(b in even_bits()) {
            for kind in TransformKind::ALL {
                let fwd = kind.apply(&b).unwrap();
                prop_assert_eq!(fwd.width(), b.width());
                prop_assert_eq!(kind.invert(&fwd).unwrap(), b.clone());
            }
            prop_assert_eq!(ones_complement(&ones_complement(&b)), b.clone());
            prop_assert_eq!(twos_complement(&twos_complement(&b)), b.clone());
        }

        #[test]
        fn pipeline_composes(b in even_bits(), j in 0usize..6, k in 0usize..6, kind_ix in 0usize..5) {
            let kind = TransformKind::ALL[kind_ix];
            let inner = apply_pipeline(kind, j, &b).unwrap();
            prop_assert_eq!(apply_pipeline(kind, k, &inner).unwrap(), apply_pipeline(kind, j + k, &b).unwrap());
        }

        #[test]
        fn quantize_roundtrip_within_one_step(
            bits in 1u32..12,
            xs in prop::collection::vec(-10.0f64..10.0, 1..6),
        ) {
            let ranges = xs.iter().map(|_| FeatureRange { lo: -10.0, hi: 10.0 }).collect();
            let spec = QuantizationSpec::new(bits, ranges).unwrap();
            let back = spec.dequantize(&spec.quantize(&xs).unwrap()).unwrap();
            for ((x, y), step) in xs.iter().zip(&back).zip(spec.steps()) {
                prop_assert!((x - y).abs() <= step + 1e-12);
            }
        }

        #[test]
        fn quantize_is_monotone(
            bits in 1u32..10,
            pairs in prop::collection::vec((-5.0f64..5.0, 0.0f64..3.0), 1..6),
        ) {
            let ranges = pairs.iter().map(|_| FeatureRange { lo: -4.0, hi: 4.0 }).collect();
            let spec = QuantizationSpec::new(bits, ranges).unwrap();
            let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let y: Vec<f64> = pairs.iter().map(|p| p.0 + p.1).collect();
            let cx = spec.codes(&x).unwrap();
            let cy = spec.codes(&y).unwrap();
            for (a, b) in cx.iter().zip(&cy) {
                prop_assert!(a <= b);
            }
        }
    }
}
