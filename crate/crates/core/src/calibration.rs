//! Five-region output calibration.
//!
//! Each output neuron's activation range `[-1, 1]` is cut into
//!
//! ```text
//! Definite0    [-1, def0_upper)            -> -1.0
//! Indefinite0  [def0_upper, ind0_upper)    -> -0.5
//! NoDecision   [ind0_upper, ind1_lower]    ->  0.0
//! Indefinite1  (ind1_lower, def1_lower]    -> +0.5
//! Definite1    (def1_lower, 1]             -> +1.0
//! ```
//!
//! Thresholds come from the activations the trained neuron produces on
//! samples whose target is 0 (`-1`) and 1 (`+1`). No training sample ever lands
//! in the wrong definite region.

use serde::{Deserialize, Serialize};

use crate::error::{PscnnError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeuronRegions {
    pub def0_upper: f64,
    pub ind0_upper: f64,
    pub ind1_lower: f64,
    pub def1_lower: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegionLabel {
    Definite0,
    Indefinite0,
    NoDecision,
    Indefinite1,
    Definite1,
}

impl RegionLabel {
    pub const ALL: [RegionLabel; 5] = [
        RegionLabel::Definite0,
        RegionLabel::Indefinite0,
        RegionLabel::NoDecision,
        RegionLabel::Indefinite1,
        RegionLabel::Definite1,
    ];

    /// The quantized output this region emits.
    pub fn value(self) -> f64 {
        match self {
            RegionLabel::Definite0 => -1.0,
            RegionLabel::Indefinite0 => -0.5,
            RegionLabel::NoDecision => 0.0,
            RegionLabel::Indefinite1 => 0.5,
            RegionLabel::Definite1 => 1.0,
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            RegionLabel::Definite0 => "D0",
            RegionLabel::Indefinite0 => "I0",
            RegionLabel::NoDecision => "ND",
            RegionLabel::Indefinite1 => "I1",
            RegionLabel::Definite1 => "D1",
        }
    }
}

impl NeuronRegions {
    /// Checks ordering `-1 <= def0 <= ind0 <= ind1 <= def1 <= 1`.
    pub fn validate(&self) -> Result<()> {
        let chain = [
            -1.0,
            self.def0_upper,
            self.ind0_upper,
            self.ind1_lower,
            self.def1_lower,
            1.0,
        ];
        if chain.iter().any(|v| !v.is_finite()) || chain.windows(2).any(|w| w[0] > w[1]) {
            return Err(PscnnError::CorruptModel(format!(
                "region thresholds out of order: {self:?}"
            )));
        }
        Ok(())
    }

    /// `(lower, upper)` edges of a region inside `[-1, 1]`.
    pub fn bounds(&self, label: RegionLabel) -> (f64, f64) {
        match label {
            RegionLabel::Definite0 => (-1.0, self.def0_upper),
            RegionLabel::Indefinite0 => (self.def0_upper, self.ind0_upper),
            RegionLabel::NoDecision => (self.ind0_upper, self.ind1_lower),
            RegionLabel::Indefinite1 => (self.ind1_lower, self.def1_lower),
            RegionLabel::Definite1 => (self.def1_lower, 1.0),
        }
    }
}

/// Lower nearest-rank quantile of sorted data; `q = 0` is the minimum.
fn lower_quantile(sorted: &[f64], q: f64) -> f64 {
    let idx = (q * (sorted.len() - 1) as f64).floor() as usize;
    sorted[idx.min(sorted.len() - 1)]
}

/// Upper nearest-rank quantile of sorted data; `q = 1` is the maximum.
fn upper_quantile(sorted: &[f64], q: f64) -> f64 {
    let idx = (q * (sorted.len() - 1) as f64).ceil() as usize;
    sorted[idx.min(sorted.len() - 1)]
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Derives the five regions of one neuron.
///
/// `activations0` are the neuron's outputs on samples whose target for this
/// neuron is 0, `activations1` on samples whose target is 1. `trim` carves
/// indefinite bands out of the overlap; `trim = 0` leaves them empty.
pub fn calibrate_neuron(activations0: &[f64], activations1: &[f64], trim: f64) -> Result<NeuronRegions> {
    if !(0.0..0.5).contains(&trim) {
        return Err(PscnnError::InvalidParameters(format!(
            "trim fraction must lie in [0, 0.5), got {trim}"
        )));
    }
    for &a in activations0.iter().chain(activations1) {
        if !(-1.0..=1.0).contains(&a) {
            return Err(PscnnError::OutOfCodomain(a));
        }
    }
    let zeros = sorted(activations0);
    let ones = sorted(activations1);

    let regions = match (zeros.last(), ones.first()) {
        (None, None) => return Err(PscnnError::BothListsEmpty),
        // no class-1 evidence: never claim Definite1
        (Some(&max0), None) => NeuronRegions {
            def0_upper: max0,
            ind0_upper: max0,
            ind1_lower: 1.0,
            def1_lower: 1.0,
        },
        (None, Some(&min1)) => NeuronRegions {
            def0_upper: -1.0,
            ind0_upper: -1.0,
            ind1_lower: min1,
            def1_lower: min1,
        },
        // separable: the empty gap between the classes is undecided
        (Some(&max0), Some(&min1)) if min1 > max0 => NeuronRegions {
            def0_upper: max0,
            ind0_upper: max0,
            ind1_lower: min1,
            def1_lower: min1,
        },
        (Some(&max0), Some(&min1)) => {
            let (lo, hi) = (min1, max0);
            let mut ind0 = lower_quantile(&ones, trim).clamp(lo, hi);
            let mut ind1 = upper_quantile(&zeros, 1.0 - trim).clamp(lo, hi);
            // overlapping indefinite bands: the common part is undecided
            if ind0 > ind1 {
                std::mem::swap(&mut ind0, &mut ind1);
            }
            NeuronRegions {
                def0_upper: lo,
                ind0_upper: ind0,
                ind1_lower: ind1,
                def1_lower: hi,
            }
        }
    };
    Ok(regions)
}

fn check_codomain(a: f64) -> Result<()> {
    if (-1.0..=1.0).contains(&a) {
        Ok(())
    } else {
        Err(PscnnError::OutOfCodomain(a))
    }
}

pub fn classify_region(regions: &NeuronRegions, a: f64) -> Result<RegionLabel> {
    check_codomain(a)?;
    let label = if a < regions.def0_upper {
        RegionLabel::Definite0
    } else if a < regions.ind0_upper {
        RegionLabel::Indefinite0
    } else if a <= regions.ind1_lower {
        RegionLabel::NoDecision
    } else if a <= regions.def1_lower {
        RegionLabel::Indefinite1
    } else {
        RegionLabel::Definite1
    };
    Ok(label)
}

/// Region value plus normalized depth: `O_r + Δ_r / |r|`, with `Δ_r` the
/// distance above the region's lower edge and `|r|` its width. Zero-width
/// regions contribute no depth.
pub fn refined_output(regions: &NeuronRegions, a: f64) -> Result<f64> {
    let label = classify_region(regions, a)?;
    let (lower, upper) = regions.bounds(label);
    let width = upper - lower;
    let depth = if width > 0.0 { (a - lower) / width } else { 0.0 };
    Ok(label.value() + depth)
}
