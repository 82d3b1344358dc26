//! The logic unit: turns per-module refined outputs into one decision.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{PscnnError, Result};
use crate::module_net::argmax;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombinerKind {
    #[default]
    Mean,
    MajorityVote,
}

impl FromStr for CombinerKind {
    type Err = PscnnError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mean" | "average" => Ok(CombinerKind::Mean),
            "majority" | "vote" | "majority_vote" => Ok(CombinerKind::MajorityVote),
            _ => Err(PscnnError::UnknownName {
                what: "combiner",
                value: s.to_string(),
            }),
        }
    }
}

impl fmt::Display for CombinerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CombinerKind::Mean => "mean",
            CombinerKind::MajorityVote => "majority",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    /// `None` means the ensemble abstained.
    pub class: Option<usize>,
    /// Largest combined score.
    pub score: f64,
    pub per_class_scores: Vec<f64>,
}

impl Decision {
    pub fn is_abstain(&self) -> bool {
        self.class.is_none()
    }
}

fn check_outputs(module_outputs: &[Vec<f64>]) -> Result<usize> {
    let first = module_outputs.first().ok_or(PscnnError::EmptyEnsemble)?;
    let len = first.len();
    if let Some(bad) = module_outputs.iter().find(|v| v.len() != len) {
        return Err(PscnnError::LengthMismatch {
            expected: len,
            actual: bad.len(),
        });
    }
    Ok(len)
}

/// Componentwise mean of the modules' per-class outputs.
pub fn combine_mean(module_outputs: &[Vec<f64>]) -> Result<Vec<f64>> {
    let len = check_outputs(module_outputs)?;
    let mut sum = vec![0.0; len];
    for v in module_outputs {
        for (s, x) in sum.iter_mut().zip(v) {
            *s += x;
        }
    }
    let n = module_outputs.len() as f64;
    Ok(sum.into_iter().map(|s| s / n).collect())
}

/// One vote per module for its argmax class, cast only when that module's
/// best output is positive. Returns vote shares.
pub fn combine_majority(module_outputs: &[Vec<f64>]) -> Result<Vec<f64>> {
    let len = check_outputs(module_outputs)?;
    let mut votes = vec![0usize; len];
    for v in module_outputs {
        if let Some(best) = argmax(v) {
            if v[best] > 0.0 {
                votes[best] += 1;
            }
        }
    }
    let n = module_outputs.len() as f64;
    Ok(votes.into_iter().map(|c| c as f64 / n).collect())
}

pub fn combine(kind: CombinerKind, module_outputs: &[Vec<f64>]) -> Result<Vec<f64>> {
    match kind {
        CombinerKind::Mean => combine_mean(module_outputs),
        CombinerKind::MajorityVote => combine_majority(module_outputs),
    }
}

/// Picks the highest combined score if it beats `abstain_threshold`.
pub fn decide(combined: &[f64], abstain_threshold: f64) -> Result<Decision> {
    let best = argmax(combined).ok_or(PscnnError::EmptyVector)?;
    let score = combined[best];
    Ok(Decision {
        class: (score > abstain_threshold).then_some(best),
        score,
        per_class_scores: combined.to_vec(),
    })
}
