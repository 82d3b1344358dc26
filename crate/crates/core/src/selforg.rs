//! Self-organization: greedy forward selection of the modules worth keeping.
//!
//! Selection works on precomputed module outputs. `outputs[m][s]` is module
//! `m`'s per-class refined output vector for evaluation sample `s`; the engine
//! builds this table once so every candidate subset is scored without
//! re-running any network.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::consensus::{combine, decide, CombinerKind};
use crate::error::{PscnnError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub max_modules: usize,
    pub target_accuracy: Option<f64>,
    /// Smallest accuracy gain that justifies adding another module.
    pub improvement_epsilon: f64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            max_modules: usize::MAX,
            target_accuracy: None,
            improvement_epsilon: 0.0,
        }
    }
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_modules == 0 {
            return Err(PscnnError::InvalidConfig("max_modules must be at least 1".into()));
        }
        if let Some(t) = self.target_accuracy {
            if !(0.0..=1.0).contains(&t) {
                return Err(PscnnError::InvalidConfig(format!(
                    "target accuracy must lie in [0, 1], got {t}"
                )));
            }
        }
        if self.improvement_epsilon.is_nan() || self.improvement_epsilon < 0.0 {
            return Err(PscnnError::InvalidConfig(format!(
                "improvement epsilon must be non-negative, got {}",
                self.improvement_epsilon
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    TargetReached,
    NoImprovement,
    CapReached,
    Exhausted,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::TargetReached => "target reached",
            StopReason::NoImprovement => "no improvement",
            StopReason::CapReached => "module cap reached",
            StopReason::Exhausted => "all modules used",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    /// Candidate indices in the order they were included.
    pub selected: Vec<usize>,
    /// Ensemble accuracy right after each inclusion.
    pub accuracies: Vec<f64>,
    pub stop_reason: StopReason,
}

impl SelectionReport {
    pub fn final_accuracy(&self) -> f64 {
        self.accuracies.last().copied().unwrap_or(0.0)
    }
}

fn check_table(outputs: &[Vec<Vec<f64>>], labels: &[usize]) -> Result<()> {
    if outputs.is_empty() {
        return Err(PscnnError::EmptyEnsemble);
    }
    if labels.is_empty() {
        return Err(PscnnError::EmptyDataset);
    }
    for per_module in outputs {
        if per_module.len() != labels.len() {
            return Err(PscnnError::DimensionMismatch {
                expected: labels.len(),
                actual: per_module.len(),
            });
        }
    }
    Ok(())
}

fn count_correct(
    outputs: &[Vec<Vec<f64>>],
    subset: &[usize],
    labels: &[usize],
    combiner: CombinerKind,
) -> Result<usize> {
    let mut correct = 0;
    let mut sample_outputs = Vec::with_capacity(subset.len());
    for (s, &label) in labels.iter().enumerate() {
        sample_outputs.clear();
        sample_outputs.extend(subset.iter().map(|&m| outputs[m][s].clone()));
        let decision = decide(&combine(combiner, &sample_outputs)?, 0.0)?;
        if decision.class == Some(label) {
            correct += 1;
        }
    }
    Ok(correct)
}

/// Accuracy of the ensemble made of `subset`. Abstentions count as errors.
pub fn evaluate_ensemble(
    outputs: &[Vec<Vec<f64>>],
    subset: &[usize],
    labels: &[usize],
    combiner: CombinerKind,
) -> Result<f64> {
    check_table(outputs, labels)?;
    if subset.is_empty() {
        return Err(PscnnError::EmptyEnsemble);
    }
    if let Some(&bad) = subset.iter().find(|&&m| m >= outputs.len()) {
        return Err(PscnnError::InvalidParameters(format!(
            "module {bad} is not among {} candidates",
            outputs.len()
        )));
    }
    Ok(count_correct(outputs, subset, labels, combiner)? as f64 / labels.len() as f64)
}

/// Greedy forward selection. Starts from the best single module and keeps
/// adding whichever module raises ensemble accuracy the most, until the
/// target is met, the gain drops below epsilon, the cap is hit, or nothing
/// is left. Ties go to the lowest candidate index.
pub fn select_modules(
    outputs: &[Vec<Vec<f64>>],
    labels: &[usize],
    combiner: CombinerKind,
    config: &SelectionConfig,
) -> Result<SelectionReport> {
    config.validate()?;
    check_table(outputs, labels)?;
    let n = labels.len() as f64;

    let mut selected: Vec<usize> = Vec::new();
    let mut accuracies: Vec<f64> = Vec::new();
    let mut remaining: Vec<usize> = (0..outputs.len()).collect();
    let mut current: Option<usize> = None;

    let stop_reason = loop {
        if let (Some(target), Some(&acc)) = (config.target_accuracy, accuracies.last()) {
            if acc >= target {
                break StopReason::TargetReached;
            }
        }
        if selected.len() >= config.max_modules {
            break StopReason::CapReached;
        }
        if remaining.is_empty() {
            break StopReason::Exhausted;
        }

        let mut best: Option<(usize, usize)> = None; // (position in remaining, correct)
        let mut trial = selected.clone();
        trial.push(0);
        for (pos, &cand) in remaining.iter().enumerate() {
            *trial.last_mut().unwrap() = cand;
            let correct = count_correct(outputs, &trial, labels, combiner)?;
            if best.is_none_or(|(_, c)| correct > c) {
                best = Some((pos, correct));
            }
        }
        let (pos, correct) = best.expect("remaining is nonempty");

        if let Some(cur) = current {
            let gain = (correct as f64 - cur as f64) / n;
            if gain < config.improvement_epsilon {
                break StopReason::NoImprovement;
            }
        }
        selected.push(remaining.remove(pos));
        accuracies.push(correct as f64 / n);
        current = Some(correct);
    };

    Ok(SelectionReport {
        selected,
        accuracies,
        stop_reason,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    // Outputs for a 2-class problem where a module is "right" on a sample by
    // putting 1.0 on the true class and -1.0 elsewhere.
    fn module(labels: &[usize], right: &[bool]) -> Vec<Vec<f64>> {
        labels
            .iter()
            .zip(right)
            .map(|(&l, &ok)| {
                let winner = if ok { l } else { 1 - l };
                (0..2).map(|c| if c == winner { 1.0 } else { -1.0 }).collect()
            })
            .collect()
    }

    #[test]
    fn single_candidate() {
        let labels = [0, 1, 1, 0];
        let outs = vec![module(&labels, &[true, true, false, true])];
        let report = select_modules(&outs, &labels, CombinerKind::Mean, &SelectionConfig::default()).unwrap();
        assert_eq!(report.selected, vec![0]);
        assert_eq!(report.accuracies, vec![0.75]);
        assert_eq!(report.stop_reason, StopReason::Exhausted);

        let cfg = SelectionConfig {
            target_accuracy: Some(0.7),
            ..SelectionConfig::default()
        };
        let report = select_modules(&outs, &labels, CombinerKind::Mean, &cfg).unwrap();
        assert_eq!(report.stop_reason, StopReason::TargetReached);
    }

    #[test]
    fn duplicates_add_nothing() {
        let labels = [0, 1, 1, 0];
        let m = module(&labels, &[true, false, true, true]);
        let outs = vec![m.clone(), m.clone(), m];
        let cfg = SelectionConfig {
            improvement_epsilon: 0.01,
            ..SelectionConfig::default()
        };
        let report = select_modules(&outs, &labels, CombinerKind::Mean, &cfg).unwrap();
        assert_eq!(report.selected, vec![0]);
        assert_eq!(report.stop_reason, StopReason::NoImprovement);
    }

    #[test]
    fn best_single_first_and_cap() {
        let labels = [0, 1, 1, 0, 1];
        let outs = vec![
            module(&labels, &[true, false, false, true, true]),
            module(&labels, &[true, true, true, true, false]),
            module(&labels, &[false, true, true, false, true]),
        ];
        let cfg = SelectionConfig {
            max_modules: 2,
            ..SelectionConfig::default()
        };
        let report = select_modules(&outs, &labels, CombinerKind::MajorityVote, &cfg).unwrap();
        assert_eq!(report.selected[0], 1);
        assert_eq!(report.selected.len(), 2);
        assert_eq!(report.stop_reason, StopReason::CapReached);
        assert!(report.accuracies.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn evaluate_examples() {
        let labels = [0, 1, 1];
        let perfect = module(&labels, &[true; 3]);
        assert_eq!(evaluate_ensemble(&[perfect], &[0], &labels, CombinerKind::Mean).unwrap(), 1.0);

        let silent = vec![vec![0.0, 0.0]; 3];
        assert_eq!(evaluate_ensemble(&[silent], &[0], &labels, CombinerKind::Mean).unwrap(), 0.0);

        // every sample has exactly two correct voters out of three
        let outs = vec![
            module(&labels, &[true, true, false]),
            module(&labels, &[true, false, true]),
            module(&labels, &[false, true, true]),
        ];
        let acc = evaluate_ensemble(&outs, &[0, 1, 2], &labels, CombinerKind::MajorityVote).unwrap();
        assert_eq!(acc, 1.0);
    }

    #[test]
    fn errors() {
        let cfg = SelectionConfig::default();
        assert!(matches!(
            select_modules(&[], &[0], CombinerKind::Mean, &cfg),
            Err(PscnnError::EmptyEnsemble)
        ));
        assert!(matches!(
            select_modules(&[vec![]], &[], CombinerKind::Mean, &cfg),
            Err(PscnnError::EmptyDataset)
        ));
        let bad = SelectionConfig {
            max_modules: 0,
            ..cfg
        };
        assert!(select_modules(&[vec![vec![1.0]]], &[0], CombinerKind::Mean, &bad).is_err());
    }
}
