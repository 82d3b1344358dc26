//! Single-stage, fully connected network with a tanh output and its
//! per-sample delta-rule trainer.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PscnnError, Result};

/// Largest magnitude `forward` will report. `tanh` rounds to exactly 1.0 in
/// f64 beyond |z| ~ 19; outputs stay strictly inside (-1, 1).
const MAX_ACTIVATION: f64 = 1.0 - f64::EPSILON;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleStageNet {
    /// One row per output neuron.
    weights: Vec<Vec<f64>>,
    biases: Vec<f64>,
}

impl SingleStageNet {
    /// Builds a net from explicit parameters; every row must have the same
    /// nonzero length and there must be one bias per row.
    pub fn from_parts(weights: Vec<Vec<f64>>, biases: Vec<f64>) -> Result<Self> {
        let n_in = weights.first().map_or(0, Vec::len);
        if weights.is_empty() || n_in == 0 {
            return Err(PscnnError::InvalidDimensions(
                "a net needs at least one input and one output".into(),
            ));
        }
        if weights.iter().any(|row| row.len() != n_in) {
            return Err(PscnnError::InvalidDimensions("ragged weight matrix".into()));
        }
        if biases.len() != weights.len() {
            return Err(PscnnError::InvalidDimensions(format!(
                "{} biases for {} output neurons",
                biases.len(),
                weights.len()
            )));
        }
        Ok(SingleStageNet { weights, biases })
    }

    pub fn zeros(n_in: usize, n_out: usize) -> Result<Self> {
        Self::from_parts(vec![vec![0.0; n_in]; n_out], vec![0.0; n_out])
    }

    pub fn n_in(&self) -> usize {
        self.weights[0].len()
    }

    pub fn n_out(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    /// Pre-activation sums `Σ w x + b` per output neuron.
    pub fn net_input(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_in() {
            return Err(PscnnError::DimensionMismatch {
                expected: self.n_in(),
                actual: x.len(),
            });
        }
        Ok(self
            .weights
            .iter()
            .zip(&self.biases)
            .map(|(row, b)| row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + b)
            .collect())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.net_input(x)?.into_iter().map(activation).collect())
    }
}

fn activation(z: f64) -> f64 {
    z.tanh().clamp(-MAX_ACTIVATION, MAX_ACTIVATION)
}

/// `d tanh(z) / dz`, evaluated from `z` rather than the clamped output.
fn activation_slope(z: f64) -> f64 {
    let t = z.tanh();
    1.0 - t * t
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// `ρ(k) = ρ0`
    Constant,
    /// `ρ(k) = ρ0 / k` with `k` the 1-based epoch.
    InverseIteration,
}

impl std::str::FromStr for Schedule {
    type Err = PscnnError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "const" | "constant" => Ok(Schedule::Constant),
            "inv" | "inverse" | "inverse_iteration" => Ok(Schedule::InverseIteration),
            _ => Err(PscnnError::UnknownName {
                what: "schedule",
                value: s.to_string(),
            }),
        }
    }
}

impl std::fmt::Display for Schedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Schedule::Constant => "const",
            Schedule::InverseIteration => "inv",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub step_size: f64,
    pub schedule: Schedule,
    pub epochs: usize,
    /// Initial weights and biases are uniform on `[-r, r]`.
    pub init_half_range: f64,
    pub seed: u64,
    pub shuffle_each_epoch: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            step_size: 0.9,
            schedule: Schedule::InverseIteration,
            epochs: 50,
            init_half_range: 2.5,
            seed: 0,
            shuffle_each_epoch: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return Err(PscnnError::InvalidConfig(format!(
                "step size must be positive, got {}",
                self.step_size
            )));
        }
        if self.epochs == 0 {
            return Err(PscnnError::InvalidConfig("epochs must be at least 1".into()));
        }
        if !(self.init_half_range.is_finite() && self.init_half_range >= 0.0) {
            return Err(PscnnError::InvalidConfig(format!(
                "init half-range must be non-negative, got {}",
                self.init_half_range
            )));
        }
        Ok(())
    }

    /// Step size used during 1-based epoch `k`.
    pub fn step_for_epoch(&self, k: usize) -> f64 {
        match self.schedule {
            Schedule::Constant => self.step_size,
            Schedule::InverseIteration => self.step_size / k as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    /// Mean squared error over the whole set after each epoch.
    pub epoch_mse: Vec<f64>,
    /// MSE of the untrained net.
    pub initial_mse: f64,
}

impl TrainTrace {
    pub fn epochs(&self) -> usize {
        self.epoch_mse.len()
    }

    pub fn final_mse(&self) -> f64 {
        self.epoch_mse.last().copied().unwrap_or(self.initial_mse)
    }
}

// Separate ChaCha streams keep initialization and shuffling independent.
const INIT_STREAM: u64 = 0;
const SHUFFLE_STREAM: u64 = 1;

pub fn init_net(n_in: usize, n_out: usize, config: &TrainConfig) -> Result<SingleStageNet> {
    if n_in == 0 || n_out == 0 {
        return Err(PscnnError::InvalidDimensions(format!(
            "n_in = {n_in}, n_out = {n_out}; both must be at least 1"
        )));
    }
    let r = config.init_half_range;
    if r == 0.0 {
        return SingleStageNet::zeros(n_in, n_out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(INIT_STREAM);
    let weights = (0..n_out)
        .map(|_| (0..n_in).map(|_| rng.random_range(-r..=r)).collect())
        .collect();
    let biases = (0..n_out).map(|_| rng.random_range(-r..=r)).collect();
    SingleStageNet::from_parts(weights, biases)
}

pub fn forward(net: &SingleStageNet, x: &[f64]) -> Result<Vec<f64>> {
    net.forward(x)
}

/// One stochastic gradient step on `½ Σ (t - y)²` for a single sample.
pub fn delta_step(net: &mut SingleStageNet, x: &[f64], target: &[f64], rho: f64) -> Result<()> {
    if target.len() != net.n_out() {
        return Err(PscnnError::DimensionMismatch {
            expected: net.n_out(),
            actual: target.len(),
        });
    }
    let z = net.net_input(x)?;
    for (j, (&zj, &tj)) in z.iter().zip(target).enumerate() {
        let delta = (tj - activation(zj)) * activation_slope(zj);
        if delta == 0.0 {
            continue;
        }
        let scale = rho * delta;
        for (w, &xi) in net.weights[j].iter_mut().zip(x) {
            *w += scale * xi;
        }
        net.biases[j] += scale;
    }
    Ok(())
}

fn check_dataset(net: &SingleStageNet, inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<()> {
    if inputs.is_empty() || targets.is_empty() {
        return Err(PscnnError::EmptyDataset);
    }
    if inputs.len() != targets.len() {
        return Err(PscnnError::DimensionMismatch {
            expected: inputs.len(),
            actual: targets.len(),
        });
    }
    for (x, t) in inputs.iter().zip(targets) {
        if x.len() != net.n_in() {
            return Err(PscnnError::DimensionMismatch {
                expected: net.n_in(),
                actual: x.len(),
            });
        }
        if t.len() != net.n_out() {
            return Err(PscnnError::DimensionMismatch {
                expected: net.n_out(),
                actual: t.len(),
            });
        }
    }
    Ok(())
}

/// Mean over samples and output neurons of `(t - y)²`.
pub fn mean_squared_error(net: &SingleStageNet, inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<f64> {
    check_dataset(net, inputs, targets)?;
    let mut total = 0.0;
    for (x, t) in inputs.iter().zip(targets) {
        let y = net.forward(x)?;
        total += y.iter().zip(t).map(|(y, t)| (t - y) * (t - y)).sum::<f64>();
    }
    Ok(total / (inputs.len() * net.n_out()) as f64)
}

/// Runs exactly `config.epochs` passes of per-sample delta-rule updates.
pub fn train(
    mut net: SingleStageNet,
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
    config: &TrainConfig,
) -> Result<(SingleStageNet, TrainTrace)> {
    config.validate()?;
    check_dataset(&net, inputs, targets)?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(SHUFFLE_STREAM);
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let initial_mse = mean_squared_error(&net, inputs, targets)?;
    let mut epoch_mse = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        if config.shuffle_each_epoch {
            order.shuffle(&mut rng);
        }
        let rho = config.step_for_epoch(epoch);
        for &i in &order {
            delta_step(&mut net, &inputs[i], &targets[i], rho)?;
        }
        epoch_mse.push(mean_squared_error(&net, inputs, targets)?);
    }

    Ok((
        net,
        TrainTrace {
            epoch_mse,
            initial_mse,
        },
    ))
}

/// Index of the largest entry; ties go to the lowest index.
pub(crate) fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

/// Fraction of samples whose output argmax matches the target argmax.
pub fn accuracy(net: &SingleStageNet, inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<f64> {
    check_dataset(net, inputs, targets)?;
    let mut correct = 0usize;
    for (x, t) in inputs.iter().zip(targets) {
        let y = net.forward(x)?;
        if net.n_out() == 1 {
            // a lone neuron is judged by sign
            if (y[0] > 0.0) == (t[0] > 0.0) {
                correct += 1;
            }
        } else if argmax(&y) == argmax(t) {
            correct += 1;
        }
    }
    Ok(correct as f64 / inputs.len() as f64)
}
