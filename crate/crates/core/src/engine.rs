//! Full ensemble lifecycle: parallel module training, calibration,
//! self-organization, prediction and evaluation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::{calibrate_neuron, classify_region, refined_output, NeuronRegions, RegionLabel};
use crate::consensus::{combine, decide, CombinerKind, Decision};
use crate::data::{bipolar_targets, split, Dataset};
use crate::error::{PscnnError, Result};
use crate::module_net::{init_net, train, SingleStageNet, TrainConfig};
use crate::selforg::{evaluate_ensemble, select_modules as select_from_outputs, SelectionConfig, SelectionReport};
use crate::transforms::{apply_pipeline, to_bipolar, BitVector, QuantizationSpec, TransformKind};

pub const MODEL_FORMAT_VERSION: u64 = 1;

/// Decisions below or at this combined score abstain.
const ABSTAIN_THRESHOLD: f64 = 0.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub module_count: usize,
    pub transform: TransformKind,
    pub bits_per_feature: u32,
    /// Shared training settings. `train.seed` is ignored; each module gets
    /// its own seed from [`module_seed`].
    pub train: TrainConfig,
    /// Quantile trim used to carve indefinite bands during calibration.
    pub trim: f64,
    pub selection: SelectionConfig,
    pub combiner: CombinerKind,
    pub master_seed: u64,
    /// Fraction of the data held out for module selection. `None` selects
    /// on the training data itself.
    pub selection_holdout: Option<f64>,
    /// Training threads; 0 lets the pool size itself. Never persisted, since
    /// it cannot change the result.
    #[serde(skip)]
    pub worker_count: usize,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            module_count: 4,
            transform: TransformKind::GrayCode,
            bits_per_feature: 1,
            train: TrainConfig::default(),
            trim: 0.05,
            selection: SelectionConfig::default(),
            combiner: CombinerKind::Mean,
            master_seed: 0,
            selection_holdout: None,
            worker_count: 0,
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.module_count == 0 {
            return Err(PscnnError::InvalidConfig("module count must be at least 1".into()));
        }
        if self.bits_per_feature == 0 || self.bits_per_feature > QuantizationSpec::MAX_BITS {
            return Err(PscnnError::InvalidConfig(format!(
                "bits per feature must be in 1..={}, got {}",
                QuantizationSpec::MAX_BITS,
                self.bits_per_feature
            )));
        }
        if !(0.0..0.5).contains(&self.trim) {
            return Err(PscnnError::InvalidConfig(format!(
                "trim must lie in [0, 0.5), got {}",
                self.trim
            )));
        }
        if let Some(h) = self.selection_holdout {
            if !(h > 0.0 && h < 1.0) {
                return Err(PscnnError::InvalidConfig(format!(
                    "selection holdout must lie in (0, 1), got {h}"
                )));
            }
        }
        self.train.validate()?;
        self.selection.validate()
    }
}

/// Seed for module `index`: the `(index + 1)`-th SplitMix64 output of a
/// stream started at `master`, i.e. the SplitMix64 finalizer applied to
/// `master + (index + 1) * 0x9E3779B97F4A7C15`. The finalizer is a bijection
/// on u64, so distinct indices always get distinct seeds.
pub fn module_seed(master: u64, index: usize) -> u64 {
    let mut z = master.wrapping_add((index as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub epochs: usize,
    pub initial_mse: f64,
    pub final_mse: f64,
}

/// One trained module: its input pipeline, network and output calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModule {
    pub index: usize,
    pub transform: TransformKind,
    /// How many times `transform` is applied to the quantized input.
    pub applications: usize,
    pub seed: u64,
    pub net: SingleStageNet,
    /// One entry per output neuron.
    pub regions: Vec<NeuronRegions>,
    pub trace: TraceSummary,
    /// Accuracy of this module on its own on the selection data.
    pub standalone_accuracy: f64,
}

impl TrainedModule {
    /// Bipolar network input for a quantized sample.
    pub fn encode(&self, bits: &BitVector) -> Result<Vec<f64>> {
        Ok(to_bipolar(&apply_pipeline(self.transform, self.applications, bits)?))
    }

    pub fn activations(&self, bits: &BitVector) -> Result<Vec<f64>> {
        self.net.forward(&self.encode(bits)?)
    }

    /// Per-class refined outputs, the values the logic unit combines.
    pub fn refined_outputs(&self, bits: &BitVector) -> Result<Vec<f64>> {
        self.activations(bits)?
            .iter()
            .zip(&self.regions)
            .map(|(&a, r)| refined_output(r, a))
            .collect()
    }

    pub fn region_labels(&self, bits: &BitVector) -> Result<Vec<RegionLabel>> {
        self.activations(bits)?
            .iter()
            .zip(&self.regions)
            .map(|(&a, r)| classify_region(r, a))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub master: u64,
    /// Seeds of every trained candidate, by module index.
    pub modules: Vec<u64>,
}

/// The persisted artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    pub version: u64,
    pub quantization: QuantizationSpec,
    /// Selected modules in inclusion order.
    pub modules: Vec<TrainedModule>,
    pub combiner: CombinerKind,
    pub classes: usize,
    pub seeds: SeedRecord,
    pub selection: SelectionReport,
    /// Standalone accuracy of every candidate, by module index.
    pub candidate_accuracies: Vec<f64>,
    pub config: EnsembleConfig,
}

impl EnsembleModel {
    pub fn input_dim(&self) -> usize {
        self.quantization.dim()
    }

    /// Structural checks run after loading.
    pub fn validate(&self) -> Result<()> {
        let corrupt = |msg: String| Err(PscnnError::CorruptModel(msg));
        if self.modules.is_empty() {
            return corrupt("model has no modules".into());
        }
        if self.classes == 0 {
            return corrupt("model has zero classes".into());
        }
        let width = self.quantization.width();
        for m in &self.modules {
            if m.net.n_in() != width {
                return corrupt(format!(
                    "module {} expects {} inputs, quantizer produces {width}",
                    m.index,
                    m.net.n_in()
                ));
            }
            if m.net.n_out() != self.classes || m.regions.len() != self.classes {
                return corrupt(format!(
                    "module {} disagrees with the model's {} classes",
                    m.index, self.classes
                ));
            }
            for r in &m.regions {
                r.validate()?;
            }
        }
        if self.selection.selected.len() != self.modules.len()
            || self.selection.accuracies.len() != self.selection.selected.len()
        {
            return corrupt("selection report does not match the module list".into());
        }
        Ok(())
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(PscnnError::DimensionMismatch {
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        Ok(())
    }

    /// Refined outputs of every selected module, in module order.
    pub fn module_outputs(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_input(x)?;
        let bits = self.quantization.quantize(x)?;
        self.modules.iter().map(|m| m.refined_outputs(&bits)).collect()
    }

    pub fn module_region_labels(&self, x: &[f64]) -> Result<Vec<Vec<RegionLabel>>> {
        self.check_input(x)?;
        let bits = self.quantization.quantize(x)?;
        self.modules.iter().map(|m| m.region_labels(&bits)).collect()
    }

    pub fn predict(&self, x: &[f64]) -> Result<Decision> {
        let outputs = self.module_outputs(x)?;
        decide(&combine(self.combiner, &outputs)?, ABSTAIN_THRESHOLD)
    }
}

pub fn predict(model: &EnsembleModel, x: &[f64]) -> Result<Decision> {
    model.predict(x)
}

fn train_module(
    index: usize,
    config: &EnsembleConfig,
    codes: &[BitVector],
    targets: &[Vec<f64>],
    classes: usize,
) -> Result<TrainedModule> {
    let inputs: Vec<Vec<f64>> = codes
        .iter()
        .map(|b| apply_pipeline(config.transform, index, b).map(|t| to_bipolar(&t)))
        .collect::<Result<_>>()?;
    let seed = module_seed(config.master_seed, index);
    let train_config = TrainConfig {
        seed,
        ..config.train.clone()
    };
    let net = init_net(inputs[0].len(), classes, &train_config)?;
    let (net, trace) = train(net, &inputs, targets, &train_config)?;

    let activations: Vec<Vec<f64>> = inputs.iter().map(|x| net.forward(x)).collect::<Result<_>>()?;
    let regions = (0..classes)
        .map(|j| {
            let (mut act0, mut act1) = (Vec::new(), Vec::new());
            for (a, t) in activations.iter().zip(targets) {
                if t[j] > 0.0 {
                    act1.push(a[j]);
                } else {
                    act0.push(a[j]);
                }
            }
            calibrate_neuron(&act0, &act1, config.trim)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(TrainedModule {
        index,
        transform: config.transform,
        applications: index,
        seed,
        regions,
        trace: TraceSummary {
            epochs: trace.epochs(),
            initial_mse: trace.initial_mse,
            final_mse: trace.final_mse(),
        },
        net,
        standalone_accuracy: 0.0,
    })
}

/// Output table `[module][sample][class]` for the given modules.
pub fn module_output_table(
    modules: &[TrainedModule],
    quantization: &QuantizationSpec,
    features: &[Vec<f64>],
) -> Result<Vec<Vec<Vec<f64>>>> {
    let codes: Vec<BitVector> = features
        .iter()
        .map(|x| quantization.quantize(x))
        .collect::<Result<_>>()?;
    modules
        .par_iter()
        .map(|m| codes.iter().map(|b| m.refined_outputs(b)).collect())
        .collect()
}

/// Greedy selection over trained modules, scored on `eval`.
pub fn select_modules(
    modules: &[TrainedModule],
    quantization: &QuantizationSpec,
    eval: &Dataset,
    combiner: CombinerKind,
    config: &SelectionConfig,
) -> Result<SelectionReport> {
    let table = module_output_table(modules, quantization, eval.features())?;
    select_from_outputs(&table, eval.labels(), combiner, config)
}

fn build_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| PscnnError::InvalidConfig(format!("cannot start worker pool: {e}")))
}

/// Trains and calibrates all `config.module_count` candidate modules on
/// `fit`, in parallel, without selecting among them. Standalone accuracies
/// are left at zero.
pub fn train_candidates(fit: &Dataset, config: &EnsembleConfig) -> Result<(QuantizationSpec, Vec<TrainedModule>)> {
    config.validate()?;
    let quantization = QuantizationSpec::fit(fit.features(), config.bits_per_feature)?;
    let codes: Vec<BitVector> = fit
        .features()
        .iter()
        .map(|x| quantization.quantize(x))
        .collect::<Result<_>>()?;
    let targets = bipolar_targets(fit);
    let pool = build_pool(config.worker_count)?;
    let candidates = pool.install(|| {
        (0..config.module_count)
            .into_par_iter()
            .map(|i| train_module(i, config, &codes, &targets, fit.class_count()))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok((quantization, candidates))
}

/// Trains every candidate module in parallel, calibrates them, runs
/// self-organization and packages the selected modules. The result depends
/// only on `ds` and `config`, never on `worker_count`.
pub fn train_ensemble(ds: &Dataset, config: &EnsembleConfig) -> Result<(EnsembleModel, SelectionReport)> {
    config.validate()?;
    let (fit, held_out) = match config.selection_holdout {
        Some(h) => {
            let (a, b) = split(ds, 1.0 - h, config.master_seed)?;
            (a, Some(b))
        }
        None => (ds.clone(), None),
    };
    let eval = held_out.as_ref().unwrap_or(&fit);

    let (quantization, mut candidates) = train_candidates(&fit, config)?;
    let table = module_output_table(&candidates, &quantization, eval.features())?;
    for (i, m) in candidates.iter_mut().enumerate() {
        m.standalone_accuracy = evaluate_ensemble(&table, &[i], eval.labels(), config.combiner)?;
    }
    let report = select_from_outputs(&table, eval.labels(), config.combiner, &config.selection)?;

    let model = EnsembleModel {
        version: MODEL_FORMAT_VERSION,
        quantization,
        modules: report.selected.iter().map(|&i| candidates[i].clone()).collect(),
        combiner: config.combiner,
        classes: ds.class_count(),
        seeds: SeedRecord {
            master: config.master_seed,
            modules: candidates.iter().map(|m| m.seed).collect(),
        },
        selection: report.clone(),
        candidate_accuracies: candidates.iter().map(|m| m.standalone_accuracy).collect(),
        config: config.clone(),
    };
    Ok((model, report))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    pub abstain_rate: f64,
    /// Rows are true classes; columns are predicted classes followed by one
    /// abstain column.
    pub confusion: Vec<Vec<usize>>,
    /// Standalone accuracy of each selected module on this data, as
    /// `(module index, accuracy)`.
    pub module_accuracies: Vec<(usize, f64)>,
    pub samples: usize,
}

pub fn evaluate(model: &EnsembleModel, ds: &Dataset) -> Result<Metrics> {
    if ds.is_empty() {
        return Err(PscnnError::EmptyDataset);
    }
    if ds.dim() != model.input_dim() {
        return Err(PscnnError::DimensionMismatch {
            expected: model.input_dim(),
            actual: ds.dim(),
        });
    }
    if ds.class_count() > model.classes {
        return Err(PscnnError::DimensionMismatch {
            expected: model.classes,
            actual: ds.class_count(),
        });
    }

    let table = module_output_table(&model.modules, &model.quantization, ds.features())?;
    let mut confusion = vec![vec![0usize; model.classes + 1]; model.classes];
    let mut correct = 0usize;
    let mut abstained = 0usize;
    for (s, &label) in ds.labels().iter().enumerate() {
        let outputs: Vec<Vec<f64>> = table.iter().map(|m| m[s].clone()).collect();
        let decision = decide(&combine(model.combiner, &outputs)?, ABSTAIN_THRESHOLD)?;
        match decision.class {
            Some(c) => {
                confusion[label][c] += 1;
                if c == label {
                    correct += 1;
                }
            }
            None => {
                confusion[label][model.classes] += 1;
                abstained += 1;
            }
        }
    }
    let module_accuracies = model
        .modules
        .iter()
        .enumerate()
        .map(|(pos, m)| Ok((m.index, evaluate_ensemble(&table, &[pos], ds.labels(), model.combiner)?)))
        .collect::<Result<_>>()?;

    let n = ds.len() as f64;
    Ok(Metrics {
        accuracy: correct as f64 / n,
        abstain_rate: abstained as f64 / n,
        confusion,
        module_accuracies,
        samples: ds.len(),
    })
}
