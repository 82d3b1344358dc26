//! Parallel, self-organizing, consensual neural networks (PSCNN).
//!
//! A PSCNN is an ensemble of single-stage, fully connected networks. Module `k`
//! sees the binary-coded input after a bijective nonlinear transform has been
//! applied `k` times, and is trained on its own with the delta rule. After
//! training every output neuron is calibrated into five decision regions, a
//! greedy self-organization step keeps the modules that help, and a logic unit
//! combines the surviving modules by averaging or majority vote.
//!
//! - [`transforms`]: bit vectors, Gray code and friends, quantization
//! - [`module_net`]: the single-stage network and delta-rule training
//! - [`calibration`]: five-region output boundaries and refined outputs
//! - [`consensus`]: mean and majority combiners, final decision
//! - [`selforg`]: greedy module selection
//! - [`data`]: CSV datasets and generators
//! - [`engine`]: parallel training, prediction, evaluation, persistence
//!
//! ```
//! use pscnn::{evaluate, train_ensemble, xor_dataset, EnsembleConfig, Schedule};
//!
//! let data = xor_dataset();
//! let mut config = EnsembleConfig { module_count: 2, master_seed: 1, ..EnsembleConfig::default() };
//! config.train.schedule = Schedule::Constant;
//! config.train.step_size = 0.5;
//!
//! let (model, _report) = train_ensemble(&data, &config)?;
//! assert_eq!(evaluate(&model, &data)?.accuracy, 1.0);
//! assert_eq!(model.predict(&[0.0, 1.0])?.class, Some(1));
//! # Ok::<(), pscnn::PscnnError>(())
//! ```

pub mod calibration;
pub mod consensus;
pub mod data;
pub mod engine;
pub mod error;
pub mod module_net;
pub mod selforg;
pub mod transforms;

mod persist;

pub use calibration::{calibrate_neuron, classify_region, refined_output, NeuronRegions, RegionLabel};
pub use consensus::{combine, combine_majority, combine_mean, decide, CombinerKind, Decision};
pub use data::{
    bipolar_targets, gaussian_clusters, load_csv, parse_csv, split, write_csv, write_csv_to, xor_dataset, CsvOptions,
    Dataset, LabelColumn,
};
pub use engine::{
    evaluate, module_seed, predict, train_ensemble, EnsembleConfig, EnsembleModel, Metrics,
    TrainedModule, MODEL_FORMAT_VERSION,
};
pub use error::{PscnnError, Result};
pub use module_net::{accuracy, delta_step, forward, init_net, train, Schedule, SingleStageNet, TrainConfig, TrainTrace};
pub use persist::{load_model, model_from_str, model_to_string, save_model};
pub use selforg::{evaluate_ensemble, select_modules, SelectionConfig, SelectionReport, StopReason};
pub use transforms::{
    apply_pipeline, gray_decode, gray_encode, ones_complement, perfect_shuffle, perfect_unshuffle,
    quantize, to_bipolar, twos_complement, BitVector, FeatureRange, QuantizationSpec, TransformKind,
};
