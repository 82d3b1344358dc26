//! Fixed workloads shared by the benchmarks.

use pscnn::{gaussian_clusters, Dataset, EnsembleConfig, TransformKind};

/// Four classes of 64 features, 200 samples each.
pub fn clusters() -> Dataset {
    gaussian_clusters(4, 64, 200, 1.0, 2024).expect("valid generator parameters")
}

pub fn ensemble_config(modules: usize, epochs: usize, workers: usize) -> EnsembleConfig {
    let mut config = EnsembleConfig {
        module_count: modules,
        transform: TransformKind::GrayCode,
        bits_per_feature: 1,
        master_seed: 11,
        worker_count: workers,
        ..EnsembleConfig::default()
    };
    config.train.epochs = epochs;
    config
}
