//! Shared fixtures for the criterion benchmarks.

use emblouv_core::synthetic::{planted_dataset, PlantedConfig};
use emblouv_core::LabeledDataset;

/// A Cora-sized planted-partition dataset (7 classes, ~2.7k nodes).
pub fn cora_scale() -> LabeledDataset {
    planted_dataset(
        &PlantedConfig {
            classes: 7,
            nodes_per_class: 387,
            intra_degree: 3.2,
            inter_degree: 0.7,
            feature_dim: 700,
            keyword_rate: 0.08,
            noise_rate: 0.01,
        },
        2708,
    )
}
