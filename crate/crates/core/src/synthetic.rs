//! Seeded random fixtures: Erdős–Rényi graphs and planted-partition
//! citation-like datasets with class-correlated binary features.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::LabeledDataset;
use crate::graph::{Graph, GraphBuilder};
use crate::matrix::DenseMatrix;

/// G(n, p) with unit weights, or weights drawn from `1..=max_weight` when
/// `max_weight > 1`.
pub fn random_graph(n: usize, p: f64, max_weight: u32, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut builder = GraphBuilder::new(n);
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(p) {
                let w = if max_weight > 1 {
                    rng.random_range(1..=max_weight)
                } else {
                    1
                };
                builder.add_edge(u, v, f64::from(w)).expect("valid edge");
            }
        }
    }
    builder.build()
}

#[derive(Debug, Clone)]
pub struct PlantedConfig {
    pub classes: usize,
    pub nodes_per_class: usize,
    /// Expected intra-class neighbors per node.
    pub intra_degree: f64,
    /// Expected inter-class neighbors per node.
    pub inter_degree: f64,
    pub feature_dim: usize,
    /// Probability a class keyword is set for a node of that class.
    pub keyword_rate: f64,
    /// Probability any other feature is set.
    pub noise_rate: f64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        PlantedConfig {
            classes: 5,
            nodes_per_class: 60,
            intra_degree: 4.0,
            inter_degree: 1.0,
            feature_dim: 100,
            keyword_rate: 0.3,
            noise_rate: 0.02,
        }
    }
}

/// Each class owns a disjoint block of `feature_dim / classes` keyword
/// features. Edges follow a planted-partition model.
pub fn planted_dataset(config: &PlantedConfig, seed: u64) -> LabeledDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = config.classes * config.nodes_per_class;
    let labels: Vec<usize> = (0..n).map(|v| v / config.nodes_per_class).collect();
    let p_in = (config.intra_degree / (config.nodes_per_class.max(2) - 1) as f64).min(1.0);
    let others = n.saturating_sub(config.nodes_per_class).max(1);
    let p_out = (config.inter_degree / others as f64).min(1.0);
    let mut builder = GraphBuilder::new(n);
    for u in 0..n {
        for v in u + 1..n {
            let p = if labels[u] == labels[v] { p_in } else { p_out };
            if rng.random_bool(p) {
                builder.add_edge(u, v, 1.0).expect("valid edge");
            }
        }
    }
    let block = (config.feature_dim / config.classes.max(1)).max(1);
    let mut features = DenseMatrix::zeros(n, config.feature_dim);
    for (v, &label) in labels.iter().enumerate() {
        let own = label * block..(label + 1) * block;
        let row = features.row_mut(v);
        for (f, x) in row.iter_mut().enumerate() {
            let rate = if own.contains(&f) {
                config.keyword_rate
            } else {
                config.noise_rate
            };
            if rng.random_bool(rate) {
                *x = 1.0;
            }
        }
    }
    LabeledDataset::new(
        builder.build(),
        features,
        labels,
        (0..config.classes).map(|c| format!("class_{c}")).collect(),
        (0..n).map(|v| format!("n{v}")).collect(),
    )
    .expect("consistent fixture")
}
