//! Community detection that couples Louvain modularity optimization with
//! node-embedding geometry, followed by threshold-driven merging of
//! communities whose members sit close to each other's centroids.
//!
//! The stages are [`embeddings`] (feature propagation or imported vectors),
//! [`louvain`] (baseline and embedding-aware local moves), [`merging`] and
//! [`metrics`]. [`pipeline`] wires them together.

pub mod dataset;
pub mod embeddings;
pub mod error;
pub mod graph;
pub mod io;
pub mod louvain;
pub mod matrix;
pub mod merging;
pub mod metrics;
pub mod partition;
pub mod pipeline;
pub mod synthetic;

pub use dataset::{LabeledDataset, LoadStats};
pub use embeddings::{centroid, cosine_distance, propagate_features, Centroid, EmbeddingMatrix};
pub use error::{Error, Result};
pub use graph::{Graph, GraphBuilder};
pub use louvain::{
    combined_objective, modularity, run_louvain, LouvainConfig, LouvainOutcome, Objective,
};
pub use matrix::DenseMatrix;
pub use merging::{iterative_merge, merge_pass, MergeConfig, MergeTrace, StopReason};
pub use metrics::{hypothesis_check, inter_accuracy, intra_accuracy, EvalReport};
pub use partition::Partition;
