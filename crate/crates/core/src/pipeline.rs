//! End-to-end pipeline: embeddings → Louvain → optional merging → metrics.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::embeddings::{propagate_features, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::io;
use crate::louvain::{modularity_of_labels, run_louvain, LouvainConfig, LouvainOutcome, Objective};
use crate::merging::{iterative_merge, MergeConfig, MergeTrace};
use crate::metrics::{inter_accuracy, EvalReport};
use crate::partition::Partition;

pub const DEFAULT_HOPS: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EmbeddingSource {
    Propagate { hops: usize },
    File { path: String },
}

impl Default for EmbeddingSource {
    fn default() -> Self {
        EmbeddingSource::Propagate { hops: DEFAULT_HOPS }
    }
}

/// Builds the embedding matrix for `graph` and L2-normalizes its rows.
/// Propagation needs the dataset's feature matrix.
pub fn embed(
    source: &EmbeddingSource,
    graph: &Graph,
    dataset: Option<&LabeledDataset>,
) -> Result<EmbeddingMatrix> {
    let raw = match source {
        EmbeddingSource::Propagate { hops } => {
            let dataset = dataset.ok_or_else(|| {
                Error::Config("feature propagation needs a dataset with node features".into())
            })?;
            propagate_features(dataset, *hops)?
        }
        EmbeddingSource::File { path } => io::load_embeddings(path, graph.node_count())?,
    };
    Ok(raw.l2_normalized())
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Timings {
    pub embeddings_ms: f64,
    pub louvain_ms: f64,
    pub merging_ms: f64,
    pub metrics_ms: f64,
}

fn millis(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

#[derive(Debug, Clone)]
pub struct Detection {
    pub louvain: LouvainOutcome,
    /// Merged partition and its trace, when merging ran.
    pub merged: Option<(Partition, MergeTrace)>,
    /// Merged partition if merging ran, otherwise the Louvain partition.
    pub partition: Partition,
    /// Modularity of `partition` on the input graph.
    pub modularity: f64,
    pub report: Option<EvalReport>,
    pub timings: Timings,
}

/// Runs Louvain and, when `merge` is given, iterative merging. Embeddings are
/// required for the combined objective and for merging.
pub fn detect(
    graph: &Graph,
    embeddings: Option<&EmbeddingMatrix>,
    labels: Option<&[usize]>,
    louvain: &LouvainConfig,
    merge: Option<&MergeConfig>,
) -> Result<Detection> {
    let mut timings = Timings::default();
    let started = Instant::now();
    let outcome = run_louvain(graph, embeddings, louvain)?;
    timings.louvain_ms = millis(started.elapsed());

    let merged = match merge {
        Some(cfg) => {
            let e = embeddings
                .ok_or_else(|| Error::Config("community merging needs node embeddings".into()))?;
            let started = Instant::now();
            let merged = iterative_merge(&outcome.partition, e, cfg)?;
            timings.merging_ms = millis(started.elapsed());
            Some(merged)
        }
        None => None,
    };
    let partition = merged
        .as_ref()
        .map_or_else(|| outcome.partition.clone(), |(p, _)| p.clone());

    let started = Instant::now();
    let modularity = modularity_of_labels(graph, partition.assignment());
    let report = labels
        .map(|l| inter_accuracy(&partition, l).map(|r| r.with_modularity(modularity)))
        .transpose()?;
    timings.metrics_ms = millis(started.elapsed());

    Ok(Detection {
        louvain: outcome,
        merged,
        partition,
        modularity,
        report,
        timings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub threshold: f64,
    pub community_count: usize,
    pub inter_accuracy: f64,
}

/// Runs merging from the same starting partition once per threshold,
/// overriding `t_initial`. `t_min` is capped at each threshold so low
/// thresholds stay valid.
pub fn sweep_thresholds(
    start: &Partition,
    embeddings: &EmbeddingMatrix,
    labels: &[usize],
    base: &MergeConfig,
    thresholds: &[f64],
) -> Result<Vec<SweepRow>> {
    if thresholds.is_empty() {
        return Err(Error::Config("threshold sweep needs at least one threshold".into()));
    }
    thresholds
        .iter()
        .map(|&t| sweep_one(start, embeddings, labels, base, t))
        .collect()
}

pub fn sweep_one(
    start: &Partition,
    embeddings: &EmbeddingMatrix,
    labels: &[usize],
    base: &MergeConfig,
    threshold: f64,
) -> Result<SweepRow> {
    let cfg = sweep_config(base, threshold);
    let (partition, _) = iterative_merge(start, embeddings, &cfg)?;
    let report = inter_accuracy(&partition, labels)?;
    Ok(SweepRow {
        threshold,
        community_count: report.community_count,
        inter_accuracy: report.inter_accuracy,
    })
}

pub fn sweep_config(base: &MergeConfig, threshold: f64) -> MergeConfig {
    MergeConfig {
        t_initial: threshold,
        t_min: base.t_min.min(threshold),
        ..base.clone()
    }
}

/// Convenience for callers holding a labeled dataset.
pub fn detect_dataset(
    dataset: &LabeledDataset,
    source: &EmbeddingSource,
    louvain: &LouvainConfig,
    merge: Option<&MergeConfig>,
) -> Result<(EmbeddingMatrix, Detection)> {
    let started = Instant::now();
    let embeddings = embed(source, &dataset.graph, Some(dataset))?;
    let embed_ms = millis(started.elapsed());
    let mut detection = detect(
        &dataset.graph,
        Some(&embeddings),
        Some(&dataset.labels),
        louvain,
        merge,
    )?;
    detection.timings.embeddings_ms = embed_ms;
    Ok((embeddings, detection))
}

/// Whether the configured run consumes embeddings at all.
pub fn needs_embeddings(louvain: &LouvainConfig, merge: Option<&MergeConfig>) -> bool {
    louvain.objective == Objective::Combined || merge.is_some()
}
