use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use rayon::prelude::*;
use serde::Serialize;

use emblouv_core::io::{self, write_partition};
use emblouv_core::metrics::ClassDistances;
use emblouv_core::pipeline::{self, embed, sweep_one, SweepRow, Timings};
use emblouv_core::{
    hypothesis_check, inter_accuracy, modularity, EmbeddingMatrix, EvalReport, Graph, LabeledDataset,
    MergeTrace, Partition,
};

use crate::config::{Format, Input, RunConfig};

/// Loaded input: the graph with node names, plus labels and features when the
/// input is a citation dataset.
pub struct Loaded {
    pub graph: Graph,
    pub names: Vec<String>,
    pub dataset: Option<LabeledDataset>,
}

impl Loaded {
    pub fn load(input: &Input) -> anyhow::Result<Self> {
        match input {
            Input::Citation { content, cites } => {
                let dataset = io::load_citation_dataset(content, cites)?;
                let s = &dataset.stats;
                log::info!(
                    "loaded {} nodes, {} features, {} classes, {} unique edges from {} citation records ({} dropped)",
                    dataset.node_count(),
                    dataset.feature_dim(),
                    dataset.class_count,
                    s.unique_edges,
                    s.citation_records,
                    s.dropped_citations
                );
                Ok(Loaded {
                    graph: dataset.graph.clone(),
                    names: dataset.node_names.clone(),
                    dataset: Some(dataset),
                })
            }
            Input::EdgeList { edges, weighted } => {
                let named = io::load_edge_list(edges, *weighted)?;
                Ok(Loaded {
                    graph: named.graph,
                    names: named.names,
                    dataset: None,
                })
            }
        }
    }

    fn labeled(&self, command: &str) -> anyhow::Result<&LabeledDataset> {
        match &self.dataset {
            Some(d) => Ok(d),
            None => bail!("{command} needs a labeled dataset (--content and --cites)"),
        }
    }

    fn embeddings(&self, cfg: &RunConfig) -> anyhow::Result<EmbeddingMatrix> {
        Ok(embed(&cfg.embeddings, &self.graph, self.dataset.as_ref())?)
    }
}

/// Bytes destined for files or standard output, written only once the whole
/// command has succeeded.
#[derive(Default)]
pub struct Outputs {
    writes: Vec<(Option<PathBuf>, Vec<u8>)>,
}

impl Outputs {
    fn push(&mut self, path: Option<&Path>, bytes: Vec<u8>) {
        self.writes.push((path.map(Path::to_path_buf), bytes));
    }

    pub fn flush(self) -> anyhow::Result<()> {
        use std::io::Write;
        for (path, bytes) in self.writes {
            match path {
                Some(p) => std::fs::write(&p, &bytes).with_context(|| format!("cannot write {}", p.display()))?,
                None => std::io::stdout().lock().write_all(&bytes)?,
            }
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct NodeCommunity<'a> {
    node: &'a str,
    community: usize,
}

#[derive(Serialize)]
struct LouvainSummary {
    community_count: usize,
    modularity: f64,
    levels: usize,
}

#[derive(Serialize)]
struct Metrics<'a> {
    community_count: usize,
    modularity: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    louvain: Option<LouvainSummary>,
    inter_accuracy: Option<f64>,
    size_weighted_accuracy: Option<f64>,
    per_community: Vec<CommunityRow<'a>>,
}

#[derive(Serialize)]
struct CommunityRow<'a> {
    community: usize,
    size: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    majority_class: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    intra_accuracy: Option<f64>,
}

#[derive(Serialize)]
struct ResultDocument<'a> {
    config: &'a RunConfig,
    partition: Vec<NodeCommunity<'a>>,
    metrics: Metrics<'a>,
    trace: Option<&'a MergeTrace>,
    #[serde(skip_serializing_if = "Option::is_none")]
    timings: Option<&'a Timings>,
}

fn community_rows<'a>(
    partition: &Partition,
    report: Option<&EvalReport>,
    class_names: &'a [String],
) -> Vec<CommunityRow<'a>> {
    match report {
        Some(r) => r
            .per_community
            .iter()
            .map(|c| CommunityRow {
                community: c.community,
                size: c.size,
                majority_class: Some(class_names[c.majority_class].as_str()),
                intra_accuracy: Some(c.intra_accuracy),
            })
            .collect(),
        None => partition
            .sizes()
            .into_iter()
            .enumerate()
            .map(|(community, size)| CommunityRow {
                community,
                size,
                majority_class: None,
                intra_accuracy: None,
            })
            .collect(),
    }
}

fn json_bytes<T: Serialize>(value: &T) -> anyhow::Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn community_csv(rows: &[CommunityRow<'_>]) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let labeled = rows.first().is_some_and(|r| r.intra_accuracy.is_some());
    if labeled {
        w.write_record(["community", "size", "majority_class", "intra_accuracy"])?;
    } else {
        w.write_record(["community", "size"])?;
    }
    for r in rows {
        let mut record = vec![r.community.to_string(), r.size.to_string()];
        if let (Some(class), Some(acc)) = (r.majority_class, r.intra_accuracy) {
            record.push(class.to_string());
            record.push(acc.to_string());
        }
        w.write_record(&record)?;
    }
    Ok(w.into_inner()?)
}

struct Finished<'a> {
    partition: &'a Partition,
    modularity: f64,
    louvain: Option<LouvainSummary>,
    report: Option<&'a EvalReport>,
    trace: Option<&'a MergeTrace>,
    timings: &'a Timings,
}

fn render(cfg: &RunConfig, loaded: &Loaded, done: Finished<'_>) -> anyhow::Result<Outputs> {
    let class_names: &[String] = loaded.dataset.as_ref().map_or(&[], |d| &d.class_names);
    let rows = community_rows(done.partition, done.report, class_names);
    let mut out = Outputs::default();
    let body = match cfg.format {
        Format::Csv => community_csv(&rows)?,
        Format::Json => json_bytes(&ResultDocument {
            config: cfg,
            partition: loaded
                .names
                .iter()
                .zip(done.partition.assignment())
                .map(|(n, &c)| NodeCommunity { node: n, community: c })
                .collect(),
            metrics: Metrics {
                community_count: done.partition.community_count(),
                modularity: done.modularity,
                louvain: done.louvain,
                inter_accuracy: done.report.map(|r| r.inter_accuracy),
                size_weighted_accuracy: done.report.map(|r| r.size_weighted_accuracy),
                per_community: rows,
            },
            trace: done.trace,
            timings: cfg.timings.then_some(done.timings),
        })?,
    };
    out.push(cfg.output.as_deref(), body);
    if let Some(path) = &cfg.partition_out {
        let mut bytes = Vec::new();
        write_partition(done.partition, &loaded.names, &mut bytes)?;
        out.push(Some(path), bytes);
    }
    Ok(out)
}

fn elapsed_ms(started: Instant) -> f64 {
    started.elapsed().as_secs_f64() * 1e3
}

pub fn detect(cfg: &RunConfig) -> anyhow::Result<Outputs> {
    let loaded = Loaded::load(&cfg.input)?;
    let started = Instant::now();
    let embeddings = if pipeline::needs_embeddings(&cfg.louvain, cfg.merge.as_ref()) {
        Some(loaded.embeddings(cfg)?)
    } else {
        None
    };
    let embed_ms = elapsed_ms(started);
    let labels = loaded.dataset.as_ref().map(|d| d.labels.as_slice());
    let mut detection = pipeline::detect(&loaded.graph, embeddings.as_ref(), labels, &cfg.louvain, cfg.merge.as_ref())?;
    detection.timings.embeddings_ms = embed_ms;
    let louvain = LouvainSummary {
        community_count: detection.louvain.partition.community_count(),
        modularity: detection.louvain.modularity,
        levels: detection.louvain.levels.len(),
    };
    render(
        cfg,
        &loaded,
        Finished {
            partition: &detection.partition,
            modularity: detection.modularity,
            louvain: Some(louvain),
            report: detection.report.as_ref(),
            trace: detection.merged.as_ref().map(|(_, t)| t),
            timings: &detection.timings,
        },
    )
}

pub fn eval(cfg: &RunConfig, partition_path: &Path) -> anyhow::Result<Outputs> {
    let loaded = Loaded::load(&cfg.input)?;
    let dataset = loaded.labeled("eval")?;
    let started = Instant::now();
    let partition = io::load_partition(partition_path, &loaded.names)?;
    let q = modularity(&loaded.graph, &partition)?;
    let report = inter_accuracy(&partition, &dataset.labels)?.with_modularity(q);
    let timings = Timings {
        metrics_ms: elapsed_ms(started),
        ..Timings::default()
    };
    render(
        cfg,
        &loaded,
        Finished {
            partition: &partition,
            modularity: q,
            louvain: None,
            report: Some(&report),
            trace: None,
            timings: &timings,
        },
    )
}

#[derive(Serialize)]
struct SweepDocument<'a> {
    config: &'a RunConfig,
    merge: &'a emblouv_core::MergeConfig,
    louvain: LouvainSummary,
    rows: &'a [SweepRow],
    #[serde(skip_serializing_if = "Option::is_none")]
    timings: Option<&'a Timings>,
}

/// Louvain once, then merging per threshold in parallel from that partition.
pub fn sweep(cfg: &RunConfig, base: &emblouv_core::MergeConfig, thresholds: &[f64]) -> anyhow::Result<Outputs> {
    let loaded = Loaded::load(&cfg.input)?;
    let dataset = loaded.labeled("sweep")?;
    let mut timings = Timings::default();
    let started = Instant::now();
    let embeddings = loaded.embeddings(cfg)?;
    timings.embeddings_ms = elapsed_ms(started);
    let detection = pipeline::detect(&loaded.graph, Some(&embeddings), None, &cfg.louvain, None)?;
    timings.louvain_ms = detection.timings.louvain_ms;
    let started = Instant::now();
    let rows = thresholds
        .par_iter()
        .map(|&t| sweep_one(&detection.partition, &embeddings, &dataset.labels, base, t))
        .collect::<Result<Vec<_>, _>>()?;
    timings.merging_ms = elapsed_ms(started);

    let body = match cfg.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["threshold", "community_count", "inter_accuracy"])?;
            for r in &rows {
                w.write_record([r.threshold.to_string(), r.community_count.to_string(), r.inter_accuracy.to_string()])?;
            }
            w.into_inner()?
        }
        Format::Json => json_bytes(&SweepDocument {
            config: cfg,
            merge: base,
            louvain: LouvainSummary {
                community_count: detection.partition.community_count(),
                modularity: detection.modularity,
                levels: detection.louvain.levels.len(),
            },
            rows: &rows,
            timings: cfg.timings.then_some(&timings),
        })?,
    };
    let mut out = Outputs::default();
    out.push(cfg.output.as_deref(), body);
    Ok(out)
}

#[derive(Serialize)]
struct HypothesisRow<'a> {
    class_id: usize,
    class_name: &'a str,
    kind: &'static str,
    mean_distance: f64,
}

#[derive(Serialize)]
struct HypothesisDocument<'a> {
    config: &'a RunConfig,
    nodes_per_class: usize,
    samples: usize,
    rows: Vec<HypothesisRow<'a>>,
}

fn hypothesis_rows(table: &[ClassDistances]) -> Vec<HypothesisRow<'_>> {
    table
        .iter()
        .flat_map(|c| {
            [("same_class", c.same_class_mean), ("other_class", c.other_class_mean)].map(|(kind, mean)| {
                HypothesisRow {
                    class_id: c.class,
                    class_name: &c.class_name,
                    kind,
                    mean_distance: mean,
                }
            })
        })
        .collect()
}

pub fn hypothesis(cfg: &RunConfig, nodes_per_class: usize, samples: usize) -> anyhow::Result<Outputs> {
    let loaded = Loaded::load(&cfg.input)?;
    let dataset = loaded.labeled("hypothesis")?;
    let embeddings = loaded.embeddings(cfg)?;
    let table = hypothesis_check(dataset, &embeddings, nodes_per_class, samples, cfg.seed)?;
    let rows = hypothesis_rows(&table);
    let body = match cfg.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in &rows {
                w.serialize(r)?;
            }
            w.into_inner()?
        }
        Format::Json => json_bytes(&HypothesisDocument {
            config: cfg,
            nodes_per_class,
            samples,
            rows,
        })?,
    };
    let mut out = Outputs::default();
    out.push(cfg.output.as_deref(), body);
    Ok(out)
}
