//! Flag parsing, the key=value config file and resolution into [`RunConfig`].

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use emblouv_core::pipeline::{EmbeddingSource, DEFAULT_HOPS};
use emblouv_core::{LouvainConfig, MergeConfig, Objective};

/// Raised for invalid invocations; mapped to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage<T>(message: impl Into<String>) -> anyhow::Result<T> {
    Err(UsageError(message.into()).into())
}

#[derive(Parser, Debug)]
#[command(name = "emblouv", version, about = "Embedding-aware Louvain community detection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run Louvain (and optionally merging) and write the result document.
    Detect(RunArgs),
    /// Merge from one Louvain partition at each threshold and tabulate the outcome.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated initial thresholds, e.g. 0.05,0.5,0.9.
        #[arg(long)]
        thresholds: Option<String>,
    },
    /// Distances of class members to centroids of sampled same-class communities.
    Hypothesis {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        nodes_per_class: Option<usize>,
        /// Probe nodes per class and side.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Evaluate a partition file against the dataset labels.
    Eval {
        #[command(flatten)]
        run: RunArgs,
        /// CSV with header node_name,community_id.
        #[arg(long)]
        partition: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Default, Clone)]
pub struct RunArgs {
    /// Flat key=value file; keys are flag names. Flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Node table: id, feature columns, class label.
    #[arg(long)]
    pub content: Option<PathBuf>,
    /// Citation pairs matching --content.
    #[arg(long)]
    pub cites: Option<PathBuf>,
    /// Whitespace edge list, an alternative to --content/--cites.
    #[arg(long)]
    pub edges: Option<PathBuf>,
    /// Read a third edge-list column as the weight.
    #[arg(long)]
    pub weighted: bool,
    /// Feature propagation depth.
    #[arg(long)]
    pub hops: Option<usize>,
    /// CSV embedding rows in node order, replacing propagation.
    #[arg(long)]
    pub embeddings_file: Option<PathBuf>,
    /// modularity | combined
    #[arg(long)]
    pub objective: Option<Objective>,
    #[arg(long)]
    pub log_base: Option<f64>,
    #[arg(long)]
    pub distance_epsilon: Option<f64>,
    #[arg(long)]
    pub max_levels: Option<usize>,
    #[arg(long)]
    pub min_gain: Option<f64>,
    #[arg(long)]
    pub max_passes: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Run iterative community merging after Louvain.
    #[arg(long)]
    pub merge: bool,
    #[arg(long)]
    pub t_initial: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub t_min: Option<f64>,
    #[arg(long)]
    pub it_max: Option<usize>,
    /// Stop merging once at most this many communities remain.
    #[arg(long)]
    pub target: Option<usize>,
    #[arg(long)]
    pub outer_max: Option<usize>,
    /// Result file; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Also write the final partition as node_name,community_id CSV.
    #[arg(long)]
    pub partition_out: Option<PathBuf>,
    /// Leave wall-clock timings out of the result document.
    #[arg(long)]
    pub no_timings: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <Format as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Input {
    Citation { content: PathBuf, cites: PathBuf },
    EdgeList { edges: PathBuf, weighted: bool },
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub input: Input,
    pub embeddings: EmbeddingSource,
    pub louvain: LouvainConfig,
    pub merge: Option<MergeConfig>,
    pub seed: u64,
    pub format: Format,
    pub output: Option<PathBuf>,
    pub partition_out: Option<PathBuf>,
    pub timings: bool,
}

const KEYS: &[&str] = &[
    "content", "cites", "edges", "weighted", "hops", "embeddings-file", "objective", "log-base",
    "distance-epsilon", "max-levels", "min-gain", "max-passes", "seed", "merge", "t-initial",
    "alpha", "t-min", "it-max", "target", "outer-max", "output", "format", "partition-out",
    "no-timings", "thresholds", "nodes-per-class", "samples", "partition",
];

/// Values from a config file, keyed by flag name with dashes.
#[derive(Debug, Default)]
pub struct ConfigFile {
    origin: PathBuf,
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, origin: &Path) -> anyhow::Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return usage(format!("{}:{}: expected key=value", origin.display(), i + 1));
            };
            let key = key.trim().replace('_', "-");
            if !KEYS.contains(&key.as_str()) {
                return usage(format!("{}:{}: unknown key {key:?}", origin.display(), i + 1));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(ConfigFile {
            origin: origin.to_path_buf(),
            values,
        })
    }

    /// The flag value if given, otherwise the parsed config-file value.
    pub fn pick<T>(&self, flag: Option<T>, key: &str) -> anyhow::Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => match raw.parse() {
                Ok(v) => Ok(Some(v)),
                Err(e) => usage(format!("{}: bad value for {key}: {e}", self.origin.display())),
            },
        }
    }

    fn switch(&self, flag: bool, key: &str) -> anyhow::Result<bool> {
        Ok(flag || self.pick::<bool>(None, key)?.unwrap_or(false))
    }
}

pub fn config_file(args: &RunArgs) -> anyhow::Result<ConfigFile> {
    match &args.config {
        Some(path) => ConfigFile::load(path),
        None => Ok(ConfigFile::default()),
    }
}

fn existing(path: PathBuf) -> anyhow::Result<PathBuf> {
    if !path.exists() {
        bail!("input file {} does not exist", path.display());
    }
    Ok(path)
}

impl RunConfig {
    pub fn resolve(args: &RunArgs, file: &ConfigFile, default_format: Format) -> anyhow::Result<Self> {
        let content = file.pick(args.content.clone(), "content")?;
        let cites = file.pick(args.cites.clone(), "cites")?;
        let edges = file.pick(args.edges.clone(), "edges")?;
        let input = match (content, cites, edges) {
            (Some(content), Some(cites), None) => Input::Citation {
                content: existing(content)?,
                cites: existing(cites)?,
            },
            (None, None, Some(edges)) => Input::EdgeList {
                edges: existing(edges)?,
                weighted: file.switch(args.weighted, "weighted")?,
            },
            (None, None, None) => return usage("give either --content and --cites, or --edges"),
            _ => return usage("--content/--cites and --edges are mutually exclusive, and --content needs --cites"),
        };

        let hops = file.pick(args.hops, "hops")?;
        let embeddings = match file.pick(args.embeddings_file.clone(), "embeddings-file")? {
            Some(path) => {
                if hops.is_some() {
                    return usage("--hops and --embeddings-file are mutually exclusive");
                }
                EmbeddingSource::File {
                    path: existing(path)?.to_string_lossy().into_owned(),
                }
            }
            None => EmbeddingSource::Propagate {
                hops: hops.unwrap_or(DEFAULT_HOPS),
            },
        };
        if hops == Some(0) {
            return usage("--hops must be at least 1");
        }

        let seed = file.pick(args.seed, "seed")?.unwrap_or(0);
        let d = LouvainConfig::default();
        let louvain = LouvainConfig {
            objective: file.pick(args.objective, "objective")?.unwrap_or(d.objective),
            log_base_p: file.pick(args.log_base, "log-base")?.unwrap_or(d.log_base_p),
            distance_epsilon: file
                .pick(args.distance_epsilon, "distance-epsilon")?
                .unwrap_or(d.distance_epsilon),
            max_levels: file.pick(args.max_levels, "max-levels")?.unwrap_or(d.max_levels),
            min_gain: file.pick(args.min_gain, "min-gain")?.unwrap_or(d.min_gain),
            max_passes: file.pick(args.max_passes, "max-passes")?.unwrap_or(d.max_passes),
            seed,
        };
        louvain.validate().map_err(|e| UsageError(e.to_string()))?;

        let m = MergeConfig::default();
        let merge_cfg = MergeConfig {
            t_initial: file.pick(args.t_initial, "t-initial")?.unwrap_or(m.t_initial),
            alpha: file.pick(args.alpha, "alpha")?.unwrap_or(m.alpha),
            t_min: file.pick(args.t_min, "t-min")?.unwrap_or(m.t_min),
            it_max: file.pick(args.it_max, "it-max")?.unwrap_or(m.it_max),
            target_communities: file.pick(args.target, "target")?,
            outer_max: file.pick(args.outer_max, "outer-max")?.unwrap_or(m.outer_max),
        };
        let merge = if file.switch(args.merge, "merge")? {
            merge_cfg.validate().map_err(|e| UsageError(e.to_string()))?;
            Some(merge_cfg)
        } else {
            None
        };

        Ok(RunConfig {
            input,
            embeddings,
            louvain,
            merge,
            seed,
            format: file.pick(args.format, "format")?.unwrap_or(default_format),
            output: file.pick(args.output.clone(), "output")?,
            partition_out: file.pick(args.partition_out.clone(), "partition-out")?,
            timings: !file.switch(args.no_timings, "no-timings")?,
        })
    }

    /// Merge parameters for sweeps, which always merge.
    pub fn sweep_base(args: &RunArgs, file: &ConfigFile) -> anyhow::Result<MergeConfig> {
        let m = MergeConfig::default();
        Ok(MergeConfig {
            t_initial: m.t_initial,
            alpha: file.pick(args.alpha, "alpha")?.unwrap_or(m.alpha),
            t_min: file.pick(args.t_min, "t-min")?.unwrap_or(m.t_min),
            it_max: file.pick(args.it_max, "it-max")?.unwrap_or(m.it_max),
            target_communities: file.pick(args.target, "target")?,
            outer_max: file.pick(args.outer_max, "outer-max")?.unwrap_or(m.outer_max),
        })
    }
}

/// Parses a comma-separated threshold list; empty lists are usage errors.
pub fn parse_thresholds(raw: Option<&str>) -> anyhow::Result<Vec<f64>> {
    let Some(raw) = raw else {
        return usage("sweep needs --thresholds");
    };
    let mut out = Vec::new();
    for part in raw.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.parse::<f64>() {
            Ok(t) if t.is_finite() && t >= 0.0 => out.push(t),
            _ => return usage(format!("invalid threshold {part:?}")),
        }
    }
    if out.is_empty() {
        return usage("threshold list is empty");
    }
    Ok(out)
}
