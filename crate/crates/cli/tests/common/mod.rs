#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use emblouv_core::synthetic::{planted_dataset, PlantedConfig};
use emblouv_core::LabeledDataset;

pub fn small_planted() -> LabeledDataset {
    let cfg = PlantedConfig {
        classes: 4,
        nodes_per_class: 40,
        feature_dim: 60,
        ..PlantedConfig::default()
    };
    planted_dataset(&cfg, 11)
}

/// Writes `dataset` in the content/cites layout and returns both paths.
pub fn write_citation_files(dataset: &LabeledDataset, dir: &Path) -> (PathBuf, PathBuf) {
    let mut content = String::new();
    for v in 0..dataset.node_count() {
        content.push_str(&dataset.node_names[v]);
        for x in dataset.features.row(v) {
            write!(content, "\t{x}").unwrap();
        }
        writeln!(content, "\t{}", dataset.class_names[dataset.labels[v]]).unwrap();
    }
    let mut cites = String::new();
    for (u, v, w) in dataset.graph.edges() {
        for _ in 0..w as usize {
            writeln!(cites, "{}\t{}", dataset.node_names[u], dataset.node_names[v]).unwrap();
        }
    }
    let content_path = dir.join("toy.content");
    let cites_path = dir.join("toy.cites");
    std::fs::write(&content_path, content).unwrap();
    std::fs::write(&cites_path, cites).unwrap();
    (content_path, cites_path)
}

pub fn emblouv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_emblouv"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}
