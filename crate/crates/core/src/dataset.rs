use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::DenseMatrix;

/// Graph plus node features and ground-truth classes.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub graph: Graph,
    pub features: DenseMatrix,
    pub labels: Vec<usize>,
    pub class_count: usize,
    pub node_names: Vec<String>,
    pub class_names: Vec<String>,
    pub stats: LoadStats,
}

/// Bookkeeping from parsing a `.cites` file.
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct LoadStats {
    /// Citation lines read, including ones later dropped.
    pub citation_records: usize,
    /// Citations naming a paper absent from the content file.
    pub dropped_citations: usize,
    pub self_citations: usize,
    /// Distinct undirected edges after symmetrization, self-loops included.
    pub unique_edges: usize,
}

impl LabeledDataset {
    pub fn new(
        graph: Graph,
        features: DenseMatrix,
        labels: Vec<usize>,
        class_names: Vec<String>,
        node_names: Vec<String>,
    ) -> Result<Self> {
        let n = graph.node_count();
        if features.rows() != n || labels.len() != n || node_names.len() != n {
            return Err(Error::validation(format!(
                "dataset sizes disagree: {n} nodes, {} feature rows, {} labels, {} names",
                features.rows(),
                labels.len(),
                node_names.len()
            )));
        }
        let class_count = class_names.len();
        if let Some(bad) = labels.iter().find(|&&l| l >= class_count) {
            return Err(Error::validation(format!(
                "label {bad} out of range for {class_count} classes"
            )));
        }
        let stats = LoadStats {
            unique_edges: graph.edge_count(),
            ..LoadStats::default()
        };
        Ok(LabeledDataset {
            graph,
            features,
            labels,
            class_count,
            node_names,
            class_names,
            stats,
        })
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    /// Nodes of each class, ascending.
    pub fn class_members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.class_count];
        for (node, &label) in self.labels.iter().enumerate() {
            members[label].push(node);
        }
        members
    }
}
