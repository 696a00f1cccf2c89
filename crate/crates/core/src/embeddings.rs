//! Node embeddings: generation by normalized feature propagation, cosine
//! geometry and community centroids.

use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::DenseMatrix;

/// Norms below this are treated as zero vectors.
pub const ZERO_NORM: f64 = 1e-12;

/// One embedding row per node. Every entry is finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingMatrix(DenseMatrix);

impl EmbeddingMatrix {
    pub fn new(matrix: DenseMatrix) -> Result<Self> {
        if !matrix.is_finite() {
            return Err(Error::validation("embedding matrix contains non-finite values"));
        }
        Ok(EmbeddingMatrix(matrix))
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        EmbeddingMatrix::new(DenseMatrix::from_rows(rows)?)
    }

    pub fn rows(&self) -> usize {
        self.0.rows()
    }

    pub fn dim(&self) -> usize {
        self.0.cols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.0.row(i)
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> DenseMatrix {
        self.0
    }

    /// Scales every row to unit L2 norm; near-zero rows are left untouched.
    pub fn l2_normalized(mut self) -> Self {
        for i in 0..self.0.rows() {
            let row = self.0.row_mut(i);
            let norm = norm(row);
            if norm >= ZERO_NORM {
                row.iter_mut().for_each(|x| *x /= norm);
            }
        }
        self
    }

    pub(crate) fn check_rows(&self, expected: usize) -> Result<()> {
        if self.rows() != expected {
            return Err(Error::validation(format!(
                "embedding matrix has {} rows, expected {expected}",
                self.rows()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Centroid {
    pub vector: Vec<f64>,
    pub member_count: usize,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `1 - cos(a, b)`, in `[0, 2]`. A vector with norm below [`ZERO_NORM`] is at
/// distance 1 from everything.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::validation(format!(
            "cannot compare vectors of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(cosine_distance_unchecked(a, b))
}

pub(crate) fn cosine_distance_unchecked(a: &[f64], b: &[f64]) -> f64 {
    let na = norm(a);
    let nb = norm(b);
    if na < ZERO_NORM || nb < ZERO_NORM {
        return 1.0;
    }
    (1.0 - dot(a, b) / (na * nb)).clamp(0.0, 2.0)
}

pub fn centroid(embeddings: &EmbeddingMatrix, members: &[usize]) -> Result<Centroid> {
    if members.is_empty() {
        return Err(Error::validation("centroid of an empty member list"));
    }
    let mut vector = vec![0.0; embeddings.dim()];
    for &m in members {
        if m >= embeddings.rows() {
            return Err(Error::validation(format!(
                "member {m} outside embedding rows 0..{}",
                embeddings.rows()
            )));
        }
        for (acc, x) in vector.iter_mut().zip(embeddings.row(m)) {
            *acc += x;
        }
    }
    let count = members.len() as f64;
    vector.iter_mut().for_each(|x| *x /= count);
    Ok(Centroid {
        vector,
        member_count: members.len(),
    })
}

/// Computes `Â^hops · X` with `Â = D̃^{-1/2} (A + I) D̃^{-1/2}`.
///
/// `A` holds edge weights, and an existing self-loop of weight `w` sits on
/// the diagonal as `w` before the identity is added. `D̃` is the row sum of
/// `A + I`, so it is at least 1 for every node. The result is not normalized.
pub fn propagate_features(dataset: &LabeledDataset, hops: usize) -> Result<EmbeddingMatrix> {
    propagate(&dataset.graph, &dataset.features, hops)
}

pub fn propagate(graph: &Graph, features: &DenseMatrix, hops: usize) -> Result<EmbeddingMatrix> {
    if hops == 0 {
        return Err(Error::Config("propagation needs at least one hop".into()));
    }
    if features.rows() != graph.node_count() {
        return Err(Error::validation(format!(
            "feature matrix has {} rows but graph has {} nodes",
            features.rows(),
            graph.node_count()
        )));
    }
    if features.cols() == 0 {
        return Err(Error::validation("feature matrix has no columns"));
    }
    if !features.is_finite() {
        return Err(Error::validation("feature matrix contains non-finite values"));
    }
    let n = graph.node_count();
    let inv_sqrt_deg: Vec<f64> = (0..n)
        .map(|u| {
            let d = graph.neighbors(u).map(|(_, w)| w).sum::<f64>() + graph.self_loop(u) + 1.0;
            1.0 / d.sqrt()
        })
        .collect();
    let mut current = features.clone();
    for _ in 0..hops {
        let mut next = DenseMatrix::zeros(n, features.cols());
        for u in 0..n {
            let diag = (graph.self_loop(u) + 1.0) * inv_sqrt_deg[u] * inv_sqrt_deg[u];
            let out = next.row_mut(u);
            axpy(out, diag, current.row(u));
            for (v, w) in graph.neighbors(u) {
                axpy(out, w * inv_sqrt_deg[u] * inv_sqrt_deg[v], current.row(v));
            }
        }
        current = next;
    }
    EmbeddingMatrix::new(current)
}

fn axpy(out: &mut [f64], scale: f64, x: &[f64]) {
    for (o, xi) in out.iter_mut().zip(x) {
        *o += scale * xi;
    }
}
