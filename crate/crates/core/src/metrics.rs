//! Majority-class accuracy of a partition against ground-truth labels, and
//! the same-class versus other-class centroid distance diagnostic.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dataset::LabeledDataset;
use crate::embeddings::{centroid, cosine_distance_unchecked, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::partition::Partition;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommunityAccuracy {
    pub community: usize,
    pub size: usize,
    pub majority_class: usize,
    pub intra_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    /// Unweighted mean of the intra-community accuracies.
    pub inter_accuracy: f64,
    /// Size-weighted mean (overall majority-vote purity). Not the headline
    /// metric; reported because the unweighted mean favours many tiny
    /// communities.
    pub size_weighted_accuracy: f64,
    pub community_count: usize,
    pub modularity: Option<f64>,
    pub per_community: Vec<CommunityAccuracy>,
}

impl EvalReport {
    pub fn with_modularity(mut self, modularity: f64) -> Self {
        self.modularity = Some(modularity);
        self
    }
}

/// Fraction of members carrying the community's most frequent label, and
/// that label. Ties go to the lowest class id.
pub fn intra_accuracy(members: &[usize], labels: &[usize]) -> Result<(f64, usize)> {
    if members.is_empty() {
        return Err(Error::validation("accuracy of an empty community"));
    }
    let mut counts = std::collections::BTreeMap::new();
    for &m in members {
        let label = *labels
            .get(m)
            .ok_or_else(|| Error::validation(format!("node {m} has no label")))?;
        *counts.entry(label).or_insert(0usize) += 1;
    }
    // BTreeMap iterates ascending, so only a strictly larger count replaces
    let (majority, count) = counts
        .into_iter()
        .fold((0, 0), |best, (label, count)| if count > best.1 { (label, count) } else { best });
    Ok((count as f64 / members.len() as f64, majority))
}

pub fn inter_accuracy(partition: &Partition, labels: &[usize]) -> Result<EvalReport> {
    partition.check_len(labels.len())?;
    let mut per_community = Vec::with_capacity(partition.community_count());
    let mut correct = 0.0;
    for (community, members) in partition.members().iter().enumerate() {
        let (accuracy, majority_class) = intra_accuracy(members, labels)?;
        correct += accuracy * members.len() as f64;
        per_community.push(CommunityAccuracy {
            community,
            size: members.len(),
            majority_class,
            intra_accuracy: accuracy,
        });
    }
    let k = per_community.len();
    let inter = if k == 0 {
        0.0
    } else {
        per_community.iter().map(|c| c.intra_accuracy).sum::<f64>() / k as f64
    };
    let weighted = if labels.is_empty() {
        0.0
    } else {
        correct / labels.len() as f64
    };
    Ok(EvalReport {
        inter_accuracy: inter,
        size_weighted_accuracy: weighted,
        community_count: k,
        modularity: None,
        per_community,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassDistances {
    pub class: usize,
    pub class_name: String,
    pub same_class_mean: f64,
    pub other_class_mean: f64,
}

/// For each class, forms a community from `nodes_per_class` seed-sampled
/// members, then averages the cosine distance to its centroid over up to
/// `samples` other nodes of the same class and `samples` nodes of other
/// classes. Same-class probes are drawn from outside the community unless the
/// class has no other members.
pub fn hypothesis_check(
    dataset: &LabeledDataset,
    embeddings: &EmbeddingMatrix,
    nodes_per_class: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<ClassDistances>> {
    if nodes_per_class == 0 || samples == 0 {
        return Err(Error::Config("nodes_per_class and samples must be positive".into()));
    }
    embeddings.check_rows(dataset.node_count())?;
    let members = dataset.class_members();
    for (class, m) in members.iter().enumerate() {
        if m.len() < nodes_per_class {
            return Err(Error::validation(format!(
                "class {:?} has {} nodes, fewer than {nodes_per_class}",
                dataset.class_names[class],
                m.len()
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = Vec::with_capacity(dataset.class_count);
    for (class, class_nodes) in members.iter().enumerate() {
        let picked = index::sample(&mut rng, class_nodes.len(), nodes_per_class).into_vec();
        let mut in_community = vec![false; class_nodes.len()];
        let community: Vec<usize> = picked
            .iter()
            .map(|&i| {
                in_community[i] = true;
                class_nodes[i]
            })
            .collect();
        let center = centroid(embeddings, &community)?;

        let mut same_pool: Vec<usize> = class_nodes
            .iter()
            .enumerate()
            .filter(|(i, _)| !in_community[*i])
            .map(|(_, &v)| v)
            .collect();
        if same_pool.is_empty() {
            same_pool = community.clone();
        }
        let other_pool: Vec<usize> = (0..dataset.node_count())
            .filter(|&v| dataset.labels[v] != class)
            .collect();
        let mean_distance = |pool: &[usize], rng: &mut ChaCha8Rng| -> f64 {
            if pool.is_empty() {
                return f64::NAN;
            }
            let take = samples.min(pool.len());
            let probes = index::sample(rng, pool.len(), take);
            probes
                .iter()
                .map(|i| cosine_distance_unchecked(embeddings.row(pool[i]), &center.vector))
                .sum::<f64>()
                / take as f64
        };
        let same_class_mean = mean_distance(&same_pool, &mut rng);
        let other_class_mean = mean_distance(&other_pool, &mut rng);
        table.push(ClassDistances {
            class,
            class_name: dataset.class_names[class].clone(),
            same_class_mean,
            other_class_mean,
        });
    }
    Ok(table)
}
