//! Iterative community merging under a decaying cosine-distance threshold.
//!
//! Each pass scores every community pair by the mean distance from one
//! community's nodes to the other's centroid (taking the smaller of the two
//! directions), then unions all pairs under the threshold in ascending
//! distance order. A pass with no merges lowers the threshold by `alpha`,
//! and the loop stops once it falls below `t_min` or `it_max` passes ran.

use serde::{Deserialize, Serialize};

use crate::embeddings::{cosine_distance_unchecked, dot, norm, Centroid, EmbeddingMatrix, ZERO_NORM};
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::partition::Partition;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeConfig {
    pub t_initial: f64,
    pub alpha: f64,
    pub t_min: f64,
    pub it_max: usize,
    pub target_communities: Option<usize>,
    pub outer_max: usize,
}

impl Default for MergeConfig {
    fn default() -> Self {
        MergeConfig {
            t_initial: 0.5,
            alpha: 0.05,
            t_min: 0.05,
            it_max: 100,
            target_communities: None,
            outer_max: 10,
        }
    }
}

impl MergeConfig {
    // Negated comparisons also reject NaN.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        if !(self.t_initial > 0.0 && self.t_initial <= 2.0) {
            return Err(Error::Config(format!(
                "t_initial must lie in (0, 2], got {}",
                self.t_initial
            )));
        }
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::Config("alpha must be positive".into()));
        }
        if !(self.t_min >= 0.0 && self.t_min <= self.t_initial) {
            return Err(Error::Config(format!(
                "t_min must lie in [0, t_initial], got {}",
                self.t_min
            )));
        }
        if self.it_max == 0 || self.outer_max == 0 {
            return Err(Error::Config("it_max and outer_max must be positive".into()));
        }
        if self.target_communities == Some(0) {
            return Err(Error::Config("target community count must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    ThresholdFloor,
    IterationCap,
    TargetReached,
    Converged,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MergeIteration {
    pub round: usize,
    pub threshold: f64,
    pub merges: usize,
    pub community_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MergeTrace {
    pub iterations: Vec<MergeIteration>,
    pub stop_reason: StopReason,
}

impl MergeTrace {
    pub fn passes(&self) -> usize {
        self.iterations.len()
    }
}

/// Mean cosine distance from the rows of `members_i` to `centroid_j`.
pub fn community_pair_distance(
    embeddings: &EmbeddingMatrix,
    members_i: &[usize],
    centroid_j: &Centroid,
) -> Result<f64> {
    if members_i.is_empty() {
        return Err(Error::validation("distance from an empty community"));
    }
    if centroid_j.vector.len() != embeddings.dim() {
        return Err(Error::validation("centroid dimension differs from embeddings"));
    }
    let total: f64 = members_i
        .iter()
        .map(|&v| cosine_distance_unchecked(embeddings.row(v), &centroid_j.vector))
        .sum();
    Ok(total / members_i.len() as f64)
}

/// Per-community aggregates that give every directed community distance
/// with one dot product: `D(i→j) = 1 - S_i·ĉ_j / |C_i|`, where `S_i` sums the
/// unit-normalized member rows (zero rows contribute distance 1) and `ĉ_j` is
/// the unit centroid direction.
struct CommunityGeometry {
    unit_sums: DenseMatrix,
    centroid_dirs: DenseMatrix,
    has_direction: Vec<bool>,
    sizes: Vec<usize>,
}

impl CommunityGeometry {
    fn new(embeddings: &EmbeddingMatrix, partition: &Partition) -> Self {
        let k = partition.community_count();
        let dim = embeddings.dim();
        let mut unit_sums = DenseMatrix::zeros(k, dim);
        let mut centroid_dirs = DenseMatrix::zeros(k, dim);
        for v in 0..partition.node_count() {
            let c = partition.community_of(v);
            let row = embeddings.row(v);
            let row_norm = norm(row);
            let unit = unit_sums.row_mut(c);
            if row_norm >= ZERO_NORM {
                unit.iter_mut().zip(row).for_each(|(a, x)| *a += x / row_norm);
            }
            centroid_dirs.row_mut(c).iter_mut().zip(row).for_each(|(a, x)| *a += x);
        }
        let sizes = partition.sizes();
        let mut has_direction = vec![false; k];
        for c in 0..k {
            let row = centroid_dirs.row_mut(c);
            let size = sizes[c] as f64;
            row.iter_mut().for_each(|x| *x /= size);
            let n = norm(row);
            if n >= ZERO_NORM {
                row.iter_mut().for_each(|x| *x /= n);
                has_direction[c] = true;
            }
        }
        CommunityGeometry {
            unit_sums,
            centroid_dirs,
            has_direction,
            sizes,
        }
    }

    fn directed(&self, i: usize, j: usize) -> f64 {
        if !self.has_direction[j] {
            return 1.0;
        }
        let similarity = dot(self.unit_sums.row(i), self.centroid_dirs.row(j));
        (1.0 - similarity / self.sizes[i] as f64).clamp(0.0, 2.0)
    }

    fn symmetric(&self, i: usize, j: usize) -> f64 {
        self.directed(i, j).min(self.directed(j, i))
    }
}

/// Symmetric distance for every community pair `i < j`.
pub fn pair_distances(embeddings: &EmbeddingMatrix, partition: &Partition) -> Result<Vec<(usize, usize, f64)>> {
    embeddings.check_rows(partition.node_count())?;
    let geometry = CommunityGeometry::new(embeddings, partition);
    let k = partition.community_count();
    let mut out = Vec::with_capacity(k * k.saturating_sub(1) / 2);
    for i in 0..k {
        for j in i + 1..k {
            out.push((i, j, geometry.symmetric(i, j)));
        }
    }
    Ok(out)
}

struct DisjointSets {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

/// One merge pass. Pairs strictly below `threshold` are unioned in ascending
/// distance order; returns the renumbered partition and the number of
/// successful unions.
pub fn merge_pass(
    partition: &Partition,
    embeddings: &EmbeddingMatrix,
    threshold: f64,
) -> Result<(Partition, usize)> {
    if threshold.is_nan() {
        return Err(Error::Config("merge threshold is NaN".into()));
    }
    let mut candidates: Vec<(usize, usize, f64)> = pair_distances(embeddings, partition)?
        .into_iter()
        .filter(|&(_, _, d)| d < threshold)
        .collect();
    candidates.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    let mut sets = DisjointSets::new(partition.community_count());
    let merges = candidates
        .iter()
        .filter(|&&(i, j, _)| sets.union(i, j))
        .count();
    if merges == 0 {
        return Ok((partition.clone(), 0));
    }
    let labels: Vec<usize> = partition
        .assignment()
        .iter()
        .map(|&c| sets.find(c))
        .collect();
    Ok((Partition::from_labels(&labels), merges))
}

/// Replaces every node's row with the centroid of its community.
pub fn update_embeddings(embeddings: &EmbeddingMatrix, partition: &Partition) -> Result<EmbeddingMatrix> {
    let centroids = crate::louvain::community_centroids(embeddings, partition)?;
    let mut rows = DenseMatrix::zeros(partition.node_count(), embeddings.dim());
    for v in 0..partition.node_count() {
        rows.row_mut(v)
            .copy_from_slice(centroids.row(partition.community_of(v)));
    }
    EmbeddingMatrix::new(rows)
}

pub fn iterative_merge(
    partition: &Partition,
    embeddings: &EmbeddingMatrix,
    config: &MergeConfig,
) -> Result<(Partition, MergeTrace)> {
    config.validate()?;
    embeddings.check_rows(partition.node_count())?;
    let mut trace = MergeTrace {
        iterations: Vec::new(),
        stop_reason: StopReason::Converged,
    };
    if let Some(target) = config.target_communities {
        if target > partition.community_count() {
            log::warn!(
                "target of {target} communities exceeds the {} already present; nothing to merge",
                partition.community_count()
            );
            return Ok((partition.clone(), trace));
        }
        if partition.community_count() <= target {
            trace.stop_reason = StopReason::TargetReached;
            return Ok((partition.clone(), trace));
        }
    }

    let reached = |p: &Partition| config.target_communities.is_some_and(|t| p.community_count() <= t);
    let rounds = if config.target_communities.is_some() {
        config.outer_max
    } else {
        1
    };
    let mut current = partition.clone();
    let mut working = embeddings.clone();
    'rounds: for round in 0..rounds {
        let mut threshold = config.t_initial;
        let mut round_merges = 0;
        trace.stop_reason = StopReason::IterationCap;
        for _ in 0..config.it_max {
            let (next, merges) = merge_pass(&current, &working, threshold)?;
            current = next;
            round_merges += merges;
            trace.iterations.push(MergeIteration {
                round,
                threshold,
                merges,
                community_count: current.community_count(),
            });
            if reached(&current) {
                trace.stop_reason = StopReason::TargetReached;
                break 'rounds;
            }
            if merges == 0 {
                threshold -= config.alpha;
                if threshold < config.t_min {
                    trace.stop_reason = StopReason::ThresholdFloor;
                    break;
                }
            }
        }
        if config.target_communities.is_none() {
            break;
        }
        if round_merges == 0 {
            trace.stop_reason = StopReason::Converged;
            break;
        }
        working = update_embeddings(&working, &current)?;
    }
    Ok((current, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::centroid;

    fn at_angle(degrees: f64) -> [f64; 2] {
        let r = degrees.to_radians();
        [r.cos(), r.sin()]
    }

    #[test]
    fn pair_distance_examples() {
        let e = EmbeddingMatrix::from_rows(&[[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let c = centroid(&e, &[0]).unwrap();
        assert!(community_pair_distance(&e, &[0, 1], &c).unwrap().abs() < 1e-12);
        assert!((community_pair_distance(&e, &[2], &c).unwrap() - 1.0).abs() < 1e-12);
        assert!((community_pair_distance(&e, &[1, 2], &c).unwrap() - 0.5).abs() < 1e-12);
        assert!(community_pair_distance(&e, &[], &c).is_err());
    }

    #[test]
    fn aggregated_distances_match_direct_definition() {
        let e = EmbeddingMatrix::from_rows(&[
            [1.0, 0.2, 0.0],
            [0.5, 0.5, 0.1],
            [0.0, 0.0, 0.0],
            [-0.3, 1.0, 2.0],
            [0.1, 0.1, 0.9],
            [2.0, -1.0, 0.3],
        ])
        .unwrap();
        let p = Partition::from_labels(&[0, 0, 1, 1, 2, 2]);
        let members = p.members();
        for (i, j, d) in pair_distances(&e, &p).unwrap() {
            let ci = centroid(&e, &members[i]).unwrap();
            let cj = centroid(&e, &members[j]).unwrap();
            let direct = community_pair_distance(&e, &members[i], &cj)
                .unwrap()
                .min(community_pair_distance(&e, &members[j], &ci).unwrap());
            assert!((d - direct).abs() < 1e-12, "{i}-{j}: {d} vs {direct}");
        }
    }

    #[test]
    fn identical_centroids_merge() {
        let e = EmbeddingMatrix::from_rows(&[[1.0, 1.0], [2.0, 2.0]]).unwrap();
        let (p, merges) = merge_pass(&Partition::singletons(2), &e, 0.5).unwrap();
        assert_eq!(merges, 1);
        assert_eq!(p.community_count(), 1);
    }

    #[test]
    fn distant_communities_stay() {
        let e = EmbeddingMatrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]]).unwrap();
        let start = Partition::singletons(3);
        let (p, merges) = merge_pass(&start, &e, 0.5).unwrap();
        assert_eq!(merges, 0);
        assert_eq!(p, start);
    }

    #[test]
    fn closest_pair_merges_third_survives() {
        // d(0,1) = 1 - cos θ = 0.1, the third direction sits far from both.
        let theta = (0.9f64).acos().to_degrees();
        let e = EmbeddingMatrix::from_rows(&[at_angle(0.0), at_angle(theta), at_angle(theta + 180.0 - 25.0)])
            .unwrap();
        let d = pair_distances(&e, &Partition::singletons(3)).unwrap();
        assert!((d[0].2 - 0.1).abs() < 1e-12);
        assert!(d[1].2 > 0.85 && d[2].2 > 0.85);
        let (p, merges) = merge_pass(&Partition::singletons(3), &e, 0.2).unwrap();
        assert_eq!(merges, 1);
        assert_eq!(p.assignment(), &[0, 0, 1]);
    }

    #[test]
    fn config_validation() {
        assert!(MergeConfig::default().validate().is_ok());
        for bad in [
            MergeConfig { t_initial: 0.0, ..MergeConfig::default() },
            MergeConfig { t_initial: 2.5, ..MergeConfig::default() },
            MergeConfig { alpha: 0.0, ..MergeConfig::default() },
            MergeConfig { t_min: 0.9, ..MergeConfig::default() },
            MergeConfig { it_max: 0, ..MergeConfig::default() },
            MergeConfig { target_communities: Some(0), ..MergeConfig::default() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn already_at_target_is_returned_unchanged() {
        let e = EmbeddingMatrix::from_rows(&[[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let p = Partition::singletons(3);
        let cfg = MergeConfig {
            target_communities: Some(3),
            ..MergeConfig::default()
        };
        let (out, trace) = iterative_merge(&p, &e, &cfg).unwrap();
        assert_eq!(out, p);
        assert_eq!(trace.stop_reason, StopReason::TargetReached);
        assert!(trace.iterations.is_empty());
    }

    #[test]
    fn target_above_count_is_a_no_op() {
        let e = EmbeddingMatrix::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        let p = Partition::singletons(2);
        let cfg = MergeConfig {
            target_communities: Some(5),
            ..MergeConfig::default()
        };
        let (out, trace) = iterative_merge(&p, &e, &cfg).unwrap();
        assert_eq!(out, p);
        assert_eq!(trace.stop_reason, StopReason::Converged);
    }

    #[test]
    fn floor_exit_without_merges() {
        let e = EmbeddingMatrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]]).unwrap();
        let cfg = MergeConfig {
            t_initial: 0.3,
            t_min: 0.3,
            alpha: 0.05,
            ..MergeConfig::default()
        };
        let (out, trace) = iterative_merge(&Partition::singletons(3), &e, &cfg).unwrap();
        assert_eq!(out.community_count(), 3);
        assert_eq!(trace.stop_reason, StopReason::ThresholdFloor);
        assert_eq!(trace.passes(), 1);
        assert_eq!(trace.iterations[0].merges, 0);
    }

    #[test]
    fn iteration_cap_is_respected() {
        // a chain where each pass can merge only the closest pair: the
        // threshold lets pairs merge only after centroids move
        let e = EmbeddingMatrix::from_rows(&[at_angle(0.0), at_angle(1.0), at_angle(90.0)]).unwrap();
        let cfg = MergeConfig {
            t_initial: 0.01,
            t_min: 0.0,
            alpha: 0.001,
            it_max: 3,
            ..MergeConfig::default()
        };
        let (_, trace) = iterative_merge(&Partition::singletons(3), &e, &cfg).unwrap();
        assert_eq!(trace.passes(), 3);
        assert_eq!(trace.stop_reason, StopReason::IterationCap);
    }

    #[test]
    fn update_embeddings_assigns_centroids() {
        let e = EmbeddingMatrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [4.0, 4.0]]).unwrap();
        let p = Partition::from_labels(&[0, 0, 1]);
        let u = update_embeddings(&e, &p).unwrap();
        assert_eq!(u.row(0), &[0.5, 0.5]);
        assert_eq!(u.row(1), &[0.5, 0.5]);
        assert_eq!(u.row(2), &[4.0, 4.0]);
    }
}
