//! Multi-level Louvain with two local-move objectives: plain modularity gain,
//! and the combined score that adds a log-damped inverse embedding distance.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embeddings::{cosine_distance_unchecked, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::DenseMatrix;
use crate::partition::Partition;

const DETACHED: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    ModularityOnly,
    Combined,
}

impl std::str::FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "modularity" | "modularity_only" => Ok(Objective::ModularityOnly),
            "combined" => Ok(Objective::Combined),
            other => Err(Error::Config(format!("unknown objective {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LouvainConfig {
    pub objective: Objective,
    /// Base of both logarithms in the combined score.
    pub log_base_p: f64,
    /// Lower clamp on distances before inversion.
    pub distance_epsilon: f64,
    pub max_levels: usize,
    pub min_gain: f64,
    /// Cap on sweeps over all nodes within one level.
    pub max_passes: usize,
    pub seed: u64,
}

impl Default for LouvainConfig {
    fn default() -> Self {
        LouvainConfig {
            objective: Objective::ModularityOnly,
            log_base_p: std::f64::consts::E,
            distance_epsilon: 1e-9,
            max_levels: 20,
            min_gain: 1e-9,
            max_passes: 100,
            seed: 0,
        }
    }
}

impl LouvainConfig {
    pub fn combined() -> Self {
        LouvainConfig {
            objective: Objective::Combined,
            ..LouvainConfig::default()
        }
    }

    // Negated comparisons also reject NaN.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        if !(self.log_base_p > 1.0) || !self.log_base_p.is_finite() {
            return Err(Error::Config(format!(
                "log base must be a finite value > 1, got {}",
                self.log_base_p
            )));
        }
        if !(self.distance_epsilon > 0.0) {
            return Err(Error::Config("distance epsilon must be positive".into()));
        }
        if self.max_levels == 0 || self.max_passes == 0 {
            return Err(Error::Config("max_levels and max_passes must be positive".into()));
        }
        if !(self.min_gain >= 0.0) {
            return Err(Error::Config("min_gain must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelResult {
    /// Partition of that level's (collapsed) graph.
    pub partition: Partition,
    pub modularity: f64,
    pub levels_so_far: usize,
}

#[derive(Debug, Clone)]
pub struct LouvainOutcome {
    /// Partition of the original nodes.
    pub partition: Partition,
    pub modularity: f64,
    /// Centroid of each final community, when embeddings were supplied.
    pub community_embeddings: Option<EmbeddingMatrix>,
    pub levels: Vec<LevelResult>,
}

/// One accepted local move, reported to observers.
#[derive(Debug)]
pub struct MoveEvent<'a> {
    pub level: usize,
    pub graph: &'a Graph,
    /// Community labels of the level graph after the move.
    pub labels: &'a [usize],
    pub node: usize,
    pub from: usize,
    pub to: usize,
    pub delta_q: f64,
}

/// Newman modularity of `partition`.
///
/// Evaluated per community as `Σ_c in_c/2m - (tot_c/2m)²`. A graph with no
/// edge weight has modularity 0.
pub fn modularity(graph: &Graph, partition: &Partition) -> Result<f64> {
    partition.check_len(graph.node_count())?;
    if graph.total_weight_2m() == 0.0 {
        log::warn!("modularity of a graph with zero total weight is defined as 0");
    }
    Ok(modularity_of_labels(graph, partition.assignment()))
}

/// Modularity for arbitrary (possibly sparse) labels.
pub fn modularity_of_labels(graph: &Graph, labels: &[usize]) -> f64 {
    let two_m = graph.total_weight_2m();
    if two_m == 0.0 {
        return 0.0;
    }
    let slots = labels.iter().max().map_or(0, |&m| m + 1);
    let mut internal = vec![0.0; slots];
    let mut total = vec![0.0; slots];
    for u in 0..graph.node_count() {
        let c = labels[u];
        total[c] += graph.degree(u);
        internal[c] += 2.0 * graph.self_loop(u);
        for (v, w) in graph.neighbors(u) {
            if labels[v] == c {
                internal[c] += w;
            }
        }
    }
    internal
        .iter()
        .zip(&total)
        .map(|(&inside, &tot)| inside / two_m - (tot / two_m).powi(2))
        .sum()
}

/// Combined move score: `log_p(1 + |ΔQ|) + log_p(1 + 1/max(|D|, ε))`.
pub fn combined_objective(delta_q: f64, distance: f64, config: &LouvainConfig) -> f64 {
    let ln_p = config.log_base_p.ln();
    modularity_term(delta_q, ln_p) + distance_term(distance, config.distance_epsilon, ln_p)
}

fn modularity_term(delta_q: f64, ln_p: f64) -> f64 {
    delta_q.abs().ln_1p() / ln_p
}

fn distance_term(distance: f64, epsilon: f64, ln_p: f64) -> f64 {
    (1.0 / distance.abs().max(epsilon)).ln_1p() / ln_p
}

/// Running per-community degree totals for incremental gain evaluation.
#[derive(Debug, Clone)]
pub struct CommunityState {
    labels: Vec<usize>,
    sigma_tot: Vec<f64>,
}

impl CommunityState {
    /// `labels` may be any values below `max(labels) + 1`.
    pub fn new(graph: &Graph, labels: Vec<usize>) -> Self {
        let slots = labels.iter().max().map_or(0, |&m| m + 1).max(graph.node_count());
        let mut sigma_tot = vec![0.0; slots];
        for (u, &c) in labels.iter().enumerate() {
            sigma_tot[c] += graph.degree(u);
        }
        CommunityState { labels, sigma_tot }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn community_of(&self, node: usize) -> Option<usize> {
        let c = self.labels[node];
        (c != DETACHED).then_some(c)
    }

    pub fn total_degree(&self, community: usize) -> f64 {
        self.sigma_tot[community]
    }

    /// Detaches `node` into a community of its own; returns its former label.
    pub fn remove(&mut self, graph: &Graph, node: usize) -> usize {
        let c = self.labels[node];
        assert_ne!(c, DETACHED, "node {node} is already detached");
        self.sigma_tot[c] -= graph.degree(node);
        self.labels[node] = DETACHED;
        c
    }

    pub fn insert(&mut self, graph: &Graph, node: usize, community: usize) {
        assert_eq!(self.labels[node], DETACHED, "node {node} is not detached");
        self.sigma_tot[community] += graph.degree(node);
        self.labels[node] = community;
    }

    /// Change in modularity from inserting the detached `node` into
    /// `community`: `k_{i,in}/m - Σ_tot·k_i / (2m²)`.
    pub fn modularity_gain(&self, graph: &Graph, node: usize, community: usize) -> f64 {
        debug_assert_eq!(self.labels[node], DETACHED);
        let k_in: f64 = graph
            .neighbors(node)
            .filter(|&(v, _)| self.labels[v] == community)
            .map(|(_, w)| w)
            .sum();
        self.insertion_gain(graph, node, community, k_in)
    }

    fn insertion_gain(&self, graph: &Graph, node: usize, community: usize, k_in: f64) -> f64 {
        let two_m = graph.total_weight_2m();
        if two_m == 0.0 {
            return 0.0;
        }
        let m = two_m / 2.0;
        k_in / m - self.sigma_tot[community] * graph.degree(node) / (2.0 * m * m)
    }
}

/// Per-community sums of original-node embeddings, used for centroid
/// distances. Supernodes carry the sum and count of their original members,
/// so every centroid is the unweighted mean over original nodes.
struct EmbeddingSums {
    node_sum: DenseMatrix,
    node_members: Vec<usize>,
    comm_sum: DenseMatrix,
    comm_members: Vec<usize>,
}

impl EmbeddingSums {
    fn new(node_sum: DenseMatrix, node_members: Vec<usize>, labels: &[usize]) -> Self {
        let mut comm_sum = DenseMatrix::zeros(labels.len(), node_sum.cols());
        let mut comm_members = vec![0; labels.len()];
        for (u, &c) in labels.iter().enumerate() {
            add_into(comm_sum.row_mut(c), node_sum.row(u), 1.0);
            comm_members[c] += node_members[u];
        }
        EmbeddingSums {
            node_sum,
            node_members,
            comm_sum,
            comm_members,
        }
    }

    fn detach(&mut self, node: usize, community: usize) {
        let (node_sum, comm_sum) = (&self.node_sum, &mut self.comm_sum);
        add_into(comm_sum.row_mut(community), node_sum.row(node), -1.0);
        self.comm_members[community] -= self.node_members[node];
        if self.comm_members[community] == 0 {
            // drop accumulated rounding
            comm_sum.row_mut(community).iter_mut().for_each(|x| *x = 0.0);
        }
    }

    fn attach(&mut self, node: usize, community: usize) {
        let (node_sum, comm_sum) = (&self.node_sum, &mut self.comm_sum);
        add_into(comm_sum.row_mut(community), node_sum.row(node), 1.0);
        self.comm_members[community] += self.node_members[node];
    }

    fn distance(&self, node: usize, community: usize) -> f64 {
        cosine_distance_unchecked(self.node_sum.row(node), self.comm_sum.row(community))
    }

    fn collapse(&self, partition: &Partition) -> (DenseMatrix, Vec<usize>) {
        let mut sums = DenseMatrix::zeros(partition.community_count(), self.node_sum.cols());
        let mut members = vec![0; partition.community_count()];
        for u in 0..partition.node_count() {
            let c = partition.community_of(u);
            add_into(sums.row_mut(c), self.node_sum.row(u), 1.0);
            members[c] += self.node_members[u];
        }
        (sums, members)
    }
}

fn add_into(acc: &mut [f64], x: &[f64], scale: f64) {
    for (a, b) in acc.iter_mut().zip(x) {
        *a += scale * b;
    }
}

/// A candidate's score split into its two terms so that equal distance terms
/// compare on `|ΔQ|` exactly.
#[derive(Debug, Clone, Copy)]
struct Score {
    distance_term: f64,
    modularity_term: f64,
    abs_delta_q: f64,
}

impl Score {
    fn beats(&self, other: &Score) -> bool {
        if self.distance_term == other.distance_term {
            self.abs_delta_q > other.abs_delta_q
        } else {
            self.distance_term + self.modularity_term > other.distance_term + other.modularity_term
        }
    }
}

struct Mover<'a> {
    config: &'a LouvainConfig,
    ln_p: f64,
    neighbor_weight: Vec<f64>,
    listed: Vec<bool>,
    neighbor_communities: Vec<usize>,
}

impl<'a> Mover<'a> {
    fn new(config: &'a LouvainConfig, node_count: usize) -> Self {
        Mover {
            config,
            ln_p: config.log_base_p.ln(),
            neighbor_weight: vec![0.0; node_count],
            listed: vec![false; node_count],
            neighbor_communities: Vec::new(),
        }
    }

    fn score(&self, delta_q: f64, distance: f64) -> Score {
        Score {
            distance_term: distance_term(distance, self.config.distance_epsilon, self.ln_p),
            modularity_term: modularity_term(delta_q, self.ln_p),
            abs_delta_q: delta_q.abs(),
        }
    }

    /// Runs sweeps over the level graph until no node moves. Returns the
    /// number of accepted moves.
    fn local_moves(
        &mut self,
        level: usize,
        graph: &Graph,
        state: &mut CommunityState,
        mut sums: Option<&mut EmbeddingSums>,
        observer: &mut dyn FnMut(&MoveEvent<'_>),
    ) -> usize {
        let mut total_moves = 0;
        let epsilon = self.config.distance_epsilon;
        for _ in 0..self.config.max_passes {
            let mut moves = 0;
            for node in 0..graph.node_count() {
                let own = state.labels[node];
                self.neighbor_communities.clear();
                for (v, w) in graph.neighbors(node) {
                    let c = state.labels[v];
                    if !self.listed[c] {
                        self.listed[c] = true;
                        self.neighbor_communities.push(c);
                    }
                    self.neighbor_weight[c] += w;
                }
                let k_own = self.neighbor_weight[own];
                state.remove(graph, node);
                let own_gain = state.insertion_gain(graph, node, own, k_own);
                if let Some(s) = sums.as_deref_mut() {
                    s.detach(node, own);
                }
                self.neighbor_communities.sort_unstable();

                // Stay distance is to the rest of the node's community; a node
                // alone in its community has none.
                let stay = sums.as_deref().and_then(|s| {
                    (s.comm_members[own] > 0).then(|| {
                        let d = s.distance(node, own).max(epsilon);
                        (d, self.score(0.0, d))
                    })
                });

                let mut best: Option<(usize, f64, Score)> = None;
                for &c in &self.neighbor_communities {
                    if c == own {
                        continue;
                    }
                    let delta_q =
                        state.insertion_gain(graph, node, c, self.neighbor_weight[c]) - own_gain;
                    let gains = delta_q > self.config.min_gain;
                    let candidate = match sums.as_deref() {
                        None => {
                            gains.then(|| (delta_q, self.score(delta_q, 0.0)))
                        }
                        Some(s) => {
                            let d = s.distance(node, c).max(epsilon);
                            let score = self.score(delta_q, d);
                            let admissible = match &stay {
                                None => gains,
                                Some((stay_d, stay_score)) => {
                                    (gains || d + epsilon < *stay_d) && score.beats(stay_score)
                                }
                            };
                            admissible.then_some((delta_q, score))
                        }
                    };
                    let Some((delta_q, score)) = candidate else { continue };
                    // candidates are visited in ascending id, so strict
                    // improvement keeps the lowest id on ties
                    let better = match &best {
                        None => true,
                        Some((_, best_dq, best_score)) => {
                            if sums.is_some() {
                                score.beats(best_score)
                            } else {
                                delta_q > *best_dq
                            }
                        }
                    };
                    if better {
                        best = Some((c, delta_q, score));
                    }
                }
                for &c in &self.neighbor_communities {
                    self.neighbor_weight[c] = 0.0;
                    self.listed[c] = false;
                }
                self.neighbor_weight[own] = 0.0;

                let (target, delta_q) = best.map_or((own, 0.0), |(c, dq, _)| (c, dq));
                state.insert(graph, node, target);
                if let Some(s) = sums.as_deref_mut() {
                    s.attach(node, target);
                }
                if target != own {
                    moves += 1;
                    observer(&MoveEvent {
                        level,
                        graph,
                        labels: &state.labels,
                        node,
                        from: own,
                        to: target,
                        delta_q,
                    });
                }
            }
            total_moves += moves;
            if moves == 0 {
                break;
            }
        }
        total_moves
    }
}

pub fn run_louvain(
    graph: &Graph,
    embeddings: Option<&EmbeddingMatrix>,
    config: &LouvainConfig,
) -> Result<LouvainOutcome> {
    run_louvain_observed(graph, embeddings, config, &mut |_| {})
}

/// [`run_louvain`] with a callback invoked after every accepted move.
pub fn run_louvain_observed(
    graph: &Graph,
    embeddings: Option<&EmbeddingMatrix>,
    config: &LouvainConfig,
    observer: &mut dyn FnMut(&MoveEvent<'_>),
) -> Result<LouvainOutcome> {
    config.validate()?;
    if let Some(e) = embeddings {
        e.check_rows(graph.node_count())?;
    }
    if config.objective == Objective::Combined && embeddings.is_none() {
        return Err(Error::Config("combined objective requires node embeddings".into()));
    }
    let use_embeddings = config.objective == Objective::Combined;

    let n = graph.node_count();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut flat = Partition::singletons(n);
    let mut levels = Vec::new();
    let mut level_graph = graph.clone();
    let mut node_sums = embeddings
        .filter(|_| use_embeddings)
        .map(|e| (e.matrix().clone(), vec![1usize; n]));

    for level in 0..config.max_levels {
        let size = level_graph.node_count();
        let mut labels: Vec<usize> = (0..size).collect();
        labels.shuffle(&mut rng);
        let mut state = CommunityState::new(&level_graph, labels);
        let mut sums = node_sums
            .take()
            .map(|(sum, members)| EmbeddingSums::new(sum, members, state.labels()));
        let moves = Mover::new(config, size).local_moves(
            level,
            &level_graph,
            &mut state,
            sums.as_mut(),
            observer,
        );
        let level_partition = Partition::from_labels(state.labels());
        if moves == 0 || level_partition.community_count() == size {
            break;
        }
        flat = flat.compose(&level_partition);
        levels.push(LevelResult {
            modularity: modularity_of_labels(&level_graph, level_partition.assignment()),
            partition: level_partition.clone(),
            levels_so_far: level + 1,
        });
        node_sums = sums.map(|s| s.collapse(&level_partition));
        level_graph = level_graph.collapse(&level_partition)?;
    }

    let community_embeddings = embeddings
        .map(|e| community_centroids(e, &flat))
        .transpose()?;
    Ok(LouvainOutcome {
        modularity: modularity_of_labels(graph, flat.assignment()),
        partition: flat,
        community_embeddings,
        levels,
    })
}

/// Row `c` is the mean embedding of community `c`.
pub fn community_centroids(embeddings: &EmbeddingMatrix, partition: &Partition) -> Result<EmbeddingMatrix> {
    embeddings.check_rows(partition.node_count())?;
    let mut sums = DenseMatrix::zeros(partition.community_count(), embeddings.dim());
    let sizes = partition.sizes();
    for u in 0..partition.node_count() {
        add_into(sums.row_mut(partition.community_of(u)), embeddings.row(u), 1.0);
    }
    for (c, &size) in sizes.iter().enumerate() {
        let size = size as f64;
        sums.row_mut(c).iter_mut().for_each(|x| *x /= size);
    }
    EmbeddingMatrix::new(sums)
}
