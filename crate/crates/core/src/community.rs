//! Popular places across users: a similarity graph over POI fingerprints
//! partitioned with Louvain modularity optimisation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Fingerprint;
use crate::scalar::Scalar;
use crate::similarity::cosine_similarity;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CommunityError {
    #[error("pairwise count needs at least 2 nodes, got {0}")]
    DomainError(u64),
    #[error("edge ({0}, {1}) is a self loop or out of range")]
    BadEdge(usize, usize),
    #[error("edge ({0}, {1}) has a non-positive or non-finite weight")]
    BadWeight(usize, usize),
}

/// Number of unordered node pairs, `h (h - 1) / 2`.
pub fn pairwise_count(h: u64) -> Result<u64, CommunityError> {
    if h < 2 {
        return Err(CommunityError::DomainError(h));
    }
    // one of h, h - 1 is even, divide it first to stay in range
    Ok(if h % 2 == 0 { (h / 2) * (h - 1) } else { h * ((h - 1) / 2) })
}

/// Undirected weighted graph without self loops. Parallel edges are summed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedGraph<S: Scalar> {
    node_count: usize,
    /// `(i, j, w)` with `i < j`, sorted.
    edges: Vec<(usize, usize, S)>,
}

impl<S: Scalar> WeightedGraph<S> {
    pub fn new(node_count: usize, edges: impl IntoIterator<Item = (usize, usize, S)>) -> Result<Self, CommunityError> {
        let mut merged: BTreeMap<(usize, usize), S> = BTreeMap::new();
        for (a, b, w) in edges {
            if a == b || a >= node_count || b >= node_count {
                return Err(CommunityError::BadEdge(a, b));
            }
            if !(w.is_finite() && w > S::zero()) {
                return Err(CommunityError::BadWeight(a, b));
            }
            *merged.entry((a.min(b), a.max(b))).or_insert_with(S::zero) += w;
        }
        Ok(Self { node_count, edges: merged.into_iter().map(|((a, b), w)| (a, b, w)).collect() })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[(usize, usize, S)] {
        &self.edges
    }
}

/// One POI taking part in the cross-user comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoiNode<S: Scalar> {
    pub user_id: String,
    pub poi_id: u32,
    pub fingerprint: Fingerprint<S>,
}

/// POIs with an edge for every pair whose similarity reaches the
/// partition threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityGraph<S: Scalar> {
    pub nodes: Vec<PoiNode<S>>,
    pub graph: WeightedGraph<S>,
    /// Pairwise similarities evaluated while building.
    pub pairs_evaluated: u64,
}

/// Compares every pair of POIs and keeps edges with weight `>= threshold`.
pub fn build_graph<S: Scalar>(pois: Vec<PoiNode<S>>, threshold: S) -> SimilarityGraph<S> {
    let mut edges = Vec::new();
    let mut pairs_evaluated = 0;
    for i in 0..pois.len() {
        for j in (i + 1)..pois.len() {
            pairs_evaluated += 1;
            let Ok(score) = cosine_similarity(&pois[i].fingerprint, &pois[j].fingerprint) else {
                continue;
            };
            if score.value() >= threshold {
                edges.push((i, j, score.value()));
            }
        }
    }
    let graph = WeightedGraph::new(pois.len(), edges).expect("pairs are distinct and in range");
    SimilarityGraph { nodes: pois, graph, pairs_evaluated }
}

/// Community label per node plus the partition's modularity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition<S: Scalar> {
    /// Community per node, numbered by first appearance in node order.
    pub communities: Vec<usize>,
    pub modularity: S,
    /// Modularity after each improving pass, starting from singletons.
    pub history: Vec<S>,
}

impl<S: Scalar> Partition<S> {
    pub fn community_count(&self) -> usize {
        self.communities.iter().max().map_or(0, |m| m + 1)
    }
}

/// Adjacency form used while optimising. `self_loop[i]` is the `A_ii`
/// entry, which for an aggregated node is twice its internal weight.
#[derive(Debug, Clone)]
struct Level<S: Scalar> {
    adjacency: Vec<Vec<(usize, S)>>,
    self_loop: Vec<S>,
    degree: Vec<S>,
    total: S,
}

impl<S: Scalar> Level<S> {
    fn from_graph(graph: &WeightedGraph<S>) -> Self {
        let n = graph.node_count;
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b, w) in &graph.edges {
            adjacency[a].push((b, w));
            adjacency[b].push((a, w));
        }
        Self::assemble(adjacency, vec![S::zero(); n])
    }

    fn assemble(adjacency: Vec<Vec<(usize, S)>>, self_loop: Vec<S>) -> Self {
        let degree: Vec<S> = adjacency
            .iter()
            .zip(&self_loop)
            .map(|(row, &own)| row.iter().map(|&(_, w)| w).sum::<S>() + own)
            .collect();
        let total = degree.iter().copied().sum();
        Self { adjacency, self_loop, degree, total }
    }

    fn len(&self) -> usize {
        self.adjacency.len()
    }

    /// Collapses each community into one node.
    fn aggregate(&self, communities: &[usize], count: usize) -> Self {
        let mut merged: Vec<BTreeMap<usize, S>> = vec![BTreeMap::new(); count];
        let mut self_loop = vec![S::zero(); count];
        for (i, row) in self.adjacency.iter().enumerate() {
            let ci = communities[i];
            self_loop[ci] += self.self_loop[i];
            for &(j, w) in row {
                let cj = communities[j];
                if ci == cj {
                    self_loop[ci] += w;
                } else {
                    *merged[ci].entry(cj).or_insert_with(S::zero) += w;
                }
            }
        }
        let adjacency = merged.into_iter().map(|m| m.into_iter().collect()).collect();
        Self::assemble(adjacency, self_loop)
    }

    fn modularity(&self, communities: &[usize]) -> S {
        if self.total <= S::zero() {
            return S::zero();
        }
        let count = communities.iter().max().map_or(0, |m| m + 1);
        let mut inside = vec![S::zero(); count];
        let mut tot = vec![S::zero(); count];
        for (i, row) in self.adjacency.iter().enumerate() {
            let ci = communities[i];
            tot[ci] += self.degree[i];
            inside[ci] += self.self_loop[i];
            for &(j, w) in row {
                if communities[j] == ci {
                    inside[ci] += w;
                }
            }
        }
        let two_m = self.total;
        inside
            .iter()
            .zip(&tot)
            .map(|(&inn, &t)| inn / two_m - (t / two_m) * (t / two_m))
            .sum()
    }

    /// Greedy single-node moves in node order until no move improves
    /// modularity. Returns whether anything moved.
    fn local_moves(&self, communities: &mut [usize]) -> bool {
        let n = self.len();
        if self.total <= S::zero() {
            return false;
        }
        let two_m = self.total;
        let mut tot = vec![S::zero(); n];
        let mut size = vec![0usize; n];
        for i in 0..n {
            tot[communities[i]] += self.degree[i];
            size[communities[i]] += 1;
        }
        let mut empty: Vec<usize> = (0..n).rev().filter(|&c| size[c] == 0).collect();
        let tolerance = S::epsilon() * S::of(1e3);

        let mut moved_any = false;
        let mut link: Vec<S> = vec![S::zero(); n];
        let mut touched: Vec<usize> = Vec::new();
        loop {
            let mut moved = false;
            for i in 0..n {
                let own = communities[i];
                let k = self.degree[i];
                for &(j, w) in &self.adjacency[i] {
                    let c = communities[j];
                    if link[c] == S::zero() {
                        touched.push(c);
                    }
                    link[c] += w;
                }
                tot[own] -= k;
                size[own] -= 1;
                if size[own] == 0 {
                    empty.push(own);
                }

                let gain = |c: usize| link[c] - tot[c] * k / two_m;
                let mut best = own;
                let mut best_gain = gain(own);
                touched.sort_unstable();
                for &c in &touched {
                    let g = gain(c);
                    if g > best_gain + tolerance * (S::one() + k) {
                        best = c;
                        best_gain = g;
                    }
                }
                if size[own] > 0 && best_gain < -tolerance * (S::one() + k) {
                    // isolating the node beats keeping it where it is
                    best = *empty.last().expect("n communities for n nodes");
                }
                if size[best] == 0 {
                    empty.retain(|&c| c != best);
                }
                communities[i] = best;
                tot[best] += k;
                size[best] += 1;
                if best != own {
                    moved = true;
                }
                for &c in &touched {
                    link[c] = S::zero();
                }
                touched.clear();
            }
            if !moved {
                break;
            }
            moved_any = true;
        }
        moved_any
    }
}

/// Relabels communities `0..k` by first appearance; returns `k`.
fn renumber(communities: &mut [usize]) -> usize {
    let mut map: BTreeMap<usize, usize> = BTreeMap::new();
    for c in communities.iter_mut() {
        let next = map.len();
        *c = *map.entry(*c).or_insert(next);
    }
    map.len()
}

/// Weighted modularity `Q = (1/2m) sum_ij [A_ij - k_i k_j / 2m] delta(c_i, c_j)`;
/// zero for a graph without edges.
pub fn modularity<S: Scalar>(graph: &WeightedGraph<S>, communities: &[usize]) -> S {
    Level::from_graph(graph).modularity(communities)
}

/// Deterministic Louvain on a plain weighted graph.
///
/// Rounds of local moves and aggregation run until a round makes no
/// improvement. The resulting partition is then polished with single-node
/// moves on the original graph; if that changes anything the multi-level
/// phase is repeated from the polished partition. The output is therefore
/// always a local optimum under moving any one node.
pub fn louvain_weighted<S: Scalar>(graph: &WeightedGraph<S>) -> Partition<S> {
    let base = Level::from_graph(graph);
    let n = base.len();
    let mut assignment: Vec<usize> = (0..n).collect();
    let mut history = vec![base.modularity(&assignment)];

    loop {
        let count = renumber(&mut assignment);
        let mut level = base.aggregate(&assignment, count);
        loop {
            let mut level_comm: Vec<usize> = (0..level.len()).collect();
            if !level.local_moves(&mut level_comm) {
                break;
            }
            let level_count = renumber(&mut level_comm);
            for c in assignment.iter_mut() {
                *c = level_comm[*c];
            }
            history.push(base.modularity(&assignment));
            level = level.aggregate(&level_comm, level_count);
        }
        if !base.local_moves(&mut assignment) {
            break;
        }
        renumber(&mut assignment);
        history.push(base.modularity(&assignment));
    }
    renumber(&mut assignment);
    let modularity = base.modularity(&assignment);
    Partition { communities: assignment, modularity, history }
}

pub fn louvain<S: Scalar>(graph: &SimilarityGraph<S>) -> Partition<S> {
    louvain_weighted(&graph.graph)
}
