//! Weighted influence digraph and the model's parameter types.
//!
//! Node ids are 0-based here. Edge-list files and every human-facing
//! report use 1-based ids; the conversion happens in [`crate::io`] and
//! [`crate::report`].

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("node {node} out of range for a graph with {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({influenced}, {influencer})")]
    DuplicateEdge {
        influenced: usize,
        influencer: usize,
    },
    #[error("negative weight {weight} on edge ({influenced}, {influencer})")]
    NegativeWeight {
        influenced: usize,
        influencer: usize,
        weight: f64,
    },
    #[error("non-finite weight on edge ({influenced}, {influencer})")]
    NonFiniteWeight {
        influenced: usize,
        influencer: usize,
    },
    #[error("invalid generator parameter: {0}")]
    InvalidGenerator(String),
}

/// One entry `g_ij` of the adjacency matrix: `influencer` (j) affects
/// `influenced` (i) with strength `weight`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub influenced: usize,
    pub influencer: usize,
    pub weight: f64,
}

impl Edge {
    pub fn new(influenced: usize, influencer: usize, weight: f64) -> Self {
        Self {
            influenced,
            influencer,
            weight,
        }
    }
}

/// Compressed sparse rows: `offsets[r]..offsets[r + 1]` indexes `targets`
/// and `weights`.
#[derive(Debug, Clone, PartialEq)]
struct Csr {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<f64>,
}

impl Csr {
    fn build(n: usize, entries: impl Iterator<Item = (usize, usize, f64)> + Clone) -> Self {
        let mut offsets = vec![0usize; n + 1];
        for (row, _, _) in entries.clone() {
            offsets[row + 1] += 1;
        }
        for r in 0..n {
            offsets[r + 1] += offsets[r];
        }
        let nnz = offsets[n];
        let mut cursor = offsets.clone();
        let mut targets = vec![0usize; nnz];
        let mut weights = vec![0.0; nnz];
        for (row, col, w) in entries {
            let at = cursor[row];
            targets[at] = col;
            weights[at] = w;
            cursor[row] += 1;
        }
        Self {
            offsets,
            targets,
            weights,
        }
    }

    fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.offsets[r]..self.offsets[r + 1];
        self.targets[span.clone()]
            .iter()
            .copied()
            .zip(self.weights[span].iter().copied())
    }
}

/// Adjacency `G` with `G[i][j] = g_ij`, the influence of agent `j` on
/// agent `i`. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedDigraph {
    n: usize,
    /// Canonical order: sorted by (influenced, influencer).
    edges: Vec<Edge>,
    /// Row `i` lists the influencers of `i`.
    by_influenced: Csr,
    /// Row `j` lists the agents that `j` influences.
    by_influencer: Csr,
}

impl WeightedDigraph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = Edge>) -> Result<Self, GraphError> {
        let mut edges: Vec<Edge> = edges.into_iter().collect();
        for e in &edges {
            for node in [e.influenced, e.influencer] {
                if node >= n {
                    return Err(GraphError::NodeOutOfRange { node, n });
                }
            }
            if e.influenced == e.influencer {
                return Err(GraphError::SelfLoop(e.influenced));
            }
            if !e.weight.is_finite() {
                return Err(GraphError::NonFiniteWeight {
                    influenced: e.influenced,
                    influencer: e.influencer,
                });
            }
            if e.weight < 0.0 {
                return Err(GraphError::NegativeWeight {
                    influenced: e.influenced,
                    influencer: e.influencer,
                    weight: e.weight,
                });
            }
        }
        edges.sort_by_key(|e| (e.influenced, e.influencer));
        if let Some(pair) = edges
            .windows(2)
            .find(|w| (w[0].influenced, w[0].influencer) == (w[1].influenced, w[1].influencer))
        {
            return Err(GraphError::DuplicateEdge {
                influenced: pair[0].influenced,
                influencer: pair[0].influencer,
            });
        }
        let by_influenced = Csr::build(
            n,
            edges.iter().map(|e| (e.influenced, e.influencer, e.weight)),
        );
        let by_influencer = Csr::build(
            n,
            edges.iter().map(|e| (e.influencer, e.influenced, e.weight)),
        );
        Ok(Self {
            n,
            edges,
            by_influenced,
            by_influencer,
        })
    }

    pub fn empty(n: usize) -> Self {
        Self::new(n, std::iter::empty()).expect("an edgeless graph is always valid")
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges in canonical (influenced, influencer) order.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn weight(&self, influenced: usize, influencer: usize) -> f64 {
        self.by_influenced
            .row(influenced)
            .find(|&(j, _)| j == influencer)
            .map_or(0.0, |(_, w)| w)
    }

    /// Influencers of `i` with their weights.
    pub fn influencers(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.by_influenced.row(i)
    }

    /// Agents influenced by `j` with their weights.
    pub fn influenced_by(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.by_influencer.row(j)
    }

    /// `d_i^in = Σ_j g_ij`.
    pub fn in_degree(&self, i: usize) -> f64 {
        self.by_influenced.row(i).map(|(_, w)| w).sum()
    }

    /// `d_i^out = Σ_j g_ji`.
    pub fn out_degree(&self, i: usize) -> f64 {
        self.by_influencer.row(i).map(|(_, w)| w).sum()
    }

    pub fn in_degrees(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.in_degree(i)).collect()
    }

    pub fn out_degrees(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.out_degree(i)).collect()
    }

    pub fn max_in_degree(&self) -> f64 {
        self.in_degrees().into_iter().fold(0.0, f64::max)
    }

    pub fn max_out_degree(&self) -> f64 {
        self.out_degrees().into_iter().fold(0.0, f64::max)
    }

    /// `out = G x`.
    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate().take(self.n) {
            *o = self.by_influenced.row(i).map(|(j, w)| w * x[j]).sum();
        }
    }

    /// `out = Gᵀ x`.
    pub fn mul_transpose_vec(&self, x: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate().take(self.n) {
            *o = self.by_influencer.row(j).map(|(i, w)| w * x[i]).sum();
        }
    }

    /// The reversed graph, whose adjacency is `Gᵀ`.
    pub fn transpose(&self) -> Self {
        Self::new(
            self.n,
            self.edges
                .iter()
                .map(|e| Edge::new(e.influencer, e.influenced, e.weight)),
        )
        .expect("transpose of a valid graph is valid")
    }

    /// Relabels node `v` as `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.n, "permutation length must equal n");
        Self::new(
            self.n,
            self.edges
                .iter()
                .map(|e| Edge::new(perm[e.influenced], perm[e.influencer], e.weight)),
        )
        .expect("relabeling preserves validity")
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for e in &self.edges {
            m[(e.influenced, e.influencer)] = e.weight;
        }
        m
    }

    /// Induced subgraph on `nodes`, relabeled `0..nodes.len()` in the given order.
    pub(crate) fn induced(&self, nodes: &[usize]) -> Self {
        let mut index = vec![usize::MAX; self.n];
        for (k, &v) in nodes.iter().enumerate() {
            index[v] = k;
        }
        let edges = self
            .edges
            .iter()
            .filter(|e| index[e.influenced] != usize::MAX && index[e.influencer] != usize::MAX)
            .map(|e| Edge::new(index[e.influenced], index[e.influencer], e.weight));
        Self::new(nodes.len(), edges).expect("induced subgraph of a valid graph is valid")
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamsError {
    #[error("{name} must be finite")]
    NonFinite { name: &'static str },
    #[error("price must be positive, got {0}")]
    Price(f64),
    #[error("alpha ({alpha}) must be at least the price ({price})")]
    AlphaBelowPrice { alpha: f64, price: f64 },
    #[error("beta must lie in [0, 1), got {0}")]
    Beta(f64),
    #[error("delta must lie in (0, 1), got {0}")]
    Delta(f64),
}

/// Market parameters shared by both firms and all agents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    /// Linear coefficient of the self-utility.
    pub alpha: f64,
    pub price: f64,
    /// Discount on the externality from the rival product.
    pub beta: f64,
    /// Time discount of the firms.
    pub delta: f64,
}

impl MarketParams {
    /// Builds parameters satisfying every range constraint, including `alpha >= price`.
    pub fn new(alpha: f64, price: f64, beta: f64, delta: f64) -> Result<Self, ParamsError> {
        let params = Self {
            alpha,
            price,
            beta,
            delta,
        };
        params.check_ranges()?;
        if alpha < price {
            return Err(ParamsError::AlphaBelowPrice { alpha, price });
        }
        Ok(params)
    }

    /// Range checks on beta, delta and price; `alpha >= price` is left to
    /// [`crate::spectral::validate_assumptions`].
    pub fn check_ranges(&self) -> Result<(), ParamsError> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("price", self.price),
            ("beta", self.beta),
            ("delta", self.delta),
        ] {
            if !v.is_finite() {
                return Err(ParamsError::NonFinite { name });
            }
        }
        if self.price <= 0.0 {
            return Err(ParamsError::Price(self.price));
        }
        if !(0.0..1.0).contains(&self.beta) {
            return Err(ParamsError::Beta(self.beta));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(ParamsError::Delta(self.delta));
        }
        Ok(())
    }

    /// Attenuations `(δ(1−β), δ(1+β))` of the two Katz solves.
    pub fn attenuations(&self) -> (f64, f64) {
        (
            self.delta * (1.0 - self.beta),
            self.delta * (1.0 + self.beta),
        )
    }

    /// Largest spectral radius the model tolerates: `1/(δ(1+β))`.
    pub fn spectral_bound(&self) -> f64 {
        1.0 / (self.delta * (1.0 + self.beta))
    }

    /// Per-period baseline consumption `α − p`.
    pub fn surplus(&self) -> f64 {
        self.alpha - self.price
    }
}

/// `χ` communities of `m` agents; agent `r·m` (1-based) is the role model of
/// community `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorePeripheryParams {
    pub chi: usize,
    pub m: usize,
    pub g: f64,
}

impl CorePeripheryParams {
    pub fn new(chi: usize, m: usize, g: f64) -> Result<Self, GraphError> {
        let p = Self { chi, m, g };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        if self.chi < 2 {
            return Err(GraphError::InvalidGenerator(format!(
                "chi must be at least 2, got {}",
                self.chi
            )));
        }
        if self.m < 2 {
            return Err(GraphError::InvalidGenerator(format!(
                "m must be at least 2, got {}",
                self.m
            )));
        }
        if !(self.g.is_finite() && self.g > 0.0) {
            return Err(GraphError::InvalidGenerator(format!(
                "g must be positive, got {}",
                self.g
            )));
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.chi * self.m
    }

    /// 0-based ids of the role models.
    pub fn role_models(&self) -> Vec<usize> {
        (1..=self.chi).map(|r| r * self.m - 1).collect()
    }
}

pub fn generate_core_periphery(
    params: &CorePeripheryParams,
) -> Result<WeightedDigraph, GraphError> {
    params.validate()?;
    let CorePeripheryParams { chi, m, g } = *params;
    let mut edges = Vec::with_capacity(chi * m);
    for r in 1..=chi {
        let leader = r * m - 1;
        for i in (r - 1) * m..leader {
            edges.push(Edge::new(i, leader, g));
        }
        // Role models form a cycle: r influences r + 1, χ closes back to 1.
        let next_leader = if r == chi { m - 1 } else { (r + 1) * m - 1 };
        edges.push(Edge::new(next_leader, leader, g));
    }
    WeightedDigraph::new(chi * m, edges)
}

/// Random graph in which every agent influences exactly `min(d, n − 1)`
/// distinct others with strength `weight`, so each out-degree is at most
/// `d · weight`.
pub fn generate_bounded_outdegree_family(
    n: usize,
    d: usize,
    weight: f64,
    seed: u64,
) -> Result<WeightedDigraph, GraphError> {
    if !(weight.is_finite() && weight >= 0.0) {
        return Err(GraphError::InvalidGenerator(format!(
            "weight must be nonnegative, got {weight}"
        )));
    }
    let fanout = d.min(n.saturating_sub(1));
    if fanout == 0 || weight == 0.0 {
        return Ok(WeightedDigraph::empty(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::with_capacity(n * fanout);
    for j in 0..n {
        // Draw from the n − 1 other agents, skipping j itself.
        for t in sample(&mut rng, n - 1, fanout).into_iter() {
            let i = if t >= j { t + 1 } else { t };
            edges.push(Edge::new(i, j, weight));
        }
    }
    WeightedDigraph::new(n, edges)
}
