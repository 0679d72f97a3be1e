//! The seeding game between the two firms.
//!
//! A firm's payoff is its discounted revenue `p Σ_{k≥0} δᵏ 1ᵀx(k)` minus the
//! seeding cost `½‖s‖²`. The discounted consumption comes from the block
//! system `(I₂ₙ − δ𝒜)[ȳ; y̲] = δ(α−p)/(1−δ)[1; 1] + δ𝒜[s̄; s̲]` with
//! `𝒜 = [[1, β], [β, 1]] ⊗ G`, solved in operator form.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::centrality::{self, CentralityBundle, CentralityError};
use crate::dynamics::{DynamicsError, Firm, SeedingPair};
use crate::graph::{MarketParams, WeightedDigraph};
use crate::linsolve::{LinearOperator, SolveError, Solver, SolverOptions};
use crate::spectral::{self, AssumptionError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error(transparent)]
    Assumptions(#[from] AssumptionError),
    #[error(transparent)]
    Centrality(#[from] CentralityError),
    #[error("discounted consumption solve failed: {0}")]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Seeding(#[from] DynamicsError),
    #[error("seed set member {node} out of range for {n} agents")]
    SetOutOfRange { node: usize, n: usize },
    #[error("epsilon target must be nonnegative, got {0}")]
    NegativeTarget(f64),
}

/// `δ𝒜` acting on `[ȳ; y̲]`.
struct BlockOperator<'g> {
    graph: &'g WeightedDigraph,
    delta: f64,
    beta: f64,
}

impl LinearOperator for BlockOperator<'_> {
    fn dim(&self) -> usize {
        2 * self.graph.node_count()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let n = self.graph.node_count();
        let (top, bottom) = x.split_at(n);
        let (out_top, out_bottom) = out.split_at_mut(n);
        self.graph.mul_vec(top, out_top);
        self.graph.mul_vec(bottom, out_bottom);
        for i in 0..n {
            let (gt, gb) = (out_top[i], out_bottom[i]);
            out_top[i] = self.delta * (gt + self.beta * gb);
            out_bottom[i] = self.delta * (gb + self.beta * gt);
        }
    }

    fn to_dense(&self) -> DMatrix<f64> {
        let n = self.graph.node_count();
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        for e in self.graph.edges() {
            let (i, j, w) = (e.influenced, e.influencer, e.weight);
            m[(i, j)] = self.delta * w;
            m[(n + i, n + j)] = self.delta * w;
            m[(i, n + j)] = self.delta * self.beta * w;
            m[(n + i, j)] = self.delta * self.beta * w;
        }
        m
    }
}

/// A seeded agent set, stored with 0-based ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSet {
    n: usize,
    members: BTreeSet<usize>,
}

impl SeedSet {
    pub fn new(n: usize, members: impl IntoIterator<Item = usize>) -> Result<Self, GameError> {
        let members: BTreeSet<usize> = members.into_iter().collect();
        if let Some(&node) = members.iter().find(|&&v| v >= n) {
            return Err(GameError::SetOutOfRange { node, n });
        }
        Ok(Self { n, members })
    }

    pub fn empty(n: usize) -> Self {
        Self {
            n,
            members: BTreeSet::new(),
        }
    }

    pub fn full(n: usize) -> Self {
        Self {
            n,
            members: (0..n).collect(),
        }
    }

    pub fn contains(&self, v: usize) -> bool {
        self.members.contains(&v)
    }

    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn universe(&self) -> usize {
        self.n
    }

    /// The indicator vector `1_S`.
    pub fn indicator(&self) -> Vec<f64> {
        (0..self.n)
            .map(|v| if self.contains(v) { 1.0 } else { 0.0 })
            .collect()
    }

    pub fn insert(&mut self, v: usize) {
        assert!(v < self.n, "node out of range");
        self.members.insert(v);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityComponents {
    /// Payoff with no seeding at all.
    pub baseline: f64,
    /// `p · c_newᵀ s_own`.
    pub own_seed: f64,
    /// `p · c_crossᵀ s_rival`.
    pub cross_seed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityBreakdown {
    /// `p Σ_{k≥0} δᵏ 1ᵀx(k)`.
    pub gross: f64,
    /// `½‖s‖²`.
    pub seeding_cost: f64,
    pub net: f64,
    pub components: UtilityComponents,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsityResiduals {
    pub size_bar: usize,
    pub size_under: usize,
    pub residual_bar: f64,
    pub residual_under: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonReport {
    pub set_bar: SeedSet,
    pub set_under: SeedSet,
    pub tau_bar: f64,
    pub tau_under: f64,
    /// `max(τ̄, τ̲)`.
    pub epsilon_paper: f64,
    /// Exact best-deviation gain over the candidate payoff, per firm; `None`
    /// when the candidate payoff is not positive.
    pub epsilon_exact_a: Option<f64>,
    pub epsilon_exact_b: Option<f64>,
    pub gain_a: f64,
    pub gain_b: f64,
    pub payoff_a: f64,
    pub payoff_b: f64,
    pub sparsity: SparsityResiduals,
}

/// Everything needed to evaluate the game on one `(graph, params)` pair,
/// with the block system factored once.
pub struct GameModel<'g> {
    graph: &'g WeightedDigraph,
    params: MarketParams,
    bundle: CentralityBundle,
    op: BlockOperator<'g>,
    opts: SolverOptions,
    lu: Option<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
}

impl<'g> GameModel<'g> {
    pub fn new(
        graph: &'g WeightedDigraph,
        params: &MarketParams,
        opts: &SolverOptions,
    ) -> Result<Self, GameError> {
        spectral::validate_assumptions(graph, params).require()?;
        let bundle = centrality::biproduct_centrality(graph, params, opts)?;
        let op = BlockOperator {
            graph,
            delta: params.delta,
            beta: params.beta,
        };
        let lu = if op.dim() <= opts.direct_threshold {
            let n = op.dim();
            Some((DMatrix::identity(n, n) - op.to_dense()).lu())
        } else {
            None
        };
        Ok(Self {
            graph,
            params: *params,
            bundle,
            op,
            opts: *opts,
            lu,
        })
    }

    pub fn graph(&self) -> &WeightedDigraph {
        self.graph
    }

    pub fn params(&self) -> &MarketParams {
        &self.params
    }

    pub fn centrality(&self) -> &CentralityBundle {
        &self.bundle
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    fn check_seeding(&self, seeding: &SeedingPair) -> Result<(), GameError> {
        if seeding.len() != self.node_count() {
            return Err(DynamicsError::Dimension {
                expected: self.node_count(),
                got: seeding.len(),
            }
            .into());
        }
        SeedingPair::new(seeding.s_bar.clone(), seeding.s_under.clone())?;
        Ok(())
    }

    /// `(ȳ, y̲) = Σ_{k≥1} δᵏ (x̄(k), x̲(k))` in closed form.
    pub fn discounted_consumption(
        &self,
        seeding: &SeedingPair,
    ) -> Result<(Vec<f64>, Vec<f64>), GameError> {
        self.check_seeding(seeding)?;
        let n = self.node_count();
        let constant = self.params.delta * self.params.surplus() / (1.0 - self.params.delta);
        let stacked: Vec<f64> = seeding
            .s_bar
            .iter()
            .chain(&seeding.s_under)
            .copied()
            .collect();
        let mut rhs = vec![0.0; 2 * n];
        self.op.apply(&stacked, &mut rhs);
        for r in rhs.iter_mut() {
            *r += constant;
        }
        let solution = match &self.lu {
            Some(lu) => solve_with_factors(lu, &self.op, &rhs, self.opts.tol)?,
            None => Solver::new(&self.op, self.opts)?.solve(&rhs)?.x,
        };
        let under = solution[n..].to_vec();
        let mut bar = solution;
        bar.truncate(n);
        Ok((bar, under))
    }

    pub fn firm_utility(
        &self,
        seeding: &SeedingPair,
    ) -> Result<(UtilityBreakdown, UtilityBreakdown), GameError> {
        let (y_bar, y_under) = self.discounted_consumption(seeding)?;
        let p = self.params.price;
        let baseline = self.baseline_utility();
        let breakdown = |seed: &[f64], rival: &[f64], y: &[f64]| {
            let gross = p * (seed.iter().sum::<f64>() + y.iter().sum::<f64>());
            let seeding_cost = 0.5 * seed.iter().map(|s| s * s).sum::<f64>();
            UtilityBreakdown {
                gross,
                seeding_cost,
                net: gross - seeding_cost,
                components: UtilityComponents {
                    baseline,
                    own_seed: p * dot(&self.bundle.c_new, seed),
                    cross_seed: p * dot(&self.bundle.c_cross, rival),
                },
            }
        };
        Ok((
            breakdown(&seeding.s_bar, &seeding.s_under, &y_bar),
            breakdown(&seeding.s_under, &seeding.s_bar, &y_under),
        ))
    }

    pub fn net_utility(&self, seeding: &SeedingPair, firm: Firm) -> Result<f64, GameError> {
        let (a, b) = self.firm_utility(seeding)?;
        Ok(match firm {
            Firm::A => a.net,
            Firm::B => b.net,
        })
    }

    /// Payoff of either firm when nobody seeds:
    /// `p δ(α−p)/(1−δ) · 1ᵀ Katz(G, δ(1+β))`.
    pub fn baseline_utility(&self) -> f64 {
        let p = &self.params;
        p.price * p.delta * p.surplus() / (1.0 - p.delta) * self.bundle.total_b()
    }

    /// `∂U/∂s_own = p · c_new − s_own`; the rival's seeding does not enter.
    pub fn utility_gradient(&self, seeding: &SeedingPair, firm: Firm) -> Vec<f64> {
        let p = self.params.price;
        self.bundle
            .c_new
            .iter()
            .zip(seeding.of(firm))
            .map(|(c, s)| p * c - s)
            .collect()
    }

    /// The symmetric equilibrium `s̄* = s̲* = p · c_new`.
    pub fn nash_seeding(&self) -> SeedingPair {
        let s: Vec<f64> = self
            .bundle
            .c_new
            .iter()
            .map(|c| self.params.price * c)
            .collect();
        SeedingPair {
            s_bar: s.clone(),
            s_under: s,
        }
    }

    /// `p · (c_new ∘ 1_S)`.
    pub fn restricted_seeding(&self, set: &SeedSet) -> Vec<f64> {
        self.bundle
            .c_new
            .iter()
            .enumerate()
            .map(|(v, c)| {
                if set.contains(v) {
                    self.params.price * c
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// Largest gain a firm seeding `p · (c_new ∘ 1_S)` can get by deviating:
    /// `½p² Σ_{i∉S} c_i²`.
    pub fn best_response_gain(&self, own_set: &SeedSet) -> f64 {
        let p = self.params.price;
        let outside: f64 = self
            .bundle
            .c_new
            .iter()
            .enumerate()
            .filter(|(v, _)| !own_set.contains(*v))
            .map(|(_, c)| c * c)
            .sum();
        0.5 * p * p * outside
    }

    /// `τ = Σ_{i∉S} c_i² / (δ(α−p)/(2p(1−δ)) · 1ᵀb + Σ_{i∈S} c_i²)`.
    pub fn tau(&self, set: &SeedSet) -> f64 {
        let (inside, outside) = self.split_c_squared(set);
        outside / (self.tau_offset() + inside)
    }

    fn tau_offset(&self) -> f64 {
        let p = &self.params;
        p.delta * p.surplus() / (2.0 * p.price * (1.0 - p.delta)) * self.bundle.total_b()
    }

    fn split_c_squared(&self, set: &SeedSet) -> (f64, f64) {
        let mut inside = 0.0;
        let mut outside = 0.0;
        for (v, c) in self.bundle.c_new.iter().enumerate() {
            if set.contains(v) {
                inside += c * c;
            } else {
                outside += c * c;
            }
        }
        (inside, outside)
    }

    fn check_set(&self, set: &SeedSet) -> Result<(), GameError> {
        if set.universe() != self.node_count() {
            return Err(DynamicsError::Dimension {
                expected: self.node_count(),
                got: set.universe(),
            }
            .into());
        }
        Ok(())
    }

    pub fn epsilon_for_sets(
        &self,
        set_bar: &SeedSet,
        set_under: &SeedSet,
    ) -> Result<EpsilonReport, GameError> {
        self.check_set(set_bar)?;
        self.check_set(set_under)?;
        let tau_bar = self.tau(set_bar);
        let tau_under = self.tau(set_under);

        let candidate = SeedingPair {
            s_bar: self.restricted_seeding(set_bar),
            s_under: self.restricted_seeding(set_under),
        };
        let (cand_a, cand_b) = self.firm_utility(&candidate)?;
        let nash = self.nash_seeding();
        // Best responses are p · c_new regardless of the rival's seeding.
        let deviate_a = SeedingPair {
            s_bar: nash.s_bar.clone(),
            s_under: candidate.s_under.clone(),
        };
        let deviate_b = SeedingPair {
            s_bar: candidate.s_bar.clone(),
            s_under: nash.s_under,
        };
        let best_a = self.firm_utility(&deviate_a)?.0.net;
        let best_b = self.firm_utility(&deviate_b)?.1.net;
        let gain_a = best_a - cand_a.net;
        let gain_b = best_b - cand_b.net;
        let ratio = |gain: f64, payoff: f64| (payoff > 0.0).then(|| gain / payoff);

        let total = self.bundle.total_c_squared();
        let residual = |set: &SeedSet| {
            if total > 0.0 {
                self.split_c_squared(set).1 / total
            } else {
                0.0
            }
        };
        Ok(EpsilonReport {
            tau_bar,
            tau_under,
            epsilon_paper: tau_bar.max(tau_under),
            epsilon_exact_a: ratio(gain_a, cand_a.net),
            epsilon_exact_b: ratio(gain_b, cand_b.net),
            gain_a,
            gain_b,
            payoff_a: cand_a.net,
            payoff_b: cand_b.net,
            sparsity: SparsityResiduals {
                size_bar: set_bar.len(),
                size_under: set_under.len(),
                residual_bar: residual(set_bar),
                residual_under: residual(set_under),
            },
            set_bar: set_bar.clone(),
            set_under: set_under.clone(),
        })
    }

    /// Agents in descending `c_new²`, ties by ascending id.
    pub fn greedy_order(&self) -> Vec<usize> {
        let c = &self.bundle.c_new;
        let mut order: Vec<usize> = (0..c.len()).collect();
        order.sort_by(|&i, &j| (c[j] * c[j]).total_cmp(&(c[i] * c[i])).then(i.cmp(&j)));
        order
    }

    /// Smallest greedy prefix whose `τ` is at most `target`.
    pub fn sparsify_one(&self, target: f64) -> Result<SeedSet, GameError> {
        if target.is_nan() || target < 0.0 {
            return Err(GameError::NegativeTarget(target));
        }
        let n = self.node_count();
        let offset = self.tau_offset();
        let mut outside = self.bundle.total_c_squared();
        let mut inside = 0.0;
        let mut set = SeedSet::empty(n);
        let order = self.greedy_order();
        let mut next = order.iter();
        loop {
            let tau = if outside > 0.0 {
                outside / (offset + inside)
            } else {
                0.0
            };
            if tau <= target {
                return Ok(set);
            }
            match next.next() {
                Some(&v) => {
                    let c2 = self.bundle.c_new[v] * self.bundle.c_new[v];
                    inside += c2;
                    outside -= c2;
                    set.insert(v);
                    if set.len() == n {
                        outside = 0.0;
                    }
                }
                None => return Ok(set),
            }
        }
    }

    pub fn sparsify(
        &self,
        target_bar: f64,
        target_under: f64,
    ) -> Result<(SeedSet, SeedSet, EpsilonReport), GameError> {
        let set_bar = self.sparsify_one(target_bar)?;
        let set_under = if target_under == target_bar {
            set_bar.clone()
        } else {
            self.sparsify_one(target_under)?
        };
        let report = self.epsilon_for_sets(&set_bar, &set_under)?;
        Ok((set_bar, set_under, report))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn solve_with_factors(
    lu: &nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    op: &BlockOperator<'_>,
    rhs: &[f64],
    tol: f64,
) -> Result<Vec<f64>, SolveError> {
    if rhs.is_empty() {
        return Ok(Vec::new());
    }
    let b = nalgebra::DVector::from_column_slice(rhs);
    let x = lu.solve(&b).ok_or(SolveError::Singular)?;
    let x: Vec<f64> = x.iter().copied().collect();
    let res = crate::linsolve::residual(op, &x, rhs);
    // Scale-aware acceptance: the right-hand side may be large for big seeds.
    let scale = rhs.iter().fold(1.0_f64, |m, r| m.max(r.abs()));
    if res.is_nan() || res > tol * scale {
        return Err(SolveError::Breakdown {
            residual: res,
            iterations: 1,
            tol,
        });
    }
    Ok(x)
}

/// One-shot forms of the [`GameModel`] methods.
pub fn discounted_consumption(
    graph: &WeightedDigraph,
    params: &MarketParams,
    seeding: &SeedingPair,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, Vec<f64>), GameError> {
    GameModel::new(graph, params, opts)?.discounted_consumption(seeding)
}

pub fn firm_utility(
    graph: &WeightedDigraph,
    params: &MarketParams,
    seeding: &SeedingPair,
    opts: &SolverOptions,
) -> Result<(UtilityBreakdown, UtilityBreakdown), GameError> {
    GameModel::new(graph, params, opts)?.firm_utility(seeding)
}

pub fn nash_seeding(
    graph: &WeightedDigraph,
    params: &MarketParams,
    opts: &SolverOptions,
) -> Result<SeedingPair, GameError> {
    Ok(GameModel::new(graph, params, opts)?.nash_seeding())
}

pub fn epsilon_for_sets(
    graph: &WeightedDigraph,
    params: &MarketParams,
    set_bar: &SeedSet,
    set_under: &SeedSet,
    opts: &SolverOptions,
) -> Result<EpsilonReport, GameError> {
    GameModel::new(graph, params, opts)?.epsilon_for_sets(set_bar, set_under)
}

pub fn sparsify(
    graph: &WeightedDigraph,
    params: &MarketParams,
    epsilon_target: f64,
    opts: &SolverOptions,
) -> Result<(SeedSet, SeedSet, EpsilonReport), GameError> {
    GameModel::new(graph, params, opts)?.sparsify(epsilon_target, epsilon_target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_core_periphery, CorePeripheryParams, Edge};

    fn params() -> MarketParams {
        MarketParams::new(2.0, 1.0, 0.5, 0.5).unwrap()
    }

    fn cp(m: usize) -> WeightedDigraph {
        generate_core_periphery(&CorePeripheryParams::new(3, m, 0.5).unwrap()).unwrap()
    }

    fn role_models(m: usize) -> SeedSet {
        SeedSet::new(
            3 * m,
            CorePeripheryParams::new(3, m, 0.5).unwrap().role_models(),
        )
        .unwrap()
    }

    #[test]
    fn empty_graph_consumption() {
        let g = WeightedDigraph::empty(2);
        let model = GameModel::new(&g, &params(), &SolverOptions::default()).unwrap();
        let (bar, under) = model.discounted_consumption(&SeedingPair::zero(2)).unwrap();
        assert_eq!(bar, vec![1.0, 1.0]);
        assert_eq!(under, vec![1.0, 1.0]);
        let seeded = SeedingPair::new(vec![1.0, 0.0], vec![0.0, 0.0]).unwrap();
        assert_eq!(
            model.discounted_consumption(&seeded).unwrap().0,
            vec![1.0, 1.0]
        );
    }

    #[test]
    fn empty_graph_utility() {
        let g = WeightedDigraph::empty(2);
        let model = GameModel::new(&g, &params(), &SolverOptions::default()).unwrap();
        let (a, b) = model.firm_utility(&SeedingPair::zero(2)).unwrap();
        assert_eq!(a.net, 2.0);
        assert_eq!(b.net, 2.0);
        assert_eq!(model.baseline_utility(), 2.0);
    }

    #[test]
    fn nash_examples() {
        let g = WeightedDigraph::empty(3);
        let model = GameModel::new(&g, &params(), &SolverOptions::default()).unwrap();
        assert_eq!(model.nash_seeding().s_bar, vec![1.0; 3]);

        let g = cp(4);
        let model = GameModel::new(&g, &params(), &SolverOptions::default()).unwrap();
        let nash = model.nash_seeding();
        for (v, s) in nash.s_bar.iter().enumerate() {
            let expected = if v % 4 == 3 { 87.0 / 35.0 } else { 1.0 };
            assert!((s - expected).abs() < 1e-12);
        }
        assert_eq!(nash.s_bar, nash.s_under);
        assert!(model
            .utility_gradient(&nash, Firm::A)
            .iter()
            .all(|&d| d == 0.0));
    }

    #[test]
    fn gradient_ignores_rival() {
        let g = WeightedDigraph::new(2, [Edge::new(0, 1, 0.5)]).unwrap();
        let model = GameModel::new(&g, &params(), &SolverOptions::default()).unwrap();
        let zero = SeedingPair::zero(2);
        let grad = model.utility_gradient(&zero, Firm::A);
        assert!((grad[0] - 1.0).abs() < 1e-12 && (grad[1] - 1.25).abs() < 1e-12);
        let other = SeedingPair::new(vec![0.0, 0.0], vec![3.0, 7.5]).unwrap();
        assert_eq!(model.utility_gradient(&other, Firm::A), grad);
    }

    #[test]
    fn gain_examples() {
        let g = WeightedDigraph::empty(12);
        let model = GameModel::new(&g, &params(), &SolverOptions::default()).unwrap();
        assert_eq!(model.best_response_gain(&SeedSet::full(12)), 0.0);
        assert_eq!(model.best_response_gain(&SeedSet::empty(12)), 6.0);

        let g = cp(4);
        let model = GameModel::new(&g, &params(), &SolverOptions::default()).unwrap();
        assert!((model.best_response_gain(&role_models(4)) - 4.5).abs() < 1e-12);
    }

    #[test]
    fn epsilon_examples() {
        let g = cp(4);
        let model = GameModel::new(&g, &params(), &SolverOptions::default()).unwrap();
        let full = model
            .epsilon_for_sets(&SeedSet::full(12), &SeedSet::full(12))
            .unwrap();
        assert_eq!((full.tau_bar, full.tau_under), (0.0, 0.0));
        assert!(full.gain_a.abs() < 1e-10 && full.gain_b.abs() < 1e-10);

        let rm = role_models(4);
        let report = model.epsilon_for_sets(&rm, &rm).unwrap();
        // 9 / (0.5 · 19.2 + 3 (87/35)²)
        let expected = 9.0 / (0.5 * 19.2 + 3.0 * (87.0_f64 / 35.0).powi(2));
        assert!((report.tau_bar - expected).abs() < 1e-12);
        assert!((report.epsilon_paper - 0.3198711811297763).abs() < 1e-12);
        assert!((report.gain_a - 4.5).abs() < 1e-9);
        assert!(report.epsilon_exact_a.unwrap() > 0.0);
        assert!((report.sparsity.residual_bar - 0.3268409818569904).abs() < 1e-12);

        let g = cp(100);
        let model = GameModel::new(&g, &params(), &SolverOptions::default()).unwrap();
        let rm = role_models(100);
        let tau = model.tau(&rm);
        let c_l = 0.5 * (107.0 / 7.0 + 61.0);
        assert!((tau - 297.0 / (240.0 + 3.0 * c_l * c_l)).abs() < 1e-12);
        assert!((tau - 0.0645).abs() < 1e-4);
    }

    #[test]
    fn undefined_exact_ratio_with_zero_payoff() {
        // alpha = p and nobody seeded: the candidate payoff is zero.
        let p = MarketParams::new(1.0, 1.0, 0.5, 0.5).unwrap();
        let g = cp(4);
        let model = GameModel::new(&g, &p, &SolverOptions::default()).unwrap();
        let report = model
            .epsilon_for_sets(&SeedSet::empty(12), &SeedSet::empty(12))
            .unwrap();
        assert_eq!(report.epsilon_exact_a, None);
        assert!(report.epsilon_paper.is_infinite());
    }

    #[test]
    fn sparsify_examples() {
        let g = cp(4);
        let model = GameModel::new(&g, &params(), &SolverOptions::default()).unwrap();
        let tau_empty = model.tau(&SeedSet::empty(12));
        let (s, _, _) = model.sparsify(tau_empty, tau_empty).unwrap();
        assert!(s.is_empty());
        let (s, _, r) = model.sparsify(0.0, 0.0).unwrap();
        assert_eq!(s.len(), 12);
        assert_eq!(r.epsilon_paper, 0.0);
        assert!(model.sparsify(-1.0, -1.0).is_err());

        let g = cp(100);
        let model = GameModel::new(&g, &params(), &SolverOptions::default()).unwrap();
        let (s, u, r) = model.sparsify(0.1, 0.1).unwrap();
        assert_eq!(s, role_models(100));
        assert_eq!(s, u);
        assert!(r.epsilon_paper <= 0.1);
    }

    #[test]
    fn greedy_ties_break_by_id() {
        let g = WeightedDigraph::empty(4);
        let model = GameModel::new(&g, &params(), &SolverOptions::default()).unwrap();
        assert_eq!(model.greedy_order(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn iterative_path_matches_direct() {
        let g = cp(10);
        let direct = GameModel::new(&g, &params(), &SolverOptions::default()).unwrap();
        let iterative = GameModel::new(
            &g,
            &params(),
            &SolverOptions {
                direct_threshold: 0,
                ..SolverOptions::default()
            },
        )
        .unwrap();
        let seeding = direct.nash_seeding();
        let (a, _) = direct.discounted_consumption(&seeding).unwrap();
        let (b, _) = iterative.discounted_consumption(&seeding).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9);
        }
    }
}
