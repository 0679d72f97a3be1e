//! Myopic best-response consumption dynamics.
//!
//! Each agent maximizes its one-period quadratic utility against the
//! previous consumption of its influencers, which gives the linear update
//!
//! ```text
//! x̄(k+1) = (α−p)1 + G x̄(k) + βG x̲(k)
//! x̲(k+1) = (α−p)1 + G x̲(k) + βG x̄(k)
//! ```
//!
//! with `x̄(0) = s̄` and `x̲(0) = s̲`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{MarketParams, WeightedDigraph};
use crate::linsolve::{ContractionCertificate, ScaledAdjacency, SolverOptions};
use crate::spectral::{self, AssumptionError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("node {node} out of range for {n} agents")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("seeding must be finite and nonnegative (entry {index} = {value})")]
    InvalidSeeding { index: usize, value: f64 },
    #[error("negative consumption {value} for agent {node} at step {k}")]
    NegativeConsumption { node: usize, k: usize, value: f64 },
    #[error("no contraction certificate for the discounted dynamics")]
    NoCertificate,
    #[error("tail bound {bound:e} still above {tail_tol:e} after {horizon} steps")]
    HorizonExhausted {
        horizon: usize,
        bound: f64,
        tail_tol: f64,
    },
    #[error(transparent)]
    Assumptions(#[from] AssumptionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Firm {
    /// Firm a, consumption `x̄`, seeding `s̄`.
    A,
    /// Firm b, consumption `x̲`, seeding `s̲`.
    B,
}

impl Firm {
    pub fn rival(self) -> Self {
        match self {
            Firm::A => Firm::B,
            Firm::B => Firm::A,
        }
    }
}

/// Seeding of both firms, `(s̄, s̲)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedingPair {
    pub s_bar: Vec<f64>,
    pub s_under: Vec<f64>,
}

impl SeedingPair {
    pub fn new(s_bar: Vec<f64>, s_under: Vec<f64>) -> Result<Self, DynamicsError> {
        if s_bar.len() != s_under.len() {
            return Err(DynamicsError::Dimension {
                expected: s_bar.len(),
                got: s_under.len(),
            });
        }
        for (index, &value) in s_bar.iter().chain(&s_under).enumerate() {
            if !(value.is_finite() && value >= 0.0) {
                return Err(DynamicsError::InvalidSeeding {
                    index: index % s_bar.len().max(1),
                    value,
                });
            }
        }
        Ok(Self { s_bar, s_under })
    }

    pub fn zero(n: usize) -> Self {
        Self {
            s_bar: vec![0.0; n],
            s_under: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.s_bar.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s_bar.is_empty()
    }

    pub fn of(&self, firm: Firm) -> &[f64] {
        match firm {
            Firm::A => &self.s_bar,
            Firm::B => &self.s_under,
        }
    }

    pub fn of_mut(&mut self, firm: Firm) -> &mut Vec<f64> {
        match firm {
            Firm::A => &mut self.s_bar,
            Firm::B => &mut self.s_under,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsumptionState {
    pub x_bar: Vec<f64>,
    pub x_under: Vec<f64>,
    pub k: usize,
}

impl ConsumptionState {
    pub fn initial(seeding: &SeedingPair) -> Self {
        Self {
            x_bar: seeding.s_bar.clone(),
            x_under: seeding.s_under.clone(),
            k: 0,
        }
    }

    fn own_and_rival(&self, firm: Firm) -> (&[f64], &[f64]) {
        match firm {
            Firm::A => (&self.x_bar, &self.x_under),
            Firm::B => (&self.x_under, &self.x_bar),
        }
    }
}

/// Utility of agent `i` consuming `x` of `firm`'s product, given everyone's
/// consumption in `state`:
/// `αx − x²/2 + x Σ_j g_ij (own_j + β rival_j) − p x`.
pub fn agent_utility(
    i: usize,
    x: f64,
    state: &ConsumptionState,
    graph: &WeightedDigraph,
    params: &MarketParams,
    firm: Firm,
) -> Result<f64, DynamicsError> {
    let n = graph.node_count();
    if i >= n {
        return Err(DynamicsError::NodeOutOfRange { node: i, n });
    }
    let (own, rival) = state.own_and_rival(firm);
    let externality: f64 = graph
        .influencers(i)
        .map(|(j, g)| g * (own[j] + params.beta * rival[j]))
        .sum();
    Ok(params.alpha * x - 0.5 * x * x + x * externality - params.price * x)
}

fn check_dims(graph: &WeightedDigraph, len: usize) -> Result<(), DynamicsError> {
    if len != graph.node_count() {
        return Err(DynamicsError::Dimension {
            expected: graph.node_count(),
            got: len,
        });
    }
    Ok(())
}

pub fn best_response_step(
    state: &ConsumptionState,
    graph: &WeightedDigraph,
    params: &MarketParams,
) -> Result<ConsumptionState, DynamicsError> {
    check_dims(graph, state.x_bar.len())?;
    check_dims(graph, state.x_under.len())?;
    let n = graph.node_count();
    let mut g_bar = vec![0.0; n];
    let mut g_under = vec![0.0; n];
    graph.mul_vec(&state.x_bar, &mut g_bar);
    graph.mul_vec(&state.x_under, &mut g_under);
    let base = params.surplus();
    let k = state.k + 1;
    let mut next = ConsumptionState {
        x_bar: vec![0.0; n],
        x_under: vec![0.0; n],
        k,
    };
    for i in 0..n {
        next.x_bar[i] = base + g_bar[i] + params.beta * g_under[i];
        next.x_under[i] = base + g_under[i] + params.beta * g_bar[i];
        for value in [next.x_bar[i], next.x_under[i]] {
            if value < 0.0 || value.is_nan() {
                return Err(DynamicsError::NegativeConsumption { node: i, k, value });
            }
        }
    }
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Horizon {
    Fixed(usize),
    /// Run until the certified tail bound drops to `tail_tol`.
    Auto {
        tail_tol: f64,
        max_horizon: usize,
    },
}

impl Default for Horizon {
    fn default() -> Self {
        Horizon::Auto {
            tail_tol: 1e-10,
            max_horizon: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// States `k = 0..=horizon`; empty in sums-only mode.
    pub states: Vec<ConsumptionState>,
    pub horizon: usize,
    /// `Σ_{k=1}^{T} δᵏ x̄(k)`.
    pub discounted_bar: Vec<f64>,
    /// `Σ_{k=1}^{T} δᵏ x̲(k)`.
    pub discounted_under: Vec<f64>,
    /// Certified bound on `‖Σ_{k>T} δᵏ x(k)‖∞` over both products.
    pub tail_bound: f64,
    /// Contraction rate of the weighted norm behind `tail_bound`.
    pub certificate_rate: f64,
}

/// Weighted-norm tail bound for the discounted dynamics.
///
/// With `e_k = δᵏ z(k)` and `z = (x̄, x̲)`, `e_k = δᵏ r + δA e_{k−1}`. If
/// `δ(1+β) G w ≤ q w` then `δA` contracts `‖·‖_(w,w)` by `q`, and summing the
/// resulting recursion from `k = T` gives
/// `Σ_{k>T} ‖e_k‖ ≤ E_T q/(1−q) + R δ^{T+1}/((1−δ)(1−q))`.
struct TailCertificate {
    cert: ContractionCertificate,
    delta: f64,
    /// `‖r‖_w` with `r = (α−p)1`.
    forcing: f64,
}

impl TailCertificate {
    fn new(graph: &WeightedDigraph, params: &MarketParams) -> Result<Self, DynamicsError> {
        let scale = params.delta * (1.0 + params.beta);
        let op = ScaledAdjacency::forward(graph, scale);
        let radius = spectral::validate_assumptions(graph, params).spectral_radius;
        let cert =
            ContractionCertificate::for_operator(&op, scale * radius, SolverOptions::default())
                .ok_or(DynamicsError::NoCertificate)?;
        let forcing = params.surplus().abs() * cert.norm(&vec![1.0; graph.node_count()]);
        Ok(Self {
            cert,
            delta: params.delta,
            forcing,
        })
    }

    fn bound(&self, state: &ConsumptionState) -> f64 {
        if self.cert.weights.is_empty() {
            return 0.0;
        }
        let q = self.cert.rate;
        let scale = self.delta.powi(state.k as i32);
        let e_t = scale
            * self
                .cert
                .norm(&state.x_bar)
                .max(self.cert.norm(&state.x_under));
        let tail = e_t * q / (1.0 - q)
            + self.forcing * self.delta.powi(state.k as i32 + 1) / ((1.0 - self.delta) * (1.0 - q));
        tail * self.cert.max_weight()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulateOptions {
    pub horizon: Horizon,
    /// Keep every state (memory `O(nT)`); otherwise only the sums.
    pub store_states: bool,
}

impl Default for SimulateOptions {
    fn default() -> Self {
        Self {
            horizon: Horizon::default(),
            store_states: true,
        }
    }
}

pub fn simulate(
    graph: &WeightedDigraph,
    params: &MarketParams,
    seeding: &SeedingPair,
    opts: SimulateOptions,
) -> Result<Trajectory, DynamicsError> {
    spectral::validate_assumptions(graph, params).require()?;
    check_dims(graph, seeding.len())?;
    let tail = TailCertificate::new(graph, params)?;
    let n = graph.node_count();

    let mut state = ConsumptionState::initial(seeding);
    let mut states = Vec::new();
    if opts.store_states {
        states.push(state.clone());
    }
    let mut sum_bar = vec![0.0; n];
    let mut sum_under = vec![0.0; n];
    let mut weight = 1.0;
    loop {
        let done = match opts.horizon {
            Horizon::Fixed(t) => state.k >= t,
            Horizon::Auto {
                tail_tol,
                max_horizon,
            } => {
                // The bound at k = 0 would ignore nothing yet; always take a step.
                if state.k > 0 && tail.bound(&state) <= tail_tol {
                    true
                } else if state.k >= max_horizon {
                    return Err(DynamicsError::HorizonExhausted {
                        horizon: state.k,
                        bound: tail.bound(&state),
                        tail_tol,
                    });
                } else {
                    false
                }
            }
        };
        if done {
            break;
        }
        state = best_response_step(&state, graph, params)?;
        weight *= params.delta;
        for i in 0..n {
            sum_bar[i] += weight * state.x_bar[i];
            sum_under[i] += weight * state.x_under[i];
        }
        if opts.store_states {
            states.push(state.clone());
        }
    }
    Ok(Trajectory {
        horizon: state.k,
        tail_bound: tail.bound(&state),
        certificate_rate: tail.cert.rate,
        states,
        discounted_bar: sum_bar,
        discounted_under: sum_under,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;

    fn params() -> MarketParams {
        MarketParams::new(2.0, 1.0, 0.5, 0.5).unwrap()
    }

    fn two_node() -> WeightedDigraph {
        WeightedDigraph::new(2, [Edge::new(0, 1, 0.5)]).unwrap()
    }

    #[test]
    fn utility_examples() {
        let g = WeightedDigraph::empty(1);
        let state = ConsumptionState {
            x_bar: vec![0.0],
            x_under: vec![0.0],
            k: 0,
        };
        let p = params();
        assert_eq!(
            agent_utility(0, p.surplus(), &state, &g, &p, Firm::A).unwrap(),
            0.5
        );
        assert_eq!(agent_utility(0, 0.0, &state, &g, &p, Firm::A).unwrap(), 0.0);

        let state = ConsumptionState {
            x_bar: vec![0.0, 2.0],
            x_under: vec![0.0, 0.0],
            k: 0,
        };
        assert_eq!(
            agent_utility(0, 2.0, &state, &two_node(), &p, Firm::A).unwrap(),
            2.0
        );
        assert!(matches!(
            agent_utility(2, 1.0, &state, &two_node(), &p, Firm::A),
            Err(DynamicsError::NodeOutOfRange { node: 2, n: 2 })
        ));
    }

    #[test]
    fn step_examples() {
        let p = params();
        let state = ConsumptionState {
            x_bar: vec![0.0, 2.0],
            x_under: vec![0.0, 0.0],
            k: 0,
        };
        let next = best_response_step(&state, &two_node(), &p).unwrap();
        assert_eq!(next.x_bar, vec![2.0, 1.0]);
        assert_eq!(next.x_under, vec![1.5, 1.0]);
        assert_eq!(next.k, 1);

        let g = WeightedDigraph::empty(3);
        let fixed = ConsumptionState {
            x_bar: vec![1.0; 3],
            x_under: vec![1.0; 3],
            k: 4,
        };
        let next = best_response_step(&fixed, &g, &p).unwrap();
        assert_eq!(next.x_bar, fixed.x_bar);
        assert_eq!(next.x_under, fixed.x_under);
    }

    #[test]
    fn negative_consumption_is_an_error() {
        // alpha < price violates the nonnegativity guarantee.
        let p = MarketParams {
            alpha: 0.5,
            price: 1.0,
            beta: 0.5,
            delta: 0.5,
        };
        let state = ConsumptionState::initial(&SeedingPair::zero(2));
        assert!(matches!(
            best_response_step(&state, &two_node(), &p),
            Err(DynamicsError::NegativeConsumption { .. })
        ));
    }

    #[test]
    fn empty_graph_geometric_sums() {
        let p = params();
        let traj = simulate(
            &WeightedDigraph::empty(3),
            &p,
            &SeedingPair::zero(3),
            SimulateOptions {
                horizon: Horizon::Fixed(5),
                store_states: true,
            },
        )
        .unwrap();
        assert_eq!(traj.states.len(), 6);
        assert!(traj.states[1..].iter().all(|s| s.x_bar == vec![1.0; 3]));
        let expected = (0.5 - 0.5_f64.powi(6)) / 0.5;
        for s in &traj.discounted_bar {
            assert!((s - expected).abs() < 1e-15);
        }
        // Omitted mass Σ_{k>5} 0.5ᵏ = 0.5⁵ must be covered.
        assert!(traj.tail_bound >= 0.5_f64.powi(5) - 1e-15);
    }

    #[test]
    fn auto_horizon_meets_tail_tolerance() {
        let traj = simulate(
            &two_node(),
            &params(),
            &SeedingPair::new(vec![0.0, 1.0], vec![0.0, 0.0]).unwrap(),
            SimulateOptions {
                horizon: Horizon::Auto {
                    tail_tol: 1e-10,
                    max_horizon: 10_000,
                },
                store_states: false,
            },
        )
        .unwrap();
        assert!(traj.tail_bound <= 1e-10);
        assert!(traj.states.is_empty());
        assert!(traj.horizon > 0);
    }

    #[test]
    fn seeding_validation() {
        assert!(SeedingPair::new(vec![1.0, -0.1], vec![0.0, 0.0]).is_err());
        assert!(SeedingPair::new(vec![1.0], vec![0.0, 0.0]).is_err());
        assert!(SeedingPair::new(vec![f64::NAN], vec![0.0]).is_err());
    }
}
