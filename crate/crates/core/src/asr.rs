//! Asymptotic sparse-realizability diagnostics.
//!
//! A family of ε-equilibria with `O(1)` seeded agents is sparse-realizable
//! when `ε → 0`, which happens exactly when the fraction of squared
//! bi-product centrality left outside the seeded sets vanishes. Everything
//! here works on finite schedules of instance sizes, so verdicts are
//! heuristics with explicit decision rules, never proofs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::centrality::{self, CentralityBundle, CentralityError};
use crate::game::{GameError, GameModel, SeedSet};
use crate::graph::{
    generate_bounded_outdegree_family, generate_core_periphery, CorePeripheryParams, GraphError,
    MarketParams, WeightedDigraph,
};
use crate::linsolve::SolverOptions;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AsrError {
    #[error("spectral condition delta(1+beta)g < 1 violated: {delta}*(1+{beta})*{g} = {value}")]
    SpectralCondition {
        delta: f64,
        beta: f64,
        g: f64,
        value: f64,
    },
    #[error("invalid family: {0}")]
    InvalidFamily(String),
    #[error("instance of size {size} failed: {source}")]
    Instance {
        size: usize,
        #[source]
        source: GameError,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Centrality(#[from] CentralityError),
}

/// `Σ_{i∉S} c_i² / Σ_i c_i²`.
pub fn sparsity_residual(bundle: &CentralityBundle, set: &SeedSet) -> f64 {
    let (mut outside, mut total) = (0.0, 0.0);
    for (v, c) in bundle.c_new.iter().enumerate() {
        total += c * c;
        if !set.contains(v) {
            outside += c * c;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        outside / total
    }
}

/// Closed-form centralities of the core-periphery network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorePeripheryAnalytics {
    pub chi: usize,
    pub m: usize,
    pub g: f64,
    pub a_follower: f64,
    pub b_follower: f64,
    pub a_leader: f64,
    pub b_leader: f64,
    pub c_leader: f64,
    /// Equilibrium seeding of each role model.
    pub seed_leader: f64,
    /// Equilibrium seeding of each periphery agent, `p`.
    pub seed_follower: f64,
}

/// Accepts `m = 1` (role models only), which the generator does not.
pub fn analytic_core_periphery(
    params: &CorePeripheryParams,
    market: &MarketParams,
) -> Result<CorePeripheryAnalytics, AsrError> {
    let CorePeripheryParams { chi, m, g } = *params;
    if chi < 1 || m < 1 || !(g > 0.0 && g.is_finite()) {
        return Err(AsrError::InvalidFamily(format!(
            "core-periphery needs chi >= 1, m >= 1, g > 0 (got chi={chi}, m={m}, g={g})"
        )));
    }
    let (low, high) = market.attenuations();
    if high * g >= 1.0 {
        return Err(AsrError::SpectralCondition {
            delta: market.delta,
            beta: market.beta,
            g,
            value: high * g,
        });
    }
    let leader = |att: f64| {
        let x = att * g;
        (1.0 + (m as f64 - 1.0) * x) / (1.0 - x)
    };
    let a_leader = leader(low);
    let b_leader = leader(high);
    let c_leader = 0.5 * (a_leader + b_leader);
    Ok(CorePeripheryAnalytics {
        chi,
        m,
        g,
        a_follower: 1.0,
        b_follower: 1.0,
        a_leader,
        b_leader,
        c_leader,
        seed_leader: market.price * c_leader,
        seed_follower: market.price,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FamilyKind {
    /// Schedule values are community sizes `m`.
    CorePeriphery { chi: usize, g: f64 },
    /// Schedule values are node counts `n`.
    BoundedOutdegree { d: usize, weight: f64, seed: u64 },
    /// Schedule values are the node counts of the supplied graphs.
    #[serde(skip)]
    Custom(Vec<WeightedDigraph>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub kind: FamilyKind,
    pub schedule: Vec<usize>,
    pub market: MarketParams,
}

impl FamilySpec {
    pub fn validate(&self) -> Result<(), AsrError> {
        if self.schedule.len() < 3 {
            return Err(AsrError::InvalidFamily(
                "schedule needs at least 3 sizes".into(),
            ));
        }
        if self.schedule.windows(2).any(|w| w[0] >= w[1]) {
            return Err(AsrError::InvalidFamily(
                "schedule must be strictly increasing".into(),
            ));
        }
        if let FamilyKind::Custom(graphs) = &self.kind {
            let sizes: Vec<usize> = graphs.iter().map(|g| g.node_count()).collect();
            if sizes != self.schedule {
                return Err(AsrError::InvalidFamily(
                    "custom schedule must list the node counts of the graphs".into(),
                ));
            }
        }
        Ok(())
    }

    fn instance(&self, index: usize) -> Result<WeightedDigraph, AsrError> {
        let size = self.schedule[index];
        Ok(match &self.kind {
            FamilyKind::CorePeriphery { chi, g } => {
                generate_core_periphery(&CorePeripheryParams::new(*chi, size, *g)?)?
            }
            FamilyKind::BoundedOutdegree { d, weight, seed } => {
                generate_bounded_outdegree_family(size, *d, *weight, *seed)?
            }
            FamilyKind::Custom(graphs) => graphs[index].clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum SeedingRule {
    /// The `χ` role models; core-periphery families only.
    RoleModels,
    /// The `k` agents with the largest `c_new²`, ties by id.
    TopK { k: usize },
    /// A fixed list of 0-based agent ids, present in every instance.
    Custom { nodes: Vec<usize> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    DecreasingTowardZero,
    BoundedAway,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    /// Schedule value (`m` or `n`).
    pub size: usize,
    pub n: usize,
    pub set_size_bar: usize,
    pub set_size_under: usize,
    pub residual_bar: f64,
    pub residual_under: f64,
    pub epsilon_paper: f64,
    pub epsilon_exact_a: Option<f64>,
    pub epsilon_exact_b: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsrScanResult {
    pub records: Vec<ScanRecord>,
    /// Verdict on the residual sequence `max(residual_bar, residual_under)`.
    pub verdict: Verdict,
    pub decay_exponent: Option<f64>,
    pub epsilon_verdict: Verdict,
    pub epsilon_decay_exponent: Option<f64>,
    pub rule: String,
}

/// Least-squares slope of `log y` against `log x`; `None` if any value is
/// not positive.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 || xs.len() != ys.len() || xs.iter().chain(ys).any(|&v| v.is_nan() || v <= 0.0)
    {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Decreasing-toward-zero: strictly decreasing with log-log slope ≤ −0.5
/// (or reaching exactly zero). Bounded-away: `min ≥ 0.8 · max`.
pub fn classify(sizes: &[f64], values: &[f64]) -> (Verdict, Option<f64>) {
    let slope = loglog_slope(sizes, values);
    let strictly_decreasing = values.windows(2).all(|w| w[1] < w[0]);
    let hits_zero = values.last().is_some_and(|&v| v == 0.0);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let verdict = if strictly_decreasing && (hits_zero || slope.is_some_and(|s| s <= -0.5)) {
        Verdict::DecreasingTowardZero
    } else if max.is_finite() && min >= 0.8 * max {
        Verdict::BoundedAway
    } else {
        Verdict::Inconclusive
    };
    (verdict, slope)
}

fn resolve_rule(
    rule: &SeedingRule,
    kind: &FamilyKind,
    size: usize,
    model: &GameModel<'_>,
) -> Result<SeedSet, AsrError> {
    let n = model.node_count();
    let invalid = |msg: String| AsrError::InvalidFamily(msg);
    let members: Vec<usize> = match rule {
        SeedingRule::RoleModels => match kind {
            FamilyKind::CorePeriphery { chi, g } => CorePeripheryParams {
                chi: *chi,
                m: size,
                g: *g,
            }
            .role_models(),
            _ => {
                return Err(invalid(
                    "role-model seeding needs a core-periphery family".into(),
                ))
            }
        },
        SeedingRule::TopK { k } => model.greedy_order().into_iter().take(*k).collect(),
        SeedingRule::Custom { nodes } => nodes.clone(),
    };
    SeedSet::new(n, members).map_err(|source| AsrError::Instance { size, source })
}

fn rule_label(rule: &SeedingRule) -> String {
    match rule {
        SeedingRule::RoleModels => "role-models".into(),
        SeedingRule::TopK { k } => format!("top-{k}"),
        SeedingRule::Custom { nodes } => format!("custom({} nodes)", nodes.len()),
    }
}

fn scan_instance(
    spec: &FamilySpec,
    rule: &SeedingRule,
    index: usize,
    opts: &SolverOptions,
) -> Result<ScanRecord, AsrError> {
    let size = spec.schedule[index];
    let graph = spec.instance(index)?;
    let model = GameModel::new(&graph, &spec.market, opts)
        .map_err(|source| AsrError::Instance { size, source })?;
    let set = resolve_rule(rule, &spec.kind, size, &model)?;
    let report = model
        .epsilon_for_sets(&set, &set)
        .map_err(|source| AsrError::Instance { size, source })?;
    Ok(ScanRecord {
        size,
        n: graph.node_count(),
        set_size_bar: set.len(),
        set_size_under: set.len(),
        residual_bar: report.sparsity.residual_bar,
        residual_under: report.sparsity.residual_under,
        epsilon_paper: report.epsilon_paper,
        epsilon_exact_a: report.epsilon_exact_a,
        epsilon_exact_b: report.epsilon_exact_b,
    })
}

pub fn scan_family(
    spec: &FamilySpec,
    rule: &SeedingRule,
    opts: &SolverOptions,
) -> Result<AsrScanResult, AsrError> {
    spec.validate()?;
    let indices: Vec<usize> = (0..spec.schedule.len()).collect();
    #[cfg(feature = "parallel")]
    let records: Result<Vec<_>, _> = {
        use rayon::prelude::*;
        indices
            .par_iter()
            .map(|&i| scan_instance(spec, rule, i, opts))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let records: Result<Vec<_>, _> = indices
        .iter()
        .map(|&i| scan_instance(spec, rule, i, opts))
        .collect();
    let records = records?;

    let ns: Vec<f64> = records.iter().map(|r| r.n as f64).collect();
    let residuals: Vec<f64> = records
        .iter()
        .map(|r| r.residual_bar.max(r.residual_under))
        .collect();
    let epsilons: Vec<f64> = records.iter().map(|r| r.epsilon_paper).collect();
    let (verdict, decay_exponent) = classify(&ns, &residuals);
    let (epsilon_verdict, epsilon_decay_exponent) = classify(&ns, &epsilons);
    Ok(AsrScanResult {
        records,
        verdict,
        decay_exponent,
        epsilon_verdict,
        epsilon_decay_exponent,
        rule: rule_label(rule),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NecessaryConditionReport {
    pub d_max_out: f64,
    /// `1/(δ(1+β))`.
    pub threshold: f64,
    /// `δ(1+β) d_max^out < 1`: no sparse-realizable equilibria exist.
    pub no_asr: bool,
    /// `c_i ≥ 1 + δβ d_i^out` for every agent.
    pub lower_bound_holds: bool,
    /// Largest violation of the lower bound (≤ 0 when it holds).
    pub lower_bound_slack: f64,
    /// `(1 − δβD)/((1 − δ(1+β)D)(1 − δ(1−β)D))`, when `no_asr`.
    pub upper_bound: Option<f64>,
    pub upper_bound_holds: Option<bool>,
    pub max_c_new: f64,
}

/// Agents' bi-product centralities under the printed bounds, with `D = d_max^out`.
pub fn centrality_bounds(params: &MarketParams, d_max_out: f64) -> Option<f64> {
    let (low, high) = params.attenuations();
    if high * d_max_out >= 1.0 {
        return None;
    }
    let numerator = 1.0 - params.delta * params.beta * d_max_out;
    Some(numerator / ((1.0 - high * d_max_out) * (1.0 - low * d_max_out)))
}

/// Relative slack allowed when comparing computed centralities with the
/// printed bounds (solver residual plus rounding).
const BOUND_SLACK: f64 = 1e-9;

pub fn check_necessary_condition(
    graph: &WeightedDigraph,
    params: &MarketParams,
    opts: &SolverOptions,
) -> Result<NecessaryConditionReport, AsrError> {
    let bundle = centrality::biproduct_centrality(graph, params, opts)?;
    Ok(necessary_condition_from(graph, params, &bundle))
}

pub fn necessary_condition_from(
    graph: &WeightedDigraph,
    params: &MarketParams,
    bundle: &CentralityBundle,
) -> NecessaryConditionReport {
    let out = graph.out_degrees();
    let d_max_out = out.iter().copied().fold(0.0, f64::max);
    let (_, high) = params.attenuations();
    let no_asr = high * d_max_out < 1.0;
    let lower_bound_slack = bundle
        .c_new
        .iter()
        .zip(&out)
        .map(|(c, d)| (1.0 + params.delta * params.beta * d) - c)
        .fold(f64::NEG_INFINITY, f64::max);
    let max_c_new = bundle.c_new.iter().copied().fold(0.0, f64::max);
    let upper_bound = if no_asr {
        centrality_bounds(params, d_max_out)
    } else {
        None
    };
    NecessaryConditionReport {
        d_max_out,
        threshold: params.spectral_bound(),
        no_asr,
        lower_bound_holds: lower_bound_slack <= BOUND_SLACK * max_c_new.max(1.0),
        lower_bound_slack: lower_bound_slack.max(f64::MIN),
        upper_bound,
        upper_bound_holds: upper_bound.map(|u| max_c_new <= u * (1.0 + BOUND_SLACK)),
        max_c_new,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearGrowthReport {
    pub sizes: Vec<usize>,
    pub max_c_new: Vec<f64>,
    /// Least-squares slope of `log max c` against `log n`.
    pub growth_exponent: Option<f64>,
    /// `Δ max c / Δ n` between consecutive instances.
    pub increments: Vec<f64>,
    /// Exponent above `1 + SUPERLINEAR_MARGIN`.
    pub superlinear: bool,
}

pub const SUPERLINEAR_MARGIN: f64 = 0.05;

pub fn check_linear_growth(
    graphs: &[WeightedDigraph],
    params: &MarketParams,
    opts: &SolverOptions,
) -> Result<LinearGrowthReport, AsrError> {
    if graphs.len() < 3 {
        return Err(AsrError::InvalidFamily(
            "linear-growth check needs at least 3 instances".into(),
        ));
    }
    let mut sizes = Vec::with_capacity(graphs.len());
    let mut max_c = Vec::with_capacity(graphs.len());
    for g in graphs {
        let bundle = centrality::biproduct_centrality(g, params, opts)?;
        sizes.push(g.node_count());
        max_c.push(bundle.c_new.iter().copied().fold(0.0, f64::max));
    }
    let ns: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
    let growth_exponent = loglog_slope(&ns, &max_c);
    let increments = ns
        .windows(2)
        .zip(max_c.windows(2))
        .map(|(n, c)| (c[1] - c[0]) / (n[1] - n[0]))
        .collect();
    Ok(LinearGrowthReport {
        superlinear: growth_exponent.is_some_and(|e| e > 1.0 + SUPERLINEAR_MARGIN),
        sizes,
        max_c_new: max_c,
        growth_exponent,
        increments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;

    fn market() -> MarketParams {
        MarketParams::new(2.0, 1.0, 0.5, 0.5).unwrap()
    }

    #[test]
    fn residual_extremes_and_example() {
        let cp = CorePeripheryParams::new(3, 4, 0.5).unwrap();
        let g = generate_core_periphery(&cp).unwrap();
        let b = centrality::biproduct_centrality(&g, &market(), &SolverOptions::default()).unwrap();
        assert_eq!(sparsity_residual(&b, &SeedSet::full(12)), 0.0);
        assert_eq!(sparsity_residual(&b, &SeedSet::empty(12)), 1.0);
        let rm = SeedSet::new(12, cp.role_models()).unwrap();
        assert!((sparsity_residual(&b, &rm) - 0.3268409818569904).abs() < 1e-12);
    }

    #[test]
    fn analytic_examples() {
        let cp = CorePeripheryParams::new(3, 4, 0.5).unwrap();
        let a = analytic_core_periphery(&cp, &market()).unwrap();
        assert!((a.a_leader - 11.0 / 7.0).abs() < 1e-15);
        assert!((a.b_leader - 3.4).abs() < 1e-15);
        assert!((a.seed_leader - 87.0 / 35.0).abs() < 1e-15);
        assert_eq!(a.seed_follower, 1.0);

        let flat = MarketParams::new(2.0, 1.0, 0.0, 0.5).unwrap();
        let a = analytic_core_periphery(&cp, &flat).unwrap();
        assert_eq!(a.a_leader, a.b_leader);

        let bad = CorePeripheryParams {
            chi: 3,
            m: 4,
            g: 2.0,
        };
        assert!(matches!(
            analytic_core_periphery(&bad, &market()),
            Err(AsrError::SpectralCondition { .. })
        ));
    }

    #[test]
    fn analytic_single_member_communities_match_a_cycle() {
        let m1 = CorePeripheryParams {
            chi: 4,
            m: 1,
            g: 0.5,
        };
        let a = analytic_core_periphery(&m1, &market()).unwrap();
        assert!((a.a_leader - 1.0 / (1.0 - 0.125)).abs() < 1e-15);
        let cycle =
            WeightedDigraph::new(4, (0..4).map(|r| Edge::new((r + 1) % 4, r, 0.5))).unwrap();
        let katz = centrality::katz_bonacich(&cycle, 0.25, &SolverOptions::default()).unwrap();
        for x in katz.values {
            assert!((x - a.a_leader).abs() < 1e-12);
        }
    }

    #[test]
    fn classify_rules() {
        let sizes = [10.0, 100.0, 1000.0];
        assert_eq!(
            classify(&sizes, &[0.3, 0.06, 0.006]).0,
            Verdict::DecreasingTowardZero
        );
        assert_eq!(
            classify(&sizes, &[0.9, 0.99, 0.999]).0,
            Verdict::BoundedAway
        );
        assert_eq!(classify(&sizes, &[0.9, 0.5, 0.45]).0, Verdict::Inconclusive);
        assert_eq!(
            classify(&sizes, &[0.5, 0.1, 0.0]).0,
            Verdict::DecreasingTowardZero
        );
        let slope = loglog_slope(&sizes, &[1.0, 0.1, 0.01]).unwrap();
        assert!((slope + 1.0).abs() < 1e-12);
    }

    #[test]
    fn family_validation() {
        let spec = FamilySpec {
            kind: FamilyKind::CorePeriphery { chi: 3, g: 0.5 },
            schedule: vec![10, 10, 100],
            market: market(),
        };
        assert!(spec.validate().is_err());
        let spec = FamilySpec {
            schedule: vec![10, 100],
            ..spec
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn role_models_need_core_periphery() {
        let spec = FamilySpec {
            kind: FamilyKind::BoundedOutdegree {
                d: 2,
                weight: 0.1,
                seed: 1,
            },
            schedule: vec![10, 20, 40],
            market: market(),
        };
        assert!(matches!(
            scan_family(&spec, &SeedingRule::RoleModels, &SolverOptions::default()),
            Err(AsrError::InvalidFamily(_))
        ));
    }

    #[test]
    fn necessary_condition_examples() {
        let opts = SolverOptions::default();
        let g = generate_bounded_outdegree_family(100, 2, 0.1, 3).unwrap();
        let r = check_necessary_condition(&g, &market(), &opts).unwrap();
        assert!(r.no_asr);
        assert!((r.d_max_out - 0.2).abs() < 1e-12);
        assert!(r.lower_bound_holds);
        assert_eq!(r.upper_bound_holds, Some(true));

        let r = check_necessary_condition(&WeightedDigraph::empty(5), &market(), &opts).unwrap();
        assert!(r.no_asr);
        assert_eq!(r.d_max_out, 0.0);

        let cp = generate_core_periphery(&CorePeripheryParams::new(3, 1000, 0.5).unwrap()).unwrap();
        let r = check_necessary_condition(&cp, &market(), &opts).unwrap();
        assert!((r.d_max_out - 500.0).abs() < 1e-9);
        assert!(!r.no_asr);
        assert_eq!(r.upper_bound, None);
        assert!(r.lower_bound_holds);
    }

    #[test]
    fn empty_graph_growth_is_flat() {
        let graphs: Vec<_> = [10, 100, 1000]
            .iter()
            .map(|&n| WeightedDigraph::empty(n))
            .collect();
        let r = check_linear_growth(&graphs, &market(), &SolverOptions::default()).unwrap();
        assert_eq!(r.max_c_new, vec![1.0; 3]);
        assert_eq!(r.growth_exponent, Some(0.0));
        assert!(!r.superlinear);
    }
}
