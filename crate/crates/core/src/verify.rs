//! Cross-checks of every closed form against an independent route:
//! simulation, finite differences, random deviations, numeric
//! maximization, truncated Neumann series and the core-periphery formulas.
//!
//! Each check takes its randomness from a seed, one derived seed per
//! candidate, so reports are reproducible regardless of thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::asr;
use crate::centrality::{self, neumann_oracle, neumann_tail_bound};
use crate::dynamics::{self, Firm, Horizon, SeedingPair, SimulateOptions};
use crate::game::{GameModel, SeedSet};
use crate::graph::{
    generate_core_periphery, CorePeripheryParams, Edge, MarketParams, WeightedDigraph,
};
use crate::linsolve::SolverOptions;
use crate::spectral;

pub mod tolerance {
    /// Closed form vs simulation, per entry.
    pub const SIMULATION_ABS: f64 = 1e-8;
    /// Certified truncation error of the simulated sums.
    pub const SIMULATION_TAIL: f64 = 1e-10;
    /// Central finite-difference step.
    pub const FD_STEP: f64 = 1e-4;
    pub const GRADIENT_REL: f64 = 1e-5;
    /// Largest improvement a random deviation from Nash may show.
    pub const NASH_IMPROVEMENT: f64 = 1e-9;
    pub const DEVIATION_GAIN_ABS: f64 = 1e-8;
    /// Graphs up to this size enter the deviation-gain check.
    pub const DEVIATION_GAIN_MAX_N: usize = 20;
    pub const ANALYTIC_REL: f64 = 1e-10;
    /// Certified Neumann tail.
    pub const NEUMANN_TAIL: f64 = 1e-8;
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestCase {
    pub name: String,
    pub graph: WeightedDigraph,
    pub params: MarketParams,
}

/// A random graph on `n ≤ 50` agents with random market parameters, scaled
/// so that `δ(1+β)ρ(G)` lands in `[0.2, 0.9]`.
pub fn random_case(index: usize, seed: u64) -> TestCase {
    let mut rng =
        ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ index as u64);
    let n = if index.is_multiple_of(2) {
        rng.gen_range(2..=20)
    } else {
        rng.gen_range(21..=50)
    };
    let density: f64 = rng.gen_range(0.05..0.4);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.gen_bool(density) {
                edges.push(Edge::new(i, j, rng.gen_range(0.05..1.0)));
            }
        }
    }
    let price: f64 = rng.gen_range(0.5..2.0);
    let params = MarketParams::new(
        price + rng.gen_range(0.0..2.0),
        price,
        rng.gen_range(0.0..0.9),
        rng.gen_range(0.2..0.9),
    )
    .expect("sampled parameters are in range");
    let raw = WeightedDigraph::new(n, edges).expect("sampled edges are valid");
    let radius = spectral::spectral_radius(&raw, 1e-12, 200_000)
        .map(|e| e.radius)
        .unwrap_or_else(|e| e.certified_upper());
    let target: f64 = rng.gen_range(0.2..0.9);
    let (_, high) = params.attenuations();
    let graph = if radius > 0.0 {
        let scale = target / (high * radius);
        WeightedDigraph::new(
            n,
            raw.edges()
                .iter()
                .map(|e| Edge::new(e.influenced, e.influencer, e.weight * scale)),
        )
        .expect("scaling keeps weights valid")
    } else {
        raw
    };
    TestCase {
        name: format!("random-{index:02}"),
        graph,
        params,
    }
}

/// The bundled suite: 20 random graphs, core-periphery(3, 4, 0.5), the
/// two-agent graph and an edgeless graph.
pub fn bundled_cases(seed: u64) -> Vec<TestCase> {
    let default_market = MarketParams::new(2.0, 1.0, 0.5, 0.5).expect("valid");
    let mut cases: Vec<TestCase> = (0..20).map(|i| random_case(i, seed)).collect();
    cases.push(TestCase {
        name: "core-periphery-3-4-0.5".into(),
        graph: generate_core_periphery(&CorePeripheryParams::new(3, 4, 0.5).expect("valid"))
            .expect("valid"),
        params: default_market,
    });
    cases.push(TestCase {
        name: "two-agent".into(),
        graph: WeightedDigraph::new(2, [Edge::new(0, 1, 0.5)]).expect("valid"),
        params: default_market,
    });
    cases.push(TestCase {
        name: "edgeless-5".into(),
        graph: WeightedDigraph::empty(5),
        params: default_market,
    });
    cases
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub check: String,
    pub case: String,
    pub passed: bool,
    pub max_error: f64,
    pub tolerance: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub passed: bool,
    pub outcomes: Vec<CheckOutcome>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub seed: u64,
    pub deviations: usize,
    pub gradient_seedings: usize,
    pub gain_sets: usize,
    pub solver: SolverOptions,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: 1,
            deviations: 10_000,
            gradient_seedings: 10,
            gain_sets: 10,
            solver: SolverOptions::default(),
        }
    }
}

fn outcome(
    check: &str,
    case: &str,
    max_error: f64,
    tolerance: f64,
    samples: usize,
) -> CheckOutcome {
    CheckOutcome {
        check: check.into(),
        case: case.into(),
        passed: max_error <= tolerance,
        max_error,
        tolerance,
        samples,
    }
}

fn failed(check: &str, case: &str, tolerance: f64) -> CheckOutcome {
    CheckOutcome {
        check: check.into(),
        case: case.into(),
        passed: false,
        max_error: f64::INFINITY,
        tolerance,
        samples: 0,
    }
}

fn candidate_rng(seed: u64, salt: u64, index: usize) -> ChaCha8Rng {
    let mut s = ChaCha8Rng::seed_from_u64(seed ^ salt.rotate_left(17));
    s.set_stream(index as u64);
    s
}

fn case_salt(case: &TestCase) -> u64 {
    case.name.bytes().fold(0xcbf2_9ce4_8422_2325_u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x100_0000_01b3)
    })
}

fn random_seeding(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> SeedingPair {
    SeedingPair {
        s_bar: (0..n).map(|_| rng.gen_range(lo..hi)).collect(),
        s_under: (0..n).map(|_| rng.gen_range(lo..hi)).collect(),
    }
}

/// Simulated discounted sums against the closed-form solve, for the Nash
/// seeding and one random seeding. Returns (max discrepancy, max tail bound).
pub fn simulation_discrepancy(
    case: &TestCase,
    model: &GameModel<'_>,
    seed: u64,
) -> Result<(f64, f64), String> {
    let n = case.graph.node_count();
    let mut rng = candidate_rng(seed, case_salt(case), 0);
    let seedings = [model.nash_seeding(), random_seeding(&mut rng, n, 0.0, 3.0)];
    let mut worst = 0.0_f64;
    let mut worst_tail = 0.0_f64;
    for seeding in &seedings {
        let traj = dynamics::simulate(
            &case.graph,
            &case.params,
            seeding,
            SimulateOptions {
                horizon: Horizon::Auto {
                    tail_tol: tolerance::SIMULATION_TAIL,
                    max_horizon: 1_000_000,
                },
                store_states: false,
            },
        )
        .map_err(|e| e.to_string())?;
        let (bar, under) = model
            .discounted_consumption(seeding)
            .map_err(|e| e.to_string())?;
        for (x, y) in traj
            .discounted_bar
            .iter()
            .zip(&bar)
            .chain(traj.discounted_under.iter().zip(&under))
        {
            worst = worst.max((x - y).abs());
        }
        worst_tail = worst_tail.max(traj.tail_bound);
    }
    Ok((worst, worst_tail))
}

/// Worst relative gap between central differences of the net utility and
/// the analytic gradient, plus whether the gradient stayed bit-identical
/// when the rival's seeding was redrawn.
pub fn gradient_discrepancy(
    case: &TestCase,
    model: &GameModel<'_>,
    seedings: usize,
    seed: u64,
) -> (f64, bool) {
    let n = case.graph.node_count();
    let h = tolerance::FD_STEP;
    let mut worst = 0.0_f64;
    let mut rival_free = true;
    for t in 0..seedings {
        let mut rng = candidate_rng(seed, case_salt(case) ^ 0x6772_6164, t);
        let base = random_seeding(&mut rng, n, 2.0 * h, 3.0);
        for firm in [Firm::A, Firm::B] {
            let grad = model.utility_gradient(&base, firm);
            let mut redrawn = base.clone();
            *redrawn.of_mut(firm.rival()) = (0..n).map(|_| rng.gen_range(0.0..5.0)).collect();
            rival_free &= model.utility_gradient(&redrawn, firm) == grad;
            for (i, &g) in grad.iter().enumerate() {
                let mut plus = base.clone();
                plus.of_mut(firm)[i] += h;
                let mut minus = base.clone();
                minus.of_mut(firm)[i] -= h;
                let (Ok(up), Ok(down)) = (
                    model.net_utility(&plus, firm),
                    model.net_utility(&minus, firm),
                ) else {
                    return (f64::INFINITY, rival_free);
                };
                let fd = (up - down) / (2.0 * h);
                worst = worst.max((fd - g).abs() / g.abs().max(1.0));
            }
        }
    }
    (worst, rival_free)
}

fn deviation(rng: &mut ChaCha8Rng, nash: &[f64], kind: usize) -> Vec<f64> {
    let top = nash.iter().copied().fold(1.0, f64::max);
    match kind % 3 {
        0 => nash.iter().map(|_| rng.gen_range(0.0..2.0 * top)).collect(),
        1 => {
            let scale = 10f64.powf(rng.gen_range(-6.0..0.0)) * top;
            nash.iter()
                .map(|&s| (s + scale * rng.gen_range(-1.0..1.0)).max(0.0))
                .collect()
        }
        _ => {
            let mut v = nash.to_vec();
            let i = rng.gen_range(0..v.len());
            v[i] = rng.gen_range(0.0..2.0 * v[i] + 1.0);
            v
        }
    }
}

/// Largest net-utility improvement over Nash among random unilateral
/// deviations, over both firms.
pub fn nash_max_improvement(
    case: &TestCase,
    model: &GameModel<'_>,
    deviations: usize,
    seed: u64,
) -> f64 {
    let nash = model.nash_seeding();
    if nash.is_empty() {
        return 0.0;
    }
    let reference = [
        model.net_utility(&nash, Firm::A).unwrap_or(f64::NAN),
        model.net_utility(&nash, Firm::B).unwrap_or(f64::NAN),
    ];
    let salt = case_salt(case) ^ 0x6e61_7368;
    let improvement = |t: usize| -> f64 {
        let firm = if t.is_multiple_of(2) {
            Firm::A
        } else {
            Firm::B
        };
        let mut rng = candidate_rng(seed, salt, t);
        let mut candidate = nash.clone();
        *candidate.of_mut(firm) = deviation(&mut rng, nash.of(firm), t / 2);
        let reference = reference[t % 2];
        model
            .net_utility(&candidate, firm)
            .map_or(f64::INFINITY, |u| u - reference)
    };
    let total = 2 * deviations;
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..total)
            .into_par_iter()
            .map(improvement)
            .reduce(|| f64::NEG_INFINITY, f64::max)
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..total)
            .map(improvement)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Projected gradient ascent on `s ↦ U(s, rival)` over `s ≥ 0`, with
/// finite-difference gradients of the net utility. Returns the maximum found.
pub fn numeric_best_response(
    model: &GameModel<'_>,
    start: &SeedingPair,
    firm: Firm,
) -> Result<f64, String> {
    let h = 1e-3;
    let step = 0.5;
    let utility = |s: &SeedingPair| model.net_utility(s, firm).map_err(|e| e.to_string());
    let mut current = start.clone();
    let mut value = utility(&current)?;
    for _ in 0..500 {
        let mut grad = vec![0.0; current.len()];
        for (i, g) in grad.iter_mut().enumerate() {
            let mut plus = current.clone();
            plus.of_mut(firm)[i] += h;
            let up = utility(&plus)?;
            let s_i = current.of(firm)[i];
            *g = if s_i >= h {
                let mut minus = current.clone();
                minus.of_mut(firm)[i] -= h;
                (up - utility(&minus)?) / (2.0 * h)
            } else {
                (up - value) / h
            };
        }
        let mut next = current.clone();
        let mut moved = 0.0_f64;
        for (s, g) in next.of_mut(firm).iter_mut().zip(&grad) {
            let updated = (*s + step * g).max(0.0);
            moved = moved.max((updated - *s).abs());
            *s = updated;
        }
        current = next;
        value = utility(&current)?;
        if moved < 1e-11 {
            break;
        }
    }
    Ok(value)
}

/// Worst gap between the numerically maximized deviation gain and
/// `½p² Σ_{i∉S} c_i²` over random candidate sets.
pub fn deviation_gain_discrepancy(
    case: &TestCase,
    model: &GameModel<'_>,
    sets: usize,
    seed: u64,
) -> Result<f64, String> {
    let n = case.graph.node_count();
    let mut worst = 0.0_f64;
    for t in 0..sets {
        let mut rng = candidate_rng(seed, case_salt(case) ^ 0x6761_696e, t);
        let own =
            SeedSet::new(n, (0..n).filter(|_| rng.gen_bool(0.5))).map_err(|e| e.to_string())?;
        let rival =
            SeedSet::new(n, (0..n).filter(|_| rng.gen_bool(0.5))).map_err(|e| e.to_string())?;
        let firm = if t % 2 == 0 { Firm::A } else { Firm::B };
        let mut candidate = SeedingPair::zero(n);
        *candidate.of_mut(firm) = model.restricted_seeding(&own);
        *candidate.of_mut(firm.rival()) = model.restricted_seeding(&rival);
        let base = model
            .net_utility(&candidate, firm)
            .map_err(|e| e.to_string())?;
        let best = numeric_best_response(model, &candidate, firm)?;
        worst = worst.max(((best - base) - model.best_response_gain(&own)).abs());
    }
    Ok(worst)
}

/// Certified `‖Katz − Neumann(T)‖∞` check at both attenuations. Returns the
/// worst excess of the observed gap over the certified tail, and the worst tail.
pub fn katz_oracle_gap(case: &TestCase, solver: &SolverOptions) -> Result<(f64, f64), String> {
    let mut worst_excess = f64::NEG_INFINITY;
    let mut worst_tail = 0.0_f64;
    let (low, high) = case.params.attenuations();
    for att in [low, high] {
        let katz =
            centrality::katz_bonacich(&case.graph, att, solver).map_err(|e| e.to_string())?;
        let mut terms = 32;
        let tail = loop {
            let bound = neumann_tail_bound(&case.graph, att, terms)
                .ok_or_else(|| "no contraction certificate".to_string())?;
            if bound < tolerance::NEUMANN_TAIL || terms > 1 << 20 {
                break bound;
            }
            terms *= 2;
        };
        let series = neumann_oracle(&case.graph, att, terms);
        let gap = katz
            .values
            .iter()
            .zip(&series)
            .map(|(k, s)| (k - s).abs())
            .fold(0.0, f64::max);
        // Solver residual and rounding sit on top of the certified tail.
        worst_excess = worst_excess.max(gap - tail - 1e-9);
        worst_tail = worst_tail.max(tail);
    }
    Ok((worst_excess, worst_tail))
}

/// Relative error of the closed-form core-periphery values against the
/// numeric solve, worst over the leader/follower entries.
pub fn core_periphery_analytic_error(
    cp: &CorePeripheryParams,
    market: &MarketParams,
    solver: &SolverOptions,
) -> Result<f64, String> {
    let graph = generate_core_periphery(cp).map_err(|e| e.to_string())?;
    let analytic = asr::analytic_core_periphery(cp, market).map_err(|e| e.to_string())?;
    let bundle =
        centrality::biproduct_centrality(&graph, market, solver).map_err(|e| e.to_string())?;
    let leaders = cp.role_models();
    let rel = |x: f64, y: f64| (x - y).abs() / y.abs();
    let mut worst = 0.0_f64;
    for v in 0..graph.node_count() {
        let (a, b, s) = if leaders.contains(&v) {
            (analytic.a_leader, analytic.b_leader, analytic.seed_leader)
        } else {
            (
                analytic.a_follower,
                analytic.b_follower,
                analytic.seed_follower,
            )
        };
        worst = worst
            .max(rel(bundle.a[v], a))
            .max(rel(bundle.b[v], b))
            .max(rel(market.price * bundle.c_new[v], s));
    }
    Ok(worst)
}

pub const CORE_PERIPHERY_GRID: ([usize; 3], [usize; 4], [f64; 2]) =
    ([2, 3, 5], [2, 4, 10, 100], [0.1, 0.5]);

pub fn run_suite(cases: &[TestCase], opts: &VerifyOptions) -> VerifyReport {
    let mut outcomes = Vec::new();
    for case in cases {
        let name = case.name.as_str();
        let model = match GameModel::new(&case.graph, &case.params, &opts.solver) {
            Ok(m) => m,
            Err(_) => {
                outcomes.push(failed("model", name, 0.0));
                continue;
            }
        };

        match simulation_discrepancy(case, &model, opts.seed) {
            Ok((gap, tail)) => {
                outcomes.push(outcome(
                    "simulation-vs-closed-form",
                    name,
                    gap,
                    tolerance::SIMULATION_ABS,
                    2,
                ));
                outcomes.push(outcome(
                    "simulation-tail-bound",
                    name,
                    tail,
                    tolerance::SIMULATION_TAIL,
                    2,
                ));
            }
            Err(_) => outcomes.push(failed(
                "simulation-vs-closed-form",
                name,
                tolerance::SIMULATION_ABS,
            )),
        }

        let (grad_gap, rival_free) =
            gradient_discrepancy(case, &model, opts.gradient_seedings, opts.seed);
        outcomes.push(outcome(
            "gradient-finite-difference",
            name,
            grad_gap,
            tolerance::GRADIENT_REL,
            opts.gradient_seedings,
        ));
        outcomes.push(outcome(
            "gradient-rival-independent",
            name,
            if rival_free { 0.0 } else { 1.0 },
            0.0,
            opts.gradient_seedings,
        ));

        let improvement = nash_max_improvement(case, &model, opts.deviations, opts.seed);
        outcomes.push(outcome(
            "nash-deviations",
            name,
            improvement.max(0.0),
            tolerance::NASH_IMPROVEMENT,
            2 * opts.deviations,
        ));

        if case.graph.node_count() <= tolerance::DEVIATION_GAIN_MAX_N {
            match deviation_gain_discrepancy(case, &model, opts.gain_sets, opts.seed) {
                Ok(gap) => outcomes.push(outcome(
                    "deviation-gain-identity",
                    name,
                    gap,
                    tolerance::DEVIATION_GAIN_ABS,
                    opts.gain_sets,
                )),
                Err(_) => outcomes.push(failed(
                    "deviation-gain-identity",
                    name,
                    tolerance::DEVIATION_GAIN_ABS,
                )),
            }
        }

        match katz_oracle_gap(case, &opts.solver) {
            Ok((excess, tail)) => {
                outcomes.push(outcome("katz-vs-neumann", name, excess.max(0.0), 0.0, 2));
                outcomes.push(outcome(
                    "neumann-certified-tail",
                    name,
                    tail,
                    tolerance::NEUMANN_TAIL,
                    2,
                ));
            }
            Err(_) => outcomes.push(failed("katz-vs-neumann", name, 0.0)),
        }
    }

    let (chis, ms, gs) = CORE_PERIPHERY_GRID;
    let market = MarketParams::new(2.0, 1.0, 0.5, 0.5).expect("valid");
    for &chi in &chis {
        for &m in &ms {
            for &g in &gs {
                let cp = CorePeripheryParams { chi, m, g };
                let label = format!("core-periphery-{chi}-{m}-{g}");
                match core_periphery_analytic_error(&cp, &market, &opts.solver) {
                    Ok(err) => outcomes.push(outcome(
                        "core-periphery-analytic",
                        &label,
                        err,
                        tolerance::ANALYTIC_REL,
                        1,
                    )),
                    Err(_) => outcomes.push(failed(
                        "core-periphery-analytic",
                        &label,
                        tolerance::ANALYTIC_REL,
                    )),
                }
            }
        }
    }

    VerifyReport {
        seed: opts.seed,
        passed: outcomes.iter().all(|o| o.passed),
        outcomes,
    }
}
