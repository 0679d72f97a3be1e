//! Browser bindings. Each export takes plain numbers and returns a JSON
//! string; the page in `www/` draws the results.

use seeding_core::asr::{analytic_core_periphery, loglog_slope, sparsity_residual};
use seeding_core::dynamics::{simulate, Horizon, SimulateOptions};
use seeding_core::{
    generate_core_periphery, CorePeripheryParams, GameModel, MarketParams, SeedSet, SeedingPair,
    SolverOptions,
};
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn market(alpha: f64, price: f64, beta: f64, delta: f64) -> Result<MarketParams, String> {
    MarketParams::new(alpha, price, beta, delta).map_err(|e| e.to_string())
}

fn to_json(value: &impl Serialize) -> String {
    serde_json::to_string(value).expect("plain data serializes")
}

#[derive(Serialize)]
struct Equilibrium {
    n: usize,
    c_leader: f64,
    c_follower: f64,
    c_leader_closed_form: f64,
    seed_leader: f64,
    seed_follower: f64,
    nash_utility: f64,
    role_model_utility: f64,
    tau: f64,
    epsilon_exact: Option<f64>,
}

pub fn equilibrium_json(
    chi: usize,
    m: usize,
    g: f64,
    alpha: f64,
    price: f64,
    beta: f64,
    delta: f64,
) -> Result<String, String> {
    let market = market(alpha, price, beta, delta)?;
    let cp = CorePeripheryParams::new(chi, m, g).map_err(|e| e.to_string())?;
    let graph = generate_core_periphery(&cp).map_err(|e| e.to_string())?;
    let model =
        GameModel::new(&graph, &market, &SolverOptions::default()).map_err(|e| e.to_string())?;
    let analytics = analytic_core_periphery(&cp, &market).map_err(|e| e.to_string())?;
    let leaders = cp.role_models();
    let set =
        SeedSet::new(graph.node_count(), leaders.iter().copied()).map_err(|e| e.to_string())?;
    let report = model
        .epsilon_for_sets(&set, &set)
        .map_err(|e| e.to_string())?;
    let nash = model.nash_seeding();
    let nash_utility = model.firm_utility(&nash).map_err(|e| e.to_string())?.0.net;
    let c = &model.centrality().c_new;
    Ok(to_json(&Equilibrium {
        n: graph.node_count(),
        c_leader: c[leaders[0]],
        c_follower: c[0],
        c_leader_closed_form: analytics.c_leader,
        seed_leader: price * c[leaders[0]],
        seed_follower: price * c[0],
        nash_utility,
        role_model_utility: report.payoff_a,
        tau: report.epsilon_paper,
        epsilon_exact: report.epsilon_exact_a,
    }))
}

#[derive(Serialize)]
struct CurvePoint {
    m: usize,
    n: usize,
    epsilon: f64,
    epsilon_exact: Option<f64>,
    residual: f64,
}

#[derive(Serialize)]
struct Curve {
    points: Vec<CurvePoint>,
    slope: Option<f64>,
}

/// Role-model epsilon over roughly log-spaced `m` from 2 to `m_max`.
pub fn epsilon_curve_json(
    chi: usize,
    g: f64,
    alpha: f64,
    price: f64,
    beta: f64,
    delta: f64,
    m_max: usize,
) -> Result<String, String> {
    let market = market(alpha, price, beta, delta)?;
    if m_max < 2 {
        return Err(format!("m_max must be at least 2, got {m_max}"));
    }
    let steps = 12;
    let mut sizes: Vec<usize> = (0..=steps)
        .map(|t| (2.0 * (m_max as f64 / 2.0).powf(t as f64 / steps as f64)).round() as usize)
        .collect();
    sizes.dedup();
    let mut points = Vec::new();
    for m in sizes {
        let cp = CorePeripheryParams::new(chi, m, g).map_err(|e| e.to_string())?;
        let graph = generate_core_periphery(&cp).map_err(|e| e.to_string())?;
        let model = GameModel::new(&graph, &market, &SolverOptions::default())
            .map_err(|e| e.to_string())?;
        let set = SeedSet::new(graph.node_count(), cp.role_models()).map_err(|e| e.to_string())?;
        let report = model
            .epsilon_for_sets(&set, &set)
            .map_err(|e| e.to_string())?;
        points.push(CurvePoint {
            m,
            n: graph.node_count(),
            epsilon: report.epsilon_paper,
            epsilon_exact: report.epsilon_exact_a,
            residual: sparsity_residual(model.centrality(), &set),
        });
    }
    // Epsilon first rises with m; fit the decay only.
    let tail: Vec<&CurvePoint> = points.iter().filter(|p| p.m >= 10).collect();
    let ms: Vec<f64> = tail.iter().map(|p| p.m as f64).collect();
    let eps: Vec<f64> = tail.iter().map(|p| p.epsilon).collect();
    let slope = loglog_slope(&ms, &eps);
    Ok(to_json(&Curve { points, slope }))
}

#[derive(Serialize)]
struct Paths {
    total_bar: Vec<f64>,
    total_under: Vec<f64>,
    leader_bar: Vec<f64>,
    follower_bar: Vec<f64>,
}

/// Consumption paths for `steps` rounds. `seeding` is `nash`,
/// `role-models` or `zero`; firm B always plays Nash.
#[allow(clippy::too_many_arguments)]
pub fn trajectory_json(
    chi: usize,
    m: usize,
    g: f64,
    alpha: f64,
    price: f64,
    beta: f64,
    delta: f64,
    steps: usize,
    seeding: &str,
) -> Result<String, String> {
    let market = market(alpha, price, beta, delta)?;
    let cp = CorePeripheryParams::new(chi, m, g).map_err(|e| e.to_string())?;
    let graph = generate_core_periphery(&cp).map_err(|e| e.to_string())?;
    let model =
        GameModel::new(&graph, &market, &SolverOptions::default()).map_err(|e| e.to_string())?;
    let n = graph.node_count();
    let nash = model.nash_seeding();
    let s_bar = match seeding {
        "nash" => nash.s_bar.clone(),
        "role-models" => {
            let set = SeedSet::new(n, cp.role_models()).map_err(|e| e.to_string())?;
            model.restricted_seeding(&set)
        }
        "zero" => vec![0.0; n],
        other => return Err(format!("unknown seeding `{other}`")),
    };
    let pair = SeedingPair::new(s_bar, nash.s_under).map_err(|e| e.to_string())?;
    let traj = simulate(
        &graph,
        &market,
        &pair,
        SimulateOptions {
            horizon: Horizon::Fixed(steps.min(500)),
            store_states: true,
        },
    )
    .map_err(|e| e.to_string())?;
    let leader = cp.role_models()[0];
    let paths = Paths {
        total_bar: traj.states.iter().map(|s| s.x_bar.iter().sum()).collect(),
        total_under: traj.states.iter().map(|s| s.x_under.iter().sum()).collect(),
        leader_bar: traj.states.iter().map(|s| s.x_bar[leader]).collect(),
        follower_bar: traj.states.iter().map(|s| s.x_bar[0]).collect(),
    };
    Ok(to_json(&paths))
}

#[wasm_bindgen]
pub fn equilibrium(
    chi: usize,
    m: usize,
    g: f64,
    alpha: f64,
    price: f64,
    beta: f64,
    delta: f64,
) -> Result<String, JsError> {
    equilibrium_json(chi, m, g, alpha, price, beta, delta).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn epsilon_curve(
    chi: usize,
    g: f64,
    alpha: f64,
    price: f64,
    beta: f64,
    delta: f64,
    m_max: usize,
) -> Result<String, JsError> {
    epsilon_curve_json(chi, g, alpha, price, beta, delta, m_max).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn trajectory(
    chi: usize,
    m: usize,
    g: f64,
    alpha: f64,
    price: f64,
    beta: f64,
    delta: f64,
    steps: usize,
    seeding: &str,
) -> Result<String, JsError> {
    trajectory_json(chi, m, g, alpha, price, beta, delta, steps, seeding)
        .map_err(|e| JsError::new(&e))
}
