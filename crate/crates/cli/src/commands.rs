use std::collections::BTreeMap;
use std::fmt::Write as _;

use seeding_core::asr::{self, AsrError, FamilySpec, SeedingRule};
use seeding_core::dynamics::{self, Horizon, SimulateOptions};
use seeding_core::game::GameError;
use seeding_core::io::{format_edge_list, load_edge_list, EdgeListError};
use seeding_core::report::{csv_row, fmt_optional, fmt_real};
use seeding_core::verify::{self, tolerance, VerifyOptions};
use seeding_core::{
    biproduct_centrality, validate_assumptions, AssumptionReport, CentralityError, EpsilonReport,
    GameModel, MarketParams, SeedSet, SeedingPair, SolverOptions, WeightedDigraph,
};
use serde_json::{json, Value};

use crate::output::{
    envelope, one_based, print_top, CmdResult, Failure, OutDir, RunConfig, Tolerances,
};
use crate::spec;
use crate::{
    CommonArgs, EpsilonArgs, GenerateArgs, GraphSource, MarketArgs, ModelArgs, ScanArgs,
    SimulateArgs, SparsifyArgs, VerifyArgs,
};

const TOP_K: usize = 10;

fn market(args: &MarketArgs) -> Result<MarketParams, Failure> {
    let params = MarketParams {
        alpha: args.alpha,
        price: args.price,
        beta: args.beta,
        delta: args.delta,
    };
    // alpha >= price is a model assumption (exit 2), checked with the graph.
    params
        .check_ranges()
        .map_err(|e| Failure::Usage(format!("invalid market parameters: {e}")))?;
    Ok(params)
}

fn solver(common: &CommonArgs) -> Result<SolverOptions, Failure> {
    if !(common.tol > 0.0 && common.tol.is_finite()) {
        return Err(Failure::Usage(format!(
            "--tol must be positive, got {}",
            common.tol
        )));
    }
    Ok(SolverOptions {
        tol: common.tol,
        ..SolverOptions::default()
    })
}

fn load_graph(source: &GraphSource) -> Result<(WeightedDigraph, Value), Failure> {
    if let Some(path) = &source.graph {
        let graph = load_edge_list(path).map_err(|e| match e {
            EdgeListError::Io { .. } => Failure::Io(e.to_string()),
            EdgeListError::Parse { .. } => Failure::Usage(format!("{}: {e}", path.display())),
        })?;
        return Ok((graph, json!({ "file": path })));
    }
    let text = source
        .generate
        .as_deref()
        .expect("clap requires one graph source");
    let gen =
        spec::parse_generator(text).map_err(|e| Failure::Usage(format!("--generate: {e}")))?;
    let graph = gen
        .build()
        .map_err(|e| Failure::Usage(format!("--generate: {e}")))?;
    Ok((graph, serde_json::to_value(&gen).expect("spec serializes")))
}

fn base_config(command: &str, args: &ModelArgs, origin: Value, params: MarketParams) -> RunConfig {
    RunConfig {
        command: command.into(),
        graph: Some(origin),
        params: Some(params),
        tolerances: Tolerances {
            solver: args.common.tol,
            ..Tolerances::default()
        },
        out: args.common.out.clone(),
        force: args.common.force,
        ..RunConfig::default()
    }
}

/// Checks the model assumptions. `Ok(None)` means `--force` ended the run
/// after writing the diagnostics.
fn gate(
    graph: &WeightedDigraph,
    params: &MarketParams,
    common: &CommonArgs,
    config: &RunConfig,
    out: &OutDir,
) -> Result<Option<AssumptionReport>, Failure> {
    let report = validate_assumptions(graph, params);
    if report.passed() {
        return Ok(Some(report));
    }
    let failures = report.require().expect_err("report did not pass").failures;
    out.write_json(
        "assumptions.json",
        &envelope(
            config,
            json!({ "n": graph.node_count(), "assumptions": report }),
        )?,
    )?;
    println!("assumptions violated:");
    for f in &failures {
        println!("  {f}");
    }
    if common.force {
        println!("--force: diagnostics only, nothing computed");
        Ok(None)
    } else {
        Err(Failure::Assumptions(format!(
            "model assumptions violated: {}",
            failures.join("; ")
        )))
    }
}

fn game_failure(e: GameError) -> Failure {
    match e {
        GameError::Assumptions(_) | GameError::Centrality(CentralityError::Assumptions(_)) => {
            Failure::Assumptions(e.to_string())
        }
        GameError::SetOutOfRange { .. } | GameError::NegativeTarget(_) | GameError::Seeding(_) => {
            Failure::Usage(e.to_string())
        }
        other => Failure::Io(format!("computation failed: {other}")),
    }
}

fn read_set(flag: &str, arg: &str, n: usize) -> Result<SeedSet, Failure> {
    let ids = spec::read_ids(arg).map_err(|e| Failure::Usage(format!("{flag}: {e}")))?;
    if let Some(&bad) = ids.iter().find(|&&v| v >= n) {
        return Err(Failure::Usage(format!(
            "{flag}: agent {} out of range for {n} agents",
            bad + 1
        )));
    }
    SeedSet::new(n, ids).map_err(|e| Failure::Usage(format!("{flag}: {e}")))
}

fn set_ids(set: &SeedSet) -> Vec<usize> {
    one_based(set.members())
}

/// The epsilon report with 1-based set members.
fn epsilon_value(report: &EpsilonReport) -> Value {
    let mut value = serde_json::to_value(report).expect("report serializes");
    value["set_bar"] = json!(set_ids(&report.set_bar));
    value["set_under"] = json!(set_ids(&report.set_under));
    value
}

fn print_epsilon(report: &EpsilonReport) {
    println!(
        "sets: |S_A| = {}, |S_B| = {}",
        report.set_bar.len(),
        report.set_under.len()
    );
    println!(
        "tau_A = {:.6e}, tau_B = {:.6e}",
        report.tau_bar, report.tau_under
    );
    println!("epsilon (closed form) = {:.6e}", report.epsilon_paper);
    let show = |v: Option<f64>| {
        v.map_or("undefined (payoff <= 0)".to_string(), |x| {
            format!("{x:.6e}")
        })
    };
    println!(
        "epsilon (exact gain ratio) A = {}, B = {}",
        show(report.epsilon_exact_a),
        show(report.epsilon_exact_b)
    );
}

pub fn generate(args: &GenerateArgs) -> CmdResult {
    let gen = spec::parse_generator(&args.generate)
        .map_err(|e| Failure::Usage(format!("--generate: {e}")))?;
    let graph = gen
        .build()
        .map_err(|e| Failure::Usage(format!("--generate: {e}")))?;
    let text = format_edge_list(&graph);
    let Some(path) = &args.out else {
        print!("{text}");
        return Ok(());
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .map_err(|e| Failure::Io(format!("{}: {e}", parent.display())))?;
    }
    std::fs::write(path, &text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    let config = RunConfig {
        command: "generate".into(),
        graph: Some(serde_json::to_value(&gen).expect("spec serializes")),
        out: Some(path.clone()),
        ..RunConfig::default()
    };
    let sidecar = envelope(
        &config,
        json!({ "n": graph.node_count(), "edges": graph.edge_count() }),
    )?;
    let mut sidecar_path = path.clone().into_os_string();
    sidecar_path.push(".json");
    let body =
        seeding_core::report::to_json_string(&sidecar).map_err(|e| Failure::Io(e.to_string()))?;
    std::fs::write(&sidecar_path, body)
        .map_err(|e| Failure::Io(format!("{}: {e}", sidecar_path.to_string_lossy())))?;
    println!(
        "wrote {} ({} agents, {} edges) and {}",
        path.display(),
        graph.node_count(),
        graph.edge_count(),
        sidecar_path.to_string_lossy()
    );
    Ok(())
}

pub fn centrality(args: &ModelArgs) -> CmdResult {
    let params = market(&args.market)?;
    let opts = solver(&args.common)?;
    let (graph, origin) = load_graph(&args.source)?;
    let config = base_config("centrality", args, origin, params);
    let out = OutDir::new(args.common.out.as_deref())?;
    let Some(assumptions) = gate(&graph, &params, &args.common, &config, &out)? else {
        return Ok(());
    };
    let bundle = biproduct_centrality(&graph, &params, &opts).map_err(|e| match e {
        CentralityError::Assumptions(_) => Failure::Assumptions(e.to_string()),
        other => Failure::Io(format!("computation failed: {other}")),
    })?;
    let mut body = serde_json::to_value(&bundle).expect("bundle serializes");
    body["n"] = json!(graph.node_count());
    body["spectral_radius"] = json!(assumptions.spectral_radius);
    out.write_json("centrality.json", &envelope(&config, body)?)?;

    println!(
        "{} agents, spectral radius {:.6} (bound {:.6})",
        graph.node_count(),
        assumptions.spectral_radius,
        assumptions.spectral_bound
    );
    println!(
        "attenuations {:.6} / {:.6}, solver residuals {:.1e} / {:.1e}",
        bundle.attenuations.0, bundle.attenuations.1, bundle.residuals.0, bundle.residuals.1
    );
    print_top(&bundle.c_new, params.price, TOP_K);
    Ok(())
}

pub fn nash(args: &ModelArgs) -> CmdResult {
    let params = market(&args.market)?;
    let opts = solver(&args.common)?;
    let (graph, origin) = load_graph(&args.source)?;
    let config = base_config("nash", args, origin, params);
    let out = OutDir::new(args.common.out.as_deref())?;
    let Some(assumptions) = gate(&graph, &params, &args.common, &config, &out)? else {
        return Ok(());
    };
    let model = GameModel::new(&graph, &params, &opts).map_err(game_failure)?;
    let n = graph.node_count();
    let nash = model.nash_seeding();
    let (util_a, util_b) = model.firm_utility(&nash).map_err(game_failure)?;
    let full = SeedSet::full(n);
    let epsilon = model.epsilon_for_sets(&full, &full).map_err(game_failure)?;
    let body = json!({
        "n": n,
        "nash": nash,
        "utilities": { "a": util_a, "b": util_b },
        "baseline_utility": model.baseline_utility(),
        "epsilon": epsilon_value(&epsilon),
        "centrality": model.centrality(),
        "assumptions": assumptions,
    });
    out.write_json("equilibrium.json", &envelope(&config, body)?)?;

    println!("{n} agents; Nash seeding s = p * c_new for both firms");
    println!(
        "net utility per firm {:.6} (gross {:.6}, seeding cost {:.6})",
        util_a.net, util_a.gross, util_a.seeding_cost
    );
    print_top(&model.centrality().c_new, params.price, TOP_K);
    Ok(())
}

pub fn epsilon(args: &EpsilonArgs) -> CmdResult {
    let m = &args.model;
    let params = market(&m.market)?;
    let opts = solver(&m.common)?;
    let (graph, origin) = load_graph(&m.source)?;
    let n = graph.node_count();
    let set_bar = read_set("--sets", &args.sets, n)?;
    let set_under = match &args.sets_under {
        Some(s) => read_set("--sets-under", s, n)?,
        None => set_bar.clone(),
    };
    let mut config = base_config("epsilon", m, origin, params);
    config.sets = Some([set_ids(&set_bar), set_ids(&set_under)]);
    let out = OutDir::new(m.common.out.as_deref())?;
    if gate(&graph, &params, &m.common, &config, &out)?.is_none() {
        return Ok(());
    }
    let model = GameModel::new(&graph, &params, &opts).map_err(game_failure)?;
    let report = model
        .epsilon_for_sets(&set_bar, &set_under)
        .map_err(game_failure)?;
    let seeding = SeedingPair {
        s_bar: model.restricted_seeding(&set_bar),
        s_under: model.restricted_seeding(&set_under),
    };
    let body = json!({ "n": n, "epsilon": epsilon_value(&report), "seeding": seeding });
    out.write_json("epsilon.json", &envelope(&config, body)?)?;
    print_epsilon(&report);
    Ok(())
}

pub fn sparsify(args: &SparsifyArgs) -> CmdResult {
    let m = &args.model;
    let params = market(&m.market)?;
    let opts = solver(&m.common)?;
    let target_bar = args.epsilon_target;
    let target_under = args.epsilon_target_under.unwrap_or(target_bar);
    for (flag, t) in [
        ("--epsilon-target", target_bar),
        ("--epsilon-target-under", target_under),
    ] {
        if t.is_nan() || t < 0.0 {
            return Err(Failure::Usage(format!(
                "{flag} must be nonnegative, got {t}"
            )));
        }
    }
    let (graph, origin) = load_graph(&m.source)?;
    let mut config = base_config("sparsify", m, origin, params);
    config.epsilon_target = Some([target_bar, target_under]);
    let out = OutDir::new(m.common.out.as_deref())?;
    if gate(&graph, &params, &m.common, &config, &out)?.is_none() {
        return Ok(());
    }
    let model = GameModel::new(&graph, &params, &opts).map_err(game_failure)?;
    let (set_bar, set_under, report) = model
        .sparsify(target_bar, target_under)
        .map_err(game_failure)?;
    let body = json!({
        "n": graph.node_count(),
        "set_bar": set_ids(&set_bar),
        "set_under": set_ids(&set_under),
        "epsilon": epsilon_value(&report),
    });
    out.write_json("sparsify.json", &envelope(&config, body)?)?;
    println!("firm A seeds agents {:?}", set_ids(&set_bar));
    println!("firm B seeds agents {:?}", set_ids(&set_under));
    print_epsilon(&report);
    Ok(())
}

fn parse_horizon(text: &str, tail_tol: f64) -> Result<Horizon, Failure> {
    if text == "auto" {
        if tail_tol.is_nan() || tail_tol <= 0.0 {
            return Err(Failure::Usage(format!(
                "--tail-tol must be positive, got {tail_tol}"
            )));
        }
        return Ok(Horizon::Auto {
            tail_tol,
            max_horizon: 1_000_000,
        });
    }
    text.parse().map(Horizon::Fixed).map_err(|_| {
        Failure::Usage(format!(
            "--horizon: expected a step count or `auto`, got `{text}`"
        ))
    })
}

pub fn simulate(args: &SimulateArgs) -> CmdResult {
    let m = &args.model;
    let params = market(&m.market)?;
    let opts = solver(&m.common)?;
    let horizon = parse_horizon(&args.horizon, args.tail_tol)?;
    let (graph, origin) = load_graph(&m.source)?;
    let n = graph.node_count();
    let mut config = base_config("simulate", m, origin, params);
    config.tolerances.tail = Some(args.tail_tol);
    config.horizon = Some(args.horizon.clone());
    config.seeding = Some(args.seeding.clone());
    let sets = if args.seeding == "sets" {
        let Some(s) = &args.sets else {
            return Err(Failure::Usage("--seeding sets requires --sets".into()));
        };
        let bar = read_set("--sets", s, n)?;
        let under = match &args.sets_under {
            Some(u) => read_set("--sets-under", u, n)?,
            None => bar.clone(),
        };
        config.sets = Some([set_ids(&bar), set_ids(&under)]);
        Some((bar, under))
    } else {
        None
    };
    let out = OutDir::new(m.common.out.as_deref())?;
    if gate(&graph, &params, &m.common, &config, &out)?.is_none() {
        return Ok(());
    }
    let model = GameModel::new(&graph, &params, &opts).map_err(game_failure)?;
    let seeding = match (args.seeding.as_str(), &sets) {
        ("zero", _) => SeedingPair::zero(n),
        (_, Some((bar, under))) => SeedingPair {
            s_bar: model.restricted_seeding(bar),
            s_under: model.restricted_seeding(under),
        },
        _ => model.nash_seeding(),
    };
    let traj = dynamics::simulate(
        &graph,
        &params,
        &seeding,
        SimulateOptions {
            horizon,
            store_states: !args.sums_only,
        },
    )
    .map_err(|e| match e {
        dynamics::DynamicsError::Assumptions(_) => Failure::Assumptions(e.to_string()),
        other => Failure::Io(format!("simulation failed: {other}")),
    })?;
    let (closed_bar, closed_under) = model
        .discounted_consumption(&seeding)
        .map_err(game_failure)?;
    let discrepancy = traj
        .discounted_bar
        .iter()
        .zip(&closed_bar)
        .chain(traj.discounted_under.iter().zip(&closed_under))
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);

    if !args.sums_only {
        let mut csv = csv_row(&["k", "node", "x_bar", "x_under"]);
        for state in &traj.states {
            for v in 0..n {
                csv.push_str(&csv_row(&[
                    state.k.to_string(),
                    (v + 1).to_string(),
                    fmt_real(state.x_bar[v]),
                    fmt_real(state.x_under[v]),
                ]));
            }
        }
        out.write("trajectory.csv", &csv)?;
    }
    let body = json!({
        "n": n,
        "seeding": seeding,
        "horizon": traj.horizon,
        "tail_bound": traj.tail_bound,
        "certificate_rate": traj.certificate_rate,
        "discounted_bar": traj.discounted_bar,
        "discounted_under": traj.discounted_under,
        "closed_form_bar": closed_bar,
        "closed_form_under": closed_under,
        "max_discrepancy": discrepancy,
    });
    out.write_json("simulation.json", &envelope(&config, body)?)?;

    println!(
        "{} steps, certified tail {:.3e}, max |simulated - closed form| = {:.3e}",
        traj.horizon, traj.tail_bound, discrepancy
    );
    Ok(())
}

fn asr_failure(e: AsrError) -> Failure {
    match e {
        AsrError::Instance { size, source } => match game_failure(source) {
            Failure::Assumptions(m) => Failure::Assumptions(format!("size {size}: {m}")),
            Failure::Usage(m) => Failure::Usage(format!("size {size}: {m}")),
            other => Failure::Io(format!("size {size}: {other}")),
        },
        AsrError::Centrality(CentralityError::Assumptions(a)) => {
            Failure::Assumptions(a.to_string())
        }
        AsrError::InvalidFamily(_) | AsrError::Graph(_) => Failure::Usage(e.to_string()),
        other => Failure::Io(other.to_string()),
    }
}

pub fn asr_scan(args: &ScanArgs) -> CmdResult {
    let params = market(&args.market)?;
    let opts = solver(&args.common)?;
    let kind =
        spec::parse_family(&args.family).map_err(|e| Failure::Usage(format!("--family: {e}")))?;
    let schedule = match &args.schedule {
        Some(s) => {
            spec::parse_schedule(s).map_err(|e| Failure::Usage(format!("--schedule: {e}")))?
        }
        None => spec::default_schedule(&kind),
    };
    let rule = match &args.rule {
        Some(r) => spec::parse_rule(r).map_err(|e| Failure::Usage(format!("--rule: {e}")))?,
        None => match kind {
            asr::FamilyKind::CorePeriphery { .. } => SeedingRule::RoleModels,
            _ => SeedingRule::TopK { k: 5 },
        },
    };
    if !params.alpha.is_finite() || params.alpha < params.price {
        return Err(Failure::Assumptions(format!(
            "alpha ({}) must be at least the price ({})",
            params.alpha, params.price
        )));
    }
    let config = RunConfig {
        command: "asr-scan".into(),
        params: Some(params),
        tolerances: Tolerances {
            solver: args.common.tol,
            ..Tolerances::default()
        },
        family: Some(serde_json::to_value(&kind).expect("family serializes")),
        schedule: Some(schedule.clone()),
        rule: Some(args.rule.clone().unwrap_or_else(|| match rule {
            SeedingRule::RoleModels => "role-models".into(),
            _ => "top-k:5".into(),
        })),
        out: args.common.out.clone(),
        force: args.common.force,
        ..RunConfig::default()
    };
    let out = OutDir::new(args.common.out.as_deref())?;
    let family = FamilySpec {
        kind,
        schedule,
        market: params,
    };
    let result = match asr::scan_family(&family, &rule, &opts) {
        Ok(r) => r,
        Err(e) => {
            let failure = asr_failure(e);
            if let (Failure::Assumptions(m), true) = (&failure, args.common.force) {
                out.write_json(
                    "assumptions.json",
                    &envelope(&config, json!({ "error": m }))?,
                )?;
                println!("assumptions violated: {m}");
                println!("--force: diagnostics only, nothing computed");
                return Ok(());
            }
            return Err(failure);
        }
    };

    let mut csv = csv_row(&[
        "size",
        "n",
        "set_size",
        "residual_bar",
        "residual_under",
        "epsilon_paper",
        "epsilon_exact_a",
        "epsilon_exact_b",
    ]);
    for r in &result.records {
        csv.push_str(&csv_row(&[
            r.size.to_string(),
            r.n.to_string(),
            r.set_size_bar.to_string(),
            fmt_real(r.residual_bar),
            fmt_real(r.residual_under),
            fmt_real(r.epsilon_paper),
            fmt_optional(r.epsilon_exact_a),
            fmt_optional(r.epsilon_exact_b),
        ]));
    }
    out.write("scan.csv", &csv)?;
    out.write_json("scan.json", &envelope(&config, &result)?)?;

    println!(
        "{:>8} {:>8} {:>6} {:>14} {:>14}",
        "size", "n", "|S|", "residual", "epsilon"
    );
    for r in &result.records {
        println!(
            "{:>8} {:>8} {:>6} {:>14.6e} {:>14.6e}",
            r.size,
            r.n,
            r.set_size_bar,
            r.residual_bar.max(r.residual_under),
            r.epsilon_paper
        );
    }
    let slope = |s: Option<f64>| s.map_or("n/a".to_string(), |v| format!("{v:.3}"));
    println!(
        "residual verdict: {} (log-log slope {})",
        serde_json::to_value(result.verdict)
            .expect("verdict serializes")
            .as_str()
            .unwrap_or(""),
        slope(result.decay_exponent)
    );
    println!(
        "epsilon verdict: {} (log-log slope {})",
        serde_json::to_value(result.epsilon_verdict)
            .expect("verdict serializes")
            .as_str()
            .unwrap_or(""),
        slope(result.epsilon_decay_exponent)
    );
    Ok(())
}

pub fn verify(args: &VerifyArgs) -> CmdResult {
    if args.tol.is_nan() || args.tol <= 0.0 {
        return Err(Failure::Usage(format!(
            "--tol must be positive, got {}",
            args.tol
        )));
    }
    let opts = VerifyOptions {
        seed: args.seed,
        deviations: args.deviations,
        solver: SolverOptions {
            tol: args.tol,
            ..SolverOptions::default()
        },
        ..VerifyOptions::default()
    };
    let config = RunConfig {
        command: "verify".into(),
        tolerances: Tolerances {
            solver: args.tol,
            tail: Some(tolerance::SIMULATION_TAIL),
            fd_step: Some(tolerance::FD_STEP),
        },
        seed: Some(args.seed),
        deviations: Some(args.deviations),
        out: args.out.clone(),
        ..RunConfig::default()
    };
    let out = OutDir::new(args.out.as_deref())?;
    let cases = verify::bundled_cases(args.seed);
    let report = verify::run_suite(&cases, &opts);
    out.write_json("verify.json", &envelope(&config, &report)?)?;

    // One line per check, aggregated over graphs, in first-seen order.
    let mut order = Vec::new();
    let mut groups: BTreeMap<&str, (usize, usize, f64, f64)> = BTreeMap::new();
    for o in &report.outcomes {
        let entry = groups.entry(o.check.as_str()).or_insert_with(|| {
            order.push(o.check.as_str());
            (0, 0, 0.0, o.tolerance)
        });
        entry.0 += o.passed as usize;
        entry.1 += 1;
        entry.2 = entry.2.max(o.max_error);
    }
    let mut text = String::new();
    for check in order {
        let (passed, total, worst, tol) = groups[check];
        let status = if passed == total { "PASS" } else { "FAIL" };
        let _ = writeln!(
            text,
            "{status}  {check:<28} {passed:>3}/{total:<3} worst {worst:.3e} (tol {tol:.0e})"
        );
    }
    print!("{text}");
    for o in report.outcomes.iter().filter(|o| !o.passed) {
        println!(
            "  failed: {} on {} (error {:.3e})",
            o.check, o.case, o.max_error
        );
    }
    if report.passed {
        println!("all checks passed on {} graphs", cases.len());
        Ok(())
    } else {
        Err(Failure::Verify("verification failed".into()))
    }
}
