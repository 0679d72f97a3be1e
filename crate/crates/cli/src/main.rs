use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod output;
mod spec;

#[derive(Parser, Debug)]
#[command(
    name = "seeding",
    version,
    about = "Equilibrium seeding of two competing products on an influence network"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a generated graph as an edge list.
    Generate(GenerateArgs),
    /// Bi-product Katz-Bonacich centralities.
    Centrality(ModelArgs),
    /// Nash seeding, utilities and assumption diagnostics.
    Nash(ModelArgs),
    /// Epsilon of the seeding restricted to given sets.
    Epsilon(EpsilonArgs),
    /// Smallest greedy seed sets meeting an epsilon target.
    Sparsify(SparsifyArgs),
    /// Iterate the consumption dynamics and compare with the closed form.
    Simulate(SimulateArgs),
    /// Residual and epsilon over a growing graph family.
    AsrScan(ScanArgs),
    /// Run every cross-check on the bundled test graphs.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
pub struct GraphSource {
    /// Edge-list file (`n=<count>` header, then influenced/influencer/weight rows, 1-based).
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Generator spec: core-periphery:chi=3,m=4,g=0.5 | bounded-outdegree:n=100,d=2,w=0.4,seed=1 | empty:n=2
    #[arg(long)]
    pub generate: Option<String>,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct MarketArgs {
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub price: f64,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub delta: f64,
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// Linear-solver residual tolerance.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Directory for the JSON/CSV reports; only the summary is printed without it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// On assumption failure, write the diagnostics and exit 0 instead of 2.
    #[arg(long)]
    pub force: bool,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    #[command(flatten)]
    pub source: GraphSource,
    #[command(flatten)]
    pub market: MarketArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug, Clone)]
pub struct GenerateArgs {
    /// Generator spec, as for --generate elsewhere.
    #[arg(long)]
    pub generate: String,
    /// Edge-list path; a `.json` sidecar with the spec is written next to it.
    /// Prints the edge list when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct EpsilonArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Seed set of firm A: 1-based ids (`4,8,12`) or `@file`.
    #[arg(long)]
    pub sets: String,
    /// Seed set of firm B; defaults to the set of firm A.
    #[arg(long)]
    pub sets_under: Option<String>,
}

#[derive(Args, Debug, Clone)]
pub struct SparsifyArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub epsilon_target: f64,
    /// Target for firm B; defaults to --epsilon-target.
    #[arg(long)]
    pub epsilon_target_under: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Initial seeding: nash, zero, or sets (Nash amounts restricted to --sets).
    #[arg(long, default_value = "nash", value_parser = ["nash", "zero", "sets"])]
    pub seeding: String,
    #[arg(long)]
    pub sets: Option<String>,
    #[arg(long)]
    pub sets_under: Option<String>,
    /// Number of steps, or `auto` to stop once the certified tail is below --tail-tol.
    #[arg(long, default_value = "auto")]
    pub horizon: String,
    #[arg(long, default_value_t = 1e-10)]
    pub tail_tol: f64,
    /// Skip the per-step trajectory CSV.
    #[arg(long)]
    pub sums_only: bool,
}

#[derive(Args, Debug, Clone)]
pub struct ScanArgs {
    /// core-periphery:chi=3,g=0.5 | bounded-outdegree:d=2,w=0.4,seed=1
    #[arg(long, default_value = "core-periphery:chi=3,g=0.5")]
    pub family: String,
    /// Comma-separated sizes (m for core-periphery, n otherwise).
    #[arg(long)]
    pub schedule: Option<String>,
    /// role-models | top-k:<k> | nodes:<1-based ids>
    #[arg(long)]
    pub rule: Option<String>,
    #[command(flatten)]
    pub market: MarketArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug, Clone)]
pub struct VerifyArgs {
    /// Seed for the random test graphs and the sampled candidates.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Random unilateral deviations per firm and graph.
    #[arg(long, default_value_t = 10_000)]
    pub deviations: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Generate(a) => commands::generate(&a),
        Command::Centrality(a) => commands::centrality(&a),
        Command::Nash(a) => commands::nash(&a),
        Command::Epsilon(a) => commands::epsilon(&a),
        Command::Sparsify(a) => commands::sparsify(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::AsrScan(a) => commands::asr_scan(&a),
        Command::Verify(a) => commands::verify(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.exit_code())
        }
    }
}
