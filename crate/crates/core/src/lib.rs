//! Two-firm competitive seeding on a weighted influence network.
//!
//! Agents consume two substitutable products whose demand spreads along
//! the network. Each firm chooses a non-negative seeding vector at
//! quadratic cost. This crate computes the consumption dynamics, the
//! bi-product Katz-Bonacich centralities that characterize the Nash
//! seeding, epsilon-equilibria supported on small seed sets, and
//! diagnostics for whether a graph family admits asymptotically sparse
//! equilibria.
//!
//! Conventions: `G[i][j] = g_ij` is the influence of agent `j` on agent
//! `i`, agent ids are 0-based in the API and 1-based in files and on the
//! command line.

pub mod asr;
pub mod centrality;
pub mod dynamics;
pub mod game;
pub mod graph;
pub mod io;
pub mod linsolve;
pub mod report;
pub mod spectral;
pub mod verify;

pub use centrality::{biproduct_centrality, katz_bonacich, CentralityBundle, CentralityError};
pub use dynamics::{simulate, Firm, Horizon, SeedingPair, SimulateOptions, Trajectory};
pub use game::{EpsilonReport, GameError, GameModel, SeedSet};
pub use graph::{
    generate_bounded_outdegree_family, generate_core_periphery, CorePeripheryParams, Edge,
    GraphError, MarketParams, WeightedDigraph,
};
pub use linsolve::SolverOptions;
pub use spectral::{spectral_radius, validate_assumptions, AssumptionReport};

/// Version string embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
