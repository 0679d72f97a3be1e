//! Spectral radius estimation and model-assumption checks.
//!
//! For a nonnegative matrix `M` and any positive `x`, the Collatz–Wielandt
//! ratios bracket the Perron root: `min_i (Mx)_i/x_i ≤ ρ(M) ≤ max_i (Mx)_i/x_i`.
//! Power iteration on `I + G` restricted to each strongly connected
//! component (irreducible, hence `I + G` primitive) tightens the bracket
//! geometrically; the overall radius is the maximum over components.

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{MarketParams, WeightedDigraph};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralEstimate {
    /// Certified upper estimate, within `tol` of the true radius when the
    /// iteration converged.
    pub radius: f64,
    /// Certified lower estimate.
    pub lower: f64,
    /// `min(max in-degree, max out-degree)`, itself an upper bound.
    pub row_sum_cap: f64,
    pub iterations: usize,
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error(
    "power iteration did not converge in {max_iter} iterations: bracket [{lower}, {upper}], row-sum cap {row_sum_cap}"
)]
pub struct SpectralError {
    pub lower: f64,
    pub upper: f64,
    pub row_sum_cap: f64,
    pub max_iter: usize,
    /// Last normalized iterate of the slowest component, in component order.
    pub last_iterate: Vec<f64>,
}

impl SpectralError {
    /// Best certified upper bound available despite non-convergence.
    pub fn certified_upper(&self) -> f64 {
        self.upper.min(self.row_sum_cap)
    }
}

pub fn spectral_radius(
    graph: &WeightedDigraph,
    tol: f64,
    max_iter: usize,
) -> Result<SpectralEstimate, SpectralError> {
    assert!(tol > 0.0, "tolerance must be positive");
    let row_sum_cap = graph.max_in_degree().min(graph.max_out_degree());
    if graph.edge_count() == 0 {
        return Ok(SpectralEstimate {
            radius: 0.0,
            lower: 0.0,
            row_sum_cap,
            iterations: 0,
        });
    }

    let mut pg = DiGraph::<(), ()>::with_capacity(graph.node_count(), graph.edge_count());
    let nodes: Vec<_> = (0..graph.node_count()).map(|_| pg.add_node(())).collect();
    for e in graph.edges() {
        pg.add_edge(nodes[e.influencer], nodes[e.influenced], ());
    }

    let mut lower = 0.0_f64;
    let mut upper = 0.0_f64;
    let mut iterations = 0;
    let mut failure: Option<Vec<f64>> = None;
    for component in tarjan_scc(&pg) {
        // A single node without a self-loop contributes eigenvalue 0.
        if component.len() < 2 {
            continue;
        }
        let members: Vec<usize> = component.iter().map(|ix| ix.index()).collect();
        let sub = graph.induced(&members);
        let block = perron_bracket(&sub, tol, max_iter);
        lower = lower.max(block.lower);
        upper = upper.max(block.upper);
        iterations = iterations.max(block.iterations);
        if !block.converged {
            failure = Some(block.iterate);
        }
    }

    if let Some(last_iterate) = failure {
        return Err(SpectralError {
            lower,
            upper,
            row_sum_cap,
            max_iter,
            last_iterate,
        });
    }
    Ok(SpectralEstimate {
        radius: upper.min(row_sum_cap),
        lower: lower.min(row_sum_cap),
        row_sum_cap,
        iterations,
    })
}

struct Bracket {
    lower: f64,
    upper: f64,
    iterations: usize,
    converged: bool,
    iterate: Vec<f64>,
}

fn perron_bracket(g: &WeightedDigraph, tol: f64, max_iter: usize) -> Bracket {
    let n = g.node_count();
    let mut x = vec![1.0; n];
    let mut gx = vec![0.0; n];
    let (mut lo, mut hi) = (0.0, f64::INFINITY);
    for it in 1..=max_iter {
        g.mul_vec(&x, &mut gx);
        // Ratios of (I + G)x to x, shifted back by one.
        lo = f64::INFINITY;
        hi = 0.0_f64;
        for i in 0..n {
            let r = gx[i] / x[i];
            lo = f64::min(lo, r);
            hi = f64::max(hi, r);
        }
        if hi - lo <= tol {
            return Bracket {
                lower: lo,
                upper: hi,
                iterations: it,
                converged: true,
                iterate: x,
            };
        }
        let mut scale = 0.0_f64;
        for i in 0..n {
            x[i] += gx[i];
            scale = scale.max(x[i]);
        }
        for v in x.iter_mut() {
            *v /= scale;
        }
    }
    Bracket {
        lower: lo,
        upper: hi,
        iterations: max_iter,
        converged: false,
        iterate: x,
    }
}

pub const DEFAULT_SPECTRAL_TOL: f64 = 1e-12;
pub const DEFAULT_SPECTRAL_MAX_ITER: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    /// Ranges of beta, delta and the price.
    pub parameter_ranges: Check,
    /// `α ≥ p`: nonnegative consumption for every nonnegative seeding.
    pub alpha_at_least_price: Check,
    /// `ρ(G) < 1/(δ(1+β))`.
    pub spectral_condition: Check,
    pub nonnegative_weights: Check,
    pub spectral_radius: f64,
    /// `true` when the radius is the certified fallback of a non-converged iteration.
    pub spectral_radius_fallback: bool,
    pub spectral_bound: f64,
    /// `spectral_bound − spectral_radius`.
    pub margin: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("model assumptions violated: {}", .failures.join("; "))]
pub struct AssumptionError {
    pub failures: Vec<String>,
    pub report: Box<AssumptionReport>,
}

impl AssumptionReport {
    pub fn passed(&self) -> bool {
        self.parameter_ranges.passed
            && self.alpha_at_least_price.passed
            && self.spectral_condition.passed
            && self.nonnegative_weights.passed
    }

    pub fn require(&self) -> Result<(), AssumptionError> {
        if self.passed() {
            return Ok(());
        }
        let failures = [
            &self.parameter_ranges,
            &self.alpha_at_least_price,
            &self.spectral_condition,
            &self.nonnegative_weights,
        ]
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.detail.clone())
        .collect();
        Err(AssumptionError {
            failures,
            report: Box::new(self.clone()),
        })
    }
}

pub fn validate_assumptions(graph: &WeightedDigraph, params: &MarketParams) -> AssumptionReport {
    let parameter_ranges = match params.check_ranges() {
        Ok(()) => Check {
            passed: true,
            detail: "beta in [0,1), delta in (0,1), price > 0".into(),
        },
        Err(e) => Check {
            passed: false,
            detail: e.to_string(),
        },
    };
    let alpha_at_least_price = Check {
        passed: params.alpha >= params.price,
        detail: format!("alpha = {} vs price = {}", params.alpha, params.price),
    };
    let (radius, fallback) =
        match spectral_radius(graph, DEFAULT_SPECTRAL_TOL, DEFAULT_SPECTRAL_MAX_ITER) {
            Ok(est) => (est.radius, false),
            Err(e) => (e.certified_upper(), true),
        };
    let bound = if parameter_ranges.passed {
        params.spectral_bound()
    } else {
        f64::NAN
    };
    let spectral_condition = Check {
        passed: radius < bound,
        detail: format!("spectral radius {radius} vs bound 1/(delta(1+beta)) = {bound}"),
    };
    let negative = graph.edges().iter().filter(|e| e.weight < 0.0).count();
    let nonnegative_weights = Check {
        passed: negative == 0,
        detail: format!("{negative} negative weights"),
    };
    AssumptionReport {
        parameter_ranges,
        alpha_at_least_price,
        spectral_condition,
        nonnegative_weights,
        spectral_radius: radius,
        spectral_radius_fallback: fallback,
        spectral_bound: bound,
        margin: bound - radius,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_core_periphery, CorePeripheryParams, Edge};

    fn radius(g: &WeightedDigraph) -> f64 {
        spectral_radius(g, 1e-12, 100_000).unwrap().radius
    }

    #[test]
    fn empty_graph_has_zero_radius() {
        assert_eq!(radius(&WeightedDigraph::empty(3)), 0.0);
    }

    #[test]
    fn two_cycle() {
        // Characteristic polynomial λ² − 0.25 = 0.
        let g = WeightedDigraph::new(2, [Edge::new(0, 1, 0.5), Edge::new(1, 0, 0.5)]).unwrap();
        assert!((radius(&g) - 0.5).abs() <= 1e-12);
    }

    #[test]
    fn nilpotent_chain() {
        let g = WeightedDigraph::new(3, [Edge::new(1, 0, 3.0), Edge::new(2, 1, 3.0)]).unwrap();
        assert_eq!(radius(&g), 0.0);
    }

    #[test]
    fn core_periphery_radius_is_g() {
        let g = generate_core_periphery(&CorePeripheryParams::new(3, 4, 0.5).unwrap()).unwrap();
        assert!((radius(&g) - 0.5).abs() <= 1e-12);
    }

    #[test]
    fn asymmetric_irreducible_matches_characteristic_polynomial() {
        // [[0, 2], [0.5, 0]] has eigenvalues ±1; a 3-cycle with weights
        // a, b, c has ρ = (abc)^(1/3).
        let g = WeightedDigraph::new(2, [Edge::new(0, 1, 2.0), Edge::new(1, 0, 0.5)]).unwrap();
        assert!((radius(&g) - 1.0).abs() <= 1e-12);
        let g = WeightedDigraph::new(
            3,
            [
                Edge::new(1, 0, 0.2),
                Edge::new(2, 1, 0.9),
                Edge::new(0, 2, 0.6),
            ],
        )
        .unwrap();
        let expected = (0.2_f64 * 0.9 * 0.6).cbrt();
        assert!((radius(&g) - expected).abs() <= 1e-10);
    }

    #[test]
    fn reducible_takes_the_largest_component() {
        // Two 2-cycles (0.3 and 0.7) joined by a one-way edge.
        let g = WeightedDigraph::new(
            4,
            [
                Edge::new(0, 1, 0.3),
                Edge::new(1, 0, 0.3),
                Edge::new(2, 3, 0.7),
                Edge::new(3, 2, 0.7),
                Edge::new(2, 0, 5.0),
            ],
        )
        .unwrap();
        let est = spectral_radius(&g, 1e-12, 100_000).unwrap();
        assert!((est.radius - 0.7).abs() <= 1e-12);
        assert!(est.lower <= 0.7 + 1e-12);
    }

    #[test]
    fn non_convergence_carries_diagnostics() {
        let g = WeightedDigraph::new(
            3,
            [
                Edge::new(1, 0, 0.2),
                Edge::new(2, 1, 0.9),
                Edge::new(0, 2, 0.6),
                Edge::new(0, 1, 0.1),
            ],
        )
        .unwrap();
        let err = spectral_radius(&g, 1e-14, 2).unwrap_err();
        assert!(err.upper >= err.lower);
        assert_eq!(err.last_iterate.len(), 3);
        assert!(err.certified_upper() <= err.row_sum_cap);
    }

    #[test]
    fn assumptions_on_examples() {
        let params = MarketParams::new(2.0, 1.0, 0.5, 0.5).unwrap();
        let r = validate_assumptions(&WeightedDigraph::empty(3), &params);
        assert!(r.passed());
        assert_eq!(r.spectral_radius, 0.0);

        let cp = generate_core_periphery(&CorePeripheryParams::new(3, 4, 0.5).unwrap()).unwrap();
        let r = validate_assumptions(&cp, &params);
        assert!(r.passed());
        assert!((r.margin - (4.0 / 3.0 - 0.5)).abs() < 1e-12);

        let strong = WeightedDigraph::new(2, [Edge::new(0, 1, 2.0), Edge::new(1, 0, 2.0)]).unwrap();
        let r = validate_assumptions(&strong, &MarketParams::new(2.0, 1.0, 0.9, 0.9).unwrap());
        assert!(!r.spectral_condition.passed);
        assert!(r.require().is_err());

        let cheap = MarketParams {
            alpha: 0.5,
            price: 1.0,
            beta: 0.5,
            delta: 0.5,
        };
        let r = validate_assumptions(&WeightedDigraph::empty(2), &cheap);
        assert!(!r.alpha_at_least_price.passed);
        assert!(r.spectral_condition.passed);
    }
}
