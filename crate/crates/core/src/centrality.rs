//! Katz-Bonacich and bi-product centralities.
//!
//! `Katz(G, α) = (I − αGᵀ)⁻¹ 1`. The bi-product centrality averages the two
//! Katz vectors at attenuations `δ(1−β)` and `δ(1+β)`; it is the
//! sensitivity of a firm's discounted revenue to its own seeding, while half
//! their difference is the sensitivity to the rival's seeding.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{MarketParams, WeightedDigraph};
use crate::linsolve::{self, ContractionCertificate, ScaledAdjacency, SolveError, SolverOptions};
use crate::spectral::{self, AssumptionError, DEFAULT_SPECTRAL_MAX_ITER, DEFAULT_SPECTRAL_TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CentralityError {
    #[error("attenuation {attenuation} times spectral radius {radius} is not below 1")]
    AttenuationTooLarge { attenuation: f64, radius: f64 },
    #[error("Katz solve failed: {0}")]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Assumptions(#[from] AssumptionError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KatzVector {
    pub values: Vec<f64>,
    pub attenuation: f64,
    pub residual: f64,
}

fn certified_radius(graph: &WeightedDigraph) -> f64 {
    match spectral::spectral_radius(graph, DEFAULT_SPECTRAL_TOL, DEFAULT_SPECTRAL_MAX_ITER) {
        Ok(est) => est.radius,
        Err(e) => e.certified_upper(),
    }
}

pub fn katz_bonacich(
    graph: &WeightedDigraph,
    attenuation: f64,
    opts: &SolverOptions,
) -> Result<KatzVector, CentralityError> {
    let radius = certified_radius(graph);
    if !(attenuation >= 0.0 && attenuation * radius < 1.0) {
        return Err(CentralityError::AttenuationTooLarge {
            attenuation,
            radius,
        });
    }
    katz_unchecked(graph, attenuation, opts)
}

fn katz_unchecked(
    graph: &WeightedDigraph,
    attenuation: f64,
    opts: &SolverOptions,
) -> Result<KatzVector, CentralityError> {
    let op = ScaledAdjacency::katz(graph, attenuation);
    let sol = linsolve::solve(&op, &vec![1.0; graph.node_count()], *opts)?;
    Ok(KatzVector {
        values: sol.x,
        attenuation,
        residual: sol.residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralityBundle {
    /// `Katz(G, δ(1−β))`.
    pub a: Vec<f64>,
    /// `Katz(G, δ(1+β))`.
    pub b: Vec<f64>,
    /// `(a + b)/2`.
    pub c_new: Vec<f64>,
    /// `(b − a)/2`.
    pub c_cross: Vec<f64>,
    pub attenuations: (f64, f64),
    pub residuals: (f64, f64),
}

impl CentralityBundle {
    pub fn len(&self) -> usize {
        self.c_new.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c_new.is_empty()
    }

    /// `Σ_i b_i`.
    pub fn total_b(&self) -> f64 {
        self.b.iter().sum()
    }

    /// `Σ_i c_i²`.
    pub fn total_c_squared(&self) -> f64 {
        self.c_new.iter().map(|c| c * c).sum()
    }
}

pub fn biproduct_centrality(
    graph: &WeightedDigraph,
    params: &MarketParams,
    opts: &SolverOptions,
) -> Result<CentralityBundle, CentralityError> {
    spectral::validate_assumptions(graph, params).require()?;
    let (low, high) = params.attenuations();
    let (a, b) = if params.beta == 0.0 {
        let a = katz_unchecked(graph, low, opts)?;
        (a.clone(), a)
    } else {
        let (a, b) = join(
            || katz_unchecked(graph, low, opts),
            || katz_unchecked(graph, high, opts),
        );
        (a?, b?)
    };
    let c_new = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| 0.5 * (x + y))
        .collect();
    let c_cross = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| 0.5 * (y - x))
        .collect();
    Ok(CentralityBundle {
        c_new,
        c_cross,
        attenuations: (low, high),
        residuals: (a.residual, b.residual),
        a: a.values,
        b: b.values,
    })
}

#[cfg(feature = "parallel")]
fn join<A: Send, B: Send>(a: impl FnOnce() -> A + Send, b: impl FnOnce() -> B + Send) -> (A, B) {
    rayon::join(a, b)
}

#[cfg(not(feature = "parallel"))]
fn join<A, B>(a: impl FnOnce() -> A, b: impl FnOnce() -> B) -> (A, B) {
    (a(), b())
}

/// Partial Neumann sum `Σ_{t=0}^{terms−1} αᵗ (Gᵀ)ᵗ 1`.
pub fn neumann_oracle(graph: &WeightedDigraph, attenuation: f64, terms: usize) -> Vec<f64> {
    assert!(terms >= 1, "at least one term is required");
    let n = graph.node_count();
    let mut sum = vec![1.0; n];
    let mut term = vec![1.0; n];
    let mut next = vec![0.0; n];
    for _ in 1..terms {
        graph.mul_transpose_vec(&term, &mut next);
        for (t, nx) in term.iter_mut().zip(&next) {
            *t = attenuation * nx;
        }
        for (s, t) in sum.iter_mut().zip(&term) {
            *s += t;
        }
    }
    sum
}

/// Certified bound on `‖Katz(G, α) − neumann_oracle(G, α, terms)‖∞`, or
/// `None` when no contraction certificate could be found.
pub fn neumann_tail_bound(graph: &WeightedDigraph, attenuation: f64, terms: usize) -> Option<f64> {
    let op = ScaledAdjacency::katz(graph, attenuation);
    let hint = attenuation * certified_radius(graph);
    let cert = ContractionCertificate::for_operator(&op, hint, SolverOptions::default())?;
    if graph.node_count() == 0 {
        return Some(0.0);
    }
    // (αGᵀ)ᵗ 1 ≤ rateᵗ ‖1‖_w w, summed over t ≥ terms.
    let ones_norm = cert.norm(&vec![1.0; graph.node_count()]);
    Some(cert.rate.powi(terms as i32) / (1.0 - cert.rate) * ones_norm * cert.max_weight())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_core_periphery, CorePeripheryParams, Edge};

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    fn two_node() -> WeightedDigraph {
        WeightedDigraph::new(2, [Edge::new(0, 1, 0.5)]).unwrap()
    }

    fn cp(chi: usize, m: usize, g: f64) -> WeightedDigraph {
        generate_core_periphery(&CorePeripheryParams::new(chi, m, g).unwrap()).unwrap()
    }

    #[test]
    fn katz_examples() {
        let k = katz_bonacich(&WeightedDigraph::empty(4), 0.9, &opts()).unwrap();
        assert_eq!(k.values, vec![1.0; 4]);

        let k = katz_bonacich(&two_node(), 0.25, &opts()).unwrap();
        assert!((k.values[0] - 1.0).abs() < 1e-12);
        assert!((k.values[1] - 1.125).abs() < 1e-12);

        // attenuation 0.25 on g = 0.5: a_L = (1 + 3·0.125)/(1 − 0.125) = 11/7.
        let k = katz_bonacich(&cp(3, 4, 0.5), 0.25, &opts()).unwrap();
        for (v, x) in k.values.iter().enumerate() {
            let expected = if v % 4 == 3 { 11.0 / 7.0 } else { 1.0 };
            assert!((x - expected).abs() < 1e-12, "node {v}: {x}");
        }
        assert!(k.residual <= 1e-10);
    }

    #[test]
    fn katz_refuses_large_attenuation() {
        let g = WeightedDigraph::new(2, [Edge::new(0, 1, 2.0), Edge::new(1, 0, 2.0)]).unwrap();
        let err = katz_bonacich(&g, 0.5, &opts()).unwrap_err();
        assert!(matches!(
            err,
            CentralityError::AttenuationTooLarge { radius, .. } if (radius - 2.0).abs() < 1e-9
        ));
    }

    #[test]
    fn biproduct_examples() {
        let params = MarketParams::new(2.0, 1.0, 0.5, 0.5).unwrap();
        let empty = biproduct_centrality(&WeightedDigraph::empty(3), &params, &opts()).unwrap();
        assert_eq!(empty.c_new, vec![1.0; 3]);
        assert_eq!(empty.c_cross, vec![0.0; 3]);

        let two = biproduct_centrality(&two_node(), &params, &opts()).unwrap();
        let expected_new = [1.0, 1.25];
        let expected_cross = [0.0, 0.125];
        for i in 0..2 {
            assert!((two.c_new[i] - expected_new[i]).abs() < 1e-12);
            assert!((two.c_cross[i] - expected_cross[i]).abs() < 1e-12);
        }

        let b = biproduct_centrality(&cp(3, 4, 0.5), &params, &opts()).unwrap();
        assert!((b.c_new[3] - 87.0 / 35.0).abs() < 1e-12);
        assert!((b.b[3] - 3.4).abs() < 1e-12);
        assert!((b.total_b() - 19.2).abs() < 1e-11);
    }

    #[test]
    fn biproduct_refuses_failed_assumptions() {
        let g = WeightedDigraph::new(2, [Edge::new(0, 1, 2.0), Edge::new(1, 0, 2.0)]).unwrap();
        let params = MarketParams::new(2.0, 1.0, 0.9, 0.9).unwrap();
        assert!(matches!(
            biproduct_centrality(&g, &params, &opts()),
            Err(CentralityError::Assumptions(_))
        ));
    }

    #[test]
    fn beta_zero_collapses() {
        let params = MarketParams::new(2.0, 1.0, 0.0, 0.6).unwrap();
        let g = cp(3, 5, 0.7);
        let b = biproduct_centrality(&g, &params, &opts()).unwrap();
        assert!(b.c_cross.iter().all(|&c| c == 0.0));
        assert_eq!(b.c_new, katz_bonacich(&g, 0.6, &opts()).unwrap().values);
    }

    #[test]
    fn neumann_examples() {
        assert_eq!(neumann_oracle(&cp(3, 4, 0.5), 0.3, 1), vec![1.0; 12]);
        assert_eq!(neumann_oracle(&two_node(), 0.25, 2), vec![1.0, 1.125]);
        assert_eq!(neumann_oracle(&two_node(), 0.25, 50), vec![1.0, 1.125]);
    }

    #[test]
    fn neumann_partial_sums_approach_role_model_b() {
        // b_L = 3.4 at attenuation 0.75 on g = 0.5; the tail shrinks by 0.375 per term.
        let g = cp(3, 4, 0.5);
        let mut previous_gap = f64::INFINITY;
        for terms in [5, 10, 20, 40] {
            let gap = 3.4 - neumann_oracle(&g, 0.75, terms)[3];
            assert!(gap >= -1e-12 && gap < previous_gap);
            assert!(gap <= 3.4 * 0.375_f64.powi(terms as i32 - 2));
            previous_gap = gap;
        }
        let bound = neumann_tail_bound(&g, 0.75, 40).unwrap();
        assert!(bound < 1e-8);
        assert!(3.4 - neumann_oracle(&g, 0.75, 40)[3] <= bound);
    }
}
