//! Solves `(I − M) x = r` for nonnegative operators `M` whose spectral
//! radius is below one.
//!
//! Small systems are factored densely (LU with one step of iterative
//! refinement); large ones use the fixed-point map `x ← r + M x`, which is a
//! contraction exactly when `ρ(M) < 1`. Either way the returned residual is
//! `‖(I − M) x − r‖∞`, evaluated through the operator itself.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::WeightedDigraph;

/// A nonnegative linear map on `ℝ^dim`.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    /// `out = M x`.
    fn apply(&self, x: &[f64], out: &mut [f64]);
    /// Dense copy of `M`.
    fn to_dense(&self) -> DMatrix<f64>;
}

/// `scale · G` or `scale · Gᵀ`.
#[derive(Debug, Clone, Copy)]
pub struct ScaledAdjacency<'g> {
    pub graph: &'g WeightedDigraph,
    pub scale: f64,
    pub transpose: bool,
}

impl<'g> ScaledAdjacency<'g> {
    pub fn katz(graph: &'g WeightedDigraph, attenuation: f64) -> Self {
        Self {
            graph,
            scale: attenuation,
            transpose: true,
        }
    }

    pub fn forward(graph: &'g WeightedDigraph, scale: f64) -> Self {
        Self {
            graph,
            scale,
            transpose: false,
        }
    }
}

impl LinearOperator for ScaledAdjacency<'_> {
    fn dim(&self) -> usize {
        self.graph.node_count()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        if self.transpose {
            self.graph.mul_transpose_vec(x, out);
        } else {
            self.graph.mul_vec(x, out);
        }
        for o in out.iter_mut() {
            *o *= self.scale;
        }
    }

    fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for e in self.graph.edges() {
            let (r, c) = if self.transpose {
                (e.influencer, e.influenced)
            } else {
                (e.influenced, e.influencer)
            };
            m[(r, c)] = self.scale * e.weight;
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Residual tolerance, `‖(I − M) x − r‖∞`.
    pub tol: f64,
    /// Systems of at most this dimension are solved densely.
    pub direct_threshold: usize,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            direct_threshold: 2000,
            max_iter: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    Direct,
    FixedPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub x: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub method: SolveMethod,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("singular system matrix")]
    Singular,
    #[error(
        "solver stopped after {iterations} iterations with residual {residual:e} (tol {tol:e})"
    )]
    Breakdown {
        residual: f64,
        iterations: usize,
        tol: f64,
    },
}

/// `‖x − M x − r‖∞`.
pub fn residual<M: LinearOperator + ?Sized>(op: &M, x: &[f64], rhs: &[f64]) -> f64 {
    let mut mx = vec![0.0; x.len()];
    op.apply(x, &mut mx);
    x.iter()
        .zip(&mx)
        .zip(rhs)
        .map(|((xi, mxi), ri)| (xi - mxi - ri).abs())
        .fold(0.0, f64::max)
}

/// A reusable solver for one operator: the LU factors of `I − M` are kept
/// when the system is small enough to be solved densely.
pub struct Solver<'a, M: LinearOperator + ?Sized> {
    op: &'a M,
    opts: SolverOptions,
    lu: Option<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
}

impl<'a, M: LinearOperator + ?Sized> Solver<'a, M> {
    pub fn new(op: &'a M, opts: SolverOptions) -> Result<Self, SolveError> {
        let lu = if op.dim() <= opts.direct_threshold {
            let n = op.dim();
            let system = DMatrix::identity(n, n) - op.to_dense();
            let lu = system.lu();
            if n > 0 && !lu.is_invertible() {
                return Err(SolveError::Singular);
            }
            Some(lu)
        } else {
            None
        };
        Ok(Self { op, opts, lu })
    }

    pub fn operator(&self) -> &M {
        self.op
    }

    pub fn method(&self) -> SolveMethod {
        if self.lu.is_some() {
            SolveMethod::Direct
        } else {
            SolveMethod::FixedPoint
        }
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Solution, SolveError> {
        assert_eq!(rhs.len(), self.op.dim(), "right-hand side dimension");
        match &self.lu {
            Some(lu) => self.solve_direct(lu, rhs),
            None => self.solve_fixed_point(rhs),
        }
    }

    fn solve_direct(
        &self,
        lu: &nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
        rhs: &[f64],
    ) -> Result<Solution, SolveError> {
        if rhs.is_empty() {
            return Ok(Solution {
                x: Vec::new(),
                residual: 0.0,
                iterations: 0,
                method: SolveMethod::Direct,
            });
        }
        let b = DVector::from_column_slice(rhs);
        let mut x = lu.solve(&b).ok_or(SolveError::Singular)?;
        let mut xs: Vec<f64> = x.iter().copied().collect();
        let mut res = residual(self.op, &xs, rhs);
        let mut iterations = 1;
        // Refinement with the existing factors.
        while res > self.opts.tol && iterations < 4 {
            let mut mx = vec![0.0; xs.len()];
            self.op.apply(&xs, &mut mx);
            let r =
                DVector::from_iterator(xs.len(), (0..xs.len()).map(|i| rhs[i] - (xs[i] - mx[i])));
            let dx = lu.solve(&r).ok_or(SolveError::Singular)?;
            x += dx;
            xs = x.iter().copied().collect();
            res = residual(self.op, &xs, rhs);
            iterations += 1;
        }
        if res > self.opts.tol || !res.is_finite() {
            return Err(SolveError::Breakdown {
                residual: res,
                iterations,
                tol: self.opts.tol,
            });
        }
        Ok(Solution {
            x: xs,
            residual: res,
            iterations,
            method: SolveMethod::Direct,
        })
    }

    fn solve_fixed_point(&self, rhs: &[f64]) -> Result<Solution, SolveError> {
        let n = rhs.len();
        let mut x = rhs.to_vec();
        let mut mx = vec![0.0; n];
        let mut res = f64::INFINITY;
        for it in 1..=self.opts.max_iter {
            self.op.apply(&x, &mut mx);
            // The step length equals the residual of the current iterate.
            res = 0.0;
            for i in 0..n {
                let next = rhs[i] + mx[i];
                res = f64::max(res, (next - x[i]).abs());
                x[i] = next;
            }
            if !res.is_finite() {
                break;
            }
            if res <= self.opts.tol {
                let res = residual(self.op, &x, rhs);
                if res <= self.opts.tol {
                    return Ok(Solution {
                        x,
                        residual: res,
                        iterations: it,
                        method: SolveMethod::FixedPoint,
                    });
                }
            }
        }
        Err(SolveError::Breakdown {
            residual: res,
            iterations: self.opts.max_iter,
            tol: self.opts.tol,
        })
    }
}

/// One-shot convenience around [`Solver`].
pub fn solve<M: LinearOperator + ?Sized>(
    op: &M,
    rhs: &[f64],
    opts: SolverOptions,
) -> Result<Solution, SolveError> {
    Solver::new(op, opts)?.solve(rhs)
}

/// A positive weight vector `w` with `M w ≤ rate · w`, so that `M` contracts
/// the weighted max-norm `‖v‖_w = max_i |v_i| / w_i` by `rate`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionCertificate {
    pub weights: Vec<f64>,
    pub rate: f64,
}

impl ContractionCertificate {
    /// Tries `w = (I − θM)⁻¹ 1` with `θ = 2/(1 + ρ_hint)`; the returned rate
    /// is recomputed from `w` directly, so a poor hint only loosens it.
    pub fn for_operator<M: LinearOperator + ?Sized>(
        op: &M,
        rho_hint: f64,
        opts: SolverOptions,
    ) -> Option<Self> {
        let n = op.dim();
        if n == 0 {
            return Some(Self {
                weights: Vec::new(),
                rate: 0.0,
            });
        }
        let theta = if rho_hint > 0.0 && rho_hint < 1.0 {
            2.0 / (1.0 + rho_hint)
        } else {
            1.0
        };
        let boosted = Boosted { op, theta };
        let w = solve(&boosted, &vec![1.0; n], opts).ok()?.x;
        Self::from_weights(op, w)
    }

    pub fn from_weights<M: LinearOperator + ?Sized>(op: &M, weights: Vec<f64>) -> Option<Self> {
        if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return None;
        }
        let mut mw = vec![0.0; weights.len()];
        op.apply(&weights, &mut mw);
        let rate = mw
            .iter()
            .zip(&weights)
            .map(|(m, w)| m / w)
            .fold(0.0, f64::max);
        (rate < 1.0).then_some(Self { weights, rate })
    }

    /// `‖v‖_w`.
    pub fn norm(&self, v: &[f64]) -> f64 {
        v.iter()
            .zip(&self.weights)
            .map(|(x, w)| x.abs() / w)
            .fold(0.0, f64::max)
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }
}

struct Boosted<'a, M: LinearOperator + ?Sized> {
    op: &'a M,
    theta: f64,
}

impl<M: LinearOperator + ?Sized> LinearOperator for Boosted<'_, M> {
    fn dim(&self) -> usize {
        self.op.dim()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        self.op.apply(x, out);
        for o in out.iter_mut() {
            *o *= self.theta;
        }
    }

    fn to_dense(&self) -> DMatrix<f64> {
        self.op.to_dense() * self.theta
    }
}
