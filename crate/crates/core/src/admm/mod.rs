//! Multi-block ADMM for supervised convex clustering and biclustering.
//!
//! The solver splits the fusion penalty through `V = D[θ U]` and alternates
//! a closed-form `U` update, one linearized descent step on `θ` and `β`, a
//! row-wise group-lasso proximal step on `V`, and dual ascent on `Q`.

mod biclust;
mod block;
mod difference;
mod prox;
mod scc;
mod system;

pub use biclust::{
    biclust_solve, doubly_solve, BiclustProblem, BiclustSolver, BiclustState, DoublySupervised, FeatureSupervision,
};
pub use difference::DifferenceMatrix;
pub use prox::{prox_group_lasso, prox_group_lasso_inplace};
pub use scc::{objective, scc_solve, SccProblem, SccSolver};
pub use system::{symmetric_eigen, u_system_factorize, FusionSystem, LaplacianEigen};


use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

/// Balancing weights for the data-fidelity and supervision terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pi {
    pub x: f64,
    pub y: f64,
}

/// How the supervising centroids take their one-step update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThetaStep {
    /// Plain gradient step on the augmented Lagrangian with step
    /// `1 / (π_y L + ρ‖D‖²)`.
    Gradient,
    /// Linearizes only the loss and keeps the augmented quadratic exact:
    /// one solve of `(π_y L I + ρ DᵀD) θ = …` per iteration.
    Proximal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Initial ADMM penalty.
    pub rho: f64,
    pub tol_abs: f64,
    pub tol_rel: f64,
    pub max_iter: usize,
    /// Residual balancing: ρ is doubled or halved when the scaled residuals
    /// differ by more than 10×.
    pub adaptive_rho: bool,
    pub theta_step: ThetaStep,
    /// Record the objective every this many iterations (0 = final only).
    pub trace_every: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            rho: 1.0,
            tol_abs: 1e-6,
            tol_rel: 1e-4,
            max_iter: 10_000,
            adaptive_rho: true,
            theta_step: ThetaStep::Proximal,
            trace_every: 0,
        }
    }
}

impl SolverOptions {
    /// Tolerances tight enough that the fusion pattern (and hence the
    /// cluster count) is settled; the defaults can stop while near-zero
    /// differences are still shrinking.
    pub fn precise() -> Self {
        SolverOptions {
            tol_abs: 1e-8,
            tol_rel: 1e-6,
            max_iter: 50_000,
            ..Self::default()
        }
    }
}

/// Primal, splitting and dual variables of a supervised convex clustering fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitState {
    /// Data centroids, `n × p`.
    pub u: Array2<f64>,
    /// Supervising centroids, `n × q` (`q = K` for multinomial, 0 when unsupervised).
    pub theta: Array2<f64>,
    /// Covariate coefficients, `d × q`.
    pub beta: Array2<f64>,
    /// Splitting variable `[V_θ V_U]`, `|E| × (q + p)`.
    pub v: Array2<f64>,
    /// Scaled dual `[Q_θ Q_U]`, same shape as `v`.
    pub q: Array2<f64>,
    pub rho: f64,
}

impl FitState {
    /// `[θ U]` stacked column-wise.
    pub fn centroids(&self) -> Array2<f64> {
        ndarray::concatenate![ndarray::Axis(1), self.theta, self.u]
    }

    /// Linear predictor `θ + Zβ`.
    pub fn predictor(&self, z: Option<ArrayView2<f64>>) -> Array2<f64> {
        match z {
            Some(z) if z.ncols() > 0 => &self.theta + &z.dot(&self.beta),
            _ => self.theta.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// `‖D[θ U] − V‖_F` (all constraint blocks for biclustering).
    pub primal_residual: f64,
    /// Norm of the stationarity residual of the smooth blocks.
    pub dual_residual: f64,
    pub objective: f64,
    /// `(iteration, objective)` pairs.
    pub objective_trace: Vec<(usize, f64)>,
    pub converged: bool,
    /// A Poisson predictor exceeded the exponent cap at some iterate.
    pub clipped: bool,
    pub rho: f64,
}

pub(crate) fn frob(a: ArrayView2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Residual-balancing update; returns the factor by which ρ was multiplied.
pub(crate) fn balance_rho(rho: &mut f64, primal: f64, dual: f64) -> f64 {
    const MU: f64 = 10.0;
    const LIMIT: (f64, f64) = (1e-12, 1e12);
    if primal > MU * dual && *rho * 2.0 <= LIMIT.1 {
        *rho *= 2.0;
        2.0
    } else if dual > MU * primal && *rho * 0.5 >= LIMIT.0 {
        *rho *= 0.5;
        0.5
    } else {
        1.0
    }
}
