use std::sync::Arc;

use ndarray::{s, Array1, Array2, ArrayView2};

use super::block::SupervisedBlock;
use super::difference::DifferenceMatrix;
use super::prox::prox_group_lasso_inplace;
use super::system::LaplacianEigen;
use super::{balance_rho, frob, FitState, Pi, SolveReport, SolverOptions};
use crate::error::{Error, Result};
use crate::family::{loss_center, Response};
use crate::weights::WeightGraph;

/// Inputs of a supervised convex clustering fit. `y = None` gives plain
/// convex clustering of `x`.
#[derive(Debug, Clone, Copy)]
pub struct SccProblem<'a> {
    pub x: ArrayView2<'a, f64>,
    pub y: Option<&'a Response>,
    pub z: Option<ArrayView2<'a, f64>>,
    pub graph: &'a WeightGraph,
    pub pi: Pi,
}

impl<'a> SccProblem<'a> {
    pub fn validate(&self) -> Result<()> {
        let n = self.x.nrows();
        if self.graph.n != n {
            return Err(Error::Dimension(format!(
                "graph has {} nodes but data has {n} rows",
                self.graph.n
            )));
        }
        if self.graph.is_empty() {
            return Err(Error::Config("fusion graph has no edges".into()));
        }
        if self.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("data matrix"));
        }
        if let Some(y) = self.y {
            if y.len() != n {
                return Err(Error::Dimension(format!(
                    "data has {n} rows but supervising variable has {} records",
                    y.len()
                )));
            }
        }
        if let Some(z) = self.z {
            if z.nrows() != n {
                return Err(Error::Dimension(format!(
                    "covariates have {} rows, expected {n}",
                    z.nrows()
                )));
            }
            if z.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("covariates"));
            }
            if self.y.is_none() && z.ncols() > 0 {
                return Err(Error::Config(
                    "covariates require a supervising variable".into(),
                ));
            }
        }
        if !(self.pi.x > 0.0 && self.pi.x.is_finite()) {
            return Err(Error::Config(format!("pi_x must be positive, got {}", self.pi.x)));
        }
        if !(self.pi.y >= 0.0 && self.pi.y.is_finite()) {
            return Err(Error::Config(format!("pi_y must be non-negative, got {}", self.pi.y)));
        }
        Ok(())
    }

    fn width(&self) -> usize {
        self.y.map_or(0, |y| y.width())
    }

    fn covariates(&self) -> usize {
        self.z.map_or(0, |z| z.ncols())
    }
}

/// Solver for one problem, reusable across penalty levels.
pub struct SccSolver<'a> {
    problem: SccProblem<'a>,
    diff: DifferenceMatrix,
    eigen: Arc<LaplacianEigen>,
    weights: Array1<f64>,
    block: Option<SupervisedBlock<'a>>,
    opts: SolverOptions,
}

impl<'a> SccSolver<'a> {
    pub fn new(problem: SccProblem<'a>, opts: SolverOptions) -> Result<Self> {
        problem.validate()?;
        let diff = DifferenceMatrix::from_graph(problem.graph);
        let eigen = Arc::new(LaplacianEigen::new(&diff));
        let block = problem
            .y
            .map(|y| SupervisedBlock::new(y, problem.z, problem.pi.y, opts.theta_step));
        Ok(SccSolver {
            weights: problem.graph.weights(),
            problem,
            diff,
            eigen,
            block,
            opts,
        })
    }

    pub fn problem(&self) -> &SccProblem<'a> {
        &self.problem
    }

    pub fn options(&self) -> &SolverOptions {
        &self.opts
    }

    pub fn difference(&self) -> &DifferenceMatrix {
        &self.diff
    }

    /// `U = X`, `θ` at the loss-specific center, `β = 0`, `V = D[θ U]`, `Q = 0`.
    pub fn initial_state(&self) -> FitState {
        let n = self.problem.x.nrows();
        let q = self.problem.width();
        let theta = match self.problem.y {
            Some(y) => loss_center(y.family(), y)
                .map(|c| c.broadcast(n))
                .unwrap_or_else(|_| Array2::zeros((n, q))),
            None => Array2::zeros((n, 0)),
        };
        let u = self.problem.x.to_owned();
        let beta = Array2::zeros((self.problem.covariates(), q));
        let v = self.stack_differences(theta.view(), u.view());
        let qd = Array2::zeros(v.raw_dim());
        FitState {
            u,
            theta,
            beta,
            v,
            q: qd,
            rho: self.opts.rho,
        }
    }

    fn stack_differences(&self, theta: ArrayView2<f64>, u: ArrayView2<f64>) -> Array2<f64> {
        let q = theta.ncols();
        let mut out = Array2::zeros((self.diff.edges(), q + u.ncols()));
        self.diff.apply_into(theta, out.slice_mut(s![.., ..q]));
        self.diff.apply_into(u, out.slice_mut(s![.., q..]));
        out
    }

    fn check_state(&self, st: &FitState) -> Result<()> {
        let (n, p) = self.problem.x.dim();
        let q = self.problem.width();
        let e = self.diff.edges();
        let ok = st.u.dim() == (n, p)
            && st.theta.dim() == (n, q)
            && st.beta.dim() == (self.problem.covariates(), q)
            && st.v.dim() == (e, q + p)
            && st.q.dim() == (e, q + p)
            && st.rho > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Dimension("warm-start state does not match the problem".into()))
        }
    }

    /// Primal objective at the state's `(U, θ, β)`, with the penalty taken
    /// from `D[θ U]` directly.
    pub fn objective(&self, st: &FitState, lambda: f64) -> f64 {
        let fit = 0.5 * self.problem.pi.x * sq_dist(self.problem.x, st.u.view());
        let sup = self
            .block
            .as_ref()
            .map_or(0.0, |b| b.pi * b.loss(st.theta.view(), st.beta.view()));
        let dc = self.stack_differences(st.theta.view(), st.u.view());
        let pen: f64 = dc
            .rows()
            .into_iter()
            .zip(self.weights.iter())
            .map(|(r, w)| w * r.dot(&r).sqrt())
            .sum();
        fit + sup + lambda * pen
    }

    pub fn solve(&self, lambda: f64, warm: Option<&FitState>) -> Result<(FitState, SolveReport)> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::Config(format!("lambda must be >= 0, got {lambda}")));
        }
        let mut st = match warm {
            Some(w) => {
                self.check_state(w)?;
                w.clone()
            }
            None => self.initial_state(),
        };
        let x = self.problem.x;
        let pi_x = self.problem.pi.x;
        let (n, p) = x.dim();
        let q = self.problem.width();
        let c = q + p;
        let e = self.diff.edges();
        let opts = &self.opts;

        let mut report = SolveReport {
            iterations: 0,
            primal_residual: f64::INFINITY,
            dual_residual: f64::INFINITY,
            objective: f64::NAN,
            objective_trace: Vec::new(),
            converged: false,
            clipped: false,
            rho: st.rho,
        };
        let mut grad = match &self.block {
            Some(b) => b.gradient(st.theta.view(), st.beta.view()),
            None => Array2::zeros((n, 0)),
        };
        let pix_x = &x * pi_x;

        for iter in 1..=opts.max_iter {
            let rho = st.rho;
            // U: (π_X I + ρDᵀD) U = π_X X + ρDᵀ(V_U − Q_U)
            let target_u = &st.v.slice(s![.., q..]) - &st.q.slice(s![.., q..]);
            let mut rhs = self.diff.apply_transpose(target_u.view());
            rhs *= rho;
            rhs += &pix_x;
            st.u = self.eigen.solve(pi_x, rho, rhs.view(), None);

            if let Some(block) = &self.block {
                let target_t = &st.v.slice(s![.., ..q]) - &st.q.slice(s![.., ..q]);
                block.update_theta(
                    &mut st.theta,
                    st.beta.view(),
                    &grad,
                    &self.diff,
                    &self.eigen,
                    rho,
                    target_t.view(),
                );
                block.update_beta(st.theta.view(), &mut st.beta);
                if block.exceeds_cap(st.theta.view(), st.beta.view()) {
                    report.clipped = true;
                }
            }

            // V: prox of (λ/ρ) P at D[θ U] + Q; then dual ascent.
            let dc = self.stack_differences(st.theta.view(), st.u.view());
            let mut v_new = &dc + &st.q;
            prox_group_lasso_inplace(v_new.view_mut(), self.weights.view(), lambda / rho);
            let resid = &dc - &v_new;
            st.q += &resid;
            st.v = v_new;

            // Residuals.
            let r = frob(resid.view());
            if let Some(b) = &self.block {
                grad = b.gradient(st.theta.view(), st.beta.view());
            }
            let dq = self.diff.apply_transpose(st.q.view()) * rho;
            let mut kkt_sq = 0.0;
            for i in 0..n {
                for k in 0..q {
                    let g = self.problem.pi.y * grad[[i, k]] + dq[[i, k]];
                    kkt_sq += g * g;
                }
                for k in 0..p {
                    let g = pi_x * (st.u[[i, k]] - x[[i, k]]) + dq[[i, q + k]];
                    kkt_sq += g * g;
                }
            }
            let beta_res = self.block.as_ref().map_or(0.0, |b| b.beta_residual(&grad));
            let sres = (kkt_sq + beta_res * beta_res).sqrt();

            let pri_scale = frob(dc.view()).max(frob(st.v.view()));
            let dual_scale = frob(dq.view());
            let eps_pri = opts.tol_abs * ((e * c) as f64).sqrt() + opts.tol_rel * pri_scale;
            let eps_dual = opts.tol_abs * ((n * c) as f64).sqrt() + opts.tol_rel * dual_scale;

            report.iterations = iter;
            report.primal_residual = r;
            report.dual_residual = sres;
            if opts.trace_every > 0 && iter % opts.trace_every == 0 {
                report.objective_trace.push((iter, self.objective(&st, lambda)));
            }
            if r <= eps_pri && sres <= eps_dual {
                report.converged = true;
                break;
            }
            if opts.adaptive_rho && iter % 5 == 0 && iter <= opts.max_iter / 2 {
                let factor = balance_rho(&mut st.rho, r / eps_pri, sres / eps_dual);
                if factor != 1.0 {
                    st.q /= factor;
                }
            }
        }
        report.rho = st.rho;
        report.objective = self.objective(&st, lambda);
        if !report.converged {
            log::debug!(
                "ADMM stopped at {} iterations without converging (primal {:.3e}, dual {:.3e})",
                report.iterations,
                report.primal_residual,
                report.dual_residual
            );
        }
        Ok((st, report))
    }
}

pub(crate) fn sq_dist(a: ArrayView2<f64>, b: ArrayView2<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// One-shot supervised convex clustering solve.
pub fn scc_solve(
    problem: SccProblem<'_>,
    lambda: f64,
    opts: &SolverOptions,
    warm: Option<&FitState>,
) -> Result<(FitState, SolveReport)> {
    SccSolver::new(problem, opts.clone())?.solve(lambda, warm)
}

/// Primal objective of a fitted state.
pub fn objective(problem: SccProblem<'_>, fit: &FitState, lambda: f64) -> Result<f64> {
    problem.validate()?;
    let (n, p) = problem.x.dim();
    let q = problem.width();
    if fit.u.dim() != (n, p) || fit.theta.dim() != (n, q) || fit.beta.dim() != (problem.covariates(), q) {
        return Err(Error::Dimension("fit does not match the problem".into()));
    }
    let fidelity = 0.5 * problem.pi.x * sq_dist(problem.x, fit.u.view());
    let supervision = match problem.y {
        Some(y) => problem.pi.y * y.loss_unchecked(fit.predictor(problem.z).view()),
        None => 0.0,
    };
    let diff = DifferenceMatrix::from_graph(problem.graph);
    let dc = diff.apply(fit.centroids().view());
    let penalty: f64 = dc
        .rows()
        .into_iter()
        .zip(problem.graph.edges.iter())
        .map(|(r, e)| e.w * r.dot(&r).sqrt())
        .sum();
    Ok(fidelity + supervision + lambda * penalty)
}
