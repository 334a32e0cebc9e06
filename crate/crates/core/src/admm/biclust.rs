//! Supervised convex biclustering and its doubly-supervised extension.
//!
//! Rows of `[θ U]` fuse over the observation graph and columns of `U` fuse
//! over the feature graph. The column penalty acts on a copy `M = Uᵀ`
//! (dual `N`), so each block keeps a closed-form update:
//!
//! ```text
//! U ← ((π_X + ρ) I + ρ D_rᵀD_r)⁻¹ (π_X X + ρ D_rᵀ(V_r − Q_r) + ρ(Mᵀ − Nᵀ))
//! M ← (I + D_cᵀD_c)⁻¹ (D_cᵀ(V_c − Q_c) + Uᵀ + N)
//! ```
//!
//! With feature-side supervision `ỹ` the centroids `θ̃` join the columns of
//! `M` in the column penalty, mirroring how `θ` joins the rows of `U`.

use std::sync::Arc;

use ndarray::{s, Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::block::SupervisedBlock;
use super::difference::DifferenceMatrix;
use super::prox::prox_group_lasso_inplace;
use super::scc::sq_dist;
use super::system::LaplacianEigen;
use super::{balance_rho, frob, Pi, SolveReport, SolverOptions};
use crate::error::{Error, Result};
use crate::family::{loss_center, Response};
use crate::weights::WeightGraph;

/// Supervision attached to the features (one record per column of `X`).
#[derive(Debug, Clone, Copy)]
pub struct FeatureSupervision<'a> {
    pub y: &'a Response,
    /// Feature covariates, `p × d̃`.
    pub z: Option<ArrayView2<'a, f64>>,
    pub pi: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct BiclustProblem<'a> {
    pub x: ArrayView2<'a, f64>,
    pub y: Option<&'a Response>,
    pub z: Option<ArrayView2<'a, f64>>,
    pub row_graph: &'a WeightGraph,
    pub col_graph: &'a WeightGraph,
    pub pi: Pi,
    pub feature: Option<FeatureSupervision<'a>>,
    /// Multiplier on the column penalty relative to the row penalty.
    pub col_ratio: f64,
}

impl<'a> BiclustProblem<'a> {
    pub fn new(
        x: ArrayView2<'a, f64>,
        y: Option<&'a Response>,
        row_graph: &'a WeightGraph,
        col_graph: &'a WeightGraph,
        pi: Pi,
    ) -> Self {
        BiclustProblem {
            x,
            y,
            z: None,
            row_graph,
            col_graph,
            pi,
            feature: None,
            col_ratio: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (n, p) = self.x.dim();
        if self.row_graph.n != n {
            return Err(Error::Dimension(format!(
                "row graph has {} nodes but data has {n} rows",
                self.row_graph.n
            )));
        }
        if self.col_graph.n != p {
            return Err(Error::Dimension(format!(
                "column graph has {} nodes but data has {p} columns",
                self.col_graph.n
            )));
        }
        if self.row_graph.is_empty() || self.col_graph.is_empty() {
            return Err(Error::Config("biclustering needs edges in both graphs".into()));
        }
        if self.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("data matrix"));
        }
        check_side(self.y, self.z, n, "row")?;
        if let Some(f) = &self.feature {
            check_side(Some(f.y), f.z, p, "feature")?;
            if !(f.pi >= 0.0 && f.pi.is_finite()) {
                return Err(Error::Config(format!("feature pi must be non-negative, got {}", f.pi)));
            }
        }
        if !(self.pi.x > 0.0 && self.pi.x.is_finite()) {
            return Err(Error::Config(format!("pi_x must be positive, got {}", self.pi.x)));
        }
        if !(self.pi.y >= 0.0 && self.pi.y.is_finite()) {
            return Err(Error::Config(format!("pi_y must be non-negative, got {}", self.pi.y)));
        }
        if !(self.col_ratio >= 0.0 && self.col_ratio.is_finite()) {
            return Err(Error::Config(format!("column ratio must be non-negative, got {}", self.col_ratio)));
        }
        Ok(())
    }
}

fn check_side(y: Option<&Response>, z: Option<ArrayView2<f64>>, len: usize, side: &str) -> Result<()> {
    if let Some(y) = y {
        if y.len() != len {
            return Err(Error::Dimension(format!(
                "{side} supervising variable has {} records, expected {len}",
                y.len()
            )));
        }
    }
    if let Some(z) = z {
        if z.nrows() != len {
            return Err(Error::Dimension(format!("{side} covariates have {} rows, expected {len}", z.nrows())));
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("covariates"));
        }
        if y.is_none() && z.ncols() > 0 {
            return Err(Error::Config(format!("{side} covariates require a supervising variable")));
        }
    }
    Ok(())
}

/// Feature-side centroids and coefficients of a doubly-supervised fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoublySupervised {
    /// `p × q̃`.
    pub theta_tilde: Array2<f64>,
    /// `d̃ × q̃`.
    pub beta_tilde: Array2<f64>,
    pub pi_y_tilde: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiclustState {
    pub u: Array2<f64>,
    pub theta: Array2<f64>,
    pub beta: Array2<f64>,
    /// Copy of `Uᵀ`, `p × n`.
    pub m: Array2<f64>,
    /// `D_r[θ U]` split, `|E| × (q + p)`.
    pub v_row: Array2<f64>,
    /// `D_c[θ̃ M]` split, `|Ẽ| × (q̃ + n)`.
    pub v_col: Array2<f64>,
    pub q_row: Array2<f64>,
    pub q_col: Array2<f64>,
    /// Scaled dual of `Uᵀ = M`, `p × n`.
    pub n_dual: Array2<f64>,
    pub rho: f64,
    pub doubly: Option<DoublySupervised>,
}

impl BiclustState {
    fn theta_tilde(&self, p: usize) -> Array2<f64> {
        self.doubly
            .as_ref()
            .map_or_else(|| Array2::zeros((p, 0)), |d| d.theta_tilde.clone())
    }
}

pub struct BiclustSolver<'a> {
    problem: BiclustProblem<'a>,
    row_diff: DifferenceMatrix,
    col_diff: DifferenceMatrix,
    row_eigen: Arc<LaplacianEigen>,
    col_eigen: Arc<LaplacianEigen>,
    row_w: Array1<f64>,
    col_w: Array1<f64>,
    row_block: Option<SupervisedBlock<'a>>,
    col_block: Option<SupervisedBlock<'a>>,
    opts: SolverOptions,
}

impl<'a> BiclustSolver<'a> {
    pub fn new(problem: BiclustProblem<'a>, opts: SolverOptions) -> Result<Self> {
        problem.validate()?;
        let row_diff = DifferenceMatrix::from_graph(problem.row_graph);
        let col_diff = DifferenceMatrix::from_graph(problem.col_graph);
        let row_block = problem
            .y
            .map(|y| SupervisedBlock::new(y, problem.z, problem.pi.y, opts.theta_step));
        let col_block = problem
            .feature
            .map(|f| SupervisedBlock::new(f.y, f.z, f.pi, opts.theta_step));
        Ok(BiclustSolver {
            row_eigen: Arc::new(LaplacianEigen::new(&row_diff)),
            col_eigen: Arc::new(LaplacianEigen::new(&col_diff)),
            row_w: problem.row_graph.weights(),
            col_w: problem.col_graph.weights() * problem.col_ratio,
            row_diff,
            col_diff,
            row_block,
            col_block,
            problem,
            opts,
        })
    }

    fn widths(&self) -> (usize, usize) {
        (
            self.problem.y.map_or(0, |y| y.width()),
            self.problem.feature.map_or(0, |f| f.y.width()),
        )
    }

    pub fn initial_state(&self) -> BiclustState {
        let (n, p) = self.problem.x.dim();
        let theta = centered(self.problem.y, n);
        let beta = Array2::zeros((self.problem.z.map_or(0, |z| z.ncols()), theta.ncols()));
        let doubly = self.problem.feature.map(|f| {
            let theta_tilde = centered(Some(f.y), p);
            DoublySupervised {
                beta_tilde: Array2::zeros((f.z.map_or(0, |z| z.ncols()), theta_tilde.ncols())),
                theta_tilde,
                pi_y_tilde: f.pi,
            }
        });
        let u = self.problem.x.to_owned();
        let m = u.t().to_owned();
        let v_row = stack(&self.row_diff, theta.view(), u.view());
        let tt = doubly
            .as_ref()
            .map_or_else(|| Array2::zeros((p, 0)), |d| d.theta_tilde.clone());
        let v_col = stack(&self.col_diff, tt.view(), m.view());
        BiclustState {
            q_row: Array2::zeros(v_row.raw_dim()),
            q_col: Array2::zeros(v_col.raw_dim()),
            n_dual: Array2::zeros(m.raw_dim()),
            u,
            theta,
            beta,
            m,
            v_row,
            v_col,
            rho: self.opts.rho,
            doubly,
        }
    }

    fn check_state(&self, st: &BiclustState) -> Result<()> {
        let (n, p) = self.problem.x.dim();
        let (q, qt) = self.widths();
        let ok = st.u.dim() == (n, p)
            && st.theta.dim() == (n, q)
            && st.m.dim() == (p, n)
            && st.n_dual.dim() == (p, n)
            && st.v_row.dim() == (self.row_diff.edges(), q + p)
            && st.q_row.dim() == st.v_row.dim()
            && st.v_col.dim() == (self.col_diff.edges(), qt + n)
            && st.q_col.dim() == st.v_col.dim()
            && st.doubly.is_some() == self.col_block.is_some()
            && st.rho > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Dimension("warm-start state does not match the problem".into()))
        }
    }

    /// Primal objective at `(U, θ, β, θ̃, β̃)` with both penalties evaluated
    /// on `U` directly.
    pub fn objective(&self, st: &BiclustState, lambda: f64) -> f64 {
        let p = self.problem.x.ncols();
        let mut obj = 0.5 * self.problem.pi.x * sq_dist(self.problem.x, st.u.view());
        if let Some(b) = &self.row_block {
            obj += b.pi * b.loss(st.theta.view(), st.beta.view());
        }
        if let (Some(b), Some(d)) = (&self.col_block, &st.doubly) {
            obj += b.pi * b.loss(d.theta_tilde.view(), d.beta_tilde.view());
        }
        let rows = stack(&self.row_diff, st.theta.view(), st.u.view());
        let ut = st.u.t().to_owned();
        let cols = stack(&self.col_diff, st.theta_tilde(p).view(), ut.view());
        obj + lambda * (weighted_norms(&rows, &self.row_w) + weighted_norms(&cols, &self.col_w))
    }

    pub fn solve(&self, lambda: f64, warm: Option<&BiclustState>) -> Result<(BiclustState, SolveReport)> {
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
        let (q, qt) = self.widths();
        let (er, ec) = (self.row_diff.edges(), self.col_diff.edges());
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
        let mut grad = match &self.row_block {
            Some(b) => b.gradient(st.theta.view(), st.beta.view()),
            None => Array2::zeros((n, 0)),
        };
        let mut grad_t = match (&self.col_block, &st.doubly) {
            (Some(b), Some(d)) => b.gradient(d.theta_tilde.view(), d.beta_tilde.view()),
            _ => Array2::zeros((p, 0)),
        };
        let pix_x = &x * pi_x;

        for iter in 1..=opts.max_iter {
            let rho = st.rho;

            // U, against the row split and the copy M.
            let target = &st.v_row.slice(s![.., q..]) - &st.q_row.slice(s![.., q..]);
            let mut rhs = self.row_diff.apply_transpose(target.view()) * rho;
            rhs += &pix_x;
            rhs.scaled_add(rho, &(&st.m - &st.n_dual).t());
            st.u = self.row_eigen.solve(pi_x + rho, rho, rhs.view(), None);

            if let Some(block) = &self.row_block {
                let target = &st.v_row.slice(s![.., ..q]) - &st.q_row.slice(s![.., ..q]);
                block.update_theta(
                    &mut st.theta,
                    st.beta.view(),
                    &grad,
                    &self.row_diff,
                    &self.row_eigen,
                    rho,
                    target.view(),
                );
                block.update_beta(st.theta.view(), &mut st.beta);
                report.clipped |= block.exceeds_cap(st.theta.view(), st.beta.view());
            }

            // M, against the column split and Uᵀ.
            let target = &st.v_col.slice(s![.., qt..]) - &st.q_col.slice(s![.., qt..]);
            let mut rhs = self.col_diff.apply_transpose(target.view());
            rhs += &st.u.t();
            rhs += &st.n_dual;
            st.m = self.col_eigen.solve(1.0, 1.0, rhs.view(), None);

            if let (Some(block), Some(d)) = (&self.col_block, st.doubly.as_mut()) {
                let target = &st.v_col.slice(s![.., ..qt]) - &st.q_col.slice(s![.., ..qt]);
                block.update_theta(
                    &mut d.theta_tilde,
                    d.beta_tilde.view(),
                    &grad_t,
                    &self.col_diff,
                    &self.col_eigen,
                    rho,
                    target.view(),
                );
                block.update_beta(d.theta_tilde.view(), &mut d.beta_tilde);
                report.clipped |= block.exceeds_cap(d.theta_tilde.view(), d.beta_tilde.view());
            }

            // Splits and duals.
            let dr = stack(&self.row_diff, st.theta.view(), st.u.view());
            let mut vr = &dr + &st.q_row;
            prox_group_lasso_inplace(vr.view_mut(), self.row_w.view(), lambda / rho);
            let res_r = &dr - &vr;
            st.q_row += &res_r;
            st.v_row = vr;

            let tt = st.theta_tilde(p);
            let dcol = stack(&self.col_diff, tt.view(), st.m.view());
            let mut vc = &dcol + &st.q_col;
            prox_group_lasso_inplace(vc.view_mut(), self.col_w.view(), lambda / rho);
            let res_c = &dcol - &vc;
            st.q_col += &res_c;
            st.v_col = vc;

            let res_m = &st.u.t() - &st.m;
            st.n_dual += &res_m;

            // Residuals: constraint violations, then stationarity of the
            // smooth blocks given the current multipliers.
            let r = (frob(res_r.view()).powi(2) + frob(res_c.view()).powi(2) + frob(res_m.view()).powi(2)).sqrt();
            if let Some(b) = &self.row_block {
                grad = b.gradient(st.theta.view(), st.beta.view());
            }
            if let (Some(b), Some(d)) = (&self.col_block, &st.doubly) {
                grad_t = b.gradient(d.theta_tilde.view(), d.beta_tilde.view());
            }
            let dq_r = self.row_diff.apply_transpose(st.q_row.view()) * rho;
            let dq_c = self.col_diff.apply_transpose(st.q_col.view()) * rho;
            let mut kkt = 0.0;
            for i in 0..n {
                for k in 0..q {
                    let g = self.problem.pi.y * grad[[i, k]] + dq_r[[i, k]];
                    kkt += g * g;
                }
                for j in 0..p {
                    let g = pi_x * (st.u[[i, j]] - x[[i, j]]) + dq_r[[i, q + j]] + rho * st.n_dual[[j, i]];
                    kkt += g * g;
                }
            }
            let pi_t = self.problem.feature.map_or(0.0, |f| f.pi);
            for j in 0..p {
                for k in 0..qt {
                    let g = pi_t * grad_t[[j, k]] + dq_c[[j, k]];
                    kkt += g * g;
                }
                for i in 0..n {
                    let g = dq_c[[j, qt + i]] - rho * st.n_dual[[j, i]];
                    kkt += g * g;
                }
            }
            let beta_res = self.row_block.as_ref().map_or(0.0, |b| b.beta_residual(&grad))
                + self.col_block.as_ref().map_or(0.0, |b| b.beta_residual(&grad_t));
            let sres = (kkt + beta_res * beta_res).sqrt();

            let pri_scale = (frob(dr.view()).powi(2) + frob(dcol.view()).powi(2) + frob(st.m.view()).powi(2))
                .sqrt()
                .max((frob(st.v_row.view()).powi(2) + frob(st.v_col.view()).powi(2) + frob(st.u.view()).powi(2)).sqrt());
            let dual_scale = (frob(dq_r.view()).powi(2) + frob(dq_c.view()).powi(2)).sqrt()
                + rho * frob(st.n_dual.view());
            let dims_pri = (er * (q + p) + ec * (qt + n) + n * p) as f64;
            let dims_dual = (n * (q + p) + p * (qt + n)) as f64;
            let eps_pri = opts.tol_abs * dims_pri.sqrt() + opts.tol_rel * pri_scale;
            let eps_dual = opts.tol_abs * dims_dual.sqrt() + opts.tol_rel * dual_scale;

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
                    st.q_row /= factor;
                    st.q_col /= factor;
                    st.n_dual /= factor;
                }
            }
        }
        report.rho = st.rho;
        report.objective = self.objective(&st, lambda);
        if !report.converged {
            log::debug!(
                "biclustering ADMM stopped at {} iterations (primal {:.3e}, dual {:.3e})",
                report.iterations,
                report.primal_residual,
                report.dual_residual
            );
        }
        Ok((st, report))
    }
}

fn centered(y: Option<&Response>, len: usize) -> Array2<f64> {
    match y {
        Some(y) => loss_center(y.family(), y)
            .map(|c| c.broadcast(len))
            .unwrap_or_else(|_| Array2::zeros((len, y.width()))),
        None => Array2::zeros((len, 0)),
    }
}

fn stack(diff: &DifferenceMatrix, head: ArrayView2<f64>, body: ArrayView2<f64>) -> Array2<f64> {
    let q = head.ncols();
    let mut out = Array2::zeros((diff.edges(), q + body.ncols()));
    diff.apply_into(head, out.slice_mut(s![.., ..q]));
    diff.apply_into(body, out.slice_mut(s![.., q..]));
    out
}

fn weighted_norms(d: &Array2<f64>, w: &Array1<f64>) -> f64 {
    d.rows().into_iter().zip(w.iter()).map(|(r, w)| w * r.dot(&r).sqrt()).sum()
}

/// Supervised convex biclustering; feature supervision, if present, is
/// ignored (see [`doubly_solve`]).
pub fn biclust_solve(
    problem: BiclustProblem<'_>,
    lambda: f64,
    opts: &SolverOptions,
    warm: Option<&BiclustState>,
) -> Result<(BiclustState, SolveReport)> {
    let problem = BiclustProblem {
        feature: None,
        ..problem
    };
    BiclustSolver::new(problem, opts.clone())?.solve(lambda, warm)
}

/// Doubly-supervised convex clustering: biclustering with supervision on
/// both observations and features.
pub fn doubly_solve(
    problem: BiclustProblem<'_>,
    lambda: f64,
    opts: &SolverOptions,
    warm: Option<&BiclustState>,
) -> Result<(BiclustState, SolveReport)> {
    if problem.feature.is_none() {
        return Err(Error::Config("doubly-supervised fit requires feature-side supervision".into()));
    }
    BiclustSolver::new(problem, opts.clone())?.solve(lambda, warm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::Edge;
    use ndarray::array;

    fn path(n: usize) -> WeightGraph {
        WeightGraph::new(n, (0..n - 1).map(|i| Edge { i, j: i + 1, w: 1.0 }).collect()).unwrap()
    }

    fn tight() -> SolverOptions {
        SolverOptions {
            tol_abs: 1e-10,
            tol_rel: 1e-9,
            max_iter: 100_000,
            ..SolverOptions::default()
        }
    }

    #[test]
    fn zero_lambda_reproduces_data() {
        let x = array![[1.0, 2.0, 0.5], [3.0, -1.0, 2.0], [0.0, 4.0, 1.0]];
        let (rg, cg) = (path(3), path(3));
        let pb = BiclustProblem::new(x.view(), None, &rg, &cg, Pi { x: 1.0, y: 0.0 });
        let (st, rep) = biclust_solve(pb, 0.0, &tight(), None).unwrap();
        assert!(rep.converged);
        for (a, b) in st.u.iter().zip(x.iter()) {
            assert!((a - b).abs() < 1e-8);
        }
        for (a, b) in st.m.iter().zip(x.t().iter()) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn large_lambda_gives_grand_mean() {
        let x = array![[1.0, 2.0], [3.0, -1.0], [0.0, 4.0]];
        let (rg, cg) = (path(3), path(2));
        let pb = BiclustProblem::new(x.view(), None, &rg, &cg, Pi { x: 1.0, y: 0.0 });
        let (st, _) = biclust_solve(pb, 1e4, &tight(), None).unwrap();
        let mean = x.mean().unwrap();
        assert!(st.u.iter().all(|v| (v - mean).abs() < 1e-6), "{:?}", st.u);
    }

    #[test]
    fn doubly_requires_feature_side() {
        let x = array![[1.0, 2.0], [3.0, -1.0]];
        let (rg, cg) = (path(2), path(2));
        let pb = BiclustProblem::new(x.view(), None, &rg, &cg, Pi { x: 1.0, y: 0.0 });
        assert!(matches!(doubly_solve(pb, 0.1, &tight(), None), Err(Error::Config(_))));
    }
}
