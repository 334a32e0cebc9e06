//! Cluster extraction, λ search and heatmap ordering for biclustering fits.

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::admm::{BiclustProblem, BiclustSolver, BiclustState, SolveReport, SolverOptions};
use crate::error::Result;
use crate::select::{search_cluster_count, split_components, ClusterAssignment};
use crate::weights::{median, WeightGraph};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiclustPoint {
    pub lambda: f64,
    pub state: BiclustState,
    pub report: SolveReport,
    pub rows: ClusterAssignment,
    pub cols: ClusterAssignment,
}

pub struct BiclustPathSolver<'a> {
    solver: BiclustSolver<'a>,
    problem: BiclustProblem<'a>,
    row_tol: f64,
    col_tol: f64,
}

impl<'a> BiclustPathSolver<'a> {
    pub fn new(problem: BiclustProblem<'a>, opts: SolverOptions) -> Result<Self> {
        let row_tol = edge_tol(problem.x, problem.row_graph);
        let col_tol = edge_tol(problem.x.t(), problem.col_graph);
        Ok(BiclustPathSolver {
            solver: BiclustSolver::new(problem, opts)?,
            problem,
            row_tol,
            col_tol,
        })
    }

    pub fn solver(&self) -> &BiclustSolver<'a> {
        &self.solver
    }

    pub fn point(&self, lambda: f64, warm: Option<&BiclustState>) -> Result<BiclustPoint> {
        let (state, report) = self.solver.solve(lambda, warm)?;
        let rows = split_components(state.v_row.view(), self.problem.row_graph, self.row_tol);
        let cols = split_components(state.v_col.view(), self.problem.col_graph, self.col_tol);
        Ok(BiclustPoint {
            lambda,
            state,
            report,
            rows,
            cols,
        })
    }

    /// Warm-started fits over an increasing grid.
    pub fn path(&self, lambdas: &[f64]) -> Result<Vec<BiclustPoint>> {
        let mut out: Vec<BiclustPoint> = Vec::with_capacity(lambdas.len());
        for &lam in lambdas {
            let pt = self.point(lam, out.last().map(|p| &p.state))?;
            out.push(pt);
        }
        Ok(out)
    }

    /// Same heuristic as the clustering solver: where row fusion starts.
    pub fn lambda_scale(&self) -> f64 {
        let g = self.problem.row_graph;
        let mut norms = edge_norms(self.problem.x, g);
        let deg = g.degrees().iter().sum::<usize>() as f64 / g.n as f64;
        let wbar = g.weights().mean().unwrap_or(1.0);
        let s = self.problem.pi.x * median(&mut norms) / (deg * wbar).max(f64::MIN_POSITIVE);
        if s > 0.0 && s.is_finite() {
            s
        } else {
            1.0
        }
    }

    /// λ giving exactly `target` row clusters.
    pub fn lambda_for_row_clusters(&self, target: usize) -> Result<BiclustPoint> {
        search_cluster_count(
            target,
            self.problem.row_graph.n,
            self.lambda_scale(),
            |lam, warm: Option<&BiclustPoint>| self.point(lam, warm.map(|w| &w.state)),
            |pt| (pt.lambda, pt.rows.k),
        )
    }

    /// Log-spaced grid from `1e-2` times [`Self::lambda_scale`] up to the
    /// first doubling at which rows and columns have both fully fused.
    pub fn auto_grid(&self, points: usize) -> Result<Vec<f64>> {
        let lo = 1e-2 * self.lambda_scale();
        let mut hi = lo;
        let mut pt = self.point(hi, None)?;
        while (pt.rows.k > 1 || pt.cols.k > 1) && hi < 1e300 {
            hi *= 2.0;
            pt = self.point(hi, Some(&pt.state))?;
        }
        let m = points.max(2);
        let mut grid = vec![0.0];
        grid.extend((0..m - 1).map(|i| lo * (hi / lo).powf(i as f64 / (m - 2).max(1) as f64)));
        Ok(grid)
    }
}

fn edge_norms(x: ArrayView2<f64>, g: &WeightGraph) -> Vec<f64> {
    g.edges
        .iter()
        .map(|e| {
            let d = &x.row(e.i) - &x.row(e.j);
            d.dot(&d).sqrt()
        })
        .collect()
}

fn edge_tol(x: ArrayView2<f64>, g: &WeightGraph) -> f64 {
    let mut norms: Vec<f64> = edge_norms(x, g).into_iter().filter(|&v| v > 0.0).collect();
    if norms.is_empty() {
        1e-12
    } else {
        1e-6 * median(&mut norms)
    }
}

/// Stable ordering of indices by label.
pub fn order_by_labels(labels: &[usize]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..labels.len()).collect();
    idx.sort_by_key(|&i| labels[i]);
    idx
}

/// `u` with rows and columns grouped by cluster, plus the orders used.
pub fn heatmap(u: ArrayView2<f64>, rows: &[usize], cols: &[usize]) -> (Array2<f64>, Vec<usize>, Vec<usize>) {
    let (ro, co) = (order_by_labels(rows), order_by_labels(cols));
    let m = u.select(Axis(0), &ro).select(Axis(1), &co);
    (m, ro, co)
}
