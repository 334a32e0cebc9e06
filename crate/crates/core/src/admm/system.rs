use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, ArrayView2, Axis};

use super::difference::DifferenceMatrix;

/// Eigendecomposition of the unweighted Laplacian `DᵀD`.
///
/// Every linear system in the solvers has the form `(a I + ρ DᵀD) x = b`,
/// which is diagonal in this basis, so one decomposition serves all shifts
/// `a` and penalties `ρ` (including those produced by residual balancing).
#[derive(Debug, Clone)]
pub struct LaplacianEigen {
    laplacian: Array2<f64>,
    vectors: Array2<f64>,
    values: Array1<f64>,
}

impl LaplacianEigen {
    pub fn new(diff: &DifferenceMatrix) -> Self {
        let lap = diff.laplacian();
        let (values, vectors) = symmetric_eigen(lap.view());
        // Laplacian eigenvalues are non-negative; clear rounding noise.
        let values = values.mapv(|v| v.max(0.0));
        LaplacianEigen {
            laplacian: lap,
            vectors,
            values,
        }
    }

    /// `(a I + ρ L) x`.
    pub fn apply(&self, a: f64, rho: f64, x: ArrayView2<f64>) -> Array2<f64> {
        let mut out = self.laplacian.dot(&x) * rho;
        out.scaled_add(a, &x);
        out
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Largest eigenvalue, i.e. `‖D‖₂²`.
    pub fn max_eigenvalue(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    /// Solves `(a I + ρ L) x = b`. Directions where `a + ρμ = 0` (possible
    /// only when `a = 0`) take their component from `fallback`.
    pub fn solve(&self, a: f64, rho: f64, b: ArrayView2<f64>, fallback: Option<ArrayView2<f64>>) -> Array2<f64> {
        let mut coef = self.vectors.t().dot(&b);
        let fb = fallback.map(|f| self.vectors.t().dot(&f));
        for (k, mut row) in coef.axis_iter_mut(Axis(0)).enumerate() {
            let denom = a + rho * self.values[k];
            if denom > 1e-12 * (a.abs() + rho * self.max_eigenvalue()).max(f64::MIN_POSITIVE) {
                row.mapv_inplace(|v| v / denom);
            } else if let Some(fb) = &fb {
                row.assign(&fb.row(k));
            } else {
                row.fill(0.0);
            }
        }
        self.vectors.dot(&coef)
    }
}

/// Eigenvalues and eigenvectors (as columns) of a symmetric matrix.
///
/// The QR iteration's default stopping rule can report convergence while an
/// off-diagonal entry is still far from zero, which yields a decomposition
/// that does not reproduce the matrix. Each candidate tolerance is checked
/// through the residual `‖AV − VΛ‖` and the first accurate one is kept.
pub fn symmetric_eigen(a: ArrayView2<f64>) -> (Array1<f64>, Array2<f64>) {
    let n = a.nrows();
    let dm = DMatrix::from_fn(n, n, |i, j| a[[i, j]]);
    let scale = dm.norm().max(1.0);
    let mut best: Option<(f64, SymmetricEigen<f64, nalgebra::Dyn>)> = None;
    for eps in [f64::EPSILON, 1e-15, 4e-15, 1e-14, 1e-13] {
        let Some(eig) = SymmetricEigen::try_new(dm.clone(), eps, 1_000_000) else {
            continue;
        };
        let resid = (&dm * &eig.eigenvectors - &eig.eigenvectors * DMatrix::from_diagonal(&eig.eigenvalues)).norm();
        if !resid.is_finite() {
            continue;
        }
        let done = resid <= 1e-10 * scale;
        if best.as_ref().is_none_or(|(r, _)| resid < *r) {
            best = Some((resid, eig));
        }
        if done {
            break;
        }
    }
    let (resid, eig) = best.unwrap_or_else(|| (f64::NAN, SymmetricEigen::new(dm.clone())));
    if resid.is_nan() || resid > 1e-10 * scale {
        log::warn!("symmetric eigendecomposition residual {resid:.3e} relative to norm {scale:.3e}");
    }
    let values = eig.eigenvalues.iter().cloned().collect();
    let vectors = Array2::from_shape_fn((n, n), |(i, j)| eig.eigenvectors[(i, j)]);
    (values, vectors)
}

/// Reusable solve handle for `(π_X I + ρ DᵀD) x = b`.
#[derive(Debug, Clone)]
pub struct FusionSystem {
    eigen: Arc<LaplacianEigen>,
    pub shift: f64,
    pub rho: f64,
}

impl FusionSystem {
    pub fn new(eigen: Arc<LaplacianEigen>, shift: f64, rho: f64) -> Self {
        FusionSystem { eigen, shift, rho }
    }

    /// Solves with one step of iterative refinement, which recovers the
    /// accuracy lost to ill-conditioning when `π_X ≪ ρ‖D‖²`.
    pub fn solve(&self, b: ArrayView2<f64>) -> Array2<f64> {
        let mut x = self.eigen.solve(self.shift, self.rho, b, None);
        let resid = &b - &self.eigen.apply(self.shift, self.rho, x.view());
        x += &self.eigen.solve(self.shift, self.rho, resid.view(), None);
        x
    }

    pub fn with_rho(&self, rho: f64) -> Self {
        FusionSystem {
            eigen: Arc::clone(&self.eigen),
            shift: self.shift,
            rho,
        }
    }

    pub fn eigen(&self) -> &LaplacianEigen {
        &self.eigen
    }
}

/// Factors the U-update system for a fusion graph.
pub fn u_system_factorize(graph: &crate::weights::WeightGraph, pi_x: f64, rho: f64) -> FusionSystem {
    let diff = DifferenceMatrix::from_graph(graph);
    FusionSystem::new(Arc::new(LaplacianEigen::new(&diff)), pi_x, rho)
}
