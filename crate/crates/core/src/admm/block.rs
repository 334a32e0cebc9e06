use ndarray::{Array2, ArrayView2, Axis};

use super::difference::DifferenceMatrix;
use super::system::LaplacianEigen;
use super::ThetaStep;
use crate::family::{LossFamily, Response, POISSON_EXP_CAP};

/// The supervision part of the objective, `π ℓ(y; θ + Zβ)`, together with
/// the one-step updates of `θ` and `β` used inside ADMM.
pub(crate) struct SupervisedBlock<'a> {
    pub y: &'a Response,
    pub z: Option<ArrayView2<'a, f64>>,
    pub pi: f64,
    /// `λ_max(ZᵀZ)`.
    z_sigma2: f64,
    step: ThetaStep,
}

impl<'a> SupervisedBlock<'a> {
    pub fn new(y: &'a Response, z: Option<ArrayView2<'a, f64>>, pi: f64, step: ThetaStep) -> Self {
        let z = z.filter(|z| z.ncols() > 0);
        let z_sigma2 = z.map_or(0.0, spectral_norm_sq);
        SupervisedBlock {
            y,
            z,
            pi,
            z_sigma2,
            step,
        }
    }

    fn needs_check(&self) -> bool {
        self.y.family().lipschitz().is_none()
    }

    pub fn eta(&self, theta: ArrayView2<f64>, beta: ArrayView2<f64>) -> Array2<f64> {
        match self.z {
            Some(z) => &theta + &z.dot(&beta),
            None => theta.to_owned(),
        }
    }

    pub fn loss(&self, theta: ArrayView2<f64>, beta: ArrayView2<f64>) -> f64 {
        self.y.loss_unchecked(self.eta(theta, beta).view())
    }

    /// Unscaled loss gradient with respect to the predictor.
    pub fn gradient(&self, theta: ArrayView2<f64>, beta: ArrayView2<f64>) -> Array2<f64> {
        let eta = self.eta(theta, beta);
        let mut g = Array2::zeros(eta.raw_dim());
        self.y.gradient_into(eta.view(), &mut g);
        g
    }

    pub fn exceeds_cap(&self, theta: ArrayView2<f64>, beta: ArrayView2<f64>) -> bool {
        matches!(self.y.family(), LossFamily::Poisson)
            && self.eta(theta, beta).iter().any(|&e| e > POISSON_EXP_CAP)
    }

    /// Majorization test `ℓ(η + Δ) ≤ ℓ(η) + ⟨g, Δ⟩ + (L/2)‖Δ‖²`.
    fn majorized(&self, eta: &Array2<f64>, grad: &Array2<f64>, delta: &Array2<f64>, lip: f64) -> bool {
        let base = self.y.loss_unchecked(eta.view());
        let moved = self.y.loss_unchecked((eta + delta).view());
        let lin = (grad * delta).sum();
        let quad = 0.5 * lip * delta.iter().map(|v| v * v).sum::<f64>();
        moved <= base + lin + quad + 1e-12 * base.abs().max(1.0)
    }

    /// One linearized step on `θ` against the splitting target
    /// `target = V_θ − Q_θ`. `grad` is `∇ℓ` at the current `(θ, β)`.
    #[allow(clippy::too_many_arguments)]
    pub fn update_theta(
        &self,
        theta: &mut Array2<f64>,
        beta: ArrayView2<f64>,
        grad: &Array2<f64>,
        diff: &DifferenceMatrix,
        eigen: &LaplacianEigen,
        rho: f64,
        target: ArrayView2<f64>,
    ) {
        let eta = self.eta(theta.view(), beta);
        let mut lip = self.y.curvature_bound(eta.view());
        let pull = diff.apply_transpose(target);
        for _ in 0..60 {
            let delta = match self.step {
                ThetaStep::Gradient => {
                    let t = 1.0 / (self.pi * lip + rho * eigen.max_eigenvalue());
                    let resid = &diff.apply(theta.view()) - &target;
                    let mut force = diff.apply_transpose(resid.view()) * rho;
                    force.scaled_add(self.pi, grad);
                    force * (-t)
                }
                ThetaStep::Proximal => {
                    let c = self.pi * lip;
                    let mut rhs = &*theta * c - grad * self.pi;
                    rhs.scaled_add(rho, &pull);
                    eigen.solve(c, rho, rhs.view(), Some(theta.view())) - &*theta
                }
            };
            if self.pi == 0.0 || !self.needs_check() || self.majorized(&eta, grad, &delta, lip) {
                *theta += &delta;
                return;
            }
            lip *= 2.0;
        }
        log::debug!("theta step backtracking exhausted; keeping previous iterate");
    }

    /// One gradient step on `β` (no-op without covariates).
    pub fn update_beta(&self, theta: ArrayView2<f64>, beta: &mut Array2<f64>) {
        let Some(z) = self.z else { return };
        if self.z_sigma2 <= 0.0 {
            return;
        }
        let eta = self.eta(theta, beta.view());
        let mut grad = Array2::zeros(eta.raw_dim());
        self.y.gradient_into(eta.view(), &mut grad);
        let zg = z.t().dot(&grad);
        let mut lip = self.y.curvature_bound(eta.view());
        for _ in 0..60 {
            let step = zg.clone() * (-1.0 / (lip * self.z_sigma2));
            let delta_eta = z.dot(&step);
            if !self.needs_check() || self.majorized(&eta, &grad, &delta_eta, lip) {
                *beta += &step;
                if let LossFamily::Multinomial { .. } = self.y.family() {
                    center_rows(beta);
                }
                return;
            }
            lip *= 2.0;
        }
    }

    /// `π Zᵀ∇ℓ`, the β block of the stationarity residual.
    pub fn beta_residual(&self, grad: &Array2<f64>) -> f64 {
        match self.z {
            Some(z) => self.pi * super::frob(z.t().dot(grad).view()),
            None => 0.0,
        }
    }
}

/// Removes the across-class mean from each row (sum-to-zero identification).
pub(crate) fn center_rows(m: &mut Array2<f64>) {
    for mut row in m.axis_iter_mut(Axis(0)) {
        let mean = row.mean().unwrap_or(0.0);
        row.mapv_inplace(|v| v - mean);
    }
}

/// Largest eigenvalue of `ZᵀZ`.
pub(crate) fn spectral_norm_sq(z: ArrayView2<f64>) -> f64 {
    let ztz = z.t().dot(&z);
    super::system::symmetric_eigen(ztz.view()).0.iter().cloned().fold(0.0, f64::max)
}
