//! Adaptive supervised clustering: remove the covariate effect from the
//! supervising variable, rebuild the fusion weights on the adjusted values
//! and refit.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::admm::{Pi, SolverOptions};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::family::{centered_sum_squares, inverse_link, link, null_excess, LossFamily, Response};
use crate::select::{stability_select, PathPoint, PathSolver, StabilityConfig};
use crate::weights::{blended_weights, Alpha, WeightConfig, WeightGraph};

/// Supervising variable with the covariate effect removed.
///
/// Link families give fitted means, which are generally fractional (a
/// probability for bernoulli, a probability vector for multinomial), so they
/// are kept as a plain matrix. Survival keeps its event flags and rescales
/// the times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Adjusted {
    Mean {
        family: LossFamily,
        /// `n × width`.
        values: Array2<f64>,
        /// Some `g(y_i)` was outside the clip range.
        clipped: bool,
    },
    /// Rescaled times with the original event flags.
    Survival { time: Vec<f64>, event: Vec<bool> },
}

impl Adjusted {
    pub fn len(&self) -> usize {
        match self {
            Adjusted::Mean { values, .. } => values.nrows(),
            Adjusted::Survival { time, .. } => time.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn clipped(&self) -> bool {
        matches!(self, Adjusted::Mean { clipped: true, .. })
    }

    /// The survival variant as a response.
    pub fn survival(&self) -> Result<Response> {
        match self {
            Adjusted::Survival { time, event } => Response::cox(time.clone(), event.clone()),
            Adjusted::Mean { .. } => Err(Error::Config("adjusted variable is not a survival record".into())),
        }
    }

    /// Deviance of the adjusted values about their mean, on the same scale
    /// as the data term in α: `Σ(ŷ − ȳ)²` for gaussian, the GLM deviance
    /// (which accepts fractional values) for the other link families.
    pub fn deviance(&self) -> Result<f64> {
        let (family, v) = match self {
            Adjusted::Survival { .. } => return Ok(2.0 * null_excess(LossFamily::Cox, &self.survival()?)?),
            Adjusted::Mean { family, values, .. } => (*family, values),
        };
        let mean = v.mean_axis(Axis(0)).unwrap_or_else(|| Array1::zeros(v.ncols()));
        let xlogy = |a: f64, b: f64| if a > 0.0 { a * (a / b).ln() } else { 0.0 };
        let dev = match family {
            LossFamily::Gaussian => centered_sum_squares(v.view()),
            LossFamily::Bernoulli => {
                let p = mean[0];
                2.0 * v.column(0).iter().map(|&a| xlogy(a, p) + xlogy(1.0 - a, 1.0 - p)).sum::<f64>()
            }
            LossFamily::Poisson => {
                let m = mean[0];
                2.0 * v.column(0).iter().map(|&a| xlogy(a, m) - (a - m)).sum::<f64>()
            }
            LossFamily::Multinomial { .. } => {
                2.0 * v
                    .rows()
                    .into_iter()
                    .map(|r| r.iter().zip(mean.iter()).map(|(&a, &m)| xlogy(a, m)).sum::<f64>())
                    .sum::<f64>()
            }
            LossFamily::Cox => unreachable!("survival values are stored as a response"),
        };
        Ok(dev.max(0.0))
    }

    /// Gower-type distance function on the adjusted values, in `[0, 1]`.
    /// Scalars use `|ŷ_i − ŷ_j| / range`; probability vectors use total
    /// variation distance.
    pub fn distance(&self) -> Box<dyn Fn(usize, usize) -> f64 + Sync + '_> {
        match self {
            Adjusted::Survival { time, event } => {
                let range = span(time);
                Box::new(move |i, j| {
                    if event[i] != event[j] {
                        0.5
                    } else if range > 0.0 {
                        ((time[i] - time[j]).abs() / range).min(1.0)
                    } else {
                        0.0
                    }
                })
            }
            Adjusted::Mean { family: LossFamily::Multinomial { .. }, values, .. } => Box::new(move |i, j| {
                0.5 * values
                    .row(i)
                    .iter()
                    .zip(values.row(j).iter())
                    .map(|(a, b)| (a - b).abs())
                    .sum::<f64>()
            }),
            Adjusted::Mean { values, .. } => {
                let col = values.column(0);
                let range = span(col.iter());
                Box::new(move |i, j| {
                    if range > 0.0 {
                        ((col[i] - col[j]).abs() / range).min(1.0)
                    } else {
                        0.0
                    }
                })
            }
        }
    }
}

fn span<'a>(v: impl IntoIterator<Item = &'a f64>) -> f64 {
    let (lo, hi) = v
        .into_iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if lo.is_finite() {
        hi - lo
    } else {
        0.0
    }
}

/// `ŷ_i = g⁻¹(g(y_i) − Z_iβ̂)`. Boundary values (0 or 1 for bernoulli,
/// 0 for poisson) are clipped to `±LINK_CLIP` on the link scale first.
/// Survival has no link: times become `t_i·exp(Z_iβ̂)`, the scale on which
/// an exponential-baseline hazard no longer depends on the covariates.
pub fn residualize_y(y: &Response, z: ArrayView2<f64>, beta_hat: ArrayView2<f64>) -> Result<Adjusted> {
    let n = y.len();
    let q = y.width();
    if z.nrows() != n || z.ncols() != beta_hat.nrows() || beta_hat.ncols() != q {
        return Err(Error::Dimension(format!(
            "covariates {}×{} and coefficients {}×{} for {n} records of width {q}",
            z.nrows(),
            z.ncols(),
            beta_hat.nrows(),
            beta_hat.ncols()
        )));
    }
    let offset = z.dot(&beta_hat);
    if offset.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("covariate offset"));
    }
    let family = y.family();
    let mean: Array2<f64> = match y {
        Response::Gaussian(v) | Response::Bernoulli(v) | Response::Poisson(v) => v.clone().insert_axis(Axis(1)),
        Response::Multinomial(m) => m.clone(),
        Response::Cox(s) => {
            let time = s
                .time()
                .iter()
                .zip(offset.column(0).iter())
                .map(|(&t, &o)| t * o.exp())
                .collect();
            let adjusted = Adjusted::Survival { time, event: s.event().to_vec() };
            adjusted.survival()?;
            return Ok(adjusted);
        }
    };
    let mut values = Array2::zeros((n, q));
    let mut clipped = false;
    for i in 0..n {
        let g = link(family, mean.row(i))?;
        clipped |= g.clipped;
        let back = inverse_link(family, (&g.value - &offset.row(i)).view())?;
        values.row_mut(i).assign(&back);
    }
    Ok(Adjusted::Mean { family, values, clipped })
}

/// `α̂ = D_ŷ / (D_ŷ + ‖X − X̄‖²)`.
pub fn adjusted_alpha(x: ArrayView2<f64>, adjusted: &Adjusted) -> Result<f64> {
    let dy = adjusted.deviance()?;
    let dx = centered_sum_squares(x);
    if dx + dy <= 0.0 {
        return Err(Error::Degenerate(
            "both the data matrix and the adjusted supervising variable are constant".into(),
        ));
    }
    Ok(dy / (dy + dx))
}

/// Weight graph on `(X, ŷ)`. A fixed α in `cfg` is kept; `Auto` uses
/// [`adjusted_alpha`].
pub fn adjusted_weights(x: ArrayView2<f64>, adjusted: &Adjusted, cfg: &WeightConfig) -> Result<WeightGraph> {
    if adjusted.len() != x.nrows() {
        return Err(Error::Dimension(format!(
            "data has {} rows but adjusted variable has {} records",
            x.nrows(),
            adjusted.len()
        )));
    }
    let alpha = match cfg.alpha {
        Alpha::Fixed(a) => a,
        Alpha::Auto => adjusted_alpha(x, adjusted)?,
    };
    let gy = adjusted.distance();
    blended_weights(x, alpha, gy, cfg)
}

/// How the stage-1 and stage-3 fits pick λ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selection {
    /// Search λ for this cluster count, in both stages.
    Clusters(usize),
    /// As `Clusters`, falling back to the closest reachable count.
    NearestClusters(usize),
    /// The same λ in both stages.
    Lambda(f64),
    /// Stability selection on the stage-1 graph; stage 3 reuses its λ.
    Stability { grid: Vec<f64>, config: StabilityConfig },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveFit {
    /// Fit on the unadjusted weights, the source of `β̂`.
    pub stage1: PathPoint,
    pub adjusted: Adjusted,
    /// α used for the stage-2 weights.
    pub alpha: f64,
    pub graph: WeightGraph,
    /// Final fit on the adjusted weights.
    pub stage3: PathPoint,
}

/// Fit, residualize, re-weight and refit once. Without covariates this is
/// plain supervised clustering run twice on the same graph.
pub fn adaptive_fit(
    data: &Dataset,
    weights: &WeightConfig,
    pi: Pi,
    selection: &Selection,
    opts: &SolverOptions,
) -> Result<AdaptiveFit> {
    let y = data
        .y
        .as_ref()
        .ok_or_else(|| Error::Config("adaptive fitting needs a supervising variable".into()))?;
    let graph1 = data.graph(weights)?;
    let solver1 = PathSolver::new(data.problem(&graph1, pi), opts.clone())?;
    let (stage1, lambda) = match selection {
        Selection::Clusters(k) => {
            let pt = solver1.lambda_for_clusters(*k)?;
            let lam = pt.lambda;
            (pt, lam)
        }
        Selection::NearestClusters(k) => {
            let pt = solver1.lambda_for_nearest_clusters(*k)?;
            let lam = pt.lambda;
            (pt, lam)
        }
        Selection::Lambda(lam) => (solver1.point(*lam, None)?, *lam),
        Selection::Stability { grid, config } => {
            let sel = stability_select(data, weights, pi, grid, config, opts)?;
            (solver1.point(sel.lambda, None)?, sel.lambda)
        }
    };

    let adjusted = match &data.z {
        Some(z) if z.ncols() > 0 => residualize_y(y, z.view(), stage1.fit.beta.view())?,
        _ => {
            let d = y.width();
            residualize_y(y, Array2::zeros((y.len(), 0)).view(), Array2::zeros((0, d)).view())?
        }
    };
    if adjusted.clipped() {
        log::info!("boundary values of the supervising variable were clipped on the link scale");
    }
    let alpha = match weights.alpha {
        Alpha::Fixed(a) => a,
        Alpha::Auto => adjusted_alpha(data.x.view(), &adjusted)?,
    };
    let graph = blended_weights(data.x.view(), alpha, adjusted.distance(), weights)?;

    let solver3 = PathSolver::new(data.problem(&graph, pi), opts.clone())?;
    let stage3 = match selection {
        Selection::Clusters(k) => solver3.lambda_for_clusters(*k)?,
        Selection::NearestClusters(k) => solver3.lambda_for_nearest_clusters(*k)?,
        _ => solver3.point(lambda, None)?,
    };
    Ok(AdaptiveFit {
        stage1,
        adjusted,
        alpha,
        graph,
        stage3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn values(a: &Adjusted) -> &Array2<f64> {
        match a {
            Adjusted::Mean { values, .. } => values,
            _ => panic!("expected mean values"),
        }
    }

    #[test]
    fn residualize_examples() {
        let y = Response::gaussian(array![5.0]).unwrap();
        let a = residualize_y(&y, array![[1.0]].view(), array![[2.0]].view()).unwrap();
        assert_eq!(values(&a)[[0, 0]], 3.0);

        let y = Response::poisson(array![8.0]).unwrap();
        let a = residualize_y(&y, array![[1.0]].view(), array![[2f64.ln()]].view()).unwrap();
        assert!((values(&a)[[0, 0]] - 4.0).abs() < 1e-12);

        let y = Response::poisson(array![0.0, 3.0, 7.0]).unwrap();
        let z = array![[0.3], [-1.0], [2.0]];
        let a = residualize_y(&y, z.view(), array![[0.0]].view()).unwrap();
        assert!(a.clipped());
        for (got, want) in values(&a).column(0).iter().zip([0.0, 3.0, 7.0]) {
            assert!((got - want).abs() < 1e-9);
        }
    }

    #[test]
    fn adding_the_offset_back_recovers_y() {
        let y = Response::bernoulli(array![0.0, 1.0, 1.0]).unwrap();
        let z = array![[0.5], [-0.2], [1.5]];
        let beta = array![[0.8]];
        let a = residualize_y(&y, z.view(), beta.view()).unwrap();
        let off = z.dot(&beta);
        for i in 0..3 {
            let eta = link(LossFamily::Bernoulli, values(&a).row(i)).unwrap().value[0] + off[[i, 0]];
            let back = inverse_link(LossFamily::Bernoulli, array![eta].view()).unwrap()[0];
            assert!((back - [0.0, 1.0, 1.0][i]).abs() < 1e-9);
        }
    }

    #[test]
    fn multinomial_adjustment_stays_a_distribution() {
        let y = Response::multinomial_from_labels(&[0, 2, 1], 3).unwrap();
        let z = array![[1.0], [0.5], [-2.0]];
        let beta = array![[0.3, -0.2, 0.1]];
        let a = residualize_y(&y, z.view(), beta.view()).unwrap();
        for r in values(&a).rows() {
            assert!((r.sum() - 1.0).abs() < 1e-12);
            assert!(r.iter().all(|&p| p >= 0.0));
        }
        let d = a.distance();
        assert!(d(0, 1) > 0.99 && d(0, 0) == 0.0);
    }

    #[test]
    fn survival_times_are_rescaled() {
        let y = Response::cox(vec![1.0, 2.0], vec![true, false]).unwrap();
        let a = residualize_y(&y, array![[0.0], [1.0]].view(), array![[2f64.ln()]].view()).unwrap();
        match a {
            Adjusted::Survival { time, event } => {
                assert!((time[1] - 4.0).abs() < 1e-12);
                assert_eq!(event, vec![true, false]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_coefficients_keep_the_weights() {
        let x = array![[0.0, 1.0], [0.2, 0.9], [3.0, 3.1], [2.8, 3.3], [1.4, 2.0], [1.6, 1.7]];
        let cfg = WeightConfig { k: 2, ..Default::default() };
        let cases = [
            Response::gaussian(array![0.1, 0.3, 2.0, 2.4, 1.0, 1.1]).unwrap(),
            Response::bernoulli(array![0.0, 0.0, 1.0, 1.0, 0.0, 1.0]).unwrap(),
            Response::poisson(array![0.0, 1.0, 5.0, 6.0, 2.0, 3.0]).unwrap(),
        ];
        for y in cases {
            let z = Array2::zeros((6, 2));
            let a = residualize_y(&y, z.view(), Array2::zeros((2, 1)).view()).unwrap();
            let direct = crate::weights::build_weights(x.view(), Some(&y), &cfg).unwrap();
            let adjusted = adjusted_weights(x.view(), &a, &cfg).unwrap();
            assert_eq!(direct.len(), adjusted.len());
            for (e, f) in direct.edges.iter().zip(&adjusted.edges) {
                assert_eq!((e.i, e.j), (f.i, f.j));
                assert!((e.w - f.w).abs() < 1e-9, "{:?} {e:?} {f:?}", y.family());
            }
        }
    }

    #[test]
    fn gaussian_adjusted_deviance_matches_plain_alpha() {
        let y = Response::gaussian(array![0.0, 2.0]).unwrap();
        let a = residualize_y(&y, Array2::zeros((2, 1)).view(), array![[0.0]].view()).unwrap();
        let x = array![[0.0], [2.0]];
        assert!((adjusted_alpha(x.view(), &a).unwrap() - 0.5).abs() < 1e-12);
    }
}
