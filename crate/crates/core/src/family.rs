//! Loss families for the supervising variable.
//!
//! Every family is written as a negative log-likelihood `ℓ(y; η)` in the
//! linear predictor `η = θ + Zβ`, summed over observations. Predictors are
//! stored as `n × q` matrices where `q = 1` for scalar families and `q = K`
//! for the multinomial family.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Magnitude used when a link value or a loss-specific center diverges.
pub const LINK_CLIP: f64 = 30.0;

/// Largest exponent evaluated exactly by the Poisson loss. Beyond it the
/// exponential is continued linearly, which keeps the loss convex and finite.
pub const POISSON_EXP_CAP: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum LossFamily {
    Gaussian,
    Bernoulli,
    Poisson,
    Multinomial { classes: usize },
    Cox,
}

impl LossFamily {
    pub fn multinomial(classes: usize) -> Result<Self> {
        if classes < 2 {
            return Err(Error::Config(format!(
                "multinomial family needs at least 2 classes, got {classes}"
            )));
        }
        Ok(LossFamily::Multinomial { classes })
    }

    pub fn name(&self) -> &'static str {
        match self {
            LossFamily::Gaussian => "gaussian",
            LossFamily::Bernoulli => "bernoulli",
            LossFamily::Poisson => "poisson",
            LossFamily::Multinomial { .. } => "multinomial",
            LossFamily::Cox => "cox",
        }
    }

    /// Number of predictor columns per observation.
    pub fn width(&self) -> usize {
        match self {
            LossFamily::Multinomial { classes } => *classes,
            _ => 1,
        }
    }

    /// Global Lipschitz constant of the gradient, when one exists.
    pub fn lipschitz(&self) -> Option<f64> {
        match self {
            LossFamily::Gaussian => Some(1.0),
            LossFamily::Bernoulli => Some(0.25),
            LossFamily::Multinomial { .. } => Some(0.5),
            LossFamily::Poisson | LossFamily::Cox => None,
        }
    }
}

/// Censored survival outcome with its risk-set structure precomputed.
#[derive(Debug, Clone, PartialEq)]
pub struct Survival {
    time: Vec<f64>,
    event: Vec<bool>,
    /// Observation indices sorted by ascending time.
    order: Vec<usize>,
    /// Start offsets (into `order`) of blocks of tied times, plus a final
    /// sentinel equal to `n`.
    blocks: Vec<usize>,
}

impl Survival {
    pub fn new(time: Vec<f64>, event: Vec<bool>) -> Result<Self> {
        if time.len() != event.len() {
            return Err(Error::Dimension(format!(
                "{} survival times but {} event indicators",
                time.len(),
                event.len()
            )));
        }
        if let Some(i) = time.iter().position(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::InvalidResponse(format!(
                "survival time at observation {i} must be finite and positive, got {}",
                time[i]
            )));
        }
        let mut order: Vec<usize> = (0..time.len()).collect();
        order.sort_by(|&a, &b| time[a].total_cmp(&time[b]).then(a.cmp(&b)));
        let mut blocks = Vec::new();
        for (pos, &idx) in order.iter().enumerate() {
            if pos == 0 || time[idx] != time[order[pos - 1]] {
                blocks.push(pos);
            }
        }
        blocks.push(time.len());
        Ok(Survival {
            time,
            event,
            order,
            blocks,
        })
    }

    pub fn time(&self) -> &[f64] {
        &self.time
    }

    pub fn event(&self) -> &[bool] {
        &self.event
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    fn block_members(&self, b: usize) -> &[usize] {
        &self.order[self.blocks[b]..self.blocks[b + 1]]
    }

    fn n_blocks(&self) -> usize {
        self.blocks.len() - 1
    }

    /// Breslow partial likelihood. Tied times share one risk-set sum.
    fn loss(&self, eta: ArrayView1<f64>) -> f64 {
        let shift = eta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !shift.is_finite() {
            return 0.0;
        }
        let mut risk = 0.0;
        let mut total = 0.0;
        for b in (0..self.n_blocks()).rev() {
            let members = self.block_members(b);
            for &j in members {
                risk += (eta[j] - shift).exp();
            }
            let log_risk = risk.ln() + shift;
            for &i in members {
                if self.event[i] {
                    total += log_risk - eta[i];
                }
            }
        }
        total
    }

    /// Risk-set sums `S(t_b)` per block (shifted by `shift`).
    fn risk_sums(&self, eta: ArrayView1<f64>, shift: f64) -> Vec<f64> {
        let mut sums = vec![0.0; self.n_blocks()];
        let mut risk = 0.0;
        for b in (0..self.n_blocks()).rev() {
            for &j in self.block_members(b) {
                risk += (eta[j] - shift).exp();
            }
            sums[b] = risk;
        }
        sums
    }

    /// Writes `e^{η_j} Σ_{i: δ_i, t_i ≤ t_j} 1/S(t_i)` into `out`.
    fn expected_events(&self, eta: ArrayView1<f64>, out: &mut [f64]) {
        let shift = eta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sums = self.risk_sums(eta, shift);
        let mut hazard = 0.0;
        for (b, sum) in sums.iter().enumerate() {
            let members = self.block_members(b);
            let deaths = members.iter().filter(|&&i| self.event[i]).count();
            if deaths > 0 {
                hazard += deaths as f64 / sum;
            }
            for &j in members {
                out[j] = (eta[j] - shift).exp() * hazard;
            }
        }
    }

    fn subset(&self, idx: &[usize]) -> Survival {
        Survival::new(
            idx.iter().map(|&i| self.time[i]).collect(),
            idx.iter().map(|&i| self.event[i]).collect(),
        )
        .expect("subset of valid survival data is valid")
    }
}

/// The supervising variable, one record per observation.
#[derive(Debug, Clone, PartialEq)]
pub enum Response {
    Gaussian(Array1<f64>),
    Bernoulli(Array1<f64>),
    Poisson(Array1<f64>),
    /// One-hot rows, `n × K`.
    Multinomial(Array2<f64>),
    Cox(Survival),
}

impl Response {
    pub fn gaussian(values: Array1<f64>) -> Result<Self> {
        check_finite(values.view(), "gaussian response")?;
        Ok(Response::Gaussian(values))
    }

    pub fn bernoulli(values: Array1<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::InvalidResponse(format!(
                "bernoulli response at observation {i} must be 0 or 1, got {}",
                values[i]
            )));
        }
        Ok(Response::Bernoulli(values))
    }

    pub fn poisson(values: Array1<f64>) -> Result<Self> {
        if let Some(i) = values
            .iter()
            .position(|&v| !(v.is_finite() && v >= 0.0 && v.fract() == 0.0))
        {
            return Err(Error::InvalidResponse(format!(
                "poisson response at observation {i} must be a non-negative integer, got {}",
                values[i]
            )));
        }
        Ok(Response::Poisson(values))
    }

    pub fn multinomial(one_hot: Array2<f64>) -> Result<Self> {
        if one_hot.ncols() < 2 {
            return Err(Error::InvalidResponse(
                "multinomial response needs at least 2 classes".into(),
            ));
        }
        for (i, row) in one_hot.axis_iter(Axis(0)).enumerate() {
            let valid = row.iter().all(|&v| v == 0.0 || v == 1.0) && row.sum() == 1.0;
            if !valid {
                return Err(Error::InvalidResponse(format!(
                    "multinomial row {i} is not one-hot"
                )));
            }
        }
        Ok(Response::Multinomial(one_hot))
    }

    /// Builds a one-hot response from 0-based class labels.
    pub fn multinomial_from_labels(labels: &[usize], classes: usize) -> Result<Self> {
        let mut one_hot = Array2::zeros((labels.len(), classes));
        for (i, &c) in labels.iter().enumerate() {
            if c >= classes {
                return Err(Error::InvalidResponse(format!(
                    "class label {c} at observation {i} exceeds {classes} classes"
                )));
            }
            one_hot[[i, c]] = 1.0;
        }
        Response::multinomial(one_hot)
    }

    pub fn cox(time: Vec<f64>, event: Vec<bool>) -> Result<Self> {
        Ok(Response::Cox(Survival::new(time, event)?))
    }

    pub fn family(&self) -> LossFamily {
        match self {
            Response::Gaussian(_) => LossFamily::Gaussian,
            Response::Bernoulli(_) => LossFamily::Bernoulli,
            Response::Poisson(_) => LossFamily::Poisson,
            Response::Multinomial(m) => LossFamily::Multinomial { classes: m.ncols() },
            Response::Cox(_) => LossFamily::Cox,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Response::Gaussian(v) | Response::Bernoulli(v) | Response::Poisson(v) => v.len(),
            Response::Multinomial(m) => m.nrows(),
            Response::Cox(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn width(&self) -> usize {
        self.family().width()
    }

    /// Scalar values for the scalar families (`None` for multinomial and cox).
    pub fn scalar_values(&self) -> Option<&Array1<f64>> {
        match self {
            Response::Gaussian(v) | Response::Bernoulli(v) | Response::Poisson(v) => Some(v),
            _ => None,
        }
    }

    /// Class index per observation for the multinomial family.
    pub fn class_labels(&self) -> Option<Vec<usize>> {
        match self {
            Response::Multinomial(m) => Some(
                m.axis_iter(Axis(0))
                    .map(|row| row.iter().position(|&v| v == 1.0).unwrap_or(0))
                    .collect(),
            ),
            _ => None,
        }
    }

    /// Restriction to the given observations, in the given order.
    pub fn subset(&self, idx: &[usize]) -> Response {
        match self {
            Response::Gaussian(v) => Response::Gaussian(v.select(Axis(0), idx)),
            Response::Bernoulli(v) => Response::Bernoulli(v.select(Axis(0), idx)),
            Response::Poisson(v) => Response::Poisson(v.select(Axis(0), idx)),
            Response::Multinomial(m) => Response::Multinomial(m.select(Axis(0), idx)),
            Response::Cox(s) => Response::Cox(s.subset(idx)),
        }
    }

    /// Loss without validation; `eta` must be `n × width`.
    pub(crate) fn loss_unchecked(&self, eta: ArrayView2<f64>) -> f64 {
        match self {
            Response::Gaussian(y) => {
                0.5 * y
                    .iter()
                    .zip(eta.column(0))
                    .map(|(y, e)| (y - e) * (y - e))
                    .sum::<f64>()
            }
            Response::Bernoulli(y) => y
                .iter()
                .zip(eta.column(0))
                .map(|(&y, &e)| softplus(e) - y * e)
                .sum(),
            Response::Poisson(y) => y
                .iter()
                .zip(eta.column(0))
                .map(|(&y, &e)| capped_exp(e) - y * e)
                .sum(),
            Response::Multinomial(y) => y
                .axis_iter(Axis(0))
                .zip(eta.axis_iter(Axis(0)))
                .map(|(yr, er)| log_sum_exp(er) - yr.dot(&er))
                .sum(),
            Response::Cox(s) => s.loss(eta.column(0)),
        }
    }

    /// Gradient without validation, written into `out` (`n × width`).
    pub(crate) fn gradient_into(&self, eta: ArrayView2<f64>, out: &mut Array2<f64>) {
        match self {
            Response::Gaussian(y) => {
                for ((o, &y), &e) in out.column_mut(0).iter_mut().zip(y).zip(eta.column(0)) {
                    *o = e - y;
                }
            }
            Response::Bernoulli(y) => {
                for ((o, &y), &e) in out.column_mut(0).iter_mut().zip(y).zip(eta.column(0)) {
                    *o = sigmoid(e) - y;
                }
            }
            Response::Poisson(y) => {
                for ((o, &y), &e) in out.column_mut(0).iter_mut().zip(y).zip(eta.column(0)) {
                    *o = capped_exp_deriv(e) - y;
                }
            }
            Response::Multinomial(y) => {
                for ((mut orow, yr), er) in out
                    .axis_iter_mut(Axis(0))
                    .zip(y.axis_iter(Axis(0)))
                    .zip(eta.axis_iter(Axis(0)))
                {
                    let m = er.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let z: f64 = er.iter().map(|e| (e - m).exp()).sum();
                    for ((o, &yk), &ek) in orow.iter_mut().zip(yr).zip(er) {
                        *o = (ek - m).exp() / z - yk;
                    }
                }
            }
            Response::Cox(s) => {
                let mut col = vec![0.0; s.len()];
                s.expected_events(eta.column(0), &mut col);
                for (j, (o, c)) in out.column_mut(0).iter_mut().zip(col).enumerate() {
                    *o = c - if s.event[j] { 1.0 } else { 0.0 };
                }
            }
        }
    }

    /// Upper bound on the Hessian's largest eigenvalue at `eta`.
    pub(crate) fn curvature_bound(&self, eta: ArrayView2<f64>) -> f64 {
        if let Some(l) = self.family().lipschitz() {
            return l;
        }
        match self {
            Response::Poisson(_) => eta
                .column(0)
                .iter()
                .map(|&e| capped_exp_deriv(e))
                .fold(0.0, f64::max),
            Response::Cox(s) => {
                // ∇² ≤ diag(e^{η_j} H_j) by Gershgorin on each risk-set softmax.
                let mut col = vec![0.0; s.len()];
                s.expected_events(eta.column(0), &mut col);
                col.into_iter().fold(0.0, f64::max)
            }
            _ => unreachable!(),
        }
    }
}

fn check_finite(values: ArrayView1<f64>, what: &'static str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

pub(crate) fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn capped_exp(x: f64) -> f64 {
    if x <= POISSON_EXP_CAP {
        x.exp()
    } else {
        POISSON_EXP_CAP.exp() * (1.0 + x - POISSON_EXP_CAP)
    }
}

fn capped_exp_deriv(x: f64) -> f64 {
    x.min(POISSON_EXP_CAP).exp()
}

fn log_sum_exp(row: ArrayView1<f64>) -> f64 {
    let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + row.iter().map(|e| (e - m).exp()).sum::<f64>().ln()
}

fn validate(family: LossFamily, y: &Response, eta: ArrayView2<f64>) -> Result<()> {
    if family != y.family() {
        return Err(Error::FamilyMismatch {
            family: family.name(),
            variant: y.family().name(),
        });
    }
    if eta.nrows() != y.len() || eta.ncols() != family.width() {
        return Err(Error::Dimension(format!(
            "predictor is {}x{}, expected {}x{}",
            eta.nrows(),
            eta.ncols(),
            y.len(),
            family.width()
        )));
    }
    if eta.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("linear predictor"));
    }
    Ok(())
}

/// Total loss `Σ_i ℓ(y_i; η_i)`.
pub fn eval_loss(family: LossFamily, y: &Response, eta: ArrayView2<f64>) -> Result<f64> {
    validate(family, y, eta)?;
    Ok(y.loss_unchecked(eta))
}

/// Gradient of [`eval_loss`] with respect to `eta`.
pub fn eval_grad(family: LossFamily, y: &Response, eta: ArrayView2<f64>) -> Result<Array2<f64>> {
    validate(family, y, eta)?;
    let mut out = Array2::zeros(eta.raw_dim());
    y.gradient_into(eta, &mut out);
    Ok(out)
}

/// Constant predictor minimizing the loss over constant predictors.
#[derive(Debug, Clone, PartialEq)]
pub struct Center {
    /// One predictor row of length `width`.
    pub eta: Array1<f64>,
    /// Set when the true minimizer diverges and the value was clipped.
    pub degenerate: bool,
}

impl Center {
    pub fn broadcast(&self, n: usize) -> Array2<f64> {
        let mut out = Array2::zeros((n, self.eta.len()));
        out.rows_mut().into_iter().for_each(|mut r| r.assign(&self.eta));
        out
    }
}

pub fn loss_center(family: LossFamily, y: &Response) -> Result<Center> {
    if family != y.family() {
        return Err(Error::FamilyMismatch {
            family: family.name(),
            variant: y.family().name(),
        });
    }
    if y.is_empty() {
        return Err(Error::Degenerate("empty supervising variable".into()));
    }
    let scalar = |eta: f64, degenerate: bool| Center {
        eta: Array1::from_elem(1, eta),
        degenerate,
    };
    Ok(match y {
        Response::Gaussian(v) => scalar(v.mean().unwrap_or(0.0), false),
        Response::Bernoulli(v) => {
            let (eta, clipped) = logit_clipped(v.mean().unwrap_or(0.5));
            scalar(eta, clipped)
        }
        Response::Poisson(v) => {
            let (eta, clipped) = log_clipped(v.mean().unwrap_or(0.0));
            scalar(eta, clipped)
        }
        Response::Multinomial(m) => {
            let freq = m.mean_axis(Axis(0)).expect("non-empty");
            let (eta, degenerate) = centered_log(freq.view());
            Center { eta, degenerate }
        }
        Response::Cox(_) => scalar(0.0, false),
    })
}

/// Loss evaluated at the loss-specific center.
pub fn null_deviance(family: LossFamily, y: &Response) -> Result<f64> {
    let center = loss_center(family, y)?;
    Ok(y.loss_unchecked(center.broadcast(y.len()).view()))
}

/// Loss of the saturated fit (`η` at the observed values). Zero except for
/// poisson, whose loss omits the `log y!` constant.
pub fn saturated_loss(y: &Response) -> f64 {
    match y {
        Response::Poisson(v) => v.iter().filter(|&&c| c > 0.0).map(|&c| c - c * c.ln()).sum(),
        _ => 0.0,
    }
}

/// Null loss measured above the saturated fit, `ℓ(y, ỹ) − ℓ_saturated`.
/// Equals [`null_deviance`] except for poisson, where the saturated
/// correction keeps it positive. Cox uses the `η ≡ 0` loss unchanged.
pub fn null_excess(family: LossFamily, y: &Response) -> Result<f64> {
    Ok((null_deviance(family, y)? - saturated_loss(y)).max(0.0))
}

/// Half squared Frobenius distance of `x` from its column means.
pub fn centered_sum_squares(x: ArrayView2<f64>) -> f64 {
    let mean = x.mean_axis(Axis(0)).unwrap_or_else(|| Array1::zeros(x.ncols()));
    x.axis_iter(Axis(0))
        .map(|row| {
            row.iter()
                .zip(mean.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        })
        .sum()
}

/// Default balancing weights `(π_X, π_y)`, each the reciprocal of its
/// source's null deviance.
pub fn default_pi(x: ArrayView2<f64>, family: LossFamily, y: &Response) -> Result<(f64, f64)> {
    let dx = 0.5 * centered_sum_squares(x);
    if dx <= 0.0 || !dx.is_finite() {
        return Err(Error::Degenerate(
            "data matrix has zero spread about its column means".into(),
        ));
    }
    let dy = null_excess(family, y)?;
    if dy <= 0.0 || !dy.is_finite() {
        return Err(Error::Degenerate(
            "supervising variable has zero null deviance".into(),
        ));
    }
    Ok((1.0 / dx, 1.0 / dy))
}

/// A link-scale or mean-scale value with a flag for domain clipping.
#[derive(Debug, Clone, PartialEq)]
pub struct Linked {
    pub value: Array1<f64>,
    pub clipped: bool,
}

/// Applies the link `g` to one observation's mean (a probability vector for
/// multinomial, a scalar otherwise).
pub fn link(family: LossFamily, mean: ArrayView1<f64>) -> Result<Linked> {
    check_width(family, mean.len())?;
    Ok(match family {
        LossFamily::Gaussian => Linked {
            value: mean.to_owned(),
            clipped: false,
        },
        LossFamily::Bernoulli => {
            let (v, clipped) = logit_clipped(mean[0]);
            Linked {
                value: Array1::from_elem(1, v),
                clipped,
            }
        }
        LossFamily::Poisson => {
            let (v, clipped) = log_clipped(mean[0]);
            Linked {
                value: Array1::from_elem(1, v),
                clipped,
            }
        }
        LossFamily::Multinomial { .. } => {
            let (value, clipped) = centered_log(mean);
            Linked { value, clipped }
        }
        LossFamily::Cox => return Err(Error::NoLink("cox")),
    })
}

/// Applies the inverse link `g⁻¹` to one observation's predictor.
pub fn inverse_link(family: LossFamily, eta: ArrayView1<f64>) -> Result<Array1<f64>> {
    check_width(family, eta.len())?;
    Ok(match family {
        LossFamily::Gaussian => eta.to_owned(),
        LossFamily::Bernoulli => eta.mapv(sigmoid),
        LossFamily::Poisson => eta.mapv(f64::exp),
        LossFamily::Multinomial { .. } => {
            let m = eta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let e = eta.mapv(|v| (v - m).exp());
            let z = e.sum();
            e / z
        }
        LossFamily::Cox => return Err(Error::NoLink("cox")),
    })
}

fn check_width(family: LossFamily, len: usize) -> Result<()> {
    if len != family.width() {
        return Err(Error::Dimension(format!(
            "{} link expects {} values, got {len}",
            family.name(),
            family.width()
        )));
    }
    Ok(())
}

fn logit_clipped(p: f64) -> (f64, bool) {
    if p <= 0.0 {
        (-LINK_CLIP, true)
    } else if p >= 1.0 {
        (LINK_CLIP, true)
    } else {
        let v = (p / (1.0 - p)).ln();
        if v.abs() > LINK_CLIP {
            (v.clamp(-LINK_CLIP, LINK_CLIP), true)
        } else {
            (v, false)
        }
    }
}

fn log_clipped(m: f64) -> (f64, bool) {
    if m <= 0.0 {
        (-LINK_CLIP, true)
    } else {
        let v = m.ln();
        if v.abs() > LINK_CLIP {
            (v.clamp(-LINK_CLIP, LINK_CLIP), true)
        } else {
            (v, false)
        }
    }
}

/// Log-probabilities shifted to sum to zero across classes.
fn centered_log(probs: ArrayView1<f64>) -> (Array1<f64>, bool) {
    let mut clipped = false;
    let logs = probs.mapv(|p| {
        let (v, c) = log_clipped(p);
        clipped |= c;
        v
    });
    let mean = logs.mean().unwrap_or(0.0);
    (logs - mean, clipped)
}
