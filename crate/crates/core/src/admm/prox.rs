use ndarray::{Array2, ArrayView1, ArrayView2, ArrayViewMut2, Axis};

/// Row-wise block soft-thresholding, the proximal map of
/// `τ Σ_l w_l ‖V_l‖₂`.
pub fn prox_group_lasso(v: ArrayView2<f64>, weights: ArrayView1<f64>, tau: f64) -> Array2<f64> {
    let mut out = v.to_owned();
    prox_group_lasso_inplace(out.view_mut(), weights, tau);
    out
}

pub fn prox_group_lasso_inplace(mut v: ArrayViewMut2<f64>, weights: ArrayView1<f64>, tau: f64) {
    debug_assert_eq!(v.nrows(), weights.len());
    for (mut row, &w) in v.axis_iter_mut(Axis(0)).zip(weights) {
        let thresh = tau * w;
        if thresh <= 0.0 {
            continue;
        }
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm <= thresh {
            row.fill(0.0);
        } else {
            let scale = 1.0 - thresh / norm;
            row.mapv_inplace(|x| x * scale);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn zero_tau_is_identity() {
        let v = array![[3.0, 4.0], [-1.0, 0.5]];
        assert_eq!(prox_group_lasso(v.view(), array![1.0, 2.0].view(), 0.0), v);
    }

    #[test]
    fn shrinks_norm_two_row_to_one() {
        let v = array![[0.0, 2.0]];
        let out = prox_group_lasso(v.view(), array![1.0].view(), 1.0);
        assert_eq!(out, array![[0.0, 1.0]]);
    }

    #[test]
    fn small_rows_vanish() {
        let v = array![[0.3, 0.4]];
        let out = prox_group_lasso(v.view(), array![2.0].view(), 0.5);
        assert_eq!(out, array![[0.0, 0.0]]);
    }
}
