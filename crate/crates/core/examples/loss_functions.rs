//! Losses and gradients of each supervision family at a few predictors,
//! including tied survival times.
//!
//! cargo run --release --example loss_functions

use fuseclust::family::{eval_grad, eval_loss, loss_center, null_deviance, LossFamily, Response};
use ndarray::{array, Array2};

fn show(name: &str, fam: LossFamily, y: &Response, eta: Array2<f64>) -> fuseclust::Result<()> {
    let loss = eval_loss(fam, y, eta.view())?;
    let grad = eval_grad(fam, y, eta.view())?;
    let center = loss_center(fam, y)?;
    println!("{name}: loss {loss:.4}  null deviance {:.4}  center {:?}", null_deviance(fam, y)?, center.eta.to_vec());
    println!("  gradient {:?}", grad.iter().map(|g| (g * 1e4).round() / 1e4).collect::<Vec<_>>());
    Ok(())
}

fn main() -> fuseclust::Result<()> {
    let col = |v: &[f64]| Array2::from_shape_vec((v.len(), 1), v.to_vec()).unwrap();
    show("gaussian", LossFamily::Gaussian, &Response::gaussian(array![0.5, 1.5, 2.0])?, col(&[1.0, 1.0, 1.0]))?;
    show("bernoulli", LossFamily::Bernoulli, &Response::bernoulli(array![0.0, 1.0, 1.0])?, col(&[0.0, 0.5, -0.5]))?;
    show("poisson", LossFamily::Poisson, &Response::poisson(array![0.0, 2.0, 5.0])?, col(&[0.0, 0.7, 1.6]))?;
    let multi = Response::multinomial_from_labels(&[0, 2, 1, 2], 3)?;
    show("multinomial", LossFamily::multinomial(3)?, &multi, Array2::zeros((4, 3)))?;
    let cox = Response::cox(vec![2.0, 1.0, 1.0, 3.0], vec![true, true, false, true])?;
    show("cox (tied times)", LossFamily::Cox, &cox, col(&[0.2, -0.1, 0.0, 0.4]))?;
    Ok(())
}
