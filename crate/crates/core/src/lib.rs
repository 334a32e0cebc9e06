//! Supervised convex clustering.
//!
//! Jointly clusters the rows of an unlabeled data matrix `X` and a noisy
//! supervising variable `y` (gaussian, binary, count, categorical or censored
//! survival) by fusing the concatenated centroids `[θ_i, U_i]` under a
//! weighted group-lasso penalty. Also provides convex biclustering with row
//! (and optionally column) supervision, Gower-distance weight construction,
//! regularization paths, stability selection, covariate-adjusted weights and
//! the simulation designs used to benchmark the method.

pub mod adaptive;
pub mod admm;
pub mod bicluster;
pub mod data;
pub mod error;
pub mod family;
pub mod select;
pub mod sim;
pub mod weights;

pub use error::{Error, Result};
