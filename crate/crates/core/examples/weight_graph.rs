//! Fusion weights from mixed continuous and categorical features: Gower
//! distances blended with the outcome, a k-nearest-neighbour graph and a
//! gaussian kernel.
//!
//! cargo run --release --example weight_graph

use fuseclust::family::Response;
use fuseclust::weights::{build_weights, default_alpha, Alpha, FeatureKind, WeightConfig};
use ndarray::array;

fn main() -> fuseclust::Result<()> {
    // Height, weight, smoker (0/1 code).
    let x = array![
        [170.0, 65.0, 0.0],
        [172.0, 70.0, 0.0],
        [168.0, 62.0, 1.0],
        [185.0, 90.0, 1.0],
        [183.0, 88.0, 1.0],
        [187.0, 95.0, 0.0],
    ];
    let y = Response::gaussian(array![1.0, 1.2, 0.9, 3.1, 2.8, 3.3])?;
    let mut cfg = WeightConfig {
        k: 2,
        feature_kinds: vec![FeatureKind::Continuous, FeatureKind::Continuous, FeatureKind::Categorical],
        ..WeightConfig::default()
    };
    println!("data-driven alpha: {:.3}", default_alpha(x.view(), &y)?);
    for alpha in [Alpha::Fixed(0.0), Alpha::Auto, Alpha::Fixed(1.0)] {
        cfg.alpha = alpha;
        let g = build_weights(x.view(), Some(&y), &cfg)?;
        let edges: Vec<String> = g.edges.iter().map(|e| format!("{}-{}:{:.2}", e.i, e.j, e.w)).collect();
        println!("{alpha:?}: {}", edges.join(" "));
    }
    Ok(())
}
