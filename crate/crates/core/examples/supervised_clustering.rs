//! Supervised convex clustering on the spherical gaussian design, compared
//! with plain convex clustering of `X` at the same cluster count.
//!
//! cargo run --release --example supervised_clustering [seed]

use fuseclust::admm::SolverOptions;
use fuseclust::data::Dataset;
use fuseclust::select::{adjusted_rand_index, PathSolver};
use fuseclust::sim::{simulate, Scenario, ScenarioId, SimFamily};
use fuseclust::weights::WeightConfig;

fn main() -> fuseclust::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let sim = simulate(&Scenario::new(ScenarioId::S1, SimFamily::Gaussian, seed))?;
    let data = Dataset::new(sim.x.clone(), Some(sim.y.clone()), None)?;

    for (name, d) in [("supervised", data.clone()), ("X only", data.without_supervision())] {
        let graph = d.graph(&WeightConfig::default())?;
        let solver = PathSolver::new(d.problem(&graph, d.default_pi()?), SolverOptions::precise())?;
        let pt = solver.lambda_for_nearest_clusters(3)?;
        let ari = adjusted_rand_index(&pt.assignment.labels, &sim.true_labels)?;
        println!(
            "{name:>10}: lambda {:.4}  K {}  ARI {ari:.3}  ({} iterations)",
            pt.lambda, pt.assignment.k, pt.report.iterations
        );
    }
    Ok(())
}
