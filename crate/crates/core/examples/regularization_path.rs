//! Warm-started path from singletons to a single cluster on the half-moon
//! design. Prints how many clusters each λ gives.
//!
//! cargo run --release --example regularization_path

use fuseclust::admm::SolverOptions;
use fuseclust::data::Dataset;
use fuseclust::select::{adjusted_rand_index, LambdaGrid, PathSolver};
use fuseclust::sim::{simulate, Scenario, ScenarioId, SimFamily};
use fuseclust::weights::WeightConfig;

fn main() -> fuseclust::Result<()> {
    let sim = simulate(&Scenario::new(ScenarioId::H1, SimFamily::Gaussian, 4))?;
    let data = Dataset::new(sim.x, Some(sim.y), None)?;
    let graph = data.graph(&WeightConfig::default())?;
    let solver = PathSolver::new(data.problem(&graph, data.default_pi()?), SolverOptions::precise())?;
    let path = solver.path(&LambdaGrid::Auto { points: 25 })?;
    println!("{:>12}  {:>4}  {:>6}  {:>6}", "lambda", "K", "ARI", "iters");
    for i in 0..path.lambdas.len() {
        let ari = adjusted_rand_index(&path.assignments[i].labels, &sim.true_labels)?;
        println!(
            "{:>12.5}  {:>4}  {ari:>6.3}  {:>6}",
            path.lambdas[i], path.k_path[i], path.reports[i].iterations
        );
    }
    if let Some(i) = path.first_with(3) {
        println!("first λ with three clusters: {:.5}", path.lambdas[i]);
    }
    Ok(())
}
