//! The same latent groups supervised by each kind of outcome: continuous,
//! binary, categorical, count and censored survival.
//!
//! cargo run --release --example supervision_families

use fuseclust::admm::SolverOptions;
use fuseclust::data::Dataset;
use fuseclust::select::{adjusted_rand_index, PathSolver};
use fuseclust::sim::{simulate, Scenario, ScenarioId, SimFamily};
use fuseclust::weights::WeightConfig;

fn main() -> fuseclust::Result<()> {
    let families = [
        SimFamily::Gaussian,
        SimFamily::Binary,
        SimFamily::Categorical,
        SimFamily::Count,
        SimFamily::Survival,
    ];
    for fam in families {
        let sim = simulate(&Scenario::new(ScenarioId::S1, fam, 3))?;
        let data = Dataset::new(sim.x, Some(sim.y), None)?;
        let pi = data.default_pi()?;
        let graph = data.graph(&WeightConfig::default())?;
        let solver = PathSolver::new(data.problem(&graph, pi), SolverOptions::precise())?;
        let pt = solver.lambda_for_nearest_clusters(3)?;
        println!(
            "{:<12} pi_y {:.4}  K {}  ARI {:.3}",
            format!("{fam:?}"),
            pi.y,
            pt.assignment.k,
            adjusted_rand_index(&pt.assignment.labels, &sim.true_labels)?
        );
    }
    Ok(())
}
