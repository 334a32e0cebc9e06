//! When the outcome also depends on covariates `Z`, weights built from the
//! raw outcome mislead the fusion graph. The adaptive fit residualizes the
//! outcome on `Zβ̂`, rebuilds the weights and refits.
//!
//! cargo run --release --example covariate_adjustment [gaussian|count]

use fuseclust::adaptive::{adaptive_fit, Selection};
use fuseclust::admm::SolverOptions;
use fuseclust::data::Dataset;
use fuseclust::select::{adjusted_rand_index, PathSolver};
use fuseclust::sim::{simulate, Scenario, ScenarioId, SimFamily};
use fuseclust::weights::WeightConfig;

fn main() -> fuseclust::Result<()> {
    let fam: SimFamily = std::env::args().nth(1).as_deref().unwrap_or("gaussian").parse()?;
    let sim = simulate(&Scenario::new(ScenarioId::Covariate, fam, 2))?;
    let data = Dataset::new(sim.x, Some(sim.y), sim.z)?;
    let wc = WeightConfig::default();
    let pi = data.default_pi()?;
    let opts = SolverOptions::precise();

    let graph = data.graph(&wc)?;
    let plain = PathSolver::new(data.problem(&graph, pi), opts.clone())?.lambda_for_nearest_clusters(3)?;
    println!(
        "outcome-weighted fit: ARI {:.3}",
        adjusted_rand_index(&plain.assignment.labels, &sim.true_labels)?
    );

    let fit = adaptive_fit(&data, &wc, pi, &Selection::NearestClusters(3), &opts)?;
    println!(
        "adaptive fit:         ARI {:.3}  (alpha {:.3}, stage-1 K {})",
        adjusted_rand_index(&fit.stage3.assignment.labels, &sim.true_labels)?,
        fit.alpha,
        fit.stage1.assignment.k
    );
    if let Some(beta) = &sim.true_beta {
        let est = fit.stage3.fit.beta.column(0);
        println!("beta (true vs estimated):");
        for (b, e) in beta.iter().zip(est) {
            println!("  {b:>7.3}  {e:>7.3}");
        }
    }
    Ok(())
}
