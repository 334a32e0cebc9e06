//! Choosing λ without knowing the number of groups: agreement of cluster
//! assignments across 80% subsamples.
//!
//! cargo run --release --example stability_selection

use fuseclust::admm::SolverOptions;
use fuseclust::data::Dataset;
use fuseclust::select::{adjusted_rand_index, stability_select, PathSolver, StabilityConfig};
use fuseclust::sim::{simulate, Scenario, ScenarioId, SimFamily};
use fuseclust::weights::WeightConfig;

fn main() -> fuseclust::Result<()> {
    let sim = simulate(&Scenario::new(ScenarioId::S1, SimFamily::Gaussian, 5))?;
    let data = Dataset::new(sim.x, Some(sim.y), None)?;
    let wc = WeightConfig::default();
    let pi = data.default_pi()?;
    let graph = data.graph(&wc)?;
    let opts = SolverOptions::precise();
    let grid = PathSolver::new(data.problem(&graph, pi), opts.clone())?.auto_grid(15)?;

    let cfg = StabilityConfig { subsamples: 8, ..StabilityConfig::default() };
    let sel = stability_select(&data, &wc, pi, &grid, &cfg, &opts)?;
    for (i, s) in sel.scores.iter().enumerate() {
        let mark = if i == sel.index { "  <- selected" } else { "" };
        println!("lambda {:>10.5}  K {:>3}  agreement {:.3}{mark}", s.lambda, s.k_full, s.agreement);
    }
    let labels = &sel.full_path.assignments[sel.index].labels;
    println!("ARI at the selected λ: {:.3}", adjusted_rand_index(labels, &sim.true_labels)?);
    Ok(())
}
