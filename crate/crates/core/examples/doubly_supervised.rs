//! Biclustering with supervision on both sides: an outcome per row and a
//! feature annotation per column.
//!
//! cargo run --release --example doubly_supervised

use fuseclust::admm::{doubly_solve, BiclustProblem, FeatureSupervision, SolverOptions};
use fuseclust::data::Dataset;
use fuseclust::family::{default_pi, Response};
use fuseclust::select::split_components;
use fuseclust::sim::{simulate, Scenario, ScenarioId, SimFamily};
use fuseclust::weights::{column_weights, WeightConfig};
use ndarray::Axis;

fn main() -> fuseclust::Result<()> {
    let sim = simulate(&Scenario::new(ScenarioId::Biclust, SimFamily::Gaussian, 2))?;
    let data = Dataset::new(sim.x, Some(sim.y), None)?;
    // Feature-side annotation: each column's mean level, observed with noise.
    let col_means = data.x.mean_axis(Axis(0)).expect("non-empty");
    let feature_y = Response::gaussian(col_means.mapv(|m| m + 0.1 * m.sin()))?;

    let wc = WeightConfig::default();
    let rows = data.graph(&wc)?;
    let cols = column_weights(data.x.view(), &wc)?;
    let (_, feature_pi) = default_pi(data.x.t(), feature_y.family(), &feature_y)?;
    let mut problem = BiclustProblem::new(data.x.view(), data.y.as_ref(), &rows, &cols, data.default_pi()?);
    problem.feature = Some(FeatureSupervision { y: &feature_y, z: None, pi: feature_pi });

    for lambda in [0.01, 0.05, 0.2, 1.0] {
        let (st, report) = doubly_solve(problem, lambda, &SolverOptions::precise(), None)?;
        let r = split_components(st.v_row.view(), &rows, 1e-6);
        let c = split_components(st.v_col.view(), &cols, 1e-6);
        println!(
            "lambda {lambda:<5}  row clusters {:>3}  column clusters {:>3}  converged {}",
            r.k, c.k, report.converged
        );
    }
    Ok(())
}
