//! Supervised convex biclustering: rows and columns fuse together, giving a
//! checkerboard of block means. Prints the reordered centroid matrix as a
//! coarse text heatmap.
//!
//! cargo run --release --example biclustering

use fuseclust::admm::{BiclustProblem, SolverOptions};
use fuseclust::bicluster::{heatmap, BiclustPathSolver};
use fuseclust::data::Dataset;
use fuseclust::select::{adjusted_rand_index, nearest_cluster_count};
use fuseclust::sim::{simulate, Scenario, ScenarioId, SimFamily};
use fuseclust::weights::{column_weights, WeightConfig};

fn main() -> fuseclust::Result<()> {
    let sim = simulate(&Scenario::new(ScenarioId::Biclust, SimFamily::Gaussian, 1))?;
    let data = Dataset::new(sim.x, Some(sim.y), None)?;
    let wc = WeightConfig::default();
    let rows = data.graph(&wc)?;
    let cols = column_weights(data.x.view(), &wc)?;
    let problem = BiclustProblem::new(data.x.view(), data.y.as_ref(), &rows, &cols, data.default_pi()?);
    let solver = BiclustPathSolver::new(problem, SolverOptions::precise())?;
    let pt = nearest_cluster_count(3, |k| solver.lambda_for_row_clusters(k))?;
    println!(
        "lambda {:.4}: {} row clusters (ARI {:.3}), {} column clusters",
        pt.lambda,
        pt.rows.k,
        adjusted_rand_index(&pt.rows.labels, &sim.true_labels)?,
        pt.cols.k
    );

    let (m, _, _) = heatmap(pt.state.u.view(), &pt.rows.labels, &pt.cols.labels);
    let (lo, hi) = m.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, &v| (a.0.min(v), a.1.max(v)));
    let shades = [' ', '.', ':', '-', '=', '+', '*', '#', '%', '@'];
    for r in m.rows().into_iter().step_by(4) {
        let line: String = r
            .iter()
            .map(|&v| shades[(((v - lo) / (hi - lo)) * 9.0).round() as usize])
            .collect();
        println!("|{line}|");
    }
    Ok(())
}
