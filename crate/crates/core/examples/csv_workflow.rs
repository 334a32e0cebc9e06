//! Round trip through files: write a simulated data set, read it back as a
//! table, fit at a fixed λ and save labels and weights.
//!
//! cargo run --release --example csv_workflow [out_dir]

use std::path::PathBuf;

use fuseclust::admm::SolverOptions;
use fuseclust::data::{load_table, numbered, save_matrix, Dataset};
use fuseclust::family::Response;
use fuseclust::select::PathSolver;
use fuseclust::sim::{simulate, Scenario, ScenarioId, SimFamily};
use fuseclust::weights::WeightConfig;
use ndarray::{concatenate, Axis};

fn main() -> fuseclust::Result<()> {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(std::env::temp_dir);
    std::fs::create_dir_all(&dir)?;
    let sim = simulate(&Scenario::new(ScenarioId::S1, SimFamily::Count, 8))?;
    let y = sim.y.scalar_values().expect("count outcome").clone().insert_axis(Axis(1));
    let mut headers = numbered("x", sim.x.ncols());
    headers.push("visits".into());
    let path = dir.join("clinic.csv");
    save_matrix(&path, &headers, concatenate![Axis(1), sim.x, y].view())?;

    let table = load_table(&path)?;
    let x = table.columns(&headers[..headers.len() - 1])?;
    let visits = Response::poisson(table.column("visits")?)?;
    let data = Dataset::new(x, Some(visits), None)?;
    let graph = data.graph(&WeightConfig::default())?;
    let solver = PathSolver::new(data.problem(&graph, data.default_pi()?), SolverOptions::precise())?;
    let pt = solver.point(0.02, None)?;
    println!("lambda 0.02: {} clusters, objective {:.4}", pt.assignment.k, pt.report.objective);

    graph.save_csv(&dir.join("weights.csv"))?;
    let labels: Vec<String> = pt.assignment.labels.iter().map(|l| l.to_string()).collect();
    std::fs::write(dir.join("labels.csv"), format!("label\n{}\n", labels.join("\n")))?;
    println!("wrote {}", dir.display());
    Ok(())
}
