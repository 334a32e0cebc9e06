//! Every simulation design with its dimensions and group sizes.
//!
//! cargo run --release --example simulation_designs

use fuseclust::sim::{simulate, Scenario, ScenarioId, SimFamily};

fn main() {
    let designs = [
        (ScenarioId::S1, SimFamily::Gaussian),
        (ScenarioId::S2, SimFamily::Gaussian),
        (ScenarioId::H1, SimFamily::Gaussian),
        (ScenarioId::H2, SimFamily::Gaussian),
        (ScenarioId::AS1, SimFamily::Binary),
        (ScenarioId::AS2, SimFamily::Categorical),
        (ScenarioId::VaryingP, SimFamily::Gaussian),
        (ScenarioId::UnequalGroups, SimFamily::Gaussian),
        (ScenarioId::Covariate, SimFamily::Count),
        (ScenarioId::Biclust, SimFamily::Gaussian),
        (ScenarioId::S1, SimFamily::Survival),
    ];
    for (id, fam) in designs {
        match simulate(&Scenario::new(id, fam, 0)) {
            Ok(out) => {
                let mut sizes = std::collections::BTreeMap::new();
                for l in &out.true_labels {
                    *sizes.entry(l).or_insert(0) += 1;
                }
                let (n, p) = out.x.dim();
                let d = out.z.as_ref().map_or(0, |z| z.ncols());
                println!("{id:?}/{fam:?}: n {n}, p {p}, covariates {d}, groups {sizes:?}");
            }
            Err(e) => println!("{id:?}/{fam:?}: {e}"),
        }
    }
    // Designs that do not make sense are rejected rather than guessed.
    if let Err(e) = simulate(&Scenario::new(ScenarioId::S2, SimFamily::Binary, 0)) {
        println!("S2/Binary: {e}");
    }
}
