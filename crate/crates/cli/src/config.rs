//! JSON run configuration.

use std::path::{Path, PathBuf};

use fuseclust::admm::{Pi, SolverOptions};
use fuseclust::weights::WeightConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyName {
    Gaussian,
    Bernoulli,
    Poisson,
    Multinomial,
    Cox,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Scc,
    Biclust,
    Doubly,
    Adaptive,
}

/// Which CSV columns play which role. Unset `x` means every column not
/// named elsewhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct Columns {
    pub x: Option<Vec<String>>,
    /// Supervising variable (class codes `0..K` for multinomial).
    pub y: Option<String>,
    pub z: Vec<String>,
    /// Survival time and event indicator (nonzero = event).
    pub time: Option<String>,
    pub event: Option<String>,
    /// Class count for multinomial; defaults to the largest code plus one.
    pub classes: Option<usize>,
}

impl Columns {
    /// Columns taken by everything except `x`.
    pub(crate) fn used(&self) -> Vec<String> {
        self.y
            .iter()
            .chain(&self.time)
            .chain(&self.event)
            .chain(&self.z)
            .cloned()
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum LambdaSpec {
    Value(f64),
    Grid(Vec<f64>),
    /// Automatic grid with this many points.
    Auto(usize),
    /// Search for this many clusters.
    Clusters(usize),
}

impl Default for LambdaSpec {
    fn default() -> Self {
        LambdaSpec::Auto(30)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilitySpec {
    pub subsamples: usize,
    pub fraction: f64,
    pub target_k: Option<usize>,
}

impl Default for StabilitySpec {
    fn default() -> Self {
        StabilitySpec {
            subsamples: 10,
            fraction: 0.8,
            target_k: None,
        }
    }
}

/// Supervision on the features for doubly-supervised biclustering: one row
/// per column of `X`, in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureSpec {
    pub data: PathBuf,
    pub family: FamilyName,
    #[serde(default)]
    pub columns: Columns,
    pub pi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BiclustSpec {
    /// Weight recipe for the column graph (α is ignored).
    pub col_weights: WeightConfig,
    pub col_ratio: f64,
}

impl Default for BiclustSpec {
    fn default() -> Self {
        BiclustSpec {
            col_weights: WeightConfig::default(),
            col_ratio: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSpec {
    /// Scenario name as accepted on the command line, e.g. `"s1"`.
    pub scenario: String,
    pub family: String,
    pub n: Option<usize>,
    pub p: Option<usize>,
    pub noise: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// CSV with a header row; relative paths resolve against the config file.
    pub data: Option<PathBuf>,
    /// Family of the supervising variable; unset means unsupervised.
    pub family: Option<FamilyName>,
    pub columns: Columns,
    pub weights: WeightConfig,
    pub solver: SolverOptions,
    /// Balancing weights; defaults to reciprocal null deviances.
    pub pi: Option<Pi>,
    pub lambda: LambdaSpec,
    pub mode: Mode,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub stability: StabilitySpec,
    pub feature: Option<FeatureSpec>,
    pub biclust: BiclustSpec,
    /// Fusion tolerance for reading off clusters; defaults to a scale-aware value.
    pub fusion_tol: Option<f64>,
    pub simulate: Option<SimulateSpec>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(d) = &mut self.data {
            fix(d);
        }
        if let Some(f) = &mut self.feature {
            fix(&mut f.data);
        }
        if let Some(o) = &mut self.output {
            fix(o);
        }
    }

    /// Mode-specific requirements that do not need the data.
    pub fn validate(&self) -> Result<(), CliError> {
        match self.mode {
            Mode::Adaptive if self.columns.z.is_empty() => {
                return Err(CliError::config("adaptive mode requires covariate columns (columns.z)"))
            }
            Mode::Doubly if self.feature.is_none() => {
                return Err(CliError::config("doubly mode requires feature-side supervision (feature)"))
            }
            _ => {}
        }
        if self.family.is_none() && (self.columns.y.is_some() || !self.columns.z.is_empty()) {
            return Err(CliError::config("columns.y or columns.z given without a family"));
        }
        if matches!(self.mode, Mode::Adaptive) && self.family.is_none() {
            return Err(CliError::config("adaptive mode requires a supervising variable"));
        }
        Ok(())
    }
}
