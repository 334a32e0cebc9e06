//! Command implementations behind the `fuseclust` binary.

use std::fmt;
use std::path::{Path, PathBuf};

use fuseclust::adaptive::{adaptive_fit, Selection};
use fuseclust::admm::{
    BiclustProblem, BiclustState, FeatureSupervision, FitState, Pi, SolveReport, SolverOptions,
};
use fuseclust::bicluster::{heatmap, BiclustPathSolver, BiclustPoint};
use fuseclust::data::{load_table, save_matrix, Dataset, Table};
use fuseclust::family::{default_pi, Response};
use fuseclust::select::{
    adjusted_rand_index, stability_select, LambdaGrid, PathPoint, PathSolver, StabilityConfig,
    StabilitySelection,
};
use fuseclust::sim::{simulate, Scenario, ScenarioId, SimFamily, SimOutput};
use fuseclust::weights::{column_weights, WeightGraph};
use ndarray::{Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

pub mod config;

pub use config::{Columns, FamilyName, LambdaSpec, Mode, RunConfig};

pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

/// A failure with the process exit code it maps to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError {
            code: EXIT_CONFIG,
            message: msg.into(),
        }
    }

    pub fn data(msg: impl Into<String>) -> Self {
        CliError {
            code: EXIT_DATA,
            message: msg.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<fuseclust::Error> for CliError {
    fn from(e: fuseclust::Error) -> Self {
        use fuseclust::Error as E;
        match e {
            E::Config(_) | E::NoLink(_) | E::TargetUnreachable { .. } | E::NoSelection | E::Unsupported(_) => {
                CliError::config(e.to_string())
            }
            _ => CliError::data(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Whether every solve converged; artifacts are written either way.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Status {
    pub converged: bool,
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn apply(&mut self, ov: &Overrides) {
        if let Some(s) = ov.seed {
            self.seed = s;
        }
        if let Some(o) = &ov.out {
            self.output = Some(o.clone());
        }
    }

    pub fn output_dir(&self) -> CliResult<PathBuf> {
        let dir = self.output.clone().unwrap_or_else(|| PathBuf::from("fuseclust-out"));
        std::fs::create_dir_all(&dir)
            .map_err(|e| CliError::data(format!("cannot create output directory {}: {e}", dir.display())))?;
        Ok(dir)
    }

    fn stability_config(&self) -> StabilityConfig {
        StabilityConfig {
            subsamples: self.stability.subsamples,
            fraction: self.stability.fraction,
            target_k: self.stability.target_k,
            seed: self.seed,
        }
    }

    fn options(&self) -> SolverOptions {
        self.solver.clone()
    }
}

/// Data loaded according to a config.
pub struct Inputs {
    pub data: Dataset,
    pub x_names: Vec<String>,
    pub feature: Option<(Response, Option<Array2<f64>>, Option<f64>)>,
}

pub fn load_inputs(cfg: &RunConfig) -> CliResult<Inputs> {
    cfg.validate()?;
    let path = cfg
        .data
        .as_ref()
        .ok_or_else(|| CliError::config("config has no data file"))?;
    let table = read_data(path)?;
    let used = cfg.columns.used();
    let x_names = match &cfg.columns.x {
        Some(c) => c.clone(),
        None => table.headers.iter().filter(|h| !used.contains(h)).cloned().collect(),
    };
    if x_names.is_empty() {
        return Err(CliError::config("no data columns selected"));
    }
    let x = table.columns(&x_names)?;
    let y = match cfg.family {
        Some(f) => Some(response(f, &table, &cfg.columns)?),
        None => None,
    };
    let z = if cfg.columns.z.is_empty() {
        None
    } else {
        Some(table.columns(&cfg.columns.z)?)
    };
    let data = Dataset::new(x, y, z)?;
    let feature = match &cfg.feature {
        Some(spec) => {
            let t = read_data(&spec.data)?;
            let y = response(spec.family, &t, &spec.columns)?;
            if y.len() != x_names.len() {
                return Err(CliError::data(format!(
                    "feature file has {} rows but the data has {} columns",
                    y.len(),
                    x_names.len()
                )));
            }
            let z = if spec.columns.z.is_empty() {
                None
            } else {
                Some(t.columns(&spec.columns.z)?)
            };
            Some((y, z, spec.pi))
        }
        None => None,
    };
    Ok(Inputs { data, x_names, feature })
}

fn read_data(path: &Path) -> CliResult<Table> {
    load_table(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn response(family: FamilyName, table: &Table, cols: &Columns) -> CliResult<Response> {
    let named = |c: &Option<String>, role: &str| -> CliResult<(String, Array1<f64>)> {
        let name = c
            .clone()
            .ok_or_else(|| CliError::config(format!("family needs the {role} column (columns.{role})")))?;
        let v = table.column(&name)?;
        Ok((name, v))
    };
    let bad = |name: &str, i: usize, what: &str, v: f64| {
        CliError::data(format!("row {}, column {name}: {what}, got {v}", i + 1))
    };
    let check = |name: &str, v: &Array1<f64>, ok: fn(f64) -> bool, what: &str| -> CliResult<()> {
        match v.iter().position(|&x| !ok(x)) {
            Some(i) => Err(bad(name, i, what, v[i])),
            None => Ok(()),
        }
    };
    let count = |x: f64| x >= 0.0 && x.fract() == 0.0;
    Ok(match family {
        FamilyName::Gaussian => Response::gaussian(named(&cols.y, "y")?.1)?,
        FamilyName::Bernoulli => {
            let (name, v) = named(&cols.y, "y")?;
            check(&name, &v, |x| x == 0.0 || x == 1.0, "expected 0 or 1")?;
            Response::bernoulli(v)?
        }
        FamilyName::Poisson => {
            let (name, v) = named(&cols.y, "y")?;
            check(&name, &v, count, "expected a non-negative integer count")?;
            Response::poisson(v)?
        }
        FamilyName::Multinomial => {
            let (name, v) = named(&cols.y, "y")?;
            check(&name, &v, count, "expected a class code 0, 1, ...")?;
            let labels: Vec<usize> = v.iter().map(|&x| x as usize).collect();
            let classes = cols.classes.unwrap_or_else(|| labels.iter().max().map_or(0, |m| m + 1));
            if let Some(i) = labels.iter().position(|&l| l >= classes) {
                return Err(bad(&name, i, &format!("class code exceeds {classes} classes"), v[i]));
            }
            Response::multinomial_from_labels(&labels, classes)?
        }
        FamilyName::Cox => {
            let (tname, t) = named(&cols.time, "time")?;
            let (ename, e) = named(&cols.event, "event")?;
            check(&tname, &t, |x| x > 0.0, "survival times must be positive")?;
            check(&ename, &e, |x| x == 0.0 || x == 1.0, "expected an event flag 0 or 1")?;
            Response::cox(t.to_vec(), e.iter().map(|&x| x != 0.0).collect())?
        }
    })
}

fn family_name(y: Option<&Response>) -> Option<&'static str> {
    y.map(|y| y.family().name())
}

fn pi_for(cfg: &RunConfig, data: &Dataset) -> CliResult<Pi> {
    match cfg.pi {
        Some(p) => Ok(p),
        None => Ok(data.default_pi()?),
    }
}

// ---------------------------------------------------------------- artifacts

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiclustArtifact {
    pub state: BiclustState,
    pub col_labels: Vec<usize>,
    pub col_k: usize,
    pub col_fusion_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveArtifact {
    pub stage1_lambda: f64,
    pub stage1_k: usize,
    pub stage1_beta: Array2<f64>,
    pub stage1_report: SolveReport,
    /// α used for the re-weighted graph.
    pub alpha: f64,
}

/// Contents of `fit.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitArtifact {
    pub mode: Mode,
    pub family: Option<String>,
    pub lambda: f64,
    pub objective: f64,
    pub pi: Pi,
    pub k: usize,
    pub labels: Vec<usize>,
    pub fusion_tol: f64,
    pub report: SolveReport,
    /// Clustering fit (`U`, `θ`, `β`, splitting and dual variables).
    pub fit: Option<FitState>,
    pub biclust: Option<BiclustArtifact>,
    pub adaptive: Option<AdaptiveArtifact>,
    pub stability: Option<StabilitySummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilitySummary {
    pub index: usize,
    pub grid: Vec<f64>,
    pub agreement: Vec<f64>,
}

impl FitArtifact {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
    }
}

fn io_err(path: &Path, e: impl fmt::Display) -> CliError {
    CliError::data(format!("cannot write {}: {e}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

fn write_rows(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<()> {
    let mut text = header.join(",");
    text.push('\n');
    for r in rows {
        text.push_str(&r.join(","));
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

fn write_labels(path: &Path, labels: &[usize]) -> CliResult<()> {
    write_rows(path, &["label".to_string()], labels.iter().map(|l| vec![l.to_string()]))
}

fn write_graph(path: &Path, g: &WeightGraph) -> CliResult<()> {
    g.save_csv(path).map_err(|e| io_err(path, e))
}

/// `U` with rows (and, for biclustering, columns) grouped by cluster. The
/// first column holds each row's original 0-based index.
fn write_heatmap(path: &Path, u: ArrayView2<f64>, rows: &[usize], cols: &[usize], names: &[String]) -> CliResult<()> {
    let (m, ro, co) = heatmap(u, rows, cols);
    let mut header = vec!["row".to_string()];
    header.extend(co.iter().map(|&j| names[j].clone()));
    write_rows(
        path,
        &header,
        m.rows().into_iter().zip(&ro).map(|(r, &i)| {
            let mut v = vec![i.to_string()];
            v.extend(r.iter().map(|x| format!("{x:?}")));
            v
        }),
    )
}

fn write_path_csv(path: &Path, lambdas: &[f64], ks: &[usize], labels: &[&[usize]]) -> CliResult<()> {
    let n = labels.first().map_or(0, |l| l.len());
    let mut header = vec!["lambda".to_string(), "K".to_string()];
    header.extend((1..=n).map(|i| format!("label_{i}")));
    write_rows(
        path,
        &header,
        lambdas.iter().zip(ks).zip(labels).map(|((l, k), lab)| {
            let mut v = vec![format!("{l:?}"), k.to_string()];
            v.extend(lab.iter().map(|x| x.to_string()));
            v
        }),
    )
}

fn write_stability(path: &Path, sel: &StabilitySelection) -> CliResult<()> {
    let header: Vec<String> = ["lambda", "agreement", "K", "eligible", "selected"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    write_rows(
        path,
        &header,
        sel.scores.iter().enumerate().map(|(i, s)| {
            vec![
                format!("{:?}", s.lambda),
                format!("{:?}", s.agreement),
                s.k_full.to_string(),
                (s.eligible as u8).to_string(),
                ((i == sel.index) as u8).to_string(),
            ]
        }),
    )
}

// ---------------------------------------------------------------- commands

fn grid_for(spec: &LambdaSpec, solver: &PathSolver<'_>) -> CliResult<Option<Vec<f64>>> {
    Ok(match spec {
        LambdaSpec::Grid(g) => Some(g.clone()),
        LambdaSpec::Auto(points) => Some(solver.auto_grid(*points)?),
        _ => None,
    })
}

fn path_solver<'a>(cfg: &RunConfig, data: &'a Dataset, graph: &'a WeightGraph, pi: Pi) -> CliResult<PathSolver<'a>> {
    let mut s = PathSolver::new(data.problem(graph, pi), cfg.options())?;
    if let Some(t) = cfg.fusion_tol {
        s = s.with_tolerance(t);
    }
    Ok(s)
}

/// Fit at the configured λ (a value, a cluster count, or stability
/// selection over a grid) and write `fit.json`, `labels.csv`, `heatmap.csv`
/// and `weights.csv`.
pub fn cmd_fit(cfg: &RunConfig) -> CliResult<Status> {
    match cfg.mode {
        Mode::Scc => fit_scc(cfg, false),
        Mode::Adaptive => fit_adaptive(cfg),
        Mode::Biclust | Mode::Doubly => fit_biclust(cfg),
    }
}

fn fit_scc(cfg: &RunConfig, force_stability: bool) -> CliResult<Status> {
    let inputs = load_inputs(cfg)?;
    let data = &inputs.data;
    let out = cfg.output_dir()?;
    let graph = data.graph(&cfg.weights)?;
    write_graph(&out.join("weights.csv"), &graph)?;
    let pi = pi_for(cfg, data)?;
    let solver = path_solver(cfg, data, &graph, pi)?;

    let mut spec = cfg.lambda.clone();
    let mut stab_cfg = cfg.stability_config();
    if force_stability {
        if let LambdaSpec::Clusters(k) = spec {
            stab_cfg.target_k = Some(k);
        }
        if matches!(spec, LambdaSpec::Value(_) | LambdaSpec::Clusters(_)) {
            spec = LambdaSpec::default();
        }
    }
    let (point, stability) = match (&spec, grid_for(&spec, &solver)?) {
        (LambdaSpec::Value(l), _) => (solver.point(*l, None)?, None),
        (LambdaSpec::Clusters(k), _) => (solver.lambda_for_clusters(*k)?, None),
        (_, Some(grid)) => {
            let sel = stability_select(data, &cfg.weights, pi, &grid, &stab_cfg, &cfg.options())?;
            write_stability(&out.join("stability.csv"), &sel)?;
            let summary = StabilitySummary {
                index: sel.index,
                grid: grid.clone(),
                agreement: sel.scores.iter().map(|s| s.agreement).collect(),
            };
            (solver.point(sel.lambda, None)?, Some(summary))
        }
        (_, None) => unreachable!("grid specs always produce a grid"),
    };
    let art = scc_artifact(cfg, data, pi, &point, None, stability);
    write_scc(&out, &inputs, &art, &point)?;
    Ok(Status {
        converged: point.report.converged,
    })
}

fn scc_artifact(
    cfg: &RunConfig,
    data: &Dataset,
    pi: Pi,
    point: &PathPoint,
    adaptive: Option<AdaptiveArtifact>,
    stability: Option<StabilitySummary>,
) -> FitArtifact {
    FitArtifact {
        mode: cfg.mode,
        family: family_name(data.y.as_ref()).map(String::from),
        lambda: point.lambda,
        objective: point.report.objective,
        pi,
        k: point.assignment.k,
        labels: point.assignment.labels.clone(),
        fusion_tol: point.assignment.fusion_tol,
        report: point.report.clone(),
        fit: Some(point.fit.clone()),
        biclust: None,
        adaptive,
        stability,
    }
}

fn write_scc(out: &Path, inputs: &Inputs, art: &FitArtifact, point: &PathPoint) -> CliResult<()> {
    write_json(&out.join("fit.json"), art)?;
    write_labels(&out.join("labels.csv"), &art.labels)?;
    let cols = vec![1; point.fit.u.ncols()];
    write_heatmap(&out.join("heatmap.csv"), point.fit.u.view(), &art.labels, &cols, &inputs.x_names)
}

fn fit_adaptive(cfg: &RunConfig) -> CliResult<Status> {
    let inputs = load_inputs(cfg)?;
    let data = &inputs.data;
    let out = cfg.output_dir()?;
    let pi = pi_for(cfg, data)?;
    let selection = match &cfg.lambda {
        LambdaSpec::Value(l) => Selection::Lambda(*l),
        LambdaSpec::Clusters(k) => Selection::Clusters(*k),
        spec => {
            let g1 = data.graph(&cfg.weights)?;
            let solver = path_solver(cfg, data, &g1, pi)?;
            let grid = grid_for(spec, &solver)?.expect("grid spec");
            Selection::Stability {
                grid,
                config: cfg.stability_config(),
            }
        }
    };
    let fit = adaptive_fit(data, &cfg.weights, pi, &selection, &cfg.options())?;
    write_graph(&out.join("weights.csv"), &fit.graph)?;
    let extra = AdaptiveArtifact {
        stage1_lambda: fit.stage1.lambda,
        stage1_k: fit.stage1.assignment.k,
        stage1_beta: fit.stage1.fit.beta.clone(),
        stage1_report: fit.stage1.report.clone(),
        alpha: fit.alpha,
    };
    let art = scc_artifact(cfg, data, pi, &fit.stage3, Some(extra), None);
    write_scc(&out, &inputs, &art, &fit.stage3)?;
    Ok(Status {
        converged: fit.stage1.report.converged && fit.stage3.report.converged,
    })
}

struct BiclustInputs {
    inputs: Inputs,
    row_graph: WeightGraph,
    col_graph: WeightGraph,
    pi: Pi,
    feature_pi: f64,
}

fn biclust_inputs(cfg: &RunConfig) -> CliResult<BiclustInputs> {
    let inputs = load_inputs(cfg)?;
    let data = &inputs.data;
    let row_graph = data.graph(&cfg.weights)?;
    let col_graph = column_weights(data.x.view(), &cfg.biclust.col_weights)?;
    let pi = pi_for(cfg, data)?;
    let feature_pi = match &inputs.feature {
        Some((y, _, Some(p))) => {
            let _ = y;
            *p
        }
        Some((y, _, None)) => default_pi(data.x.t(), y.family(), y)?.1,
        None => 0.0,
    };
    Ok(BiclustInputs {
        inputs,
        row_graph,
        col_graph,
        pi,
        feature_pi,
    })
}

impl BiclustInputs {
    fn problem(&self, doubly: bool) -> BiclustProblem<'_> {
        let data = &self.inputs.data;
        let mut p = BiclustProblem::new(data.x.view(), data.y.as_ref(), &self.row_graph, &self.col_graph, self.pi);
        p.z = data.z.as_ref().map(|z| z.view());
        p.col_ratio = 1.0;
        if doubly {
            p.feature = self.inputs.feature.as_ref().map(|(y, z, _)| FeatureSupervision {
                y,
                z: z.as_ref().map(|z| z.view()),
                pi: self.feature_pi,
            });
        }
        p
    }
}

fn fit_biclust(cfg: &RunConfig) -> CliResult<Status> {
    let bi = biclust_inputs(cfg)?;
    let out = cfg.output_dir()?;
    let mut problem = bi.problem(cfg.mode == Mode::Doubly);
    problem.col_ratio = cfg.biclust.col_ratio;
    let solver = BiclustPathSolver::new(problem, cfg.options())?;
    let point = match &cfg.lambda {
        LambdaSpec::Value(l) => solver.point(*l, None)?,
        LambdaSpec::Clusters(k) => solver.lambda_for_row_clusters(*k)?,
        _ => {
            return Err(CliError::config(
                "biclustering fits need lambda.value or lambda.clusters; use the path command for grids",
            ))
        }
    };
    write_graph(&out.join("weights.csv"), &bi.row_graph)?;
    write_graph(&out.join("col_weights.csv"), &bi.col_graph)?;
    let data = &bi.inputs.data;
    let art = biclust_artifact(cfg, data, bi.pi, &point);
    write_json(&out.join("fit.json"), &art)?;
    write_labels(&out.join("labels.csv"), &point.rows.labels)?;
    write_labels(&out.join("col_labels.csv"), &point.cols.labels)?;
    write_heatmap(
        &out.join("heatmap.csv"),
        point.state.u.view(),
        &point.rows.labels,
        &point.cols.labels,
        &bi.inputs.x_names,
    )?;
    Ok(Status {
        converged: point.report.converged,
    })
}

fn biclust_artifact(cfg: &RunConfig, data: &Dataset, pi: Pi, point: &BiclustPoint) -> FitArtifact {
    FitArtifact {
        mode: cfg.mode,
        family: family_name(data.y.as_ref()).map(String::from),
        lambda: point.lambda,
        objective: point.report.objective,
        pi,
        k: point.rows.k,
        labels: point.rows.labels.clone(),
        fusion_tol: point.rows.fusion_tol,
        report: point.report.clone(),
        fit: None,
        biclust: Some(BiclustArtifact {
            state: point.state.clone(),
            col_labels: point.cols.labels.clone(),
            col_k: point.cols.k,
            col_fusion_tol: point.cols.fusion_tol,
        }),
        adaptive: None,
        stability: None,
    }
}

/// Warm-started path over the configured grid, written to `path.csv`.
pub fn cmd_path(cfg: &RunConfig) -> CliResult<Status> {
    if matches!(cfg.lambda, LambdaSpec::Value(_) | LambdaSpec::Clusters(_)) {
        return Err(CliError::config("the path command needs lambda.grid or lambda.auto"));
    }
    match cfg.mode {
        Mode::Scc | Mode::Adaptive => {
            let inputs = load_inputs(cfg)?;
            let data = &inputs.data;
            let out = cfg.output_dir()?;
            let graph = data.graph(&cfg.weights)?;
            write_graph(&out.join("weights.csv"), &graph)?;
            let pi = pi_for(cfg, data)?;
            let solver = path_solver(cfg, data, &graph, pi)?;
            let grid = match &cfg.lambda {
                LambdaSpec::Grid(g) => LambdaGrid::Values(g.clone()),
                LambdaSpec::Auto(points) => LambdaGrid::Auto { points: *points },
                _ => unreachable!(),
            };
            let path = solver.path(&grid)?;
            let labels: Vec<&[usize]> = path.assignments.iter().map(|a| a.labels.as_slice()).collect();
            write_path_csv(&out.join("path.csv"), &path.lambdas, &path.k_path, &labels)?;
            Ok(Status {
                converged: path.all_converged(),
            })
        }
        Mode::Biclust | Mode::Doubly => {
            let bi = biclust_inputs(cfg)?;
            let out = cfg.output_dir()?;
            let mut problem = bi.problem(cfg.mode == Mode::Doubly);
            problem.col_ratio = cfg.biclust.col_ratio;
            let solver = BiclustPathSolver::new(problem, cfg.options())?;
            let grid = match &cfg.lambda {
                LambdaSpec::Grid(g) => g.clone(),
                LambdaSpec::Auto(points) => solver.auto_grid(*points)?,
                _ => unreachable!(),
            };
            let pts = solver.path(&grid)?;
            let ks: Vec<usize> = pts.iter().map(|p| p.rows.k).collect();
            let labels: Vec<&[usize]> = pts.iter().map(|p| p.rows.labels.as_slice()).collect();
            write_path_csv(&out.join("path.csv"), &grid, &ks, &labels)?;
            let cks: Vec<usize> = pts.iter().map(|p| p.cols.k).collect();
            let clabels: Vec<&[usize]> = pts.iter().map(|p| p.cols.labels.as_slice()).collect();
            write_path_csv(&out.join("col_path.csv"), &grid, &cks, &clabels)?;
            write_graph(&out.join("weights.csv"), &bi.row_graph)?;
            write_graph(&out.join("col_weights.csv"), &bi.col_graph)?;
            Ok(Status {
                converged: pts.iter().all(|p| p.report.converged),
            })
        }
    }
}

/// Stability selection over the configured grid (a cluster-count λ spec
/// becomes the target count on the default grid), then a fit at the
/// selected λ.
pub fn cmd_stability(cfg: &RunConfig) -> CliResult<Status> {
    if cfg.mode != Mode::Scc {
        return Err(CliError::config("stability selection is available in scc mode"));
    }
    fit_scc(cfg, true)
}

/// Biclustering fit; `scc` and `adaptive` modes are treated as `biclust`.
pub fn cmd_biclust(cfg: &RunConfig) -> CliResult<Status> {
    let mut cfg = cfg.clone();
    if cfg.mode != Mode::Doubly {
        cfg.mode = Mode::Biclust;
    }
    fit_biclust(&cfg)
}

fn fmt_row(v: impl IntoIterator<Item = f64>) -> Vec<String> {
    v.into_iter().map(|x| format!("{x:?}")).collect()
}

fn family_for(sim: SimFamily) -> FamilyName {
    match sim {
        SimFamily::Gaussian => FamilyName::Gaussian,
        SimFamily::Binary => FamilyName::Bernoulli,
        SimFamily::Categorical => FamilyName::Multinomial,
        SimFamily::Count => FamilyName::Poisson,
        SimFamily::Survival => FamilyName::Cox,
    }
}

/// Runs a simulation design and writes `X.csv`, `y.csv`, `Z.csv` (when the
/// design has covariates), `labels.csv`, a combined `data.csv` and a
/// `config.json` that fits it.
pub fn cmd_simulate(
    cfg: &RunConfig,
    scenario: &str,
    family: &str,
    n: Option<usize>,
    p: Option<usize>,
    noise: Option<f64>,
) -> CliResult<Status> {
    let id: ScenarioId = scenario.parse()?;
    let fam: SimFamily = family.parse()?;
    let mut sc = Scenario::new(id, fam, cfg.seed);
    if let Some(n) = n {
        sc.n = n;
    }
    if let Some(p) = p {
        sc.p = p;
    }
    sc.noise = noise;
    let sim = simulate(&sc)?;
    let out = cfg.output_dir()?;
    write_simulation(&out, &sim, fam, cfg.seed)?;
    Ok(Status { converged: true })
}

fn write_simulation(out: &Path, sim: &SimOutput, fam: SimFamily, seed: u64) -> CliResult<()> {
    let (n, p) = sim.x.dim();
    let x_names: Vec<String> = (1..=p).map(|j| format!("x{j}")).collect();
    save_matrix(&out.join("X.csv"), &x_names, sim.x.view()).map_err(|e| io_err(&out.join("X.csv"), e))?;

    let (y_names, y_cols): (Vec<String>, Vec<Vec<String>>) = match &sim.y {
        Response::Cox(s) => (
            vec!["time".into(), "event".into()],
            (0..n)
                .map(|i| vec![format!("{:?}", s.time()[i]), (s.event()[i] as u8).to_string()])
                .collect(),
        ),
        Response::Multinomial(_) => (
            vec!["y".into()],
            sim.y
                .class_labels()
                .unwrap_or_default()
                .into_iter()
                .map(|c| vec![c.to_string()])
                .collect(),
        ),
        other => (
            vec!["y".into()],
            other
                .scalar_values()
                .map(|v| v.iter().map(|x| vec![format!("{x:?}")]).collect())
                .unwrap_or_default(),
        ),
    };
    write_rows(&out.join("y.csv"), &y_names, y_cols.iter().cloned())?;

    let z_names: Vec<String> = sim
        .z
        .as_ref()
        .map_or(0, |z| z.ncols())
        .checked_sub(0)
        .map(|d| (1..=d).map(|j| format!("z{j}")).collect())
        .unwrap_or_default();
    if let Some(z) = &sim.z {
        save_matrix(&out.join("Z.csv"), &z_names, z.view()).map_err(|e| io_err(&out.join("Z.csv"), e))?;
    }
    write_labels(&out.join("labels.csv"), &sim.true_labels)?;

    let mut header = x_names.clone();
    header.extend(y_names.iter().cloned());
    header.extend(z_names.iter().cloned());
    write_rows(
        &out.join("data.csv"),
        &header,
        (0..n).map(|i| {
            let mut r = fmt_row(sim.x.row(i).iter().copied());
            r.extend(y_cols[i].iter().cloned());
            if let Some(z) = &sim.z {
                r.extend(fmt_row(z.row(i).iter().copied()));
            }
            r
        }),
    )?;

    let family = family_for(fam);
    let mut columns = Columns {
        x: Some(x_names),
        z: z_names,
        ..Default::default()
    };
    if family == FamilyName::Cox {
        columns.time = Some("time".into());
        columns.event = Some("event".into());
    } else {
        columns.y = Some("y".into());
    }
    let template = RunConfig {
        data: Some(PathBuf::from("data.csv")),
        family: Some(family),
        columns,
        seed,
        output: Some(PathBuf::from("fit")),
        ..Default::default()
    };
    write_json(&out.join("config.json"), &template)
}

/// Reads a label column: the one headed `label`, else the first.
pub fn read_labels(path: &Path) -> CliResult<Vec<usize>> {
    let t = read_data(path)?;
    let idx = t.headers.iter().position(|h| h == "label").unwrap_or(0);
    if t.headers.is_empty() {
        return Err(CliError::data(format!("{}: no columns", path.display())));
    }
    t.values
        .column(idx)
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(CliError::data(format!(
                    "{}: row {}, column {}: expected a non-negative integer label, got {v}",
                    path.display(),
                    i + 1,
                    t.headers[idx]
                )))
            }
        })
        .collect()
}

/// Adjusted Rand index between two label files.
pub fn cmd_ari(a: &Path, b: &Path) -> CliResult<f64> {
    let (la, lb) = (read_labels(a)?, read_labels(b)?);
    Ok(adjusted_rand_index(&la, &lb)?)
}

/// Recomputes a saved clustering fit's objective from the data and the
/// saved weight graph.
pub fn reload_objective(cfg: &RunConfig, fit_json: &Path, weights_csv: &Path) -> CliResult<f64> {
    let art = FitArtifact::load(fit_json)?;
    let inputs = load_inputs(cfg)?;
    let data = &inputs.data;
    let file = std::fs::File::open(weights_csv).map_err(|e| CliError::data(format!("{}: {e}", weights_csv.display())))?;
    let graph = WeightGraph::read_csv(file, data.n())?;
    let fit = art
        .fit
        .ok_or_else(|| CliError::config("fit.json holds no clustering fit"))?;
    Ok(fuseclust::admm::objective(data.problem(&graph, art.pi), &fit, art.lambda)?)
}
