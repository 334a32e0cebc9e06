//! Cluster extraction, regularization paths, λ search, stability selection
//! and the adjusted Rand index.

use std::collections::{BTreeSet, HashMap};

use ndarray::ArrayView2;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::admm::{FitState, Pi, SccProblem, SccSolver, SolveReport, SolverOptions};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::weights::{median, UnionFind, WeightConfig, WeightGraph};

/// Cluster labels in `1..=k`, numbered by first appearance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub labels: Vec<usize>,
    pub k: usize,
    pub fusion_tol: f64,
}

/// Connected components of the graph restricted to edges whose splitting
/// row satisfies `‖V_l‖ ≤ tol`.
pub fn extract_clusters(fit: &FitState, graph: &WeightGraph, tol: f64) -> ClusterAssignment {
    split_components(fit.v.view(), graph, tol)
}

/// As [`extract_clusters`] for any splitting matrix whose rows follow the
/// graph's edge order.
pub fn split_components(v: ArrayView2<f64>, graph: &WeightGraph, tol: f64) -> ClusterAssignment {
    let mut uf = UnionFind::new(graph.n);
    for (edge, row) in graph.edges.iter().zip(v.rows()) {
        if row.dot(&row).sqrt() <= tol {
            uf.union(edge.i, edge.j);
        }
    }
    let (labels, k) = relabel((0..graph.n).map(|i| uf.find(i)));
    ClusterAssignment {
        labels,
        k,
        fusion_tol: tol,
    }
}

/// Maps arbitrary ids to `1..=k` in order of first appearance.
pub fn relabel<T: std::hash::Hash + Eq>(ids: impl IntoIterator<Item = T>) -> (Vec<usize>, usize) {
    let mut seen = HashMap::new();
    let labels = ids
        .into_iter()
        .map(|id| {
            let next = seen.len() + 1;
            *seen.entry(id).or_insert(next)
        })
        .collect();
    (labels, seen.len())
}

/// `1e-6` times the median nonzero edge difference of the data at
/// initialization (the constant initial `θ` contributes nothing).
pub fn default_fusion_tol(problem: &SccProblem<'_>) -> f64 {
    let mut norms: Vec<f64> = problem
        .graph
        .edges
        .iter()
        .map(|e| {
            let d = &problem.x.row(e.i) - &problem.x.row(e.j);
            d.dot(&d).sqrt()
        })
        .filter(|&v| v > 0.0)
        .collect();
    if norms.is_empty() {
        1e-12
    } else {
        1e-6 * median(&mut norms)
    }
}

/// Hubert–Arabie adjusted Rand index.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!("label vectors have lengths {} and {}", a.len(), b.len())));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::Dimension("adjusted Rand index needs at least two observations".into()));
    }
    let mut table: HashMap<(usize, usize), u64> = HashMap::new();
    let mut rows: HashMap<usize, u64> = HashMap::new();
    let mut cols: HashMap<usize, u64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    // Exact integer arithmetic with a single final division:
    // ARI = 2(I·N − A·B) / ((A + B)·N − 2A·B).
    let c2 = |m: u64| (m as i128) * (m as i128 - 1) / 2;
    let index: i128 = table.values().map(|&m| c2(m)).sum();
    let sa: i128 = rows.values().map(|&m| c2(m)).sum();
    let sb: i128 = cols.values().map(|&m| c2(m)).sum();
    let total = c2(n as u64);
    let num = 2 * (index * total - sa * sb);
    let den = (sa + sb) * total - 2 * sa * sb;
    if den == 0 {
        // Both partitions trivial in the same way (e.g. one cluster each).
        return Ok(if num == 0 && 2 * index == sa + sb { 1.0 } else { 0.0 });
    }
    Ok(num as f64 / den as f64)
}

/// λ values for a path: explicit or chosen automatically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LambdaGrid {
    Values(Vec<f64>),
    /// `0` followed by `points − 1` log-spaced values from the first λ with
    /// any fusion to the first λ with a single cluster.
    Auto { points: usize },
}

impl Default for LambdaGrid {
    fn default() -> Self {
        LambdaGrid::Auto { points: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolvePath {
    pub lambdas: Vec<f64>,
    pub fits: Vec<FitState>,
    pub reports: Vec<SolveReport>,
    pub assignments: Vec<ClusterAssignment>,
    pub k_path: Vec<usize>,
}

impl SolvePath {
    /// Index of the first grid point with exactly `k` clusters.
    pub fn first_with(&self, k: usize) -> Option<usize> {
        self.k_path.iter().position(|&kk| kk == k)
    }

    pub fn all_converged(&self) -> bool {
        self.reports.iter().all(|r| r.converged)
    }
}

/// One converged point of a λ search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub lambda: f64,
    pub fit: FitState,
    pub report: SolveReport,
    pub assignment: ClusterAssignment,
}

/// Wraps a solver with cluster extraction and warm-started λ searches.
pub struct PathSolver<'a> {
    solver: SccSolver<'a>,
    tol: f64,
}

impl<'a> PathSolver<'a> {
    pub fn new(problem: SccProblem<'a>, opts: SolverOptions) -> Result<Self> {
        let tol = default_fusion_tol(&problem);
        Ok(PathSolver {
            solver: SccSolver::new(problem, opts)?,
            tol,
        })
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn solver(&self) -> &SccSolver<'a> {
        &self.solver
    }

    pub fn fusion_tol(&self) -> f64 {
        self.tol
    }

    pub fn point(&self, lambda: f64, warm: Option<&FitState>) -> Result<PathPoint> {
        let (fit, report) = self.solver.solve(lambda, warm)?;
        let assignment = extract_clusters(&fit, self.solver.problem().graph, self.tol);
        Ok(PathPoint {
            lambda,
            fit,
            report,
            assignment,
        })
    }

    /// A λ at which fusion is on the verge of starting, from the data scale.
    pub fn lambda_scale(&self) -> f64 {
        let pb = self.solver.problem();
        let g = pb.graph;
        let mut norms: Vec<f64> = g
            .edges
            .iter()
            .map(|e| {
                let d = &pb.x.row(e.i) - &pb.x.row(e.j);
                d.dot(&d).sqrt()
            })
            .collect();
        let deg = g.degrees().iter().sum::<usize>() as f64 / g.n as f64;
        let wbar = g.weights().mean().unwrap_or(1.0);
        let s = pb.pi.x * median(&mut norms) / (deg * wbar).max(f64::MIN_POSITIVE);
        if s > 0.0 && s.is_finite() {
            s
        } else {
            1.0
        }
    }

    /// Smallest λ (to within a factor `1 + 1e-2`) at which some edge fuses.
    pub fn lambda_min(&self) -> Result<f64> {
        let n = self.solver.problem().graph.n;
        let mut hi = self.lambda_scale();
        let mut hi_pt = self.point(hi, None)?;
        while hi_pt.assignment.k == n {
            hi *= 2.0;
            hi_pt = self.point(hi, Some(&hi_pt.fit))?;
        }
        let mut lo = hi / 2.0;
        let mut lo_pt = self.point(lo, Some(&hi_pt.fit))?;
        while lo_pt.assignment.k < n {
            hi = lo;
            lo /= 2.0;
            lo_pt = self.point(lo, Some(&lo_pt.fit))?;
        }
        while hi / lo > 1.01 {
            let mid = (lo * hi).sqrt();
            let pt = self.point(mid, Some(&lo_pt.fit))?;
            if pt.assignment.k < n {
                hi = mid;
            } else {
                lo = mid;
                lo_pt = pt;
            }
        }
        Ok(hi)
    }

    /// First doubling of `start` giving a single cluster.
    pub fn lambda_max(&self, start: f64) -> Result<f64> {
        let mut lam = start;
        let mut pt = self.point(lam, None)?;
        for _ in 0..200 {
            if pt.assignment.k == 1 {
                return Ok(lam);
            }
            lam *= 2.0;
            pt = self.point(lam, Some(&pt.fit))?;
        }
        Err(Error::Degenerate("no λ up to 2^200 × the start fused all observations".into()))
    }

    pub fn auto_grid(&self, points: usize) -> Result<Vec<f64>> {
        if points < 3 {
            return Err(Error::Config("an automatic λ grid needs at least 3 points".into()));
        }
        let lo = self.lambda_min()?;
        let hi = self.lambda_max(lo)?.max(lo * 1.01);
        let m = points - 1;
        let mut grid = vec![0.0];
        grid.extend((0..m).map(|i| lo * (hi / lo).powf(i as f64 / (m - 1) as f64)));
        Ok(grid)
    }

    pub fn path(&self, grid: &LambdaGrid) -> Result<SolvePath> {
        let lambdas = match grid {
            LambdaGrid::Values(v) => {
                if v.is_empty() || v.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
                    return Err(Error::Config("λ grid values must be finite and non-negative".into()));
                }
                if v.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::Config("λ grid must be strictly increasing".into()));
                }
                v.clone()
            }
            LambdaGrid::Auto { points } => self.auto_grid(*points)?,
        };
        let mut out = SolvePath {
            lambdas: Vec::with_capacity(lambdas.len()),
            fits: Vec::new(),
            reports: Vec::new(),
            assignments: Vec::new(),
            k_path: Vec::new(),
        };
        for &lam in &lambdas {
            let pt = self.point(lam, out.fits.last())?;
            if !pt.report.converged {
                log::warn!("path point λ = {lam:.4e} did not converge");
            }
            out.lambdas.push(lam);
            out.k_path.push(pt.assignment.k);
            out.assignments.push(pt.assignment);
            out.reports.push(pt.report);
            out.fits.push(pt.fit);
        }
        Ok(out)
    }

    /// Searches for a λ giving exactly `target` clusters; see
    /// [`search_cluster_count`].
    pub fn lambda_for_clusters(&self, target: usize) -> Result<PathPoint> {
        let n = self.solver.problem().graph.n;
        search_cluster_count(
            target,
            n,
            self.lambda_scale(),
            |lam, warm: Option<&PathPoint>| self.point(lam, warm.map(|w| &w.fit)),
            |pt| (pt.lambda, pt.assignment.k),
        )
    }

    /// [`Self::lambda_for_clusters`] with the [`nearest_cluster_count`]
    /// fallback.
    pub fn lambda_for_nearest_clusters(&self, target: usize) -> Result<PathPoint> {
        nearest_cluster_count(target, |k| self.lambda_for_clusters(k))
    }
}

/// Like [`PathSolver::lambda_for_clusters`], but when `target` is skipped
/// falls back to the closest cluster count the search did see (ties go to
/// the larger count).
pub fn nearest_cluster_count<P>(target: usize, search: impl Fn(usize) -> Result<P>) -> Result<P> {
    match search(target) {
        Err(Error::TargetUnreachable { achievable, .. }) => {
            let mut cands = achievable;
            cands.sort_by_key(|&k| (k.abs_diff(target), std::cmp::Reverse(k)));
            for k in cands {
                match search(k) {
                    Ok(p) => {
                        log::warn!("{target} clusters unreachable; using {k}");
                        return Ok(p);
                    }
                    Err(Error::TargetUnreachable { .. }) => continue,
                    Err(e) => return Err(e),
                }
            }
            Err(Error::TargetUnreachable {
                target,
                achievable: Vec::new(),
            })
        }
        other => other,
    }
}

/// Finds a λ whose fit has exactly `target` clusters: doubling or halving
/// from `start` to bracket the target, then log-scale bisection, warm
/// starting each solve from the neighbouring point. `describe` returns a
/// point's `(λ, K)`. Fails with the cluster counts seen when no λ hits the
/// target (K(λ) need not be monotone, and some counts are skipped).
pub fn search_cluster_count<P>(
    target: usize,
    n: usize,
    start: f64,
    solve: impl Fn(f64, Option<&P>) -> Result<P>,
    describe: impl Fn(&P) -> (f64, usize),
) -> Result<P> {
    if target == 0 || target > n {
        return Err(Error::Config(format!("target cluster count {target} outside 1..={n}")));
    }
    let mut seen = BTreeSet::new();
    let mut lam = start;
    let pt = solve(lam, None)?;
    let k = describe(&pt).1;
    seen.insert(k);
    if k == target {
        return Ok(pt);
    }
    // Bracket: lo has more clusters than target, hi fewer.
    let (mut lo, mut hi);
    if k > target {
        lo = pt;
        loop {
            lam *= 2.0;
            let next = solve(lam, Some(&lo))?;
            let k = describe(&next).1;
            seen.insert(k);
            if k == target {
                return Ok(next);
            }
            if k < target {
                hi = next;
                break;
            }
            lo = next;
            if lam > 1e300 {
                return Err(unreachable_target(target, seen));
            }
        }
    } else {
        hi = pt;
        loop {
            lam /= 2.0;
            let next = solve(lam, Some(&hi))?;
            let k = describe(&next).1;
            seen.insert(k);
            if k == target {
                return Ok(next);
            }
            if k > target {
                lo = next;
                break;
            }
            hi = next;
            if lam < 1e-300 {
                return Err(unreachable_target(target, seen));
            }
        }
    }
    for _ in 0..40 {
        let (l_lo, l_hi) = (describe(&lo).0, describe(&hi).0);
        if l_hi / l_lo < 1.0 + 1e-6 {
            break;
        }
        let mid = (l_lo * l_hi).sqrt();
        let pt = solve(mid, Some(&lo))?;
        let k = describe(&pt).1;
        seen.insert(k);
        if k == target {
            return Ok(pt);
        }
        if k > target {
            lo = pt;
        } else {
            hi = pt;
        }
    }
    Err(unreachable_target(target, seen))
}

fn unreachable_target(target: usize, seen: BTreeSet<usize>) -> Error {
    Error::TargetUnreachable {
        target,
        achievable: seen.into_iter().collect(),
    }
}

/// Warm-started path over a grid, or an automatic grid.
pub fn solve_path(problem: SccProblem<'_>, grid: &LambdaGrid, opts: &SolverOptions) -> Result<SolvePath> {
    PathSolver::new(problem, opts.clone())?.path(grid)
}

/// Stability score of one grid value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityScore {
    pub lambda: f64,
    /// Mean pairwise ARI between subsample assignments on shared observations.
    pub agreement: f64,
    /// Cluster count on the full data.
    pub k_full: usize,
    pub eligible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilitySelection {
    pub lambda: f64,
    pub index: usize,
    pub scores: Vec<StabilityScore>,
    pub full_path: SolvePath,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StabilityConfig {
    pub subsamples: usize,
    pub fraction: f64,
    pub target_k: Option<usize>,
    pub seed: u64,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        StabilityConfig {
            subsamples: 10,
            fraction: 0.8,
            target_k: None,
            seed: 0,
        }
    }
}

/// Mean pairwise ARI of labelings defined on index subsets, each compared
/// on the observations both contain.
pub fn co_clustering_agreement(samples: &[(Vec<usize>, Vec<usize>)]) -> f64 {
    let mut total = 0.0;
    let mut pairs = 0usize;
    for a in 0..samples.len() {
        let pos: HashMap<usize, usize> = samples[a].0.iter().enumerate().map(|(k, &i)| (i, k)).collect();
        for b in a + 1..samples.len() {
            let (mut la, mut lb) = (Vec::new(), Vec::new());
            for (k, i) in samples[b].0.iter().enumerate() {
                if let Some(&ka) = pos.get(i) {
                    la.push(samples[a].1[ka]);
                    lb.push(samples[b].1[k]);
                }
            }
            if let Ok(v) = adjusted_rand_index(&la, &lb) {
                total += v;
                pairs += 1;
            }
        }
    }
    if pairs == 0 {
        0.0
    } else {
        total / pairs as f64
    }
}

/// Selects λ on a grid by subsample co-clustering agreement. Subsamples
/// rebuild their weight graphs and keep the full-data `π`.
pub fn stability_select(
    data: &Dataset,
    weights: &WeightConfig,
    pi: Pi,
    grid: &[f64],
    cfg: &StabilityConfig,
    opts: &SolverOptions,
) -> Result<StabilitySelection> {
    if cfg.subsamples < 2 {
        return Err(Error::Config("stability selection needs at least 2 subsamples".into()));
    }
    if !(cfg.fraction > 0.5 && cfg.fraction < 1.0) {
        return Err(Error::Config(format!("subsample fraction must lie in (0.5, 1), got {}", cfg.fraction)));
    }
    let n = data.n();
    let m = (cfg.fraction * n as f64).ceil() as usize;
    let grid_spec = LambdaGrid::Values(grid.to_vec());

    let graph = data.graph(weights)?;
    let full = solve_path(data.problem(&graph, pi), &grid_spec, opts)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let subsets: Vec<Vec<usize>> = (0..cfg.subsamples)
        .map(|_| {
            let mut idx = sample(&mut rng, n, m).into_vec();
            idx.sort_unstable();
            idx
        })
        .collect();
    let sub_paths: Vec<(Vec<usize>, SolvePath)> = subsets
        .into_par_iter()
        .map(|idx| {
            let sub = data.subset(&idx);
            let g = sub.graph(weights)?;
            let path = solve_path(sub.problem(&g, pi), &grid_spec, opts)?;
            Ok((idx, path))
        })
        .collect::<Result<_>>()?;

    let scores: Vec<StabilityScore> = grid
        .iter()
        .enumerate()
        .map(|(gi, &lambda)| {
            let samples: Vec<(Vec<usize>, Vec<usize>)> = sub_paths
                .iter()
                .map(|(idx, p)| (idx.clone(), p.assignments[gi].labels.clone()))
                .collect();
            let k_full = full.k_path[gi];
            let eligible = k_full != 1 && k_full != n && cfg.target_k.is_none_or(|t| t == k_full);
            StabilityScore {
                lambda,
                agreement: co_clustering_agreement(&samples),
                k_full,
                eligible,
            }
        })
        .collect();
    let best = scores
        .iter()
        .enumerate()
        .filter(|(_, s)| s.eligible)
        .max_by(|a, b| a.1.agreement.total_cmp(&b.1.agreement).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .ok_or(Error::NoSelection)?;
    Ok(StabilitySelection {
        lambda: grid[best],
        index: best,
        scores,
        full_path: full,
    })
}
