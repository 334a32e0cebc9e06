//! Sparse fusion weights from Gower distances.
//!
//! Observations `i, j` are joined when one is among the other's `k` nearest
//! neighbours under the blended distance
//! `d_ij = (1 - α)·g(X_i, X_j) + α·g(y_i, y_j)`, and the edge carries the
//! Gaussian-kernel weight `exp(-φ d_ij)`.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{centered_sum_squares, null_excess, Response};

/// How a column of the data matrix is compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    #[default]
    Continuous,
    /// Values are category codes; distance is 0/1 mismatch.
    Categorical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

/// Undirected fusion graph with `i < j` on every edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightGraph {
    pub n: usize,
    pub edges: Vec<Edge>,
    /// Set when the k-NN graph was disconnected and spanning edges were added.
    #[serde(default)]
    pub warning: Option<String>,
}

impl WeightGraph {
    /// Validates and normalizes an edge list: orients each edge with
    /// `i < j`, drops zero weights and rejects duplicates.
    pub fn new(n: usize, edges: Vec<Edge>) -> Result<Self> {
        let mut out = Vec::with_capacity(edges.len());
        let mut seen = std::collections::HashSet::new();
        for e in edges {
            if e.i == e.j || e.i >= n || e.j >= n {
                return Err(Error::Config(format!(
                    "invalid edge ({}, {}) for {n} nodes",
                    e.i, e.j
                )));
            }
            if !(e.w.is_finite() && e.w >= 0.0) {
                return Err(Error::Config(format!(
                    "edge ({}, {}) has invalid weight {}",
                    e.i, e.j, e.w
                )));
            }
            let (i, j) = if e.i < e.j { (e.i, e.j) } else { (e.j, e.i) };
            if !seen.insert((i, j)) {
                return Err(Error::Config(format!("duplicate edge ({i}, {j})")));
            }
            if e.w > 0.0 {
                out.push(Edge { i, j, w: e.w });
            }
        }
        Ok(WeightGraph {
            n,
            edges: out,
            warning: None,
        })
    }

    /// Every pair joined with unit weight.
    pub fn complete(n: usize) -> Self {
        let mut edges = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                edges.push(Edge { i, j, w: 1.0 });
            }
        }
        WeightGraph {
            n,
            edges,
            warning: None,
        }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn weights(&self) -> Array1<f64> {
        self.edges.iter().map(|e| e.w).collect()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for e in &self.edges {
            deg[e.i] += 1;
            deg[e.j] += 1;
        }
        deg
    }

    pub fn component_count(&self) -> usize {
        let mut uf = UnionFind::new(self.n);
        for e in &self.edges {
            uf.union(e.i, e.j);
        }
        uf.count()
    }

    pub fn is_connected(&self) -> bool {
        self.n <= 1 || self.component_count() == 1
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["i", "j", "w"])?;
        for e in &self.edges {
            wtr.write_record([e.i.to_string(), e.j.to_string(), format!("{:?}", e.w)])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    /// Reads an `i,j,w` edge list. `n` is the node count, which the file
    /// alone cannot determine when trailing nodes are isolated.
    pub fn read_csv<R: Read>(reader: R, n: usize) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut edges = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let field = |k: usize, name: &str| -> Result<&str> {
                rec.get(k).ok_or_else(|| Error::Parse {
                    row: row + 1,
                    column: name.into(),
                    message: "missing field".into(),
                })
            };
            let parse_idx = |s: &str, name: &str| {
                s.trim().parse::<usize>().map_err(|e| Error::Parse {
                    row: row + 1,
                    column: name.into(),
                    message: e.to_string(),
                })
            };
            let i = parse_idx(field(0, "i")?, "i")?;
            let j = parse_idx(field(1, "j")?, "j")?;
            let w = field(2, "w")?.trim().parse::<f64>().map_err(|e| Error::Parse {
                row: row + 1,
                column: "w".into(),
                message: e.to_string(),
            })?;
            edges.push(Edge { i, j, w });
        }
        WeightGraph::new(n, edges)
    }
}

/// Supervision level α in the blended distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Alpha {
    /// Ratio of null deviances, see [`default_alpha`].
    #[default]
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WeightConfig {
    /// Neighbour count.
    pub k: usize,
    /// Kernel scale; `None` picks `ln 2 / median(d)` over retained edges.
    pub phi: Option<f64>,
    pub alpha: Alpha,
    /// Per-column kinds of the data matrix; empty means all continuous.
    pub feature_kinds: Vec<FeatureKind>,
}

impl Default for WeightConfig {
    fn default() -> Self {
        WeightConfig {
            k: 5,
            phi: None,
            alpha: Alpha::Auto,
            feature_kinds: Vec::new(),
        }
    }
}

/// Per-feature ranges `R_l = max_{i,j} |X_il − X_jl|`.
pub fn feature_ranges(x: ArrayView2<f64>) -> Array1<f64> {
    x.axis_iter(Axis(1))
        .map(|c| {
            let (lo, hi) = c
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                    (lo.min(v), hi.max(v))
                });
            if lo.is_finite() {
                hi - lo
            } else {
                0.0
            }
        })
        .collect()
}

/// Gower distance between two rows with continuous features.
pub fn gower_distance(a: ArrayView1<f64>, b: ArrayView1<f64>, ranges: ArrayView1<f64>) -> Result<f64> {
    gower_distance_mixed(a, b, ranges, &[])
}

/// Gower distance with per-feature kinds (empty `kinds` = all continuous).
pub fn gower_distance_mixed(
    a: ArrayView1<f64>,
    b: ArrayView1<f64>,
    ranges: ArrayView1<f64>,
    kinds: &[FeatureKind],
) -> Result<f64> {
    if a.len() != b.len() || a.len() != ranges.len() || (!kinds.is_empty() && kinds.len() != a.len()) {
        return Err(Error::Dimension(format!(
            "gower distance over rows of length {} and {} with {} ranges",
            a.len(),
            b.len(),
            ranges.len()
        )));
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    Ok(gower_unchecked(a, b, ranges, kinds))
}

fn gower_unchecked(a: ArrayView1<f64>, b: ArrayView1<f64>, ranges: ArrayView1<f64>, kinds: &[FeatureKind]) -> f64 {
    let mut total = 0.0;
    for l in 0..a.len() {
        let kind = kinds.get(l).copied().unwrap_or_default();
        total += match kind {
            FeatureKind::Categorical => (a[l] != b[l]) as u8 as f64,
            FeatureKind::Continuous => {
                if ranges[l] > 0.0 {
                    ((a[l] - b[l]).abs() / ranges[l]).min(1.0)
                } else {
                    0.0
                }
            }
        };
    }
    total / a.len() as f64
}

/// Precomputed per-family context for Gower distances on the supervising
/// variable.
pub struct ResponseDistance<'a> {
    y: &'a Response,
    range: f64,
}

impl<'a> ResponseDistance<'a> {
    pub fn new(y: &'a Response) -> Self {
        let range = match y {
            Response::Gaussian(v) | Response::Poisson(v) => span(v.iter().copied()),
            Response::Cox(s) => span(s.time().iter().copied()),
            _ => 0.0,
        };
        ResponseDistance { y, range }
    }

    /// Distance between observations `i` and `j`, in `[0, 1]`.
    pub fn between(&self, i: usize, j: usize) -> f64 {
        let scaled = |a: f64, b: f64| {
            if self.range > 0.0 {
                ((a - b).abs() / self.range).min(1.0)
            } else {
                0.0
            }
        };
        match self.y {
            Response::Gaussian(v) | Response::Poisson(v) => scaled(v[i], v[j]),
            Response::Bernoulli(v) => (v[i] != v[j]) as u8 as f64,
            Response::Multinomial(m) => (m.row(i) != m.row(j)) as u8 as f64,
            Response::Cox(s) => {
                let (ei, ej) = (s.event()[i], s.event()[j]);
                if ei != ej {
                    0.5
                } else {
                    scaled(s.time()[i], s.time()[j])
                }
            }
        }
    }
}

fn span(it: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if lo.is_finite() {
        hi - lo
    } else {
        0.0
    }
}

/// Gower distance between two observations of the supervising variable.
pub fn gower_y(y: &Response, i: usize, j: usize) -> Result<f64> {
    if i >= y.len() || j >= y.len() {
        return Err(Error::Dimension(format!(
            "observation index out of range for {} records",
            y.len()
        )));
    }
    Ok(ResponseDistance::new(y).between(i, j))
}

/// `α = D_y / (D_y + ‖X − X̄‖_F²)` with `D_y = 2 (ℓ(y, ỹ) − ℓ_saturated)` the
/// GLM null deviance of `y`. For gaussian `y` this is `Σ(y − ȳ)²`, on the same
/// unhalved scale as the data term.
pub fn default_alpha(x: ArrayView2<f64>, y: &Response) -> Result<f64> {
    let dy = 2.0 * null_excess(y.family(), y)?;
    let dx = centered_sum_squares(x);
    if dx + dy <= 0.0 {
        return Err(Error::Degenerate(
            "both the data matrix and the supervising variable are constant".into(),
        ));
    }
    Ok(dy / (dy + dx))
}

/// Resolves the configured α for the given data.
pub fn resolve_alpha(x: ArrayView2<f64>, y: Option<&Response>, alpha: Alpha) -> Result<f64> {
    match (alpha, y) {
        (_, None) => Ok(0.0),
        (Alpha::Fixed(a), Some(_)) => {
            if (0.0..=1.0).contains(&a) {
                Ok(a)
            } else {
                Err(Error::Config(format!("alpha must lie in [0, 1], got {a}")))
            }
        }
        (Alpha::Auto, Some(y)) => default_alpha(x, y),
    }
}

/// Row fusion weights from the data matrix blended with the supervising
/// variable. With `y = None` the graph is the unsupervised Gower k-NN graph.
pub fn build_weights(x: ArrayView2<f64>, y: Option<&Response>, cfg: &WeightConfig) -> Result<WeightGraph> {
    let n = x.nrows();
    if let Some(y) = y {
        if y.len() != n {
            return Err(Error::Dimension(format!(
                "data has {n} rows but supervising variable has {} records",
                y.len()
            )));
        }
    }
    let alpha = resolve_alpha(x, y, cfg.alpha)?;
    match y.map(ResponseDistance::new) {
        Some(d) => blended_weights(x, alpha, |i, j| d.between(i, j), cfg),
        None => blended_weights(x, alpha, |_, _| 0.0, cfg),
    }
}

/// k-NN kernel graph on `(1 − α)·g(X_i, X_j) + α·gy(i, j)` for an arbitrary
/// supervising distance `gy` with values in `[0, 1]`.
pub fn blended_weights(
    x: ArrayView2<f64>,
    alpha: f64,
    gy: impl Fn(usize, usize) -> f64,
    cfg: &WeightConfig,
) -> Result<WeightGraph> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Config(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    if !cfg.feature_kinds.is_empty() && cfg.feature_kinds.len() != x.ncols() {
        return Err(Error::Dimension(format!(
            "{} feature kinds for {} columns",
            cfg.feature_kinds.len(),
            x.ncols()
        )));
    }
    let ranges = feature_ranges(x);
    let dist = |i: usize, j: usize| {
        let gx = gower_unchecked(x.row(i), x.row(j), ranges.view(), &cfg.feature_kinds);
        (1.0 - alpha) * gx + alpha * gy(i, j)
    };
    knn_kernel_graph(x.nrows(), cfg.k, cfg.phi, dist)
}

/// Column fusion weights: the same recipe on the columns of `x`, without
/// supervision.
pub fn column_weights(x: ArrayView2<f64>, cfg: &WeightConfig) -> Result<WeightGraph> {
    let xt = x.t();
    let col_cfg = WeightConfig {
        alpha: Alpha::Fixed(0.0),
        feature_kinds: Vec::new(),
        ..cfg.clone()
    };
    build_weights(xt, None, &col_cfg)
}

/// k-NN union graph with Gaussian-kernel weights, repaired to be connected.
pub fn knn_kernel_graph(
    n: usize,
    k: usize,
    phi: Option<f64>,
    dist: impl Fn(usize, usize) -> f64,
) -> Result<WeightGraph> {
    if n < 2 {
        return Err(Error::Config(format!("need at least 2 nodes, got {n}")));
    }
    if k == 0 || k >= n {
        return Err(Error::Config(format!(
            "neighbour count k must satisfy 0 < k < n = {n}, got {k}"
        )));
    }
    if let Some(phi) = phi {
        if !(phi.is_finite() && phi >= 0.0) {
            return Err(Error::Config(format!("kernel scale must be >= 0, got {phi}")));
        }
    }
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let v = dist(i, j);
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    let mut keep = std::collections::BTreeSet::new();
    let mut nbrs: Vec<usize> = Vec::with_capacity(n - 1);
    for i in 0..n {
        nbrs.clear();
        nbrs.extend((0..n).filter(|&j| j != i));
        nbrs.sort_by(|&a, &b| d[i * n + a].total_cmp(&d[i * n + b]).then(a.cmp(&b)));
        for &j in &nbrs[..k] {
            keep.insert((i.min(j), i.max(j)));
        }
    }
    let mut pairs: Vec<(usize, usize)> = keep.into_iter().collect();

    let mut warning = None;
    let mut uf = UnionFind::new(n);
    for &(i, j) in &pairs {
        uf.union(i, j);
    }
    if uf.count() > 1 {
        let components = uf.count();
        // Kruskal over all pairs, adding only edges that join components.
        let mut all: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        all.sort_by(|a, b| d[a.0 * n + a.1].total_cmp(&d[b.0 * n + b.1]).then(a.cmp(b)));
        let mut added = 0;
        for (i, j) in all {
            if uf.union(i, j) {
                pairs.push((i, j));
                added += 1;
                if uf.count() == 1 {
                    break;
                }
            }
        }
        pairs.sort_unstable();
        let msg = format!(
            "k-NN graph had {components} components; added {added} spanning edges"
        );
        log::warn!("{msg}");
        warning = Some(msg);
    }

    let phi = match phi {
        Some(p) => p,
        None => {
            let mut ds: Vec<f64> = pairs.iter().map(|&(i, j)| d[i * n + j]).collect();
            let med = median(&mut ds);
            if med > 0.0 {
                std::f64::consts::LN_2 / med
            } else {
                0.0
            }
        }
    };
    let edges = pairs
        .into_iter()
        .map(|(i, j)| Edge {
            i,
            j,
            w: (-phi * d[i * n + j]).exp(),
        })
        .filter(|e| e.w > 0.0)
        .collect();
    Ok(WeightGraph { n, edges, warning })
}

pub(crate) fn median(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Disjoint-set forest with path halving.
#[derive(Debug, Clone)]
pub(crate) struct UnionFind {
    parent: Vec<usize>,
    sets: usize,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            sets: n,
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns true when the two sets were distinct.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        self.sets -= 1;
        true
    }

    pub(crate) fn count(&self) -> usize {
        self.sets
    }
}
