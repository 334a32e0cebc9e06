//! Seedable generators for the benchmark simulation designs.
//!
//! Every design draws `X_i ~ N(μ_k, σ² I)` (or a noisy half-moon arc) for
//! `i ∈ G_k`, and the supervising variable from a family-specific
//! distribution with a group-level parameter. Labels are 1-based.

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::Response;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScenarioId {
    S1,
    S2,
    H1,
    H2,
    AS1,
    AS2,
    Covariate,
    VaryingP,
    UnequalGroups,
    Biclust,
}

impl std::str::FromStr for ScenarioId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "s1" => ScenarioId::S1,
            "s2" => ScenarioId::S2,
            "h1" => ScenarioId::H1,
            "h2" => ScenarioId::H2,
            "as1" => ScenarioId::AS1,
            "as2" => ScenarioId::AS2,
            "covariate" => ScenarioId::Covariate,
            "varying-p" | "varying_p" => ScenarioId::VaryingP,
            "unequal-groups" | "unequal_groups" => ScenarioId::UnequalGroups,
            "biclust" => ScenarioId::Biclust,
            other => return Err(Error::Unsupported(format!("unknown scenario {other}"))),
        })
    }
}

/// Type of the simulated supervising variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimFamily {
    Gaussian,
    Binary,
    Categorical,
    Count,
    Survival,
}

impl std::str::FromStr for SimFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "gaussian" => SimFamily::Gaussian,
            "binary" | "bernoulli" => SimFamily::Binary,
            "categorical" | "multinomial" => SimFamily::Categorical,
            "count" | "poisson" => SimFamily::Count,
            "survival" | "cox" => SimFamily::Survival,
            other => return Err(Error::Unsupported(format!("unknown family {other}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: ScenarioId,
    pub family: SimFamily,
    pub n: usize,
    pub p: usize,
    pub seed: u64,
    /// Overrides the design's within-cluster standard deviation of `X`
    /// (or the half-moon jitter).
    pub noise: Option<f64>,
    /// Overrides the 30% censoring rate of survival outcomes.
    pub censoring: Option<f64>,
    /// Overrides the standard deviation of the covariates `Z`, see
    /// [`covariate_sd`].
    pub covariate_sd: Option<f64>,
}

impl Scenario {
    /// Design defaults: `n = 120`, `p = 30` (2 for half moons; 50 for the
    /// varying-p design), three equal groups.
    pub fn new(id: ScenarioId, family: SimFamily, seed: u64) -> Self {
        let p = match id {
            ScenarioId::H1 | ScenarioId::H2 => 2,
            ScenarioId::VaryingP => 50,
            _ => 30,
        };
        Scenario {
            id,
            family,
            n: 120,
            p,
            seed,
            noise: None,
            censoring: None,
            covariate_sd: None,
        }
    }

    pub fn with_p(mut self, p: usize) -> Self {
        self.p = p;
        self
    }

    pub fn with_covariate_sd(mut self, sd: f64) -> Self {
        self.covariate_sd = Some(sd);
        self
    }

    pub fn with_noise(mut self, sd: f64) -> Self {
        self.noise = Some(sd);
        self
    }

    pub fn with_censoring(mut self, rate: f64) -> Self {
        self.censoring = Some(rate);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub x: Array2<f64>,
    pub y: Response,
    pub z: Option<Array2<f64>>,
    /// 1-based group labels.
    pub true_labels: Vec<usize>,
    /// Per-observation noiseless data centroids, `n × p`.
    pub true_centroids: Array2<f64>,
    /// Coefficients used for the covariate design.
    pub true_beta: Option<Array1<f64>>,
}

/// Default within-cluster standard deviation for the varying-p design:
/// `(p / 30)^¼`, so noise grows with dimension while staying 1 at `p = 30`.
pub fn varying_p_sd(p: usize) -> f64 {
    (p as f64 / 30.0).powf(0.25)
}

/// Noise of the gaussian supervising variable in S2/H2.
pub const S2_Y_SD: f64 = 1.0;

/// Hazard scale: exponential rates `exp(c k)` with `c = ln 3`, so group
/// medians differ threefold.
pub const SURVIVAL_RATE_STEP: f64 = 1.098_612_288_668_109_8;

pub const DEFAULT_CENSORING: f64 = 0.3;

/// Fraction of each group moved to the extra cluster in AS1.
pub const AS1_MOVED_FRACTION: f64 = 0.25;

/// Fraction of each group displaced towards another cluster in AS2.
pub const AS2_NOISY_FRACTION: f64 = 0.05;

/// Dispatches to the generator for the scenario's design.
pub fn simulate(sc: &Scenario) -> Result<SimOutput> {
    match sc.id {
        ScenarioId::S1 | ScenarioId::S2 => {
            if sc.family == SimFamily::Survival {
                gen_survival(sc)
            } else {
                gen_spherical(sc)
            }
        }
        ScenarioId::H1 | ScenarioId::H2 => {
            if sc.family == SimFamily::Survival {
                gen_survival(sc)
            } else {
                gen_halfmoons(sc)
            }
        }
        ScenarioId::Biclust => gen_spherical(&Scenario {
            id: ScenarioId::S1,
            ..sc.clone()
        }),
        _ => gen_additional(sc),
    }
}

fn rng_for(sc: &Scenario) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(sc.seed)
}

fn equal_groups(n: usize, k: usize) -> Vec<usize> {
    (0..n).map(|i| i * k / n).collect()
}

/// Two-block spherical means: the first `⌈p/2⌉` coordinates take `a`, the
/// rest take `b`.
fn block_mean(p: usize, a: f64, b: f64) -> Array1<f64> {
    let half = p.div_ceil(2);
    Array1::from_shape_fn(p, |l| if l < half { a } else { b })
}

fn s1_means(p: usize) -> Vec<Array1<f64>> {
    vec![block_mean(p, 1.6, 2.0), block_mean(p, 2.0, 0.0), block_mean(p, 2.4, 2.0)]
}

fn s2_means(p: usize) -> Vec<Array1<f64>> {
    vec![block_mean(p, -1.0, 0.0), block_mean(p, 0.0, 2.0), block_mean(p, 1.0, 0.0)]
}

/// Three-cluster means shared by AS1 and AS2.
fn as_means(p: usize) -> Vec<Array1<f64>> {
    vec![block_mean(p, -1.0, 0.0), block_mean(p, 0.0, -4.0), block_mean(p, 1.0, 0.0)]
}

/// Noise standard deviation for AS1 and AS2 (σ² = 2).
const AS_SD: f64 = std::f64::consts::SQRT_2;

fn draw_x(rng: &mut ChaCha8Rng, centroids: &Array2<f64>, sd: f64) -> Array2<f64> {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut x = centroids.clone();
    if sd > 0.0 {
        x.mapv_inplace(|m| m + sd * normal.sample(rng));
    }
    x
}

fn centroids_for(groups: &[usize], means: &[Array1<f64>]) -> Array2<f64> {
    let p = means[0].len();
    let mut c = Array2::zeros((groups.len(), p));
    for (i, &g) in groups.iter().enumerate() {
        c.row_mut(i).assign(&means[g]);
    }
    c
}

/// Spherical scenarios S1 and S2.
pub fn gen_spherical(sc: &Scenario) -> Result<SimOutput> {
    let (means, default_sd) = match sc.id {
        ScenarioId::S1 => (s1_means(sc.p), 1.0),
        ScenarioId::S2 => (s2_means(sc.p), 4.4f64.sqrt()),
        _ => return Err(Error::Unsupported(format!("{:?} is not a spherical scenario", sc.id))),
    };
    if sc.family == SimFamily::Survival {
        return gen_survival(sc);
    }
    let mut rng = rng_for(sc);
    let groups = equal_groups(sc.n, 3);
    let centroids = centroids_for(&groups, &means);
    let x = draw_x(&mut rng, &centroids, sc.noise.unwrap_or(default_sd));
    let y = draw_y(&mut rng, sc.id, sc.family, &groups)?;
    Ok(SimOutput {
        x,
        y,
        z: None,
        true_labels: groups.iter().map(|g| g + 1).collect(),
        true_centroids: centroids,
        true_beta: None,
    })
}

/// Supervising variable for the base designs: S1-like (`S1`, `H1`) or
/// S2-like (`S2`, `H2`) parameters per group.
fn draw_y(rng: &mut ChaCha8Rng, id: ScenarioId, family: SimFamily, groups: &[usize]) -> Result<Response> {
    let first = matches!(id, ScenarioId::S1 | ScenarioId::H1);
    match family {
        SimFamily::Gaussian => {
            let params: [(f64, f64); 3] = if first {
                [(2.25, 1.0), (4.0, 2.0), (5.75, 1.0)]
            } else {
                let sd = S2_Y_SD;
                [(1.0, sd), (4.5, sd), (8.0, sd)]
            };
            let y = groups
                .iter()
                .map(|&g| Normal::new(params[g].0, params[g].1).expect("valid normal").sample(rng))
                .collect();
            Response::gaussian(y)
        }
        SimFamily::Binary => {
            if !first {
                return Err(Error::Unsupported(
                    "binary supervision with three separated groups is not defined for S2/H2".into(),
                ));
            }
            let probs = [0.85, 0.5, 0.15];
            let y = groups
                .iter()
                .map(|&g| rng.gen_bool(probs[g]) as u8 as f64)
                .collect();
            Response::bernoulli(y)
        }
        SimFamily::Categorical => {
            let probs: [[f64; 3]; 3] = if first {
                [[0.75, 0.15, 0.1], [1.0 / 3.0; 3], [0.1, 0.15, 0.75]]
            } else {
                [[0.9, 0.05, 0.05], [0.05, 0.9, 0.05], [0.05, 0.05, 0.9]]
            };
            let labels: Vec<usize> = groups.iter().map(|&g| draw_category(rng, &probs[g])).collect();
            Response::multinomial_from_labels(&labels, 3)
        }
        SimFamily::Count => {
            let y = groups
                .iter()
                .map(|&g| {
                    let rate = if first {
                        match g {
                            0 => 1.0,
                            1 => *[1.0, 5.0, 9.0].choose(rng).expect("non-empty"),
                            _ => 9.0,
                        }
                    } else {
                        [1.0, 10.0, 23.0][g]
                    };
                    Poisson::new(rate).expect("positive rate").sample(rng)
                })
                .collect();
            Response::poisson(y)
        }
        SimFamily::Survival => Err(Error::Unsupported("use gen_survival".into())),
    }
}

fn draw_category(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (k, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    probs.len() - 1
}

/// Placement of the three half-moon arcs. Arc 1 opens downwards centred at
/// the origin, arc 3 likewise at `(offset, 0)`, and arc 2 opens upwards
/// centred at `(offset / 2, −drop)`. Lengths are in units of `radius`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoonLayout {
    pub radius: f64,
    pub offset: f64,
    pub drop: f64,
    /// Standard deviation of the isotropic jitter, in units of `radius`.
    pub jitter: f64,
}

/// H1: arcs 1 and 3 nearly touch, arc 2 interlocks below them.
pub const H1_LAYOUT: MoonLayout = MoonLayout {
    radius: 2.0,
    offset: 2.5,
    drop: 0.8,
    jitter: 0.2,
};

/// H2: all three arcs cross each other.
pub const H2_LAYOUT: MoonLayout = MoonLayout {
    radius: 2.0,
    offset: 1.0,
    drop: 0.0,
    jitter: 0.4,
};

impl MoonLayout {
    /// Noiseless point on arc `k` (0-based) at angle `omega ∈ [0, π]`.
    pub fn point(&self, k: usize, omega: f64) -> [f64; 2] {
        let (c, s) = (omega.cos(), omega.sin());
        let unit = match k {
            0 => [c, s],
            1 => [self.offset / 2.0 - c, -self.drop - s],
            _ => [self.offset + c, s],
        };
        [self.radius * unit[0], self.radius * unit[1]]
    }

    /// Centre of arc `k` and whether it opens downwards.
    pub fn center(&self, k: usize) -> ([f64; 2], bool) {
        match k {
            0 => ([0.0, 0.0], true),
            1 => ([self.radius * self.offset / 2.0, -self.radius * self.drop], false),
            _ => ([self.radius * self.offset, 0.0], true),
        }
    }
}

fn layout_for(id: ScenarioId) -> MoonLayout {
    if id == ScenarioId::H1 {
        H1_LAYOUT
    } else {
        H2_LAYOUT
    }
}

/// Half-moon scenarios H1 ([`H1_LAYOUT`]) and H2 ([`H2_LAYOUT`]);
/// supervising variables as in S1 and S2 respectively.
pub fn gen_halfmoons(sc: &Scenario) -> Result<SimOutput> {
    if !matches!(sc.id, ScenarioId::H1 | ScenarioId::H2) {
        return Err(Error::Unsupported(format!("{:?} is not a half-moon scenario", sc.id)));
    }
    let layout = layout_for(sc.id);
    let jitter = sc.noise.unwrap_or(layout.jitter * layout.radius);
    if sc.p != 2 {
        return Err(Error::Unsupported("half-moon data is two-dimensional".into()));
    }
    if sc.family == SimFamily::Survival {
        return gen_survival(sc);
    }
    let mut rng = rng_for(sc);
    let groups = equal_groups(sc.n, 3);
    let (x, centroids) = draw_moons(&mut rng, &groups, &layout, jitter);
    let y = draw_y(&mut rng, sc.id, sc.family, &groups)?;
    Ok(SimOutput {
        x,
        y,
        z: None,
        true_labels: groups.iter().map(|g| g + 1).collect(),
        true_centroids: centroids,
        true_beta: None,
    })
}

fn draw_moons(rng: &mut ChaCha8Rng, groups: &[usize], layout: &MoonLayout, jitter: f64) -> (Array2<f64>, Array2<f64>) {
    let angle = Uniform::new_inclusive(0.0, std::f64::consts::PI);
    let mut centroids = Array2::zeros((groups.len(), 2));
    for (i, &g) in groups.iter().enumerate() {
        let pt = layout.point(g, angle.sample(rng));
        centroids[[i, 0]] = pt[0];
        centroids[[i, 1]] = pt[1];
    }
    let x = draw_x(rng, &centroids, jitter);
    (x, centroids)
}

/// Survival supervision on any base design: exponential event times with
/// group rate `exp(c k)` and independent uniform censoring calibrated to the
/// target rate.
pub fn gen_survival(sc: &Scenario) -> Result<SimOutput> {
    let mut rng = rng_for(sc);
    let groups = equal_groups(sc.n, 3);
    let (x, centroids) = match sc.id {
        ScenarioId::S1 | ScenarioId::S2 => {
            let (means, sd) = if sc.id == ScenarioId::S1 {
                (s1_means(sc.p), 1.0)
            } else {
                (s2_means(sc.p), 4.4f64.sqrt())
            };
            let c = centroids_for(&groups, &means);
            (draw_x(&mut rng, &c, sc.noise.unwrap_or(sd)), c)
        }
        ScenarioId::H1 | ScenarioId::H2 => {
            let layout = layout_for(sc.id);
            draw_moons(&mut rng, &groups, &layout, sc.noise.unwrap_or(layout.jitter * layout.radius))
        }
        other => return Err(Error::Unsupported(format!("survival outcome for {other:?}"))),
    };
    let rates: Vec<f64> = groups
        .iter()
        .map(|&g| (SURVIVAL_RATE_STEP * (g + 1) as f64).exp())
        .collect();
    let (time, event) = draw_censored(&mut rng, &rates, sc.censoring.unwrap_or(DEFAULT_CENSORING));
    Ok(SimOutput {
        x,
        y: Response::cox(time, event)?,
        z: None,
        true_labels: groups.iter().map(|g| g + 1).collect(),
        true_centroids: centroids,
        true_beta: None,
    })
}

/// Expected censored fraction with `T ~ Exp(r)` and `C ~ U(0, a)`.
fn censored_fraction(rates: &[f64], a: f64) -> f64 {
    rates
        .iter()
        .map(|&r| {
            let ra = r * a;
            if ra < 1e-12 {
                1.0
            } else {
                -(-ra).exp_m1() / ra
            }
        })
        .sum::<f64>()
        / rates.len() as f64
}

/// Upper limit `a` of the uniform censoring window giving the target
/// expected censoring rate, by bisection.
pub fn censoring_window(rates: &[f64], rate: f64) -> f64 {
    let (mut lo, mut hi) = (1e-12, 1.0);
    while censored_fraction(rates, hi) > rate {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if censored_fraction(rates, mid) > rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn draw_censored(rng: &mut ChaCha8Rng, rates: &[f64], rate: f64) -> (Vec<f64>, Vec<bool>) {
    let times: Vec<f64> = rates
        .iter()
        .map(|&r| rand_distr::Exp::new(r).expect("positive rate").sample(rng))
        .collect();
    if rate <= 0.0 {
        return (times, vec![true; rates.len()]);
    }
    let window = censoring_window(rates, rate);
    let cens = Uniform::new(0.0, window);
    let mut time = Vec::with_capacity(rates.len());
    let mut event = Vec::with_capacity(rates.len());
    for t in times {
        // Keep times strictly positive.
        let c = cens.sample(rng).max(f64::MIN_POSITIVE);
        if t <= c {
            time.push(t.max(f64::MIN_POSITIVE));
            event.push(true);
        } else {
            time.push(c);
            event.push(false);
        }
    }
    (time, event)
}

/// The additional designs: AS1, AS2, covariate-affected supervision,
/// varying dimension and unequal group sizes.
pub fn gen_additional(sc: &Scenario) -> Result<SimOutput> {
    let mut rng = rng_for(sc);
    match sc.id {
        ScenarioId::AS1 => {
            let family = sc.family;
            if !matches!(family, SimFamily::Binary | SimFamily::Categorical) {
                return Err(Error::Unsupported("AS1 supports binary and categorical supervision".into()));
            }
            let groups = equal_groups(sc.n, 3);
            let mut means = as_means(sc.p);
            means.push(block_mean(sc.p, 0.0, 4.0));
            // Move a fixed fraction of every group to the shared fourth centroid.
            let mut cluster = groups.clone();
            for g in 0..3 {
                let mut members: Vec<usize> = (0..sc.n).filter(|&i| groups[i] == g).collect();
                members.shuffle(&mut rng);
                let moved = (AS1_MOVED_FRACTION * members.len() as f64).round() as usize;
                for &i in &members[..moved] {
                    cluster[i] = 3;
                }
            }
            let centroids = centroids_for(&cluster, &means);
            let x = draw_x(&mut rng, &centroids, sc.noise.unwrap_or(AS_SD));
            let y = match family {
                SimFamily::Binary => draw_y(&mut rng, ScenarioId::S1, family, &groups)?,
                _ => draw_y(&mut rng, ScenarioId::S2, family, &groups)?,
            };
            Ok(SimOutput {
                x,
                y,
                z: None,
                true_labels: cluster.iter().map(|g| g + 1).collect(),
                true_centroids: centroids,
                true_beta: None,
            })
        }
        ScenarioId::AS2 => {
            if sc.family != SimFamily::Categorical {
                return Err(Error::Unsupported("AS2 supports categorical supervision only".into()));
            }
            let groups = equal_groups(sc.n, 3);
            let means = as_means(sc.p);
            let mut centroids = centroids_for(&groups, &means);
            // Displace some points halfway towards another cluster.
            for g in 0..3 {
                let mut members: Vec<usize> = (0..sc.n).filter(|&i| groups[i] == g).collect();
                members.shuffle(&mut rng);
                let noisy = (AS2_NOISY_FRACTION * members.len() as f64).round() as usize;
                for &i in &members[..noisy] {
                    let other = (g + rng.gen_range(1..3)) % 3;
                    let mid = (&means[g] + &means[other]) * 0.5;
                    centroids.row_mut(i).assign(&mid);
                }
            }
            let x = draw_x(&mut rng, &centroids, sc.noise.unwrap_or(AS_SD));
            let probs = [
                [0.5, 0.0, 0.0, 0.0, 0.5],
                [0.0, 0.0, 1.0, 0.0, 0.0],
                [0.0, 0.5, 0.0, 0.5, 0.0],
            ];
            let labels: Vec<usize> = groups.iter().map(|&g| draw_category(&mut rng, &probs[g])).collect();
            Ok(SimOutput {
                x,
                y: Response::multinomial_from_labels(&labels, 5)?,
                z: None,
                true_labels: groups.iter().map(|g| g + 1).collect(),
                true_centroids: centroids,
                true_beta: None,
            })
        }
        ScenarioId::Covariate => gen_covariate(sc, &mut rng),
        ScenarioId::VaryingP => {
            if sc.family != SimFamily::Gaussian {
                return Err(Error::Unsupported("varying-p design uses gaussian supervision".into()));
            }
            let base = Scenario {
                id: ScenarioId::S1,
                noise: Some(sc.noise.unwrap_or_else(|| varying_p_sd(sc.p))),
                ..sc.clone()
            };
            gen_spherical(&base)
        }
        ScenarioId::UnequalGroups => {
            if sc.family != SimFamily::Gaussian {
                return Err(Error::Unsupported("unequal-groups design uses gaussian supervision".into()));
            }
            let sizes = unequal_sizes(sc.n);
            let groups: Vec<usize> = sizes
                .iter()
                .enumerate()
                .flat_map(|(g, &m)| std::iter::repeat_n(g, m))
                .collect();
            let centroids = centroids_for(&groups, &s1_means(sc.p));
            let x = draw_x(&mut rng, &centroids, sc.noise.unwrap_or(1.0));
            let y = draw_y(&mut rng, ScenarioId::S1, SimFamily::Gaussian, &groups)?;
            Ok(SimOutput {
                x,
                y,
                z: None,
                true_labels: groups.iter().map(|g| g + 1).collect(),
                true_centroids: centroids,
                true_beta: None,
            })
        }
        other => Err(Error::Unsupported(format!("{other:?} is not an additional design"))),
    }
}

/// Group sizes `(80, 10, 30)` scaled to `n`.
fn unequal_sizes(n: usize) -> [usize; 3] {
    let a = (n as f64 * 80.0 / 120.0).round() as usize;
    let b = (n as f64 * 10.0 / 120.0).round() as usize;
    [a, b, n - a - b]
}

/// Number of covariates in the covariate design.
pub const COVARIATES: usize = 10;

/// Default standard deviation of each covariate. With `β_j ≈ ±3` the shift
/// `Zβ` has standard deviation about `10·sd`; unit covariates suit the
/// identity link, while on log and logit scales they push rates to the
/// clip and outcomes to degenerate values, so those links get 0.1.
pub fn covariate_sd(family: SimFamily) -> f64 {
    match family {
        SimFamily::Gaussian => 1.0,
        _ => 0.1,
    }
}

/// Supervision shifted by covariates: the group parameter enters on the link
/// scale together with `Zβ`, with `Z ~ N(0, I₁₀)` and `β_j ~ N(±3, 1)`.
fn gen_covariate(sc: &Scenario, rng: &mut ChaCha8Rng) -> Result<SimOutput> {
    let groups = equal_groups(sc.n, 3);
    let centroids = centroids_for(&groups, &s1_means(sc.p));
    let x = draw_x(rng, &centroids, sc.noise.unwrap_or(1.0));
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let zsd = sc.covariate_sd.unwrap_or_else(|| covariate_sd(sc.family));
    let z = Array2::from_shape_fn((sc.n, COVARIATES), |_| zsd * unit.sample(rng));
    let beta: Array1<f64> = (0..COVARIATES)
        .map(|_| {
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            sign * 3.0 + unit.sample(rng)
        })
        .collect();
    let shift = z.dot(&beta);
    let y = match sc.family {
        SimFamily::Gaussian => {
            let params = [(2.25, 1.0), (4.0, 2.0), (5.75, 1.0)];
            let y = groups
                .iter()
                .zip(shift.iter())
                .map(|(&g, &s)| params[g].0 + s + params[g].1 * unit.sample(rng))
                .collect();
            Response::gaussian(y)?
        }
        SimFamily::Binary => {
            let logits = [0.85f64, 0.5, 0.15].map(|p| (p / (1.0 - p)).ln());
            let y = groups
                .iter()
                .zip(shift.iter())
                .map(|(&g, &s)| rng.gen_bool(crate::family::sigmoid(logits[g] + s)) as u8 as f64)
                .collect();
            Response::bernoulli(y)?
        }
        SimFamily::Count => {
            let logs = [1.0f64, 5.0, 9.0].map(f64::ln);
            let y = groups
                .iter()
                .zip(shift.iter())
                .map(|(&g, &s)| {
                    let rate = (logs[g] + s).min(crate::family::LINK_CLIP).exp();
                    Poisson::new(rate.max(1e-300)).expect("positive rate").sample(rng)
                })
                .collect();
            Response::poisson(y)?
        }
        SimFamily::Categorical => {
            let probs = [[0.75, 0.15, 0.1], [1.0 / 3.0; 3], [0.1, 0.15, 0.75]];
            let labels: Vec<usize> = groups
                .iter()
                .zip(shift.iter())
                .map(|(&g, &s)| {
                    // Covariates tilt the first class's logit.
                    let mut logit: Vec<f64> = probs[g].iter().map(|p: &f64| p.ln()).collect();
                    logit[0] += s;
                    let m = logit.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let w: Vec<f64> = logit.iter().map(|l| (l - m).exp()).collect();
                    let tot: f64 = w.iter().sum();
                    let pr: Vec<f64> = w.iter().map(|v| v / tot).collect();
                    draw_category(rng, &pr)
                })
                .collect();
            Response::multinomial_from_labels(&labels, 3)?
        }
        SimFamily::Survival => {
            let rates: Vec<f64> = groups
                .iter()
                .zip(shift.iter())
                .map(|(&g, &s)| (SURVIVAL_RATE_STEP * (g + 1) as f64 + s).min(crate::family::LINK_CLIP).exp())
                .collect();
            let (time, event) = draw_censored(rng, &rates, sc.censoring.unwrap_or(DEFAULT_CENSORING));
            Response::cox(time, event)?
        }
    };
    Ok(SimOutput {
        x,
        y,
        z: Some(z),
        true_labels: groups.iter().map(|g| g + 1).collect(),
        true_centroids: centroids,
        true_beta: Some(beta),
    })
}
