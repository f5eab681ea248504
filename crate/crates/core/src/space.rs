//! Space processes: `M` lattice random walks (Model A) and `M` Wiener processes
//! observed through a partition (Model B).

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::par::Exec;
use crate::prob::{FiniteDistribution, RngSeed, TransitionKernel};
use crate::quadrature::{integrate, normal_cdf};

/// Default bound on the number of enumerated states.
pub const DEFAULT_CAP: usize = 1_000_000;
/// Source bins lighter than this have no defined transition row.
pub const EMPTY_BIN_MASS: f64 = 1e-14;
/// Quadrature tolerance for bin integrals, relative to the source-bin mass.
pub const BIN_TOL: f64 = 1e-9;

/// Positions of all walkers at one time. Overlapping positions are allowed.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SpaceConfiguration {
    pub positions: Vec<i64>,
    pub time: u64,
}

impl SpaceConfiguration {
    pub fn new(positions: Vec<i64>, time: u64) -> Self {
        Self { positions, time }
    }

    pub fn walkers(&self) -> usize {
        self.positions.len()
    }
}

/// Model A parameters. `p_right[i]` is the probability of a `+spacing` step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWalkParams")]
pub struct RandomWalkParams {
    p_right: Vec<f64>,
    spacing: i64,
    initial: Vec<FiniteDistribution>,
}

#[derive(Deserialize)]
struct RawWalkParams {
    p_right: Vec<f64>,
    spacing: i64,
    initial: Vec<FiniteDistribution>,
}

impl TryFrom<RawWalkParams> for RandomWalkParams {
    type Error = Error;
    fn try_from(raw: RawWalkParams) -> Result<Self> {
        RandomWalkParams::new(raw.p_right, raw.spacing, raw.initial)
    }
}

impl RandomWalkParams {
    pub fn new(p_right: Vec<f64>, spacing: i64, initial: Vec<FiniteDistribution>) -> Result<Self> {
        if p_right.is_empty() {
            return Err(invalid("p", "at least one walker is required"));
        }
        for (i, &p) in p_right.iter().enumerate() {
            if !(p > 0.0 && p < 1.0) {
                return Err(invalid(format!("p[{i}]"), format!("step probability {p} must lie in (0, 1)")));
            }
        }
        if spacing <= 0 {
            return Err(invalid("spacing", "lattice spacing must be positive"));
        }
        if initial.len() != p_right.len() {
            return Err(invalid("initial", "one initial law per walker"));
        }
        Ok(Self { p_right, spacing, initial })
    }

    /// Walkers that all start at 0 with the same right-step probability.
    pub fn iid(m: usize, p_right: f64) -> Result<Self> {
        Self::new(vec![p_right; m], 1, vec![FiniteDistribution::point_mass(0); m])
    }

    /// Point-mass-at-zero walkers with per-walker right-step probabilities.
    pub fn from_p_right(p_right: Vec<f64>) -> Result<Self> {
        let m = p_right.len();
        Self::new(p_right, 1, vec![FiniteDistribution::point_mass(0); m])
    }

    /// Constructor in the left-step convention `P[step = -spacing] = p`.
    pub fn from_left_step(p_left: Vec<f64>, spacing: i64, initial: Vec<FiniteDistribution>) -> Result<Self> {
        Self::new(p_left.into_iter().map(|p| 1.0 - p).collect(), spacing, initial)
    }

    pub fn walkers(&self) -> usize {
        self.p_right.len()
    }

    pub fn p_right(&self) -> &[f64] {
        &self.p_right
    }

    pub fn p_left(&self, i: usize) -> f64 {
        1.0 - self.p_right[i]
    }

    pub fn spacing(&self) -> i64 {
        self.spacing
    }

    pub fn initial(&self) -> &[FiniteDistribution] {
        &self.initial
    }

    fn check_walker(&self, i: usize) -> Result<()> {
        if i < self.walkers() {
            Ok(())
        } else {
            Err(Error::Index { index: i, len: self.walkers() })
        }
    }
}

/// Law of `start + spacing * (2K - n)` with `K ~ Binomial(n, p_right)`.
fn binomial_steps(p_right: f64, spacing: i64, n: u64, start: i64) -> Vec<(i64, f64)> {
    let q = 1.0 - p_right;
    let ratio = p_right / q;
    let mut pmf = q.powi(n as i32);
    let mut out = Vec::with_capacity(n as usize + 1);
    for k in 0..=n {
        out.push((start + spacing * (2 * k as i64 - n as i64), pmf));
        pmf *= (n - k) as f64 / (k + 1) as f64 * ratio;
    }
    out
}

/// Law of walker `i` after `n` steps, mixed over its initial law.
pub fn walk_marginal(params: &RandomWalkParams, i: usize, n: u64) -> Result<FiniteDistribution> {
    params.check_walker(i)?;
    let masses = params.initial[i]
        .iter()
        .filter(|&(_, w)| w > 0.0)
        .flat_map(|(y0, w)| {
            binomial_steps(params.p_right[i], params.spacing, n, y0).into_iter().map(move |(d, p)| (d, w * p))
        });
    FiniteDistribution::normalized(masses)
}

/// Product of per-walker marginals at `config.time`.
pub fn config_probability(params: &RandomWalkParams, config: &SpaceConfiguration) -> Result<f64> {
    if config.walkers() != params.walkers() {
        return Err(invalid("configuration", "length differs from walker count"));
    }
    let mut p = 1.0;
    for (i, &s) in config.positions.iter().enumerate() {
        p *= walk_marginal(params, i, config.time)?.prob(s);
    }
    Ok(p)
}

/// `P[S_N = first, S_T = second]` for `N = first.time <= T = second.time`.
pub fn joint_config_probability(
    params: &RandomWalkParams,
    first: &SpaceConfiguration,
    second: &SpaceConfiguration,
) -> Result<f64> {
    if first.time > second.time {
        return Err(invalid("time", "the second configuration must not precede the first"));
    }
    if second.walkers() != params.walkers() {
        return Err(invalid("configuration", "length differs from walker count"));
    }
    let gap = second.time - first.time;
    let mut p = config_probability(params, first)?;
    for (i, (&a, &b)) in first.positions.iter().zip(&second.positions).enumerate() {
        let moved: f64 = binomial_steps(params.p_right[i], params.spacing, gap, a)
            .into_iter()
            .filter(|&(d, _)| d == b)
            .map(|(_, q)| q)
            .sum();
        p *= moved;
    }
    Ok(p)
}

/// Cartesian product of positive-mass marginals in lexicographic order, walker 0 outermost.
pub(crate) fn product_configurations(
    marginals: &[FiniteDistribution],
    time: u64,
    cap: usize,
) -> Result<Vec<(SpaceConfiguration, f64)>> {
    let supports: Vec<Vec<(i64, f64)>> =
        marginals.iter().map(|d| d.iter().filter(|&(_, p)| p > 0.0).collect()).collect();
    let needed = supports.iter().map(|s| s.len() as u128).product::<u128>();
    if needed > cap as u128 {
        return Err(Error::SizeCap { needed, cap });
    }
    let mut out = Vec::with_capacity(needed as usize);
    let mut idx = vec![0usize; supports.len()];
    loop {
        let mut p = 1.0;
        let positions = idx
            .iter()
            .zip(&supports)
            .map(|(&k, s)| {
                p *= s[k].1;
                s[k].0
            })
            .collect();
        out.push((SpaceConfiguration::new(positions, time), p));
        let mut w = supports.len();
        loop {
            if w == 0 {
                return Ok(out);
            }
            w -= 1;
            idx[w] += 1;
            if idx[w] < supports[w].len() {
                break;
            }
            idx[w] = 0;
        }
    }
}

/// Every attainable configuration at step `n` with its probability.
pub fn enumerate_configurations(
    params: &RandomWalkParams,
    n: u64,
    cap: usize,
) -> Result<Vec<(SpaceConfiguration, f64)>> {
    let marginals = (0..params.walkers()).map(|i| walk_marginal(params, i, n)).collect::<Result<Vec<_>>>()?;
    product_configurations(&marginals, n, cap)
}

/// One realization `S_0, ..., S_{n_max}`; walker `i` uses stream `seed.fork(i)`.
pub fn sample_space_path(params: &RandomWalkParams, n_max: u64, seed: RngSeed) -> Vec<SpaceConfiguration> {
    let tracks: Vec<Vec<i64>> = (0..params.walkers())
        .map(|i| {
            let mut rng = seed.fork(i as u64).rng();
            let mut s = params.initial[i].sample(&mut rng);
            let mut track = vec![s];
            for _ in 0..n_max {
                let right = rng.random::<f64>() < params.p_right[i];
                s += if right { params.spacing } else { -params.spacing };
                track.push(s);
            }
            track
        })
        .collect();
    (0..=n_max)
        .map(|n| SpaceConfiguration::new(tracks.iter().map(|t| t[n as usize]).collect(), n))
        .collect()
}

/// Independent replicas; replica `r` uses `seed.fork(r)`.
pub fn sample_space_paths(
    params: &RandomWalkParams,
    n_max: u64,
    seed: RngSeed,
    count: usize,
    exec: Exec,
) -> Vec<Vec<SpaceConfiguration>> {
    exec.map(count, |r| sample_space_path(params, n_max, seed.fork(r as u64)))
}

/// CSV with columns `time, walker_0, ..., walker_{M-1}`.
pub fn path_to_csv(path: &[SpaceConfiguration]) -> String {
    let m = path.first().map_or(0, SpaceConfiguration::walkers);
    let mut out = String::from("time");
    for i in 0..m {
        let _ = write!(out, ",walker_{i}");
    }
    out.push('\n');
    for cfg in path {
        let _ = write!(out, "{}", cfg.time);
        for s in &cfg.positions {
            let _ = write!(out, ",{s}");
        }
        out.push('\n');
    }
    out
}

/// Gaussian law; `var == 0` is a point mass at `mean`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianLaw {
    pub mean: f64,
    pub var: f64,
}

impl GaussianLaw {
    pub fn new(mean: f64, var: f64) -> Result<Self> {
        if !mean.is_finite() || !var.is_finite() || var < 0.0 {
            return Err(invalid("gaussian", format!("mean {mean}, variance {var}")));
        }
        Ok(Self { mean, var })
    }

    pub fn point(y: f64) -> Self {
        Self { mean: y, var: 0.0 }
    }

    pub fn density(&self, x: f64) -> f64 {
        let z = (x - self.mean) / self.var.sqrt();
        crate::quadrature::normal_pdf(z) / self.var.sqrt()
    }

    /// Probability of `[a, b)`, computed on the short tail side to keep relative accuracy.
    pub fn interval_mass(&self, a: f64, b: f64) -> f64 {
        if self.var == 0.0 {
            return if a <= self.mean && self.mean < b { 1.0 } else { 0.0 };
        }
        let s = self.var.sqrt();
        tail_diff((a - self.mean) / s, (b - self.mean) / s)
    }
}

fn tail_diff(za: f64, zb: f64) -> f64 {
    let v = if za > 0.0 { normal_cdf(-za) - normal_cdf(-zb) } else { normal_cdf(zb) - normal_cdf(za) };
    v.max(0.0)
}

/// Model B parameters: initial laws at `time_grid[0]` and the observation grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWienerParams")]
pub struct WienerParams {
    initial: Vec<GaussianLaw>,
    time_grid: Vec<f64>,
}

#[derive(Deserialize)]
struct RawWienerParams {
    initial: Vec<GaussianLaw>,
    time_grid: Vec<f64>,
}

impl TryFrom<RawWienerParams> for WienerParams {
    type Error = Error;
    fn try_from(raw: RawWienerParams) -> Result<Self> {
        WienerParams::new(raw.initial, raw.time_grid)
    }
}

impl WienerParams {
    pub fn new(initial: Vec<GaussianLaw>, time_grid: Vec<f64>) -> Result<Self> {
        if initial.is_empty() {
            return Err(invalid("initial", "at least one walker is required"));
        }
        for (i, g) in initial.iter().enumerate() {
            GaussianLaw::new(g.mean, g.var).map_err(|_| invalid(format!("initial[{i}]"), "bad Gaussian"))?;
        }
        if time_grid.is_empty() || time_grid.iter().any(|t| !t.is_finite()) {
            return Err(invalid("time_grid", "needs at least one finite time"));
        }
        if time_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("time_grid", "times must be strictly increasing"));
        }
        Ok(Self { initial, time_grid })
    }

    pub fn walkers(&self) -> usize {
        self.initial.len()
    }

    pub fn time_grid(&self) -> &[f64] {
        &self.time_grid
    }

    pub fn initial(&self) -> &[GaussianLaw] {
        &self.initial
    }

    /// Law of walker `i` at time `t >= time_grid[0]`.
    pub fn law_at(&self, i: usize, t: f64) -> Result<GaussianLaw> {
        let t0 = self.time_grid[0];
        if t < t0 {
            return Err(invalid("time", format!("{t} precedes the grid start {t0}")));
        }
        let g = self.initial.get(i).ok_or(Error::Index { index: i, len: self.walkers() })?;
        GaussianLaw::new(g.mean, g.var + (t - t0))
    }
}

/// Heat kernel `p(x, t2; y, t1)`.
pub fn wiener_transition_density(x: f64, t2: f64, y: f64, t1: f64) -> Result<f64> {
    if !(t2 > t1) {
        return Err(invalid("time", format!("need t2 > t1, got t1 = {t1}, t2 = {t2}")));
    }
    let tau = t2 - t1;
    Ok((-(x - y) * (x - y) / (2.0 * tau)).exp() / (2.0 * std::f64::consts::PI * tau).sqrt())
}

/// Exact Gaussian-increment paths, one `Vec` per walker over the time grid.
pub fn sample_wiener_grid(params: &WienerParams, seed: RngSeed) -> Vec<Vec<f64>> {
    (0..params.walkers())
        .map(|i| {
            let mut rng = seed.fork(i as u64).rng();
            let g = params.initial[i];
            let z: f64 = rng.sample(StandardNormal);
            let mut w = g.mean + g.var.sqrt() * z;
            let mut path = vec![w];
            for gap in params.time_grid.windows(2) {
                let z: f64 = rng.sample(StandardNormal);
                w += (gap[1] - gap[0]).sqrt() * z;
                path.push(w);
            }
            path
        })
        .collect()
}

pub fn sample_wiener_ensemble(params: &WienerParams, seed: RngSeed, count: usize, exec: Exec) -> Vec<Vec<Vec<f64>>> {
    exec.map(count, |r| sample_wiener_grid(params, seed.fork(r as u64)))
}

/// Ordered bin edges; only the outermost edges may be infinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Partition {
    edges: Vec<f64>,
}

impl TryFrom<Vec<f64>> for Partition {
    type Error = Error;
    fn try_from(edges: Vec<f64>) -> Result<Self> {
        Partition::new(edges)
    }
}

impl From<Partition> for Vec<f64> {
    fn from(p: Partition) -> Self {
        p.edges
    }
}

impl Partition {
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 {
            return Err(invalid("partition", "needs at least two edges"));
        }
        if edges.iter().any(|e| e.is_nan()) || edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("partition", "edges must be strictly increasing"));
        }
        let inner = &edges[1..edges.len() - 1];
        if inner.iter().any(|e| !e.is_finite()) {
            return Err(invalid("partition", "only the outer edges may be infinite"));
        }
        let widths: Vec<f64> = edges.windows(2).map(|w| w[1] - w[0]).filter(|w| w.is_finite()).collect();
        if let Some(&w0) = widths.first() {
            if widths.iter().any(|w| (w - w0).abs() > 1e-12 * w0.max(1.0)) {
                return Err(invalid("partition", "finite bins must share one width"));
            }
        }
        Ok(Self { edges })
    }

    /// `k` equal bins on `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64, k: usize) -> Result<Self> {
        if k == 0 || !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(invalid("partition", "need k >= 1 and a finite window lo < hi"));
        }
        let w = (hi - lo) / k as f64;
        let mut edges: Vec<f64> = (0..=k).map(|j| lo + w * j as f64).collect();
        edges[k] = hi;
        Self::new(edges)
    }

    /// `k` bins: interior cells of equal width with the two outer cells extended to infinity.
    pub fn uniform_open(lo: f64, hi: f64, k: usize) -> Result<Self> {
        let mut p = Self::uniform(lo, hi, k)?;
        p.edges[0] = f64::NEG_INFINITY;
        p.edges[k] = f64::INFINITY;
        Ok(p)
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn bins(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn bin(&self, k: usize) -> (f64, f64) {
        (self.edges[k], self.edges[k + 1])
    }

    pub fn covers_line(&self) -> bool {
        self.edges[0] == f64::NEG_INFINITY && self.edges[self.bins()] == f64::INFINITY
    }

    /// Bin holding `x`; cells are half-open except that a finite right end is closed.
    pub fn bin_of(&self, x: f64) -> Option<usize> {
        let k = self.bins();
        if x < self.edges[0] || x > self.edges[k] || x.is_nan() {
            return None;
        }
        let pos = self.edges.partition_point(|&e| e <= x);
        Some(pos.saturating_sub(1).min(k - 1))
    }
}

/// What to do with a source bin of negligible mass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum EmptyBins {
    #[default]
    Error,
    Drop,
}

/// `P[bin k at t2 | bin j at t1]` for a walker with law `density` at `t1`.
///
/// Rows are normalized over destination bins, so on a bounded window they
/// condition on the walker staying inside it.
pub fn bin_transition_matrix(
    partition: &Partition,
    t1: f64,
    t2: f64,
    density: GaussianLaw,
    empty: EmptyBins,
) -> Result<TransitionKernel> {
    if !(t2 > t1) {
        return Err(invalid("time", format!("need t2 > t1, got t1 = {t1}, t2 = {t2}")));
    }
    let sd = (t2 - t1).sqrt();
    let k = partition.bins();
    let to: Vec<i64> = (0..k as i64).collect();
    let mut from = Vec::new();
    let mut rows = Vec::new();
    for j in 0..k {
        let (a, b) = partition.bin(j);
        let mass = density.interval_mass(a, b);
        if mass < EMPTY_BIN_MASS {
            match empty {
                EmptyBins::Error => return Err(Error::UndefinedRow(j as i64)),
                EmptyBins::Drop => continue,
            }
        }
        let mut row = Vec::with_capacity(k);
        for dest in 0..k {
            let (c, d) = partition.bin(dest);
            let hit = |y: f64| tail_diff((c - y) / sd, (d - y) / sd);
            let num = if density.var == 0.0 {
                hit(density.mean)
            } else {
                integrate(|y| density.density(y) * hit(y), a, b, BIN_TOL * mass)?.value
            };
            row.push(num.max(0.0));
        }
        let total: f64 = row.iter().sum();
        if total <= 0.0 {
            return Err(Error::UndefinedRow(j as i64));
        }
        row.iter_mut().for_each(|p| *p /= total);
        from.push(j as i64);
        rows.push(row);
    }
    if from.is_empty() {
        return Err(Error::NullEvent("every source bin is empty".into()));
    }
    TransitionKernel::new(from, to, rows)
}

/// Walker laws that particle-level builders can enumerate.
pub trait WalkerModel: Sync {
    fn walkers(&self) -> usize;
    /// Observation time of the configurations produced by [`WalkerModel::configurations`].
    fn time(&self) -> u64;
    /// Law of walker `i` at the observation time.
    fn marginal(&self, i: usize) -> Result<FiniteDistribution>;
    /// One-step destinations of walker `i` from `from`, positive masses only.
    fn step_law(&self, i: usize, from: i64) -> Result<Vec<(i64, f64)>>;

    fn configurations(&self, cap: usize) -> Result<Vec<(SpaceConfiguration, f64)>> {
        let marginals = (0..self.walkers()).map(|i| self.marginal(i)).collect::<Result<Vec<_>>>()?;
        product_configurations(&marginals, self.time(), cap)
    }

    /// Displacement law of walker `i` from `from` (destination minus source).
    fn displacement_law(&self, i: usize, from: i64) -> Result<Vec<(i64, f64)>> {
        Ok(self.step_law(i, from)?.into_iter().map(|(d, p)| (d - from, p)).collect())
    }
}

/// Model A observed at step `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeWalkers {
    pub params: RandomWalkParams,
    pub n: u64,
}

impl LatticeWalkers {
    pub fn new(params: RandomWalkParams, n: u64) -> Self {
        Self { params, n }
    }
}

impl WalkerModel for LatticeWalkers {
    fn walkers(&self) -> usize {
        self.params.walkers()
    }

    fn time(&self) -> u64 {
        self.n
    }

    fn marginal(&self, i: usize) -> Result<FiniteDistribution> {
        walk_marginal(&self.params, i, self.n)
    }

    fn step_law(&self, i: usize, from: i64) -> Result<Vec<(i64, f64)>> {
        self.params.check_walker(i)?;
        let p = self.params.p_right[i];
        let l = self.params.spacing;
        Ok(vec![(from - l, 1.0 - p), (from + l, p)])
    }
}

/// Model B discretized on one partition between grid times `t1 < t2`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedWiener {
    pub partition: Partition,
    pub t1: f64,
    pub t2: f64,
    marginals: Vec<FiniteDistribution>,
    kernels: Vec<TransitionKernel>,
}

impl BinnedWiener {
    /// Bin marginals are conditioned on the window; bins below [`EMPTY_BIN_MASS`] are dropped.
    pub fn new(params: &WienerParams, partition: Partition, t1: f64, t2: f64) -> Result<Self> {
        let mut marginals = Vec::new();
        let mut kernels = Vec::new();
        for i in 0..params.walkers() {
            let law = params.law_at(i, t1)?;
            let kernel = bin_transition_matrix(&partition, t1, t2, law, EmptyBins::Drop)?;
            let masses = kernel.from_support().iter().map(|&j| {
                let (a, b) = partition.bin(j as usize);
                (j, law.interval_mass(a, b))
            });
            marginals.push(FiniteDistribution::normalized(masses)?);
            kernels.push(kernel);
        }
        Ok(Self { partition, t1, t2, marginals, kernels })
    }

    pub fn kernel(&self, i: usize) -> &TransitionKernel {
        &self.kernels[i]
    }
}

impl WalkerModel for BinnedWiener {
    fn walkers(&self) -> usize {
        self.kernels.len()
    }

    fn time(&self) -> u64 {
        0
    }

    fn marginal(&self, i: usize) -> Result<FiniteDistribution> {
        self.marginals.get(i).cloned().ok_or(Error::Index { index: i, len: self.walkers() })
    }

    fn step_law(&self, i: usize, from: i64) -> Result<Vec<(i64, f64)>> {
        let kernel = self.kernels.get(i).ok_or(Error::Index { index: i, len: self.walkers() })?;
        let row = kernel.row(from)?;
        Ok(kernel.to_support().iter().copied().zip(row.iter().copied()).filter(|&(_, p)| p > 0.0).collect())
    }
}
