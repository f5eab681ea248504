//! Finite probability primitives shared by every model.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Tolerance for identities that hold exactly in real arithmetic.
pub const EXACT_TOL: f64 = 1e-12;
/// Total-mass tolerance for enumerated joint tables.
pub const TABLE_TOL: f64 = 1e-10;

/// Probability mass function on strictly increasing integer labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution")]
pub struct FiniteDistribution {
    support: Vec<i64>,
    probs: Vec<f64>,
}

#[derive(Deserialize)]
struct RawDistribution {
    support: Vec<i64>,
    probs: Vec<f64>,
}

impl TryFrom<RawDistribution> for FiniteDistribution {
    type Error = Error;
    fn try_from(raw: RawDistribution) -> Result<Self> {
        FiniteDistribution::new(raw.support, raw.probs)
    }
}

impl FiniteDistribution {
    pub fn new(support: Vec<i64>, probs: Vec<f64>) -> Result<Self> {
        if support.is_empty() {
            return Err(invalid("distribution", "empty support"));
        }
        if support.len() != probs.len() {
            return Err(invalid(
                "distribution",
                format!("{} labels but {} probabilities", support.len(), probs.len()),
            ));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("distribution", "support must be strictly increasing"));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(invalid("distribution", format!("probability {p} is not a finite non-negative number")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > EXACT_TOL {
            return Err(invalid("distribution", format!("probabilities sum to {total}")));
        }
        Ok(Self { support, probs })
    }

    /// Builds a distribution from possibly repeated `(label, mass)` pairs, rescaled to unit mass.
    pub fn normalized<I: IntoIterator<Item = (i64, f64)>>(masses: I) -> Result<Self> {
        let mut acc: BTreeMap<i64, f64> = BTreeMap::new();
        for (label, mass) in masses {
            if !mass.is_finite() || mass < 0.0 {
                return Err(invalid("distribution", format!("mass {mass} at label {label}")));
            }
            *acc.entry(label).or_insert(0.0) += mass;
        }
        let total: f64 = acc.values().sum();
        if total <= 0.0 {
            return Err(Error::NullEvent("all masses are zero".into()));
        }
        let (support, probs) = acc.into_iter().map(|(l, m)| (l, m / total)).unzip();
        Self::new(support, probs)
    }

    pub fn point_mass(label: i64) -> Self {
        Self { support: vec![label], probs: vec![1.0] }
    }

    pub fn uniform(labels: &[i64]) -> Result<Self> {
        Self::normalized(labels.iter().map(|&l| (l, 1.0)))
    }

    pub fn support(&self) -> &[i64] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.support.iter().copied().zip(self.probs.iter().copied())
    }

    /// Mass at `label`, zero off the support.
    pub fn prob(&self, label: i64) -> f64 {
        self.support.binary_search(&label).map_or(0.0, |k| self.probs[k])
    }

    /// Labels carrying strictly positive mass.
    pub fn positive_support(&self) -> Vec<i64> {
        self.iter().filter(|&(_, p)| p > 0.0).map(|(l, _)| l).collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        self.support[sample_index(&self.probs, rng)]
    }
}

/// Inverse-CDF draw of an index from non-negative weights summing to one.
pub fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (k, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last_positive = k;
            acc += p;
            if u < acc {
                return k;
            }
        }
    }
    last_positive
}

/// Shannon entropy `-Σ p log_base p` with `0 log 0 = 0`.
pub fn entropy(d: &FiniteDistribution, base: f64) -> Result<f64> {
    if !base.is_finite() || base <= 1.0 {
        return Err(invalid("base", format!("log base must exceed 1, got {base}")));
    }
    Ok(entropy_of(d.probs()) / base.ln())
}

/// Natural-log entropy of a probability vector, zero terms skipped.
pub(crate) fn entropy_of(probs: &[f64]) -> f64 {
    probs.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum()
}

/// Row-stochastic matrix between two labelled supports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawKernel")]
pub struct TransitionKernel {
    from: Vec<i64>,
    to: Vec<i64>,
    rows: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct RawKernel {
    from: Vec<i64>,
    to: Vec<i64>,
    rows: Vec<Vec<f64>>,
}

impl TryFrom<RawKernel> for TransitionKernel {
    type Error = Error;
    fn try_from(raw: RawKernel) -> Result<Self> {
        TransitionKernel::new(raw.from, raw.to, raw.rows)
    }
}

impl TransitionKernel {
    pub fn new(from: Vec<i64>, to: Vec<i64>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if from.windows(2).any(|w| w[0] >= w[1]) || to.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("kernel", "supports must be strictly increasing"));
        }
        if rows.len() != from.len() {
            return Err(invalid("kernel", "one row per source label required"));
        }
        for (label, row) in from.iter().zip(&rows) {
            if row.len() != to.len() {
                return Err(invalid("kernel", format!("row {label} has wrong length")));
            }
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(invalid("kernel", format!("row {label} has a negative entry")));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > EXACT_TOL {
                return Err(invalid("kernel", format!("row {label} sums to {total}")));
            }
        }
        Ok(Self { from, to, rows })
    }

    pub fn identity(labels: &[i64]) -> Result<Self> {
        let rows = (0..labels.len())
            .map(|i| (0..labels.len()).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::new(labels.to_vec(), labels.to_vec(), rows)
    }

    pub fn from_support(&self) -> &[i64] {
        &self.from
    }

    pub fn to_support(&self) -> &[i64] {
        &self.to
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, from: i64) -> Result<&[f64]> {
        let k = self.from.binary_search(&from).map_err(|_| Error::UndefinedRow(from))?;
        Ok(&self.rows[k])
    }

    /// `k(to | from)`; zero for an unknown destination, error for an undefined source.
    pub fn prob(&self, from: i64, to: i64) -> Result<f64> {
        let row = self.row(from)?;
        Ok(self.to.binary_search(&to).map_or(0.0, |j| row[j]))
    }

    pub fn row_distribution(&self, from: i64) -> Result<FiniteDistribution> {
        let row = self.row(from)?;
        FiniteDistribution::normalized(self.to.iter().copied().zip(row.iter().copied()))
    }
}

/// Pushes `d` through `k`: `Σ_a k(c|a) d(a)` for every destination `c`.
pub fn bayes_marginal(k: &TransitionKernel, d: &FiniteDistribution) -> Result<FiniteDistribution> {
    let mut out = vec![0.0; k.to.len()];
    for (a, pa) in d.iter() {
        let row = k.row(a).map_err(|_| {
            Error::SupportMismatch(format!("label {a} is not a source of the kernel"))
        })?;
        for (o, r) in out.iter_mut().zip(row) {
            *o += r * pa;
        }
    }
    FiniteDistribution::new(k.to.clone(), out)
}

/// Sparse joint probability table over named integer axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointLaw {
    axes: Vec<String>,
    cells: Vec<Cell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub outcome: Vec<i64>,
    pub p: f64,
}

impl JointLaw {
    /// Merges repeated outcomes; total mass must be one within [`TABLE_TOL`].
    pub fn new<I>(axes: Vec<String>, cells: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<i64>, f64)>,
    {
        let law = Self::accumulate(axes, cells)?;
        let total = law.total();
        if (total - 1.0).abs() > TABLE_TOL {
            return Err(invalid("joint law", format!("total mass {total}")));
        }
        Ok(law)
    }

    fn accumulate<I>(axes: Vec<String>, cells: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<i64>, f64)>,
    {
        let mut acc: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
        for (outcome, p) in cells {
            if outcome.len() != axes.len() {
                return Err(invalid("joint law", "outcome arity differs from axis count"));
            }
            if !p.is_finite() || p < 0.0 {
                return Err(invalid("joint law", format!("cell mass {p}")));
            }
            *acc.entry(outcome).or_insert(0.0) += p;
        }
        let cells = acc.into_iter().map(|(outcome, p)| Cell { outcome, p }).collect();
        Ok(Self { axes, cells })
    }

    pub fn axes(&self) -> &[String] {
        &self.axes
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn total(&self) -> f64 {
        self.cells.iter().map(|c| c.p).sum()
    }

    pub fn axis(&self, name: &str) -> Result<usize> {
        self.axes
            .iter()
            .position(|a| a == name)
            .ok_or_else(|| invalid("axis", format!("no axis named {name}")))
    }

    pub fn probability(&self, pred: impl Fn(&[i64]) -> bool) -> f64 {
        self.cells.iter().filter(|c| pred(&c.outcome)).map(|c| c.p).sum()
    }

    pub fn expectation(&self, f: impl Fn(&[i64]) -> f64) -> f64 {
        self.cells.iter().map(|c| c.p * f(&c.outcome)).sum()
    }

    pub fn marginal(&self, axis: &str) -> Result<FiniteDistribution> {
        let k = self.axis(axis)?;
        FiniteDistribution::normalized(self.cells.iter().map(|c| (c.outcome[k], c.p)))
    }

    /// Restriction to `pred`, renormalized by its probability.
    pub fn condition(&self, pred: impl Fn(&[i64]) -> bool) -> Result<JointLaw> {
        let mass = self.probability(&pred);
        if mass <= 0.0 {
            return Err(Error::NullEvent("predicate has zero probability".into()));
        }
        Self::new(
            self.axes.clone(),
            self.cells
                .iter()
                .filter(|c| pred(&c.outcome))
                .map(|c| (c.outcome.clone(), c.p / mass)),
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("joint law serializes")
    }
}

/// Law of `axis` given the event `pred`.
pub fn condition_event(
    joint: &JointLaw,
    pred: impl Fn(&[i64]) -> bool,
    axis: &str,
) -> Result<FiniteDistribution> {
    joint.condition(pred)?.marginal(axis)
}

/// `(E[f], Σ_B P(B) E[f | B])` with `B` ranging over the values of `partition_axis`.
pub fn total_expectation_check(
    joint: &JointLaw,
    f: impl Fn(&[i64]) -> f64,
    partition_axis: &str,
) -> Result<(f64, f64)> {
    let k = joint.axis(partition_axis)?;
    let direct = joint.expectation(&f);
    let blocks = joint.marginal(partition_axis)?;
    let mut tower = 0.0;
    for (b, pb) in blocks.iter() {
        if pb > 0.0 {
            let given = joint.condition(|o| o[k] == b)?;
            tower += pb * given.expectation(&f);
        }
    }
    Ok((direct, tower))
}

/// Reproducible randomness: a seed plus an independent ChaCha stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngSeed {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Child seed for sub-task `k`; distinct parents give unrelated children.
    pub fn fork(&self, k: u64) -> RngSeed {
        RngSeed { seed: splitmix64(self.seed ^ splitmix64(self.stream_id)), stream_id: k }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
