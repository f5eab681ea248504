//! Particle hopping between space points: selection process, position, velocity
//! and their exact joint law with the space configuration.
//!
//! Positions are measured from the origin walker. The velocity at step `N` is the
//! particle's displacement in the frame pinned to the origin's position at step
//! `N`, so every walker, the origin included, contributes its own step:
//! `V_N = s_{I_{N+1}}(N+1) - s_{I_N}(N)`.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::prob::{sample_index, FiniteDistribution, JointLaw, RngSeed, TransitionKernel, EXACT_TOL};
use crate::space::{SpaceConfiguration, WalkerModel};

/// Law of the index process `I_N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SelectionKernel {
    IidUniform,
    IidWeighted { weights: Vec<f64> },
    /// `initial` is the law of `I_0`; `transition[i][j] = P[I_{n+1} = j | I_n = i]`.
    Markov { initial: Vec<f64>, transition: Vec<Vec<f64>> },
}

fn check_law(field: &str, w: &[f64], m: usize) -> Result<()> {
    if w.len() != m {
        return Err(invalid(field, format!("expected {m} entries, got {}", w.len())));
    }
    if w.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(invalid(field, "entries must be non-negative"));
    }
    let total: f64 = w.iter().sum();
    if (total - 1.0).abs() > EXACT_TOL {
        return Err(invalid(field, format!("entries sum to {total}")));
    }
    Ok(())
}

impl SelectionKernel {
    pub fn validate(&self, m: usize) -> Result<()> {
        match self {
            SelectionKernel::IidUniform => Ok(()),
            SelectionKernel::IidWeighted { weights } => check_law("selection.weights", weights, m),
            SelectionKernel::Markov { initial, transition } => {
                check_law("selection.initial", initial, m)?;
                if transition.len() != m {
                    return Err(invalid("selection.transition", "one row per walker"));
                }
                transition.iter().try_for_each(|row| check_law("selection.transition", row, m))
            }
        }
    }

    pub fn initial_law(&self, m: usize) -> Vec<f64> {
        match self {
            SelectionKernel::IidUniform => vec![1.0 / m as f64; m],
            SelectionKernel::IidWeighted { weights } => weights.clone(),
            SelectionKernel::Markov { initial, .. } => initial.clone(),
        }
    }

    /// `P[I_{n+1} = . | I_n = current]`.
    pub fn next_law(&self, m: usize, current: usize) -> Vec<f64> {
        match self {
            SelectionKernel::Markov { transition, .. } => transition[current].clone(),
            other => other.initial_law(m),
        }
    }

    /// Law of `I_n`.
    pub fn law_at(&self, m: usize, n: u64) -> Vec<f64> {
        let mut law = self.initial_law(m);
        if let SelectionKernel::Markov { transition, .. } = self {
            for _ in 0..n {
                let mut next = vec![0.0; m];
                for (i, &pi) in law.iter().enumerate() {
                    for (j, &k) in transition[i].iter().enumerate() {
                        next[j] += pi * k;
                    }
                }
                law = next;
            }
        }
        law
    }
}

/// `positions[selected] - positions[origin]` (0-based indices).
pub fn position_value(config: &SpaceConfiguration, selected: usize, origin: usize) -> Result<i64> {
    let m = config.walkers();
    let get = |k: usize| config.positions.get(k).copied().ok_or(Error::Index { index: k, len: m });
    Ok(get(selected)? - get(origin)?)
}

/// Exact law of `(S_N, X_N, X_{N+1})` with `X_{N+1}` in the time-`N` origin frame.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParticleLaw {
    origin: usize,
    walkers: usize,
    configurations: Vec<SpaceConfiguration>,
    config_probs: Vec<f64>,
    /// Per configuration: `(x, x_next, P[X_N = x, X_{N+1} = x_next, S_N = S])`, sorted.
    cells: Vec<Vec<(i64, i64, f64)>>,
}

/// Enumerates configurations, selections `(I_N, I_{N+1})` and the selected walker's step.
pub fn build_joint_law<W: WalkerModel + ?Sized>(
    model: &W,
    selection: &SelectionKernel,
    origin: usize,
    cap: usize,
) -> Result<ParticleLaw> {
    let m = model.walkers();
    if origin >= m {
        return Err(Error::Index { index: origin, len: m });
    }
    selection.validate(m)?;
    let configs = model.configurations(cap)?;
    let needed = configs.len() as u128 * (m * m) as u128;
    if needed > cap as u128 {
        return Err(Error::SizeCap { needed, cap });
    }
    let law_now = selection.law_at(m, model.time());
    let mut configurations = Vec::with_capacity(configs.len());
    let mut config_probs = Vec::with_capacity(configs.len());
    let mut cells = Vec::with_capacity(configs.len());
    for (config, ps) in configs {
        let s = &config.positions;
        let mut acc: BTreeMap<(i64, i64), f64> = BTreeMap::new();
        for (i, &pi) in law_now.iter().enumerate() {
            if pi == 0.0 {
                continue;
            }
            let x = s[i] - s[origin];
            for (j, kj) in selection.next_law(m, i).into_iter().enumerate() {
                if kj == 0.0 {
                    continue;
                }
                for (dest, q) in model.step_law(j, s[j])? {
                    *acc.entry((x, dest - s[origin])).or_insert(0.0) += ps * pi * kj * q;
                }
            }
        }
        configurations.push(config);
        config_probs.push(ps);
        cells.push(acc.into_iter().filter(|&(_, p)| p > 0.0).map(|((x, y), p)| (x, y, p)).collect());
    }
    Ok(ParticleLaw { origin, walkers: m, configurations, config_probs, cells })
}

impl ParticleLaw {
    pub fn origin(&self) -> usize {
        self.origin
    }

    pub fn walkers(&self) -> usize {
        self.walkers
    }

    pub fn configurations(&self) -> &[SpaceConfiguration] {
        &self.configurations
    }

    pub fn config_prob(&self, id: usize) -> f64 {
        self.config_probs[id]
    }

    pub fn config_id(&self, config: &SpaceConfiguration) -> Option<usize> {
        self.configurations.binary_search(config).ok()
    }

    pub fn cells(&self, id: usize) -> &[(i64, i64, f64)] {
        &self.cells[id]
    }

    fn fold<K: Ord>(&self, ids: impl Iterator<Item = usize>, key: impl Fn(i64, i64) -> K) -> BTreeMap<K, f64> {
        let mut acc = BTreeMap::new();
        for id in ids {
            for &(x, y, p) in &self.cells[id] {
                *acc.entry(key(x, y)).or_insert(0.0) += p;
            }
        }
        acc
    }

    /// `P[X_N = a, S_N = S_id]` for every `a`.
    pub fn x_and_config(&self, id: usize) -> BTreeMap<i64, f64> {
        self.fold(std::iter::once(id), |x, _| x)
    }

    /// `P[V_N = c, S_N = S_id]` for every `c`.
    pub fn v_and_config(&self, id: usize) -> BTreeMap<i64, f64> {
        self.fold(std::iter::once(id), |x, y| y - x)
    }

    pub fn x_marginal(&self) -> Result<FiniteDistribution> {
        FiniteDistribution::normalized(self.fold(0..self.cells.len(), |x, _| x))
    }

    pub fn v_marginal(&self) -> Result<FiniteDistribution> {
        FiniteDistribution::normalized(self.fold(0..self.cells.len(), |x, y| y - x))
    }

    pub fn x_given(&self, id: usize) -> Result<FiniteDistribution> {
        FiniteDistribution::normalized(self.x_and_config(id))
    }

    pub fn v_given(&self, id: usize) -> Result<FiniteDistribution> {
        FiniteDistribution::normalized(self.v_and_config(id))
    }

    /// Table over axes `config`, `x`, `x_next`.
    pub fn joint_law(&self) -> Result<JointLaw> {
        self.table(|_, y| y, "x_next")
    }

    /// Table over axes `config`, `x`, `v`.
    pub fn velocity_law(&self) -> Result<JointLaw> {
        self.table(|x, y| y - x, "v")
    }

    fn table(&self, second: impl Fn(i64, i64) -> i64, name: &str) -> Result<JointLaw> {
        let cells = self.cells.iter().enumerate().flat_map(|(id, cs)| {
            let second = &second;
            cs.iter().map(move |&(x, y, p)| (vec![id as i64, x, second(x, y)], p))
        });
        JointLaw::new(vec!["config".into(), "x".into(), name.into()], cells)
    }

    /// Unconditional kernel `P[X_{N+1} = b | X_N = a]`.
    pub fn alpha(&self) -> Result<TransitionKernel> {
        alpha_from_joint(&self.joint_law()?)
    }
}

/// `α(b|a) = P[X_{N+1} = b | X_N = a]` from a table with axes `x` and `x_next`.
///
/// Positions of zero mass get no row; looking them up yields [`Error::UndefinedRow`].
pub fn alpha_from_joint(joint: &JointLaw) -> Result<TransitionKernel> {
    let (kx, ky) = (joint.axis("x")?, joint.axis("x_next")?);
    let mut pairs: BTreeMap<i64, BTreeMap<i64, f64>> = BTreeMap::new();
    let mut to = std::collections::BTreeSet::new();
    for c in joint.cells() {
        if c.p > 0.0 {
            *pairs.entry(c.outcome[kx]).or_default().entry(c.outcome[ky]).or_insert(0.0) += c.p;
            to.insert(c.outcome[ky]);
        }
    }
    let to: Vec<i64> = to.into_iter().collect();
    let from: Vec<i64> = pairs.keys().copied().collect();
    let rows = pairs
        .values()
        .map(|row| {
            let total: f64 = row.values().sum();
            to.iter().map(|b| row.get(b).map_or(0.0, |p| p / total)).collect()
        })
        .collect();
    TransitionKernel::new(from, to, rows)
}

/// `P[V_N = c | X_N = a] = α(a + c | a)` as a distribution over `c`.
pub fn velocity_given_position(alpha: &TransitionKernel, a: i64) -> Result<FiniteDistribution> {
    let row = alpha.row(a)?;
    FiniteDistribution::normalized(alpha.to_support().iter().zip(row).filter(|(_, &p)| p > 0.0).map(|(&b, &p)| (b - a, p)))
}

/// Kernel from positions `a` to velocities `c = b - a`.
pub fn velocity_kernel(alpha: &TransitionKernel) -> Result<TransitionKernel> {
    let mut cs: Vec<i64> = alpha
        .from_support()
        .iter()
        .flat_map(|&a| alpha.to_support().iter().map(move |&b| b - a))
        .collect();
    cs.sort_unstable();
    cs.dedup();
    let rows = alpha
        .from_support()
        .iter()
        .map(|&a| cs.iter().map(|&c| alpha.prob(a, a + c)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    TransitionKernel::new(alpha.from_support().to_vec(), cs, rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetryReport {
    pub max_gap: f64,
    /// `(a, c)` attaining the gap.
    pub worst: Option<(i64, i64)>,
    pub holds: bool,
}

/// Compares `P[V=c | X=a]` with `P[X=a | V=c]` over all attainable pairs.
pub fn check_alpha_symmetry(
    alpha: &TransitionKernel,
    p_x: &FiniteDistribution,
    p_v: &FiniteDistribution,
) -> Result<SymmetryReport> {
    let mut report = SymmetryReport { max_gap: 0.0, worst: None, holds: true };
    for (a, pa) in p_x.iter().filter(|&(_, p)| p > 0.0) {
        let row = alpha.row(a)?;
        for (&b, &forward) in alpha.to_support().iter().zip(row) {
            let c = b - a;
            let pc = p_v.prob(c);
            if pc <= 0.0 {
                continue;
            }
            let gap = (forward - forward * pa / pc).abs();
            if gap > report.max_gap {
                report.max_gap = gap;
                report.worst = Some((a, c));
            }
        }
    }
    report.holds = report.max_gap <= 1e-9;
    Ok(report)
}

/// A sampled particle trajectory on a sampled space path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParticleSample {
    /// `X_n`, relative to the origin at step `n`.
    pub positions: Vec<i64>,
    /// `X_{n+1}` seen from the origin's step-`n` position.
    pub next_positions: Vec<i64>,
    /// `V_n = next_positions[n] - positions[n]`.
    pub velocities: Vec<i64>,
    pub selected: Vec<usize>,
    pub origin_index: usize,
}

pub fn sample_particle_path(
    space_path: &[SpaceConfiguration],
    selection: &SelectionKernel,
    origin: usize,
    seed: RngSeed,
) -> Result<ParticleSample> {
    let first = space_path.first().ok_or_else(|| invalid("space path", "empty"))?;
    let m = first.walkers();
    selection.validate(m)?;
    if origin >= m {
        return Err(Error::Index { index: origin, len: m });
    }
    let mut rng = seed.rng();
    let mut selected = vec![sample_index(&selection.initial_law(m), &mut rng)];
    for _ in 1..space_path.len() {
        let now = *selected.last().expect("non-empty");
        selected.push(sample_index(&selection.next_law(m, now), &mut rng));
    }
    let positions = space_path
        .iter()
        .zip(&selected)
        .map(|(cfg, &i)| position_value(cfg, i, origin))
        .collect::<Result<Vec<_>>>()?;
    let next_positions: Vec<i64> = space_path
        .windows(2)
        .zip(selected.windows(2))
        .map(|(cfg, sel)| cfg[1].positions[sel[1]] - cfg[0].positions[origin])
        .collect();
    let velocities = next_positions.iter().zip(&positions).map(|(y, x)| y - x).collect();
    Ok(ParticleSample { positions, next_positions, velocities, selected, origin_index: origin })
}

/// Draws a Markov selection kernel; `rng` decides sparsity and concentration.
pub fn random_selection<R: Rng + ?Sized>(m: usize, rng: &mut R) -> SelectionKernel {
    let law = |rng: &mut R| {
        let sharp = 0.2 + 4.0 * rng.random::<f64>();
        let mut w: Vec<f64> = (0..m)
            .map(|_| if rng.random::<f64>() < 0.25 { 0.0 } else { rng.random::<f64>().powf(sharp) })
            .collect();
        if w.iter().all(|&x| x == 0.0) {
            w[rng.random_range(0..m)] = 1.0;
        }
        let total: f64 = w.iter().sum();
        w.iter().map(|x| x / total).collect::<Vec<_>>()
    };
    match rng.random_range(0..3) {
        0 => SelectionKernel::IidWeighted { weights: law(rng) },
        1 => {
            let initial = law(rng);
            let transition = (0..m).map(|_| law(rng)).collect();
            SelectionKernel::Markov { initial, transition }
        }
        _ => {
            let mut w = vec![0.0; m];
            w[rng.random_range(0..m)] = 1.0;
            let transition = (0..m)
                .map(|_| {
                    let mut row = vec![0.0; m];
                    row[rng.random_range(0..m)] = 1.0;
                    row
                })
                .collect();
            SelectionKernel::Markov { initial: w, transition }
        }
    }
}

/// Position labels `s_i - s_o` for the ordered pairs `(o, i)` of an `M`-walker configuration.
pub fn position_pair_labels(config: &SpaceConfiguration) -> Vec<i64> {
    let s = &config.positions;
    s.iter().flat_map(|&so| s.iter().map(move |&si| si - so)).collect()
}

/// Velocity labels `s_{i'} - s_i` for the ordered pairs `(i, i')`.
pub fn velocity_pair_labels(config: &SpaceConfiguration) -> Vec<i64> {
    position_pair_labels(config)
}

/// Overlap target on pair labels: row `(o, i)`, column `(j, j')` carries `δ_{ij} K(j'|i)`.
///
/// Doubly stochastic exactly when every column of `K` sums to one, e.g. for uniform selection.
pub fn selection_overlap_target(selection: &SelectionKernel, m: usize) -> Result<Vec<Vec<f64>>> {
    selection.validate(m)?;
    let mut target = vec![vec![0.0; m * m]; m * m];
    for o in 0..m {
        for i in 0..m {
            let next = selection.next_law(m, i);
            for (j2, &k) in next.iter().enumerate() {
                target[o * m + i][i * m + j2] = k;
            }
        }
    }
    Ok(target)
}
