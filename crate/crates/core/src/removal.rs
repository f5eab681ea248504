//! Conditioning on one space configuration and the Bayes defect it leaves behind.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::Exec;
use crate::particle::ParticleLaw;
use crate::prob::{FiniteDistribution, TransitionKernel};
use crate::space::SpaceConfiguration;

/// Laws of `X_N` and `V_N` given `S_N = configuration`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionalEnsemble {
    pub configuration: SpaceConfiguration,
    pub p_x: FiniteDistribution,
    pub p_v: FiniteDistribution,
    /// `α_S(c | a) = P_S[V = c | X = a]`.
    pub alpha_cond: TransitionKernel,
    /// `P_S[X = a | V = c]`.
    pub reverse_cond: TransitionKernel,
}

fn kernel_from_pairs(pairs: &BTreeMap<(i64, i64), f64>) -> Result<TransitionKernel> {
    let mut rows: BTreeMap<i64, BTreeMap<i64, f64>> = BTreeMap::new();
    let mut to = BTreeSet::new();
    for (&(a, b), &p) in pairs {
        rows.entry(a).or_default().insert(b, p);
        to.insert(b);
    }
    let to: Vec<i64> = to.into_iter().collect();
    let from = rows.keys().copied().collect();
    let rows = rows
        .values()
        .map(|r| {
            let total: f64 = r.values().sum();
            to.iter().map(|b| r.get(b).map_or(0.0, |p| p / total)).collect()
        })
        .collect();
    TransitionKernel::new(from, to, rows)
}

pub fn condition_on_configuration(law: &ParticleLaw, config: &SpaceConfiguration) -> Result<ConditionalEnsemble> {
    let id = law
        .config_id(config)
        .ok_or_else(|| Error::NullEvent(format!("configuration {:?} is not attainable", config.positions)))?;
    ensemble_at(law, id)
}

/// Conditional ensemble for the configuration with index `id` in `law`.
pub fn ensemble_at(law: &ParticleLaw, id: usize) -> Result<ConditionalEnsemble> {
    let mut forward = BTreeMap::new();
    let mut backward = BTreeMap::new();
    for &(x, y, p) in law.cells(id) {
        *forward.entry((x, y - x)).or_insert(0.0) += p;
        *backward.entry((y - x, x)).or_insert(0.0) += p;
    }
    Ok(ConditionalEnsemble {
        configuration: law.configurations()[id].clone(),
        p_x: law.x_given(id)?,
        p_v: law.v_given(id)?,
        alpha_cond: kernel_from_pairs(&forward)?,
        reverse_cond: kernel_from_pairs(&backward)?,
    })
}

impl ConditionalEnsemble {
    /// `max |α_S(c|a) P_S[X=a] - P_S[X=a|V=c] P_S[V=c]|`; zero up to rounding.
    pub fn bayes_gap(&self) -> f64 {
        let mut gap: f64 = 0.0;
        for (a, pa) in self.p_x.iter() {
            for (c, pc) in self.p_v.iter() {
                let f = self.alpha_cond.prob(a, c).unwrap_or(0.0) * pa;
                let r = self.reverse_cond.prob(c, a).unwrap_or(0.0) * pc;
                gap = gap.max((f - r).abs());
            }
        }
        gap
    }
}

/// Per-velocity Bayes defect for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaReport {
    pub configuration: SpaceConfiguration,
    pub velocities: Vec<i64>,
    pub delta: Vec<f64>,
    /// `Σ_a α(a+c|a) P_S[X=a]` per velocity.
    pub bayes_part: Vec<f64>,
    pub sum: f64,
    /// `max_c |P_S[V=c] - bayes_part(c) - δ(c)|`.
    pub reconstruction_residual: f64,
}

impl DeltaReport {
    pub fn max_abs(&self) -> f64 {
        self.delta.iter().fold(0.0, |m, d| m.max(d.abs()))
    }

    pub fn min(&self) -> f64 {
        self.delta.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn in_range(&self) -> bool {
        self.delta.iter().all(|d| (-1.0..=1.0).contains(d))
    }
}

fn velocity_labels(alpha: &TransitionKernel) -> Vec<i64> {
    let set: BTreeSet<i64> = alpha
        .from_support()
        .iter()
        .flat_map(|&a| alpha.to_support().iter().map(move |&b| b - a))
        .collect();
    set.into_iter().collect()
}

fn bayes_term(alpha: &TransitionKernel, xs: &BTreeMap<i64, f64>, c: i64) -> Result<f64> {
    let mut s = 0.0;
    for (&a, &pa) in xs {
        if pa > 0.0 {
            s += alpha.prob(a, a + c)? * pa;
        }
    }
    Ok(s)
}

/// `δ(c) = P[S]^{-1} Σ_{S' ≠ S} [Σ_a α(a+c|a) P[X=a, S'] - P[V=c, S']]`.
///
/// Computed from the other configurations only, so the reconstruction residual
/// is an independent check of the decomposition.
pub fn delta_correction(law: &ParticleLaw, config: &SpaceConfiguration, alpha: &TransitionKernel) -> Result<DeltaReport> {
    let id = law
        .config_id(config)
        .ok_or_else(|| Error::NullEvent(format!("configuration {:?} is not attainable", config.positions)))?;
    delta_at(law, id, alpha)
}

/// Per-configuration Bayes defects `Σ_a α(a+c|a) P[X=a, S'] - P[V=c, S']` on shared labels.
struct DefectTerms {
    velocities: Vec<i64>,
    terms: Vec<Vec<f64>>,
}

impl DefectTerms {
    fn new(law: &ParticleLaw, alpha: &TransitionKernel) -> Result<Self> {
        let velocities = velocity_labels(alpha);
        let terms = (0..law.configurations().len())
            .map(|k| {
                let xs = law.x_and_config(k);
                let vs = law.v_and_config(k);
                if let Some((&c, _)) = vs.iter().find(|(c, p)| **p > 0.0 && velocities.binary_search(c).is_err()) {
                    return Err(Error::Inconsistent(format!("velocity {c} is outside the kernel's range")));
                }
                velocities
                    .iter()
                    .map(|&c| Ok(bayes_term(alpha, &xs, c)? - vs.get(&c).copied().unwrap_or(0.0)))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { velocities, terms })
    }

    fn report(&self, law: &ParticleLaw, id: usize, alpha: &TransitionKernel) -> Result<DeltaReport> {
        let ps = law.config_prob(id);
        if ps <= 0.0 {
            return Err(Error::NullEvent("configuration has zero probability".into()));
        }
        let mut delta = vec![0.0; self.velocities.len()];
        for (_, term) in self.terms.iter().enumerate().filter(|&(k, _)| k != id) {
            delta.iter_mut().zip(term).for_each(|(d, t)| *d += t);
        }
        delta.iter_mut().for_each(|d| *d /= ps);

        let xs = law.x_and_config(id);
        let vs = law.v_and_config(id);
        let mut bayes_part = Vec::with_capacity(delta.len());
        let mut residual: f64 = 0.0;
        for (&c, d) in self.velocities.iter().zip(&delta) {
            let b = bayes_term(alpha, &xs, c)? / ps;
            let pv = vs.get(&c).copied().unwrap_or(0.0) / ps;
            residual = residual.max((pv - b - d).abs());
            bayes_part.push(b);
        }
        Ok(DeltaReport {
            configuration: law.configurations()[id].clone(),
            velocities: self.velocities.clone(),
            sum: delta.iter().sum(),
            delta,
            bayes_part,
            reconstruction_residual: residual,
        })
    }
}

pub fn delta_at(law: &ParticleLaw, id: usize, alpha: &TransitionKernel) -> Result<DeltaReport> {
    DefectTerms::new(law, alpha)?.report(law, id, alpha)
}

/// Defect reports for every attainable configuration, in configuration order.
pub fn delta_reports(law: &ParticleLaw, alpha: &TransitionKernel, exec: Exec) -> Result<Vec<DeltaReport>> {
    let terms = DefectTerms::new(law, alpha)?;
    exec.map(law.configurations().len(), |id| terms.report(law, id, alpha)).into_iter().collect()
}

/// Same contract on a law built from binned Wiener walkers; labels are bin indices.
pub fn binned_delta_model_b(
    binned: &ParticleLaw,
    config: &SpaceConfiguration,
    alpha: &TransitionKernel,
) -> Result<DeltaReport> {
    delta_correction(binned, config, alpha)
}

/// Which forward kernel feeds the single-space comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelChoice {
    /// Unconditional `α` forward, unconditional `P[X | V]` backward.
    Unconditional,
    /// `α_S` forward, `P_S[X | V]` backward.
    Conditional,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViolationReport {
    pub kernel: KernelChoice,
    pub max_gap: f64,
    pub worst: Option<(i64, i64)>,
}

/// `max_{a,c} |α(a+c|a) P_S[X=a] - P[X=a|V=c] P_S[V=c]|`.
pub fn single_space_violation(
    ensemble: &ConditionalEnsemble,
    law: &ParticleLaw,
    alpha: &TransitionKernel,
    kernel: KernelChoice,
) -> Result<ViolationReport> {
    let (forward, backward) = match kernel {
        KernelChoice::Unconditional => {
            let mut pairs = BTreeMap::new();
            for id in 0..law.configurations().len() {
                for &(x, y, p) in law.cells(id) {
                    *pairs.entry((y - x, x)).or_insert(0.0) += p;
                }
            }
            (crate::particle::velocity_kernel(alpha)?, kernel_from_pairs(&pairs)?)
        }
        KernelChoice::Conditional => (ensemble.alpha_cond.clone(), ensemble.reverse_cond.clone()),
    };
    let mut report = ViolationReport { kernel, max_gap: 0.0, worst: None };
    for (a, pa) in ensemble.p_x.iter() {
        for (c, pc) in ensemble.p_v.iter() {
            let f = forward.prob(a, c)? * pa;
            let b = backward.prob(c, a).unwrap_or(0.0) * pc;
            let gap = (f - b).abs();
            if gap > report.max_gap {
                report.max_gap = gap;
                report.worst = Some((a, c));
            }
        }
    }
    Ok(report)
}

/// `max_c |P_S[V=c] - Σ_a k(c|a) P_S[X=a]|` for a position-to-velocity kernel `k`.
pub fn direct_defect(ensemble: &ConditionalEnsemble, velocity_kernel: &TransitionKernel) -> Result<f64> {
    let pushed = crate::prob::bayes_marginal(velocity_kernel, &ensemble.p_x)?;
    let labels: BTreeSet<i64> = pushed.support().iter().chain(ensemble.p_v.support()).copied().collect();
    Ok(labels.into_iter().fold(0.0, |m, c| m.max((ensemble.p_v.prob(c) - pushed.prob(c)).abs())))
}

/// Export record for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RemovalReport {
    pub configuration: SpaceConfiguration,
    pub p_x: FiniteDistribution,
    pub p_v: FiniteDistribution,
    pub velocities: Vec<i64>,
    pub delta: Vec<f64>,
    pub delta_sum: f64,
    pub reconstruction_residual: f64,
    pub violation: f64,
}

pub fn removal_report(law: &ParticleLaw, id: usize, alpha: &TransitionKernel) -> Result<RemovalReport> {
    let ens = ensemble_at(law, id)?;
    let delta = delta_at(law, id, alpha)?;
    let violation = single_space_violation(&ens, law, alpha, KernelChoice::Unconditional)?;
    Ok(RemovalReport {
        configuration: ens.configuration,
        p_x: ens.p_x,
        p_v: ens.p_v,
        velocities: delta.velocities,
        delta: delta.delta,
        delta_sum: delta.sum,
        reconstruction_residual: delta.reconstruction_residual,
        violation: violation.max_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::particle::{build_joint_law, random_selection, velocity_kernel, SelectionKernel};
    use crate::prob::{FiniteDistribution, RngSeed};
    use crate::space::{LatticeWalkers, RandomWalkParams, DEFAULT_CAP};
    use proptest::prelude::*;
    use std::collections::HashMap;

    fn fixture() -> (ParticleLaw, TransitionKernel) {
        let model = LatticeWalkers::new(RandomWalkParams::iid(2, 0.5).unwrap(), 1);
        let law = build_joint_law(&model, &SelectionKernel::IidUniform, 0, DEFAULT_CAP).unwrap();
        let alpha = law.alpha().unwrap();
        (law, alpha)
    }

    /// Brute force over step sequences, picks and the final step, with no shared code.
    fn oracle_delta(target: &[i64]) -> HashMap<i64, f64> {
        let mut joint: HashMap<(Vec<i64>, i64, i64), f64> = HashMap::new();
        for s0 in [-1i64, 1] {
            for s1 in [-1i64, 1] {
                for i in 0..2 {
                    for j in 0..2 {
                        for step in [-1i64, 1] {
                            let s = [s0, s1];
                            let x = s[i] - s[0];
                            let v = s[j] + step - s[i];
                            *joint.entry((vec![s0, s1], x, v)).or_insert(0.0) += 0.25 * 0.25 * 0.5;
                        }
                    }
                }
            }
        }
        let mut px: HashMap<i64, f64> = HashMap::new();
        let mut pxv: HashMap<(i64, i64), f64> = HashMap::new();
        for ((_, x, v), p) in &joint {
            *px.entry(*x).or_default() += p;
            *pxv.entry((*x, *v)).or_default() += p;
        }
        let alpha = |a: i64, c: i64| pxv.get(&(a, c)).copied().unwrap_or(0.0) / px[&a];
        let mut out = HashMap::new();
        for c in -6..=6 {
            let mut acc = 0.0;
            for ((cfg, x, v), p) in &joint {
                if cfg.as_slice() != target {
                    acc += alpha(*x, c) * p;
                    if *v == c {
                        acc -= p;
                    }
                }
            }
            out.insert(c, acc / 0.25);
        }
        out
    }

    #[test]
    fn degenerate_space_has_no_defect() {
        let model = LatticeWalkers::new(RandomWalkParams::iid(2, 0.5).unwrap(), 0);
        let law = build_joint_law(&model, &SelectionKernel::IidUniform, 0, DEFAULT_CAP).unwrap();
        let alpha = law.alpha().unwrap();
        let s = SpaceConfiguration::new(vec![0, 0], 0);
        let ens = condition_on_configuration(&law, &s).unwrap();
        assert_eq!(ens.p_x, law.x_marginal().unwrap());
        assert_eq!(ens.p_v, law.v_marginal().unwrap());
        let rep = delta_correction(&law, &s, &alpha).unwrap();
        assert!(rep.delta.iter().all(|&d| d == 0.0));
        let viol = single_space_violation(&ens, &law, &alpha, KernelChoice::Unconditional).unwrap();
        assert!(viol.max_gap < 1e-15);
    }

    #[test]
    fn conditioning_matches_table_ratios() {
        let (law, _) = fixture();
        let s = SpaceConfiguration::new(vec![1, -1], 1);
        let ens = condition_on_configuration(&law, &s).unwrap();
        // Origin at 1, other walker at -1: X is 0 or -2 with equal odds.
        assert_eq!(ens.p_x.support(), &[-2, 0]);
        assert_eq!(ens.p_x.probs(), &[0.5, 0.5]);
        // V = s_j + step - s_i over i, j, step: eight equally likely outcomes.
        let expected = [(-3, 1.0), (-1, 3.0), (1, 3.0), (3, 1.0)];
        for (c, k) in expected {
            assert!((ens.p_v.prob(c) - k / 8.0).abs() < 1e-15, "c = {c}");
        }
        assert!(ens.bayes_gap() < 1e-15);
        assert!(condition_on_configuration(&law, &SpaceConfiguration::new(vec![3, 1], 1)).is_err());
    }

    #[test]
    fn delta_matches_brute_force() {
        let (law, alpha) = fixture();
        for cfg in law.configurations() {
            let rep = delta_correction(&law, cfg, &alpha).unwrap();
            let oracle = oracle_delta(&cfg.positions);
            for (c, d) in rep.velocities.iter().zip(&rep.delta) {
                assert!((d - oracle[c]).abs() < 1e-12, "{:?} c={c}: {d} vs {}", cfg.positions, oracle[c]);
            }
            assert!(rep.sum.abs() < 1e-12);
            assert!(rep.reconstruction_residual < 1e-12);
            assert!(rep.in_range());
        }
        let overlap = delta_correction(&law, &SpaceConfiguration::new(vec![1, 1], 1), &alpha).unwrap();
        assert!(overlap.max_abs() > 1e-3 && overlap.min() < 0.0);
    }

    #[test]
    fn violation_is_positive_and_vanishes_with_conditional_kernel() {
        let (law, alpha) = fixture();
        let ens = condition_on_configuration(&law, &SpaceConfiguration::new(vec![1, 1], 1)).unwrap();
        let u = single_space_violation(&ens, &law, &alpha, KernelChoice::Unconditional).unwrap();
        assert!(u.max_gap > 1e-3);
        // Here X = 0 surely and P_S[V=1] = 1/2.
        let pv1 = 0.5;
        let vk = velocity_kernel(&alpha).unwrap();
        let px_given_v = {
            let all = law.velocity_law().unwrap();
            all.probability(|o| o[1] == 0 && o[2] == 1) / all.probability(|o| o[2] == 1)
        };
        let gap_at = (vk.prob(0, 1).unwrap() - px_given_v * pv1).abs();
        assert!(gap_at <= u.max_gap + 1e-15);
        let c = single_space_violation(&ens, &law, &alpha, KernelChoice::Conditional).unwrap();
        assert!(c.max_gap < 1e-15);
        assert!(direct_defect(&ens, &ens.alpha_cond).unwrap() < 1e-15);
    }

    #[test]
    fn removal_leaves_walker_parameters_untouched() {
        let params = RandomWalkParams::from_p_right(vec![0.3, 0.6, 0.45]).unwrap();
        let before = params.clone();
        let model = LatticeWalkers::new(params, 2);
        let law = build_joint_law(&model, &SelectionKernel::IidUniform, 1, DEFAULT_CAP).unwrap();
        let alpha = law.alpha().unwrap();
        for id in 0..law.configurations().len() {
            let _ = removal_report(&law, id, &alpha).unwrap();
        }
        let bits = |p: &RandomWalkParams| p.p_right().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&model.params), bits(&before));
        assert_eq!(model.params, before);
    }

    proptest! {
        #[test]
        fn reconstruction_and_zero_sum(seed in any::<u64>(), m in 2usize..4, n in 1u64..3) {
            let mut rng = RngSeed::new(seed, 0).rng();
            let ps: Vec<f64> = (0..m).map(|_| rand::Rng::random_range(&mut rng, 0.1..0.9)).collect();
            let init = (0..m).map(|k| if k == 0 { FiniteDistribution::uniform(&[-1, 1]).unwrap() } else { FiniteDistribution::point_mass(0) }).collect();
            let model = LatticeWalkers::new(RandomWalkParams::new(ps, 1, init).unwrap(), n);
            let sel = random_selection(m, &mut rng);
            let law = build_joint_law(&model, &sel, 0, DEFAULT_CAP).unwrap();
            let alpha = law.alpha().unwrap();
            for rep in delta_reports(&law, &alpha, Exec::Sequential).unwrap() {
                prop_assert!(rep.reconstruction_residual < 1e-10);
                prop_assert!(rep.sum.abs() < 1e-10);
                prop_assert!(rep.in_range());
            }
        }
    }
}
