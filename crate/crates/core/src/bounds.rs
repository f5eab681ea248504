//! Entropic uncertainty constants and their stress harnesses.
//!
//! Given a configuration `S`, the transition terms reduce to each walker's own
//! one-step displacement law `T_i(c | s_i)`. Both constants sum, over displacement
//! labels, the smallest `-T log T` any admissible walker offers (absent labels
//! count as zero), then minimize over positions or velocities.

use rand::Rng;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::par::Exec;
use crate::particle::{build_joint_law, random_selection, ParticleLaw, SelectionKernel};
use crate::prob::{entropy_of, RngSeed};
use crate::removal::{ConditionalEnsemble, KernelChoice};
use crate::space::{
    BinnedWiener, Partition, SpaceConfiguration, WalkerModel, WienerParams, DEFAULT_CAP,
};

/// Tolerance for a single EUR check.
pub const EUR_TOL: f64 = 1e-10;

fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.ln()
    } else {
        0.0
    }
}

/// Which walker realized a summand of a bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermChoice {
    /// Displacement label summed over.
    pub label: i64,
    /// Walker whose transition attains the inner minimum.
    pub walker: usize,
    /// Walker fixing the conditioning position.
    pub reference: usize,
    /// Conditioning position `d` of the velocity scan; equals the position for the first constant.
    pub position: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundAudit {
    /// Position attaining the outer minimum of the first constant.
    pub d1_position: i64,
    pub d1_terms: Vec<TermChoice>,
    /// Velocity attaining the outer minimum of the second constant.
    pub d2_velocity: i64,
    pub d2_terms: Vec<TermChoice>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EurBound {
    pub d1: f64,
    pub d2: f64,
    pub d: f64,
    pub base: f64,
    pub argmins: BoundAudit,
}

/// Displacement laws of every walker at its position in `config`, plus their label union.
struct StepTable {
    relative: Vec<i64>,
    labels: Vec<i64>,
    /// `f[i][k] = -T_i(labels[k]) ln T_i(labels[k])`.
    f: Vec<Vec<f64>>,
}

impl StepTable {
    fn new<W: WalkerModel + ?Sized>(model: &W, config: &SpaceConfiguration, origin: usize) -> Result<Self> {
        let s = &config.positions;
        if s.len() != model.walkers() || origin >= s.len() {
            return Err(invalid("configuration", "length or origin does not match the walkers"));
        }
        let laws = (0..s.len()).map(|i| model.displacement_law(i, s[i])).collect::<Result<Vec<_>>>()?;
        for (i, law) in laws.iter().enumerate() {
            if law.iter().filter(|&&(_, p)| p > 0.0).count() < 2 {
                return Err(invalid(format!("walker {i}"), "deterministic transition leaves the bound undefined"));
            }
        }
        let mut labels: Vec<i64> = laws.iter().flatten().map(|&(c, _)| c).collect();
        labels.sort_unstable();
        labels.dedup();
        let f = laws
            .iter()
            .map(|law| {
                labels
                    .iter()
                    .map(|c| plogp(law.iter().filter(|(d, _)| d == c).map(|(_, p)| p).sum()))
                    .collect()
            })
            .collect();
        let relative = s.iter().map(|x| x - s[origin]).collect();
        Ok(Self { relative, labels, f })
    }

    /// `Σ_k min_{i} f[i][k]` with the walkers allowed by `reference`.
    fn scan(&self, reference: usize, position: i64) -> (f64, Vec<TermChoice>) {
        let mut total = 0.0;
        let mut terms = Vec::with_capacity(self.labels.len());
        for (k, &label) in self.labels.iter().enumerate() {
            let (walker, v) = self
                .f
                .iter()
                .enumerate()
                .map(|(i, row)| (i, row[k]))
                .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
            total += v;
            terms.push(TermChoice { label, walker, reference, position });
        }
        (total, terms)
    }

    fn d1(&self, positions: &[i64]) -> Result<(f64, i64, Vec<TermChoice>)> {
        let mut best: Option<(f64, i64, Vec<TermChoice>)> = None;
        for &a in positions {
            let j = self
                .relative
                .iter()
                .position(|&r| r == a)
                .ok_or_else(|| Error::Inconsistent(format!("position {a} is not a walker of the configuration")))?;
            let (v, terms) = self.scan(j, a);
            if best.as_ref().is_none_or(|b| v < b.0) {
                best = Some((v, a, terms));
            }
        }
        best.ok_or_else(|| Error::NullEvent("no attainable position".into()))
    }

    fn d2(&self, velocities: &[i64]) -> Result<(f64, i64, Vec<TermChoice>)> {
        let mut best: Option<(f64, i64, Vec<TermChoice>)> = None;
        for &c in velocities {
            // Every walker j supplies the conditioning point d = r_j + c; the first one is recorded.
            let (v, terms) = self.scan(0, self.relative[0] + c);
            if best.as_ref().is_none_or(|b| v < b.0) {
                best = Some((v, c, terms));
            }
        }
        best.ok_or_else(|| Error::NullEvent("no attainable velocity".into()))
    }
}

fn check_base(base: f64) -> Result<()> {
    if base.is_finite() && base > 1.0 {
        Ok(())
    } else {
        Err(invalid("base", format!("log base must exceed 1, got {base}")))
    }
}

fn config_id(law: &ParticleLaw, config: &SpaceConfiguration) -> Result<usize> {
    law.config_id(config)
        .ok_or_else(|| Error::NullEvent(format!("configuration {:?} is not attainable", config.positions)))
}

/// First constant: minimum over attainable positions given `S`.
pub fn compute_d1<W: WalkerModel + ?Sized>(
    model: &W,
    law: &ParticleLaw,
    config: &SpaceConfiguration,
    base: f64,
) -> Result<(f64, i64, Vec<TermChoice>)> {
    check_base(base)?;
    let id = config_id(law, config)?;
    let table = StepTable::new(model, config, law.origin())?;
    let (v, a, terms) = table.d1(&law.x_given(id)?.positive_support())?;
    Ok((v / base.ln(), a, terms))
}

/// Second constant: minimum over attainable velocities given `S`.
pub fn compute_d2<W: WalkerModel + ?Sized>(
    model: &W,
    law: &ParticleLaw,
    config: &SpaceConfiguration,
    base: f64,
) -> Result<(f64, i64, Vec<TermChoice>)> {
    check_base(base)?;
    let id = config_id(law, config)?;
    let table = StepTable::new(model, config, law.origin())?;
    let (v, c, terms) = table.d2(&law.v_given(id)?.positive_support())?;
    Ok((v / base.ln(), c, terms))
}

impl EurBound {
    pub fn compute<W: WalkerModel + ?Sized>(
        model: &W,
        law: &ParticleLaw,
        config: &SpaceConfiguration,
        base: f64,
    ) -> Result<Self> {
        let (d1, d1_position, d1_terms) = compute_d1(model, law, config, base)?;
        let (d2, d2_velocity, d2_terms) = compute_d2(model, law, config, base)?;
        Ok(Self {
            d1,
            d2,
            d: d1.min(d2),
            base,
            argmins: BoundAudit { d1_position, d1_terms, d2_velocity, d2_terms },
        })
    }
}

/// `-p ln p - (1-p) ln(1-p)`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid("p", format!("{p} is not a probability")));
    }
    Ok(plogp(p) + plogp(1.0 - p))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EurCheck {
    pub h_x: f64,
    pub h_v: f64,
    pub sum: f64,
    pub bound: f64,
    pub slack: f64,
    pub holds: bool,
}

pub fn verify_eur(ensemble: &ConditionalEnsemble, bound: &EurBound) -> EurCheck {
    let ln_base = bound.base.ln();
    let h_x = entropy_of(ensemble.p_x.probs()) / ln_base;
    let h_v = entropy_of(ensemble.p_v.probs()) / ln_base;
    let sum = h_x + h_v;
    EurCheck { h_x, h_v, sum, bound: bound.d, slack: sum - bound.d, holds: sum >= bound.d - EUR_TOL }
}

/// A walker model with its default preparation.
#[derive(Debug, Clone)]
pub struct EurFixture<W> {
    pub name: String,
    pub model: W,
    pub origin: usize,
    pub selection: SelectionKernel,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub selection: SelectionKernel,
    pub configuration: Vec<i64>,
    pub h_sum: f64,
    pub d: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchReport {
    pub fixture: String,
    /// Recorded only: the entropies never involve the removed kernel, so the bound
    /// claim refers to the unconditional choice whichever mode is logged.
    pub kernel: KernelChoice,
    pub trials: usize,
    pub min_sum: f64,
    pub min_slack: f64,
    pub worst: TrialRecord,
    /// Trials with some `H_S(X) + H_S(V) < D - 1e-9`.
    pub violations: usize,
    /// Whether every trial reproduced the reference `D(S)` bit for bit.
    pub bound_invariant: bool,
}

struct TrialOutcome {
    record: TrialRecord,
    violated: bool,
    d_bits: Vec<u64>,
}

fn run_trial<W: WalkerModel>(
    fixture: &EurFixture<W>,
    trial: usize,
    selection: SelectionKernel,
    base: f64,
) -> Result<TrialOutcome> {
    let law = build_joint_law(&fixture.model, &selection, fixture.origin, DEFAULT_CAP)?;
    let ln_base = base.ln();
    let mut worst: Option<TrialRecord> = None;
    let mut violated = false;
    let mut d_bits = Vec::with_capacity(law.configurations().len());
    for (id, config) in law.configurations().iter().enumerate() {
        let d = EurBound::compute(&fixture.model, &law, config, base)?.d;
        d_bits.push(d.to_bits());
        let h = (entropy_of(law.x_given(id)?.probs()) + entropy_of(law.v_given(id)?.probs())) / ln_base;
        violated |= h < d - 1e-9;
        if worst.as_ref().is_none_or(|w| h - d < w.slack) {
            worst = Some(TrialRecord {
                trial,
                selection: selection.clone(),
                configuration: config.positions.clone(),
                h_sum: h,
                d,
                slack: h - d,
            });
        }
    }
    let record = worst.ok_or_else(|| Error::NullEvent("no attainable configuration".into()))?;
    Ok(TrialOutcome { record, violated, d_bits })
}

fn mutate<R: Rng + ?Sized>(kernel: &SelectionKernel, m: usize, rng: &mut R) -> SelectionKernel {
    let jiggle = |w: &[f64], rng: &mut R| {
        let mut out: Vec<f64> = w
            .iter()
            .map(|&x| {
                let u: f64 = rng.random();
                if u < 0.1 {
                    0.0
                } else if u < 0.2 {
                    rng.random::<f64>()
                } else {
                    x * (0.5 + rng.random::<f64>())
                }
            })
            .collect();
        if out.iter().all(|&x| x == 0.0) {
            out[rng.random_range(0..m)] = 1.0;
        }
        let total: f64 = out.iter().sum();
        out.iter().map(|x| x / total).collect::<Vec<_>>()
    };
    match kernel {
        SelectionKernel::IidUniform => SelectionKernel::IidWeighted { weights: jiggle(&vec![1.0 / m as f64; m], rng) },
        SelectionKernel::IidWeighted { weights } => SelectionKernel::IidWeighted { weights: jiggle(weights, rng) },
        SelectionKernel::Markov { initial, transition } => SelectionKernel::Markov {
            initial: jiggle(initial, rng),
            transition: transition.iter().map(|row| jiggle(row, rng)).collect(),
        },
    }
}

/// Random preparations followed by mutation rounds around the current minimizer.
///
/// Trial 0 is the fixture's own selection. Walker parameters never change.
pub fn eur_adversarial_search<W: WalkerModel>(
    fixture: &EurFixture<W>,
    budget: usize,
    seed: RngSeed,
    kernel: KernelChoice,
    base: f64,
    exec: Exec,
) -> Result<SearchReport> {
    if budget == 0 {
        return Err(invalid("budget", "must be positive"));
    }
    check_base(base)?;
    let m = fixture.model.walkers();
    let random_phase = budget.div_ceil(2);
    let trial_kernel = |t: usize| {
        if t == 0 {
            fixture.selection.clone()
        } else {
            random_selection(m, &mut seed.fork(t as u64).rng())
        }
    };
    let mut outcomes: Vec<TrialOutcome> = exec
        .map(random_phase, |t| run_trial(fixture, t, trial_kernel(t), base))
        .into_iter()
        .collect::<Result<_>>()?;

    const BATCH: usize = 32;
    let mut next = random_phase;
    while next < budget {
        let best = outcomes
            .iter()
            .min_by(|a, b| a.record.slack.total_cmp(&b.record.slack))
            .expect("at least one trial")
            .record
            .selection
            .clone();
        let count = BATCH.min(budget - next);
        let batch: Vec<TrialOutcome> = exec
            .map(count, |k| {
                let t = next + k;
                let candidate = mutate(&best, m, &mut seed.fork(t as u64).rng());
                run_trial(fixture, t, candidate, base)
            })
            .into_iter()
            .collect::<Result<_>>()?;
        outcomes.extend(batch);
        next += count;
    }

    let reference = &outcomes[0].d_bits;
    let bound_invariant = outcomes.iter().all(|o| &o.d_bits == reference);
    let violations = outcomes.iter().filter(|o| o.violated).count();
    let worst = outcomes
        .iter()
        .min_by(|a, b| a.record.slack.total_cmp(&b.record.slack))
        .expect("at least one trial")
        .record
        .clone();
    let min_sum = outcomes.iter().map(|o| o.record.h_sum).fold(f64::INFINITY, f64::min);
    Ok(SearchReport {
        fixture: fixture.name.clone(),
        kernel,
        trials: outcomes.len(),
        min_sum,
        min_slack: worst.slack,
        worst,
        violations,
        bound_invariant,
    })
}

/// Binned uncertainty check for one partition size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinnedEurRow {
    pub bins: usize,
    pub configurations: usize,
    /// Configurations whose bound is undefined because a walker cannot leave its bin.
    pub degenerate: usize,
    pub d_min: f64,
    pub d_max: f64,
    pub min_sum: f64,
    pub min_slack: f64,
    pub holds: bool,
}

/// Model B setup: Wiener walkers observed between `t1` and `t2` on `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinnedFixture {
    pub params: WienerParams,
    pub t1: f64,
    pub t2: f64,
    pub lo: f64,
    pub hi: f64,
    pub origin: usize,
    pub selection: SelectionKernel,
}

/// Builds the binned law for `bins` open-ended cells and checks every configuration.
pub fn binned_eur_model_b(fixture: &BinnedFixture, sizes: &[usize], exec: Exec) -> Result<Vec<BinnedEurRow>> {
    sizes
        .iter()
        .map(|&bins| {
            let partition = Partition::uniform_open(fixture.lo, fixture.hi, bins)?;
            let model = BinnedWiener::new(&fixture.params, partition, fixture.t1, fixture.t2)?;
            let law = build_joint_law(&model, &fixture.selection, fixture.origin, DEFAULT_CAP)?;
            let per_config: Vec<Result<(Option<f64>, f64)>> = exec.map(law.configurations().len(), |id| {
                let config = &law.configurations()[id];
                let h = entropy_of(law.x_given(id)?.probs()) + entropy_of(law.v_given(id)?.probs());
                match EurBound::compute(&model, &law, config, std::f64::consts::E) {
                    Ok(b) => Ok((Some(b.d), h)),
                    Err(Error::Validation { .. }) => Ok((None, h)),
                    Err(e) => Err(e),
                }
            });
            let mut row = BinnedEurRow {
                bins,
                configurations: per_config.len(),
                degenerate: 0,
                d_min: f64::INFINITY,
                d_max: f64::NEG_INFINITY,
                min_sum: f64::INFINITY,
                min_slack: f64::INFINITY,
                holds: true,
            };
            for item in per_config {
                let (d, h) = item?;
                row.min_sum = row.min_sum.min(h);
                let d = match d {
                    Some(d) => d,
                    None => {
                        row.degenerate += 1;
                        0.0
                    }
                };
                row.d_min = row.d_min.min(d);
                row.d_max = row.d_max.max(d);
                row.min_slack = row.min_slack.min(h - d);
                row.holds &= h >= d - 1e-9;
            }
            Ok(row)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::removal::ensemble_at;
    use crate::space::{GaussianLaw, LatticeWalkers, RandomWalkParams};
    use std::f64::consts::{E, LN_2};

    fn lattice(ps: Vec<f64>, n: u64) -> LatticeWalkers {
        LatticeWalkers::new(RandomWalkParams::from_p_right(ps).unwrap(), n)
    }

    #[test]
    fn binary_entropy_values() {
        assert!((binary_entropy(0.5).unwrap() - LN_2).abs() < 1e-16);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!((binary_entropy(0.25).unwrap() - 0.562335).abs() < 1e-6);
        assert!(binary_entropy(1.5).is_err());
    }

    #[test]
    fn iid_closed_form() {
        for k in 1..10 {
            let p = k as f64 / 10.0;
            for m in 2..4 {
                let model = lattice(vec![p; m], 2);
                let law = build_joint_law(&model, &SelectionKernel::IidUniform, 0, DEFAULT_CAP).unwrap();
                let h = binary_entropy(p).unwrap();
                for cfg in law.configurations() {
                    let b = EurBound::compute(&model, &law, cfg, E).unwrap();
                    assert!((b.d1 - h).abs() < 1e-12 && (b.d2 - h).abs() < 1e-12);
                }
            }
        }
    }

    /// Nested minimum over (a, c, i, j) written straight from the case split.
    fn nested_oracle(ps: &[f64], rel: &[i64], positions: &[i64]) -> f64 {
        let mut best = f64::INFINITY;
        for &a in positions {
            let mut total = 0.0;
            for c in [-1i64, 1] {
                let mut inner = f64::INFINITY;
                for &p in ps {
                    for _ in rel.iter().filter(|&&r| r == a) {
                        let t = if c == 1 { p } else { 1.0 - p };
                        inner = inner.min(-t * t.ln());
                    }
                }
                total += inner;
            }
            best = best.min(total);
        }
        best
    }

    #[test]
    fn heterogeneous_walkers_match_oracle() {
        let ps = vec![0.3, 0.5];
        let model = lattice(ps.clone(), 1);
        let law = build_joint_law(&model, &SelectionKernel::IidUniform, 0, DEFAULT_CAP).unwrap();
        for (id, cfg) in law.configurations().iter().enumerate() {
            let rel: Vec<i64> = cfg.positions.iter().map(|x| x - cfg.positions[0]).collect();
            let oracle = nested_oracle(&ps, &rel, &law.x_given(id).unwrap().positive_support());
            let b = EurBound::compute(&model, &law, cfg, E).unwrap();
            assert!((b.d1 - oracle).abs() < 1e-15);
            assert!((b.d2 - oracle).abs() < 1e-15);
            let expected = -(0.5f64 * 0.5f64.ln()) - 0.7 * 0.7f64.ln();
            assert!((b.d - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn argmins_are_true_minima() {
        let model = lattice(vec![0.2, 0.65, 0.4], 1);
        let law = build_joint_law(&model, &SelectionKernel::IidUniform, 0, DEFAULT_CAP).unwrap();
        for cfg in law.configurations() {
            let b = EurBound::compute(&model, &law, cfg, E).unwrap();
            let table = StepTable::new(&model, cfg, 0).unwrap();
            for term in &b.argmins.d1_terms {
                let k = table.labels.iter().position(|&l| l == term.label).unwrap();
                for row in &table.f {
                    assert!(table.f[term.walker][k] <= row[k]);
                }
            }
            let id = law.config_id(cfg).unwrap();
            for a in law.x_given(id).unwrap().positive_support() {
                assert!(table.d1(&[a]).unwrap().0 >= b.d1 * E.ln());
            }
        }
    }

    #[test]
    fn deterministic_walkers_are_rejected() {
        let whole = Partition::new(vec![f64::NEG_INFINITY, f64::INFINITY]).unwrap();
        let params = WienerParams::new(vec![GaussianLaw::new(0.0, 1.0).unwrap(); 2], vec![0.0, 1.0]).unwrap();
        let model = BinnedWiener::new(&params, whole, 0.0, 1.0).unwrap();
        let law = build_joint_law(&model, &SelectionKernel::IidUniform, 0, DEFAULT_CAP).unwrap();
        let cfg = law.configurations()[0].clone();
        assert!(matches!(EurBound::compute(&model, &law, &cfg, E), Err(Error::Validation { .. })));
    }

    #[test]
    fn verify_examples() {
        let model = lattice(vec![0.5, 0.5], 1);
        let law = build_joint_law(&model, &SelectionKernel::IidUniform, 0, DEFAULT_CAP).unwrap();
        for (id, cfg) in law.configurations().iter().enumerate() {
            let b = EurBound::compute(&model, &law, cfg, E).unwrap();
            let check = verify_eur(&ensemble_at(&law, id).unwrap(), &b);
            assert!(check.holds && check.sum >= LN_2 - 1e-12);
            assert!(check.slack > -1e-12);
        }
        let pinned = SelectionKernel::IidWeighted { weights: vec![0.0, 1.0] };
        let law = build_joint_law(&model, &pinned, 0, DEFAULT_CAP).unwrap();
        let ens = ensemble_at(&law, 0).unwrap();
        let b = EurBound::compute(&model, &law, &ens.configuration, E).unwrap();
        let check = verify_eur(&ens, &b);
        assert_eq!(check.h_x, 0.0);
        assert!(check.h_v >= b.d - 1e-12);
    }

    #[test]
    fn search_with_unit_budget_reproduces_verify() {
        let fixture = EurFixture {
            name: "iid-p05".into(),
            model: lattice(vec![0.5, 0.5], 1),
            origin: 0,
            selection: SelectionKernel::IidUniform,
        };
        let report =
            eur_adversarial_search(&fixture, 1, RngSeed::new(1, 0), KernelChoice::Unconditional, E, Exec::Sequential)
                .unwrap();
        let law = build_joint_law(&fixture.model, &fixture.selection, 0, DEFAULT_CAP).unwrap();
        let min_slack = (0..law.configurations().len())
            .map(|id| {
                let b = EurBound::compute(&fixture.model, &law, &law.configurations()[id], E).unwrap();
                verify_eur(&ensemble_at(&law, id).unwrap(), &b).slack
            })
            .fold(f64::INFINITY, f64::min);
        assert_eq!(report.trials, 1);
        assert!((report.min_slack - min_slack).abs() < 1e-15);
    }

    #[test]
    fn search_holds_and_bound_is_invariant() {
        let fixture = EurFixture {
            name: "hetero".into(),
            model: lattice(vec![0.3, 0.5, 0.8], 1),
            origin: 0,
            selection: SelectionKernel::IidUniform,
        };
        let seq =
            eur_adversarial_search(&fixture, 200, RngSeed::new(4, 0), KernelChoice::Conditional, E, Exec::Sequential)
                .unwrap();
        let par = eur_adversarial_search(&fixture, 200, RngSeed::new(4, 0), KernelChoice::Conditional, E, Exec::Parallel)
            .unwrap();
        assert_eq!(seq, par);
        assert_eq!(seq.violations, 0);
        assert!(seq.bound_invariant);
        assert_eq!(seq.trials, 200);
    }

    #[test]
    fn binned_rows_hold() {
        let fixture = BinnedFixture {
            params: WienerParams::new(vec![GaussianLaw::new(0.0, 1.0).unwrap(), GaussianLaw::new(0.5, 0.5).unwrap()], vec![0.0, 1.0])
                .unwrap(),
            t1: 0.0,
            t2: 1.0,
            lo: -2.0,
            hi: 2.0,
            origin: 0,
            selection: SelectionKernel::IidUniform,
        };
        let rows = binned_eur_model_b(&fixture, &[1, 4], Exec::default()).unwrap();
        assert_eq!(rows[0].degenerate, 1);
        assert_eq!(rows[0].d_max, 0.0);
        assert!(rows[1].holds && rows[1].d_min > 0.0);
    }
}
