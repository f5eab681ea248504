//! One pipeline per experiment kind. Each returns a serializable report, CSV tables and checks.

use nalgebra::DMatrix;
use randspace::bounds::{
    binned_eur_model_b, eur_adversarial_search, verify_eur, BinnedEurRow, BinnedFixture, EurBound, EurCheck,
    EurFixture, SearchReport,
};
use randspace::geometry::{
    exhaustive_nng_check, find_nng_asymmetry, find_t_triangle_violation, AsymmetryWitness, ExhaustiveNngReport,
    Triangulation, TriangleWitness, TriangulationDump,
};
use randspace::hilbert::{
    build_velocity_operator, commutator_certificate, hilbert_dimension, interference_decomposition,
    maassen_certificate, synthesize_overlap_unitary, Battery, HermitianOperator, StateVector, UnitaryMatrix,
};
use randspace::par::Exec;
use randspace::particle::{
    build_joint_law, position_pair_labels, selection_overlap_target, velocity_pair_labels, SelectionKernel,
};
use randspace::removal::{ensemble_at, removal_report, RemovalReport};
use randspace::ruler::{dense_limit_csv, dense_limit_study, flip_distribution, DenseLimitRow, FlipDistribution};
use randspace::space::{sample_wiener_ensemble, BinnedWiener, LatticeWalkers, DEFAULT_CAP};
use randspace::{FiniteDistribution, RngSeed, TransitionKernel};
use serde::Serialize;

use crate::config::{ExperimentConfig, Kind, Validated};
use crate::CliError;

const E: f64 = std::f64::consts::E;
/// Iteration budget for unitary synthesis.
const SYNTH_ITER: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check { name: name.to_string(), passed, detail }
}

pub struct Outcome {
    pub payload: serde_json::Value,
    pub tables: Vec<(String, String)>,
    pub checks: Vec<Check>,
}

fn outcome<T: Serialize>(report: &T, tables: Vec<(String, String)>, checks: Vec<Check>) -> Outcome {
    Outcome { payload: serde_json::to_value(report).expect("reports serialize"), tables, checks }
}

pub fn run_kind(cfg: &ExperimentConfig, v: &Validated) -> Result<Outcome, CliError> {
    let seed = RngSeed::new(cfg.seed, 0);
    match cfg.kind {
        Kind::ModelA => model_a(cfg, v, seed),
        Kind::ModelB => model_b(cfg, v, seed),
        Kind::Eur => eur(cfg, v, seed),
        Kind::Hilbert => hilbert(cfg, v, seed),
        Kind::Distances => distances(cfg, seed),
        Kind::Ruler => ruler(cfg, v),
    }
}

fn joined(xs: &[i64]) -> String {
    xs.iter().map(i64::to_string).collect::<Vec<_>>().join(";")
}

fn model_target(selection: &SelectionKernel, m: usize) -> Result<DMatrix<f64>, CliError> {
    let t = selection_overlap_target(selection, m)?;
    Ok(DMatrix::from_fn(m * m, m * m, |r, c| t[r][c]))
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigRecord {
    pub configuration: Vec<i64>,
    pub probability: f64,
    pub removal: RemovalReport,
    pub bound: EurBound,
    pub eur: EurCheck,
    pub commutator_norm: Option<f64>,
    pub overlap_bound_holds: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct HilbertSummary {
    pub dim: usize,
    pub synthesis_residual: f64,
    pub c_star: f64,
    pub battery: Battery,
}

#[derive(Debug, Clone, Serialize)]
pub struct FocusRecord {
    pub configuration: Vec<i64>,
    pub max_abs_delta: f64,
    pub min_delta: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelAReport {
    pub walkers: usize,
    pub steps: u64,
    pub origin: usize,
    pub selection: SelectionKernel,
    pub x_marginal: FiniteDistribution,
    pub v_marginal: FiniteDistribution,
    pub alpha: TransitionKernel,
    pub configurations: Vec<ConfigRecord>,
    pub hilbert: Option<HilbertSummary>,
    pub hilbert_note: Option<String>,
    pub focus: Option<FocusRecord>,
}

/// Synthesized pair-space unitary for the selection, or the reason there is none.
fn model_unitary(selection: &SelectionKernel, m: usize, seed: RngSeed) -> Result<Result<(UnitaryMatrix, f64), String>, CliError> {
    if m < 2 {
        return Ok(Err("a single walker has no pair representation".into()));
    }
    match synthesize_overlap_unitary(&model_target(selection, m)?, SYNTH_ITER, 1e-12, seed) {
        Ok(s) if s.residual < 1e-8 => Ok(Ok((s.unitary, s.residual))),
        Ok(s) => Ok(Err(format!("no unitary found for the overlap target (residual {:.3e})", s.residual))),
        Err(randspace::Error::Validation { reason, .. }) => Ok(Err(format!("overlap target rejected: {reason}"))),
        Err(e) => Err(e.into()),
    }
}

fn model_a(cfg: &ExperimentConfig, v: &Validated, seed: RngSeed) -> Result<Outcome, CliError> {
    let params = v.walk.clone().expect("validated");
    let m = params.walkers();
    let model = LatticeWalkers::new(params, cfg.walkers.steps);
    let origin = cfg.walkers.origin;
    let law = build_joint_law(&model, &v.selection, origin, DEFAULT_CAP)?;
    let alpha = law.alpha()?;
    let exec = Exec::default();

    let unitary = model_unitary(&v.selection, m, seed.fork(1))?;
    let records = exec
        .map(law.configurations().len(), |id| -> Result<ConfigRecord, CliError> {
            let config = &law.configurations()[id];
            let bound = EurBound::compute(&model, &law, config, E)?;
            let eur = verify_eur(&ensemble_at(&law, id)?, &bound);
            let (commutator_norm, overlap_bound_holds) = match &unitary {
                Ok((u, _)) => {
                    let to_f = |ls: Vec<i64>| ls.into_iter().map(|l| l as f64).collect::<Vec<_>>();
                    let x = HermitianOperator::diagonal(&to_f(position_pair_labels(config)));
                    let vel = build_velocity_operator(u, &to_f(velocity_pair_labels(config)))?;
                    (Some(commutator_certificate(&x, &vel)?), Some(u.c_star() <= (-bound.d / 2.0).exp() + 1e-9))
                }
                Err(_) => (None, None),
            };
            Ok(ConfigRecord {
                configuration: config.positions.clone(),
                probability: law.config_prob(id),
                removal: removal_report(&law, id, &alpha)?,
                bound,
                eur,
                commutator_norm,
                overlap_bound_holds,
            })
        })
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;

    let (hilbert, hilbert_note) = match &unitary {
        Ok((u, residual)) => {
            let rep = maassen_certificate(u, 0.0, E, cfg.hilbert.trials, seed.fork(2), exec)?;
            (Some(HilbertSummary { dim: u.dim(), synthesis_residual: *residual, c_star: rep.c_star, battery: rep.battery }), None)
        }
        Err(note) => (None, Some(note.clone())),
    };
    let focus = match &v.focus {
        Some(f) => {
            let rec = records
                .iter()
                .find(|r| r.configuration == f.positions)
                .ok_or_else(|| CliError::Core(randspace::Error::NullEvent(format!("focus {:?} is not attainable", f.positions))))?;
            Some(FocusRecord {
                configuration: f.positions.clone(),
                max_abs_delta: rec.removal.delta.iter().fold(0.0, |m, d| m.max(d.abs())),
                min_delta: rec.removal.delta.iter().copied().fold(f64::INFINITY, f64::min),
            })
        }
        None => None,
    };

    let max_residual = records.iter().map(|r| r.removal.reconstruction_residual).fold(0.0, f64::max);
    let max_sum = records.iter().map(|r| r.removal.delta_sum.abs()).fold(0.0, f64::max);
    let min_slack = records.iter().map(|r| r.eur.slack).fold(f64::INFINITY, f64::min);
    let mut checks = vec![
        check("reconstruction", max_residual <= 1e-10, format!("max residual {max_residual:.3e}")),
        check("delta-sum", max_sum <= 1e-10, format!("max |sum delta| {max_sum:.3e}")),
        check("eur", records.iter().all(|r| r.eur.holds), format!("min slack {min_slack:.6e}")),
    ];
    if let Some(h) = &hilbert {
        let holds = records.iter().all(|r| r.overlap_bound_holds == Some(true));
        checks.push(check("overlap-bound", holds, format!("c* = {:.9}", h.c_star)));
        checks.push(check("battery", h.battery.violations == 0, format!("{} violations in {} states", h.battery.violations, h.battery.trials)));
    }

    let mut summary = String::from("configuration,probability,h_x,h_v,d,slack,max_abs_delta,residual\n");
    let mut deltas = String::from("configuration,velocity,delta\n");
    for r in &records {
        let max_abs = r.removal.delta.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        summary.push_str(&format!(
            "{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.3e}\n",
            joined(&r.configuration),
            r.probability,
            r.eur.h_x,
            r.eur.h_v,
            r.bound.d,
            r.eur.slack,
            max_abs,
            r.removal.reconstruction_residual
        ));
        for (c, d) in r.removal.velocities.iter().zip(&r.removal.delta) {
            deltas.push_str(&format!("{},{c},{d:.12e}\n", joined(&r.configuration)));
        }
    }
    let report = ModelAReport {
        walkers: m,
        steps: cfg.walkers.steps,
        origin,
        selection: v.selection.clone(),
        x_marginal: law.x_marginal()?,
        v_marginal: law.v_marginal()?,
        alpha,
        configurations: records,
        hilbert,
        hilbert_note,
        focus,
    };
    Ok(outcome(&report, vec![("configurations.csv".into(), summary), ("delta.csv".into(), deltas)], checks))
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelRecord {
    pub bins: usize,
    pub walker: usize,
    pub kernel: TransitionKernel,
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentRecord {
    pub walker: usize,
    /// Grid interval index; increments over `[t_k, t_{k+1}]`.
    pub interval: usize,
    pub mean: f64,
    pub var: f64,
    pub expected_var: f64,
    pub z_mean: f64,
    pub z_var: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelBReport {
    pub t1: f64,
    pub t2: f64,
    pub rows: Vec<BinnedEurRow>,
    pub kernels: Vec<KernelRecord>,
    pub samples: usize,
    pub moments: Vec<MomentRecord>,
}

fn model_b(cfg: &ExperimentConfig, v: &Validated, seed: RngSeed) -> Result<Outcome, CliError> {
    let (params, partitions) = v.wiener.clone().expect("validated");
    let w = &cfg.wiener;
    let exec = Exec::default();
    let fixture = BinnedFixture {
        params: params.clone(),
        t1: w.t1,
        t2: w.t2,
        lo: w.lo,
        hi: w.hi,
        origin: cfg.walkers.origin,
        selection: v.selection.clone(),
    };
    let rows = binned_eur_model_b(&fixture, &w.bins, exec)?;
    let mut kernels = Vec::new();
    for (partition, &bins) in partitions.into_iter().zip(&w.bins) {
        let model = BinnedWiener::new(&params, partition, w.t1, w.t2)?;
        for walker in 0..params.walkers() {
            kernels.push(KernelRecord { bins, walker, kernel: model.kernel(walker).clone() });
        }
    }

    let mut moments = Vec::new();
    if w.samples > 1 {
        let paths = sample_wiener_ensemble(&params, seed.fork(3), w.samples, exec);
        let n = w.samples as f64;
        for walker in 0..params.walkers() {
            for (k, gap) in params.time_grid().windows(2).enumerate() {
                let dt = gap[1] - gap[0];
                let incs: Vec<f64> = paths.iter().map(|p| p[walker][k + 1] - p[walker][k]).collect();
                let mean = incs.iter().sum::<f64>() / n;
                let var = incs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
                moments.push(MomentRecord {
                    walker,
                    interval: k,
                    mean,
                    var,
                    expected_var: dt,
                    z_mean: mean / (dt / n).sqrt(),
                    z_var: (var - dt) / (dt * (2.0 / (n - 1.0)).sqrt()),
                });
            }
        }
    }

    let mut checks = vec![check(
        "binned-eur",
        rows.iter().all(|r| r.holds),
        rows.iter().map(|r| format!("{} bins: slack {:.3e}", r.bins, r.min_slack)).collect::<Vec<_>>().join("; "),
    )];
    if !moments.is_empty() {
        let worst = moments.iter().map(|m| m.z_mean.abs().max(m.z_var.abs())).fold(0.0, f64::max);
        checks.push(check("increment-moments", worst < 3.0, format!("max |z| {worst:.3}")));
    }
    let mut table = String::from("bins,configurations,degenerate,d_min,d_max,min_sum,min_slack,holds\n");
    for r in &rows {
        table.push_str(&format!(
            "{},{},{},{:.12e},{:.12e},{:.12e},{:.12e},{}\n",
            r.bins, r.configurations, r.degenerate, r.d_min, r.d_max, r.min_sum, r.min_slack, r.holds
        ));
    }
    let report = ModelBReport { t1: w.t1, t2: w.t2, rows, kernels, samples: w.samples, moments };
    Ok(outcome(&report, vec![("binned_eur.csv".into(), table)], checks))
}

fn eur(cfg: &ExperimentConfig, v: &Validated, seed: RngSeed) -> Result<Outcome, CliError> {
    let fixture = EurFixture {
        name: format!("p_right={:?} steps={}", cfg.walkers.p_right, cfg.walkers.steps),
        model: LatticeWalkers::new(v.walk.clone().expect("validated"), cfg.walkers.steps),
        origin: cfg.walkers.origin,
        selection: v.selection.clone(),
    };
    let report: SearchReport =
        eur_adversarial_search(&fixture, cfg.eur.budget, seed.fork(4), cfg.eur.kernel, cfg.eur.base, Exec::default())?;
    let checks = vec![
        check("eur-search", report.violations == 0, format!("min slack {:.6e} over {} trials", report.min_slack, report.trials)),
        check("bound-invariant", report.bound_invariant, "D bits identical across preparations".into()),
    ];
    let table = format!(
        "trials,min_sum,min_slack,violations,bound_invariant,worst_d\n{},{:.12e},{:.12e},{},{},{:.12e}\n",
        report.trials, report.min_sum, report.min_slack, report.violations, report.bound_invariant, report.worst.d
    );
    Ok(outcome(&report, vec![("eur_search.csv".into(), table)], checks))
}

#[derive(Debug, Clone, Serialize)]
pub struct RecoveryRecord {
    pub dim: usize,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct HilbertReport {
    pub walkers: usize,
    pub dim: usize,
    pub configuration: Vec<i64>,
    pub d: f64,
    pub flat_commutator_norm: f64,
    pub recovery: Vec<RecoveryRecord>,
    pub model: Option<HilbertSummary>,
    pub model_note: Option<String>,
    pub model_commutator_norm: Option<f64>,
    pub overlap_bound: f64,
    pub interference_states: usize,
    pub interference_max_residual: f64,
    pub interference_max_cross_sum: f64,
}

fn hilbert(cfg: &ExperimentConfig, v: &Validated, seed: RngSeed) -> Result<Outcome, CliError> {
    let params = v.walk.clone().expect("validated");
    let m = params.walkers();
    let dim = hilbert_dimension(m)?;
    let model = LatticeWalkers::new(params, cfg.walkers.steps);
    let law = build_joint_law(&model, &v.selection, cfg.walkers.origin, DEFAULT_CAP)?;
    let id = match &v.focus {
        Some(f) => law
            .config_id(f)
            .ok_or_else(|| CliError::Core(randspace::Error::NullEvent(format!("focus {:?} is not attainable", f.positions))))?,
        // A coincident configuration makes X scalar, so prefer one with spread.
        None => law
            .configurations()
            .iter()
            .position(|c| c.positions.windows(2).any(|w| w[0] != w[1]))
            .unwrap_or(0),
    };
    let config = &law.configurations()[id];
    let d = EurBound::compute(&model, &law, config, E)?.d;
    let exec = Exec::default();
    let to_f = |ls: Vec<i64>| ls.into_iter().map(|l| l as f64).collect::<Vec<_>>();
    let x = HermitianOperator::diagonal(&to_f(position_pair_labels(config)));
    let v_labels = to_f(velocity_pair_labels(config));

    let flat = UnitaryMatrix::fourier(dim);
    let flat_commutator_norm = commutator_certificate(&x, &build_velocity_operator(&flat, &v_labels)?)?;

    let recovery = (2..=cfg.hilbert.max_recover_dim)
        .map(|k| {
            let hidden = UnitaryMatrix::random(k, &mut seed.fork(10 + k as u64).rng());
            let s = synthesize_overlap_unitary(&hidden.moduli_squared(), SYNTH_ITER, 1e-10, seed.fork(100 + k as u64))?;
            Ok(RecoveryRecord { dim: k, residual: s.residual, iterations: s.iterations })
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let (model_summary, model_note, model_commutator_norm, u) = match model_unitary(&v.selection, m, seed.fork(1))? {
        Ok((u, residual)) => {
            let rep = maassen_certificate(&u, d, E, cfg.hilbert.trials, seed.fork(2), exec)?;
            let norm = commutator_certificate(&x, &build_velocity_operator(&u, &v_labels)?)?;
            let summary = HilbertSummary { dim, synthesis_residual: residual, c_star: rep.c_star, battery: rep.battery };
            (Some(summary), None, Some(norm), u)
        }
        Err(note) => (None, Some(note), None, flat.clone()),
    };

    let alpha = u.moduli_squared();
    let per_state = exec.map(cfg.hilbert.interference_states, |k| -> Result<(f64, f64), CliError> {
        let psi = StateVector::random(dim, &mut seed.fork(1000 + k as u64).rng());
        let dec = interference_decomposition(&psi, &u, &alpha, 1e-12)?;
        let resid = (0..dim).map(|j| (dec.born[j] - dec.bayes[j] - dec.interference[j]).abs()).fold(0.0, f64::max);
        Ok((resid, dec.interference.iter().sum::<f64>().abs()))
    });
    let (mut max_resid, mut max_cross) = (0.0f64, 0.0f64);
    for r in per_state {
        let (a, b) = r?;
        max_resid = max_resid.max(a);
        max_cross = max_cross.max(b);
    }

    let overlap_bound = (-d / 2.0).exp();
    let mut checks = vec![
        check("dimension", dim == m * m, format!("{dim} = {m}^2")),
        check(
            "recovery",
            recovery.iter().all(|r| r.residual < 1e-8),
            format!("max residual {:.3e}", recovery.iter().map(|r| r.residual).fold(0.0, f64::max)),
        ),
        check("flat-commutator", flat_commutator_norm > 0.1, format!("norm {flat_commutator_norm:.6}")),
        check("interference", max_resid <= 1e-10 && max_cross <= 1e-10, format!("residual {max_resid:.3e}, cross sum {max_cross:.3e}")),
    ];
    if let Some(s) = &model_summary {
        checks.push(check("battery", s.battery.violations == 0, format!("{} violations in {} states", s.battery.violations, s.battery.trials)));
        checks.push(check("overlap-bound", s.c_star <= overlap_bound + 1e-9, format!("c* {:.9} vs e^(-D/2) {overlap_bound:.9}", s.c_star)));
    }
    let table = format!(
        "dim,d,flat_commutator_norm,model_c_star,overlap_bound,interference_max_residual\n{dim},{d:.12e},{flat_commutator_norm:.12e},{},{overlap_bound:.12e},{max_resid:.3e}\n",
        model_summary.as_ref().map_or("".into(), |s| format!("{:.12e}", s.c_star))
    );
    let report = HilbertReport {
        walkers: m,
        dim,
        configuration: config.positions.clone(),
        d,
        flat_commutator_norm,
        recovery,
        model: model_summary,
        model_note,
        model_commutator_norm,
        overlap_bound,
        interference_states: cfg.hilbert.interference_states,
        interference_max_residual: max_resid,
        interference_max_cross_sum: max_cross,
    };
    Ok(outcome(&report, vec![("hilbert.csv".into(), table)], checks))
}

#[derive(Debug, Clone, Serialize)]
pub struct DistancesReport {
    pub exhaustive: ExhaustiveNngReport,
    pub asymmetry: Option<AsymmetryWitness>,
    pub triangle: Option<TriangleWitness>,
    pub triangulation: Option<TriangulationDump>,
    pub occupied_triangles: usize,
}

fn distances(cfg: &ExperimentConfig, seed: RngSeed) -> Result<Outcome, CliError> {
    let d = &cfg.distances;
    let exec = Exec::default();
    let exhaustive = exhaustive_nng_check(d.window, d.max_points, exec)?;
    let asymmetry = find_nng_asymmetry(d.asymmetry_window, d.asymmetry_max_points)?;
    let triangle = find_t_triangle_violation(
        d.search_window,
        d.search_min_points..=d.search_max_points,
        d.search_trials,
        seed.fork(5),
        exec,
    )?;
    let (triangulation, occupied) = match &triangle {
        Some(w) => {
            let t = Triangulation::build(&w.points)?;
            let occupied = (0..t.len()).filter(|&k| !t.intruders(k).is_empty()).count();
            (Some(t.dump()), occupied)
        }
        None => (None, 0),
    };
    let checks = vec![
        check("nng-axioms", exhaustive.failures == 0, format!("{} sets, {} failures", exhaustive.sets, exhaustive.failures)),
        check(
            "nng-asymmetry-witness",
            asymmetry.is_some(),
            asymmetry.as_ref().map_or("none found".into(), |w| format!("delta {} vs {}", w.delta_ab, w.delta_ba)),
        ),
        check(
            "t-triangle-violation",
            triangle.is_some(),
            triangle.as_ref().map_or("none found".into(), |w| {
                format!("{} + {} < {}", w.violation.d_ac, w.violation.d_cb, w.violation.d_ab)
            }),
        ),
        check("empty-triangles", occupied == 0, format!("{occupied} occupied triangles")),
    ];
    let mut table = String::from("witness,label,x,y\n");
    if let Some(w) = &asymmetry {
        for p in w.points.points() {
            table.push_str(&format!("nng-asymmetry,{},{},{}\n", p.label, p.x, p.y));
        }
    }
    if let Some(w) = &triangle {
        for p in w.points.points() {
            table.push_str(&format!("t-triangle,{},{},{}\n", p.label, p.x, p.y));
        }
    }
    let report = DistancesReport { exhaustive, asymmetry, triangle, triangulation, occupied_triangles: occupied };
    Ok(outcome(&report, vec![("witnesses.csv".into(), table)], checks))
}

#[derive(Debug, Clone, Serialize)]
pub struct RulerReport {
    pub centers: Vec<f64>,
    pub sigma: f64,
    pub mean: f64,
    pub width: f64,
    pub distribution: FlipDistribution,
    pub oracle_max_error: f64,
    pub study: Vec<DenseLimitRow>,
}

fn ruler(cfg: &ExperimentConfig, v: &Validated) -> Result<Outcome, CliError> {
    let (spec, phi) = v.ruler.clone().expect("validated");
    let exec = Exec::default();
    let distribution = flip_distribution(&spec, &phi, true, exec)?;
    let var = spec.sigma().powi(2) + phi.width().powi(2);
    let oracle_max_error = spec
        .centers()
        .iter()
        .zip(&distribution.raw)
        .map(|(&x, &p)| {
            let closed = (-(x - phi.mean()).powi(2) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt();
            (p - closed).abs()
        })
        .fold(0.0, f64::max);
    let study = dense_limit_study(&phi, spec.window(), &cfg.ruler.study, exec)?;
    let decreasing = study.windows(2).all(|w| w[1].max_error < w[0].max_error);
    let fine: Vec<&DenseLimitRow> = study.iter().filter(|r| r.sigma <= phi.width() / 100.0 + 1e-15).collect();
    let checks = vec![
        check("oracle", oracle_max_error <= 1e-9, format!("max deviation {oracle_max_error:.3e}")),
        check("dense-limit-monotone", decreasing, "max error falls along the study".into()),
        check(
            "dense-limit-accuracy",
            !fine.is_empty() && fine.iter().all(|r| r.max_error < 0.01),
            fine.first().map_or("no row with sigma <= width/100".into(), |r| format!("{:.3e} at sigma {}", r.max_error, r.sigma)),
        ),
    ];
    let mut flips = String::from("particle,center,raw,normalized\n");
    for (i, (&x, &p)) in spec.centers().iter().zip(&distribution.raw).enumerate() {
        let n = distribution.normalized.as_ref().map_or(0.0, |d| d.prob(i as i64));
        flips.push_str(&format!("{i},{x:.12e},{p:.12e},{n:.12e}\n"));
    }
    let report = RulerReport {
        centers: spec.centers().to_vec(),
        sigma: spec.sigma(),
        mean: phi.mean(),
        width: phi.width(),
        distribution,
        oracle_max_error,
        study,
    };
    let tables = vec![("flip.csv".into(), flips), ("dense_limit.csv".into(), dense_limit_csv(&report.study))];
    Ok(outcome(&report, tables, checks))
}
