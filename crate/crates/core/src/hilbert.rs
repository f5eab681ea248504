//! Finite Hilbert-space representation of conditioned position and velocity laws.
//!
//! Convention: `⟨x|v⟩ = U[(x, v)]`, so velocity eigenvectors are the columns of `U`
//! and `P[V = v] = |(U† ψ)_v|²`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::par::Exec;
use crate::prob::{entropy_of, FiniteDistribution, RngSeed};

pub type CMatrix = DMatrix<Complex64>;

fn op_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: CMatrix,
}

impl HermitianOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(invalid("operator", "matrix must be square"));
        }
        let gap = (&matrix - matrix.adjoint()).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        if gap > 1e-12 {
            return Err(invalid("operator", format!("not Hermitian (gap {gap:.3e})")));
        }
        Ok(Self { matrix })
    }

    /// Diagonal operator; repeated eigenvalues allowed.
    pub fn diagonal(values: &[f64]) -> Self {
        let d = DVector::from_iterator(values.len(), values.iter().map(|&v| Complex64::new(v, 0.0)));
        Self { matrix: CMatrix::from_diagonal(&d) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.matrix.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix {
    matrix: CMatrix,
}

impl UnitaryMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(invalid("unitary", "matrix must be square"));
        }
        let d = matrix.nrows();
        let defect = op_norm(&(&matrix * matrix.adjoint() - CMatrix::identity(d, d)));
        if defect > 1e-10 {
            return Err(invalid("unitary", format!("U U† differs from identity by {defect:.3e}")));
        }
        Ok(Self { matrix })
    }

    pub fn identity(d: usize) -> Self {
        Self { matrix: CMatrix::identity(d, d) }
    }

    /// `F[j][k] = e^{2πi jk/d} / √d`.
    pub fn fourier(d: usize) -> Self {
        let s = 1.0 / (d as f64).sqrt();
        let matrix = CMatrix::from_fn(d, d, |j, k| {
            Complex64::from_polar(s, 2.0 * std::f64::consts::PI * (j * k % d) as f64 / d as f64)
        });
        Self { matrix }
    }

    /// Sends basis vector `k` to basis vector `perm[k]`.
    pub fn permutation(perm: &[usize]) -> Result<Self> {
        let d = perm.len();
        let mut seen = vec![false; d];
        for &p in perm {
            if p >= d || std::mem::replace(&mut seen[p], true) {
                return Err(invalid("permutation", "not a bijection"));
            }
        }
        Ok(Self { matrix: CMatrix::from_fn(d, d, |r, c| if perm[c] == r { Complex64::ONE } else { Complex64::ZERO }) })
    }

    /// Haar-distributed unitary from the QR decomposition of a complex Gaussian matrix.
    pub fn random<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Self {
        let g = CMatrix::from_fn(d, d, |_, _| {
            Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
        });
        let qr = g.qr();
        let (mut q, r) = (qr.q(), qr.r());
        for k in 0..d {
            let z = r[(k, k)];
            let phase = if z.norm() > 0.0 { z / z.norm() } else { Complex64::ONE };
            for row in 0..d {
                q[(row, k)] *= phase;
            }
        }
        Self { matrix: q }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn moduli_squared(&self) -> DMatrix<f64> {
        self.matrix.map(|z| z.norm_sqr())
    }

    /// Largest entry modulus.
    pub fn c_star(&self) -> f64 {
        self.matrix.iter().fold(0.0, |m, z| m.max(z.norm()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: DVector<Complex64>,
}

impl StateVector {
    pub fn new(amps: DVector<Complex64>) -> Result<Self> {
        let n = amps.norm_squared();
        if (n - 1.0).abs() > 1e-12 {
            return Err(invalid("state", format!("squared norm {n}")));
        }
        Ok(Self { amps })
    }

    /// `√p_k e^{iθ_k}`; zero phases when `phases` is `None`.
    pub fn from_probs(probs: &[f64], phases: Option<&[f64]>) -> Result<Self> {
        if let Some(ph) = phases {
            if ph.len() != probs.len() {
                return Err(invalid("phases", format!("expected {} phases", probs.len())));
            }
        }
        if probs.iter().any(|p| *p < 0.0) {
            return Err(invalid("state", "negative probability"));
        }
        let amps = DVector::from_iterator(
            probs.len(),
            probs.iter().enumerate().map(|(k, &p)| Complex64::from_polar(p.sqrt(), phases.map_or(0.0, |ph| ph[k]))),
        );
        Self::new(amps)
    }

    /// Uniformly random pure state.
    pub fn random<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Self {
        let v = DVector::from_fn(d, |_, _| {
            Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
        });
        let n = v.norm();
        Self { amps: v.unscale(n) }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amps
    }

    pub fn position_probs(&self) -> Vec<f64> {
        self.amps.iter().map(|z| z.norm_sqr()).collect()
    }
}

/// Basis of the conditioned space: ordered pairs of walkers, `M²` states.
pub fn hilbert_dimension(m: usize) -> Result<usize> {
    if m < 2 {
        return Err(invalid("M", "need an origin and at least one other walker"));
    }
    Ok(m * m)
}

/// `X̂ = Σ x |x⟩⟨x|` on the canonical basis; outcomes must be distinct.
pub fn build_position_operator(support: &[f64]) -> Result<HermitianOperator> {
    let mut sorted = support.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) || sorted.iter().any(|x| !x.is_finite()) {
        return Err(invalid("support", "outcomes must be distinct finite numbers"));
    }
    Ok(HermitianOperator::diagonal(support))
}

/// `V̂ = U diag(v) U†`.
pub fn build_velocity_operator(u: &UnitaryMatrix, v_support: &[f64]) -> Result<HermitianOperator> {
    if v_support.len() != u.dim() {
        return Err(invalid("v_support", format!("expected {} outcomes", u.dim())));
    }
    let d = HermitianOperator::diagonal(v_support);
    let m = u.matrix() * d.matrix() * u.matrix().adjoint();
    // Symmetrize away rounding so the Hermitian check is exact.
    HermitianOperator::new((&m + m.adjoint()).unscale(2.0))
}

/// Operator norm of `X̂V̂ - V̂X̂`.
pub fn commutator_certificate(x: &HermitianOperator, v: &HermitianOperator) -> Result<f64> {
    if x.dim() != v.dim() {
        return Err(invalid("operators", "dimensions differ"));
    }
    Ok(op_norm(&(x.matrix() * v.matrix() - v.matrix() * x.matrix())))
}

#[derive(Debug, Clone)]
pub struct Synthesis {
    pub unitary: UnitaryMatrix,
    /// `max |(|U|² - target)|`.
    pub residual: f64,
    pub iterations: usize,
    pub restarts: usize,
}

fn check_doubly_stochastic(target: &DMatrix<f64>) -> Result<()> {
    if !target.is_square() || target.is_empty() {
        return Err(invalid("target", "must be a non-empty square matrix"));
    }
    if target.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(invalid("target", "entries must be non-negative"));
    }
    for (k, row) in target.row_iter().enumerate() {
        if (row.sum() - 1.0).abs() > 1e-9 {
            return Err(invalid("target", format!("row {k} sums to {}", row.sum())));
        }
    }
    for (k, col) in target.column_iter().enumerate() {
        if (col.sum() - 1.0).abs() > 1e-9 {
            return Err(invalid("target", format!("column {k} sums to {}", col.sum())));
        }
    }
    Ok(())
}

fn polar_factor(m: &CMatrix) -> CMatrix {
    let svd = m.clone().svd(true, true);
    svd.u.expect("requested") * svd.v_t.expect("requested")
}

fn residual(u: &CMatrix, target: &DMatrix<f64>) -> f64 {
    u.iter().zip(target.iter()).fold(0.0, |m, (z, t)| m.max((z.norm_sqr() - t).abs()))
}

/// Alternating projections between unitaries and matrices with moduli `√target`.
///
/// Starts from Fourier phases, then restarts from random phases whenever progress
/// stalls. A residual above `tol` is returned, not raised: not every doubly
/// stochastic matrix is unistochastic.
pub fn synthesize_overlap_unitary(
    target: &DMatrix<f64>,
    max_iter: usize,
    tol: f64,
    seed: RngSeed,
) -> Result<Synthesis> {
    check_doubly_stochastic(target)?;
    let d = target.nrows();
    let moduli = target.map(f64::sqrt);
    let mut rng = seed.rng();
    let with_phases = |phase: &dyn Fn(usize, usize) -> Complex64| {
        CMatrix::from_fn(d, d, |r, c| phase(r, c) * moduli[(r, c)])
    };
    let fourier = UnitaryMatrix::fourier(d);
    let mut start = with_phases(&|r, c| {
        let z = fourier.matrix()[(r, c)];
        z / z.norm()
    });

    let mut best: Option<(CMatrix, f64)> = None;
    let (mut iterations, mut restarts) = (0, 0);
    const STALL: usize = 500;
    while iterations < max_iter {
        let mut current = start;
        let mut checkpoint = f64::INFINITY;
        let mut run_iter = 0;
        loop {
            let u = polar_factor(&current);
            iterations += 1;
            let res = residual(&u, target);
            if best.as_ref().is_none_or(|b| res < b.1) {
                best = Some((u.clone(), res));
            }
            if res < tol || iterations >= max_iter {
                break;
            }
            // Restart only on a genuine plateau; slow linear convergence is kept.
            run_iter += 1;
            if run_iter % STALL == 0 {
                if res > 0.9 * checkpoint {
                    break;
                }
                checkpoint = res;
            }
            current = CMatrix::from_fn(d, d, |r, c| {
                let z = u[(r, c)];
                let phase = if z.norm() > 0.0 { z / z.norm() } else { Complex64::ONE };
                phase * moduli[(r, c)]
            });
        }
        if best.as_ref().is_some_and(|b| b.1 < tol) || iterations >= max_iter {
            break;
        }
        restarts += 1;
        let phases: Vec<f64> = (0..d * d).map(|_| std::f64::consts::TAU * rng.random::<f64>()).collect();
        start = with_phases(&|r, c| Complex64::from_polar(1.0, phases[r * d + c]));
    }
    let (u, res) = best.expect("at least one iteration");
    Ok(Synthesis { unitary: UnitaryMatrix::new(u)?, residual: res, iterations, restarts })
}

/// Born-rule velocity law `|(U† ψ)_v|²`.
pub fn born_velocity(psi: &StateVector, u: &UnitaryMatrix) -> Result<Vec<f64>> {
    if psi.dim() != u.dim() {
        return Err(invalid("state", "dimension differs from the unitary"));
    }
    Ok((u.matrix().adjoint() * psi.amplitudes()).iter().map(|z| z.norm_sqr()).collect())
}

/// Amplitudes `√P[X = x | S]` with optional phases.
pub fn state_from_conditional(p_x: &FiniteDistribution, phases: Option<&[f64]>) -> Result<StateVector> {
    StateVector::from_probs(p_x.probs(), phases)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Battery {
    pub trials: usize,
    pub violations: usize,
    pub min_slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaassenReport {
    pub dim: usize,
    pub c_star: f64,
    /// `e^{-D/2}`.
    pub bound: f64,
    pub overlap_bound_holds: bool,
    pub battery: Battery,
}

/// Entropy sum of a random-state battery against `-2 ln c*`, plus the overlap bound `c* <= e^{-D/2}`.
pub fn maassen_certificate(
    u: &UnitaryMatrix,
    d: f64,
    base: f64,
    trials: usize,
    seed: RngSeed,
    exec: Exec,
) -> Result<MaassenReport> {
    if (base - std::f64::consts::E).abs() > 1e-15 {
        return Err(invalid("base", "the overlap bound is stated for natural logarithms"));
    }
    let c_star = u.c_star();
    let floor = -2.0 * c_star.ln();
    let slacks = exec.map(trials, |t| {
        let psi = StateVector::random(u.dim(), &mut seed.fork(t as u64).rng());
        let hx = entropy_of(&psi.position_probs());
        let hv = entropy_of(&born_velocity(&psi, u).expect("dimensions match"));
        hx + hv - floor
    });
    let violations = slacks.iter().filter(|&&s| s < -1e-10).count();
    let min_slack = slacks.iter().copied().fold(f64::INFINITY, f64::min);
    let bound = (-d / 2.0).exp();
    Ok(MaassenReport {
        dim: u.dim(),
        c_star,
        bound,
        overlap_bound_holds: c_star <= bound + 1e-9,
        battery: Battery { trials, violations, min_slack },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Interference {
    /// `Σ_x α(x, v) |ψ_x|²`.
    pub bayes: Vec<f64>,
    /// `Σ_{x ≠ x'} ψ_x ψ̄_{x'} U_{x'v} Ū_{xv}`, real part.
    pub interference: Vec<f64>,
    pub born: Vec<f64>,
    /// Largest imaginary part left in the cross terms.
    pub imaginary_residue: f64,
}

/// Splits the Born velocity law into its Bayes part and the cross terms.
///
/// `alpha[(x, v)]` must match `|U_{xv}|²` within `tol`.
pub fn interference_decomposition(
    psi: &StateVector,
    u: &UnitaryMatrix,
    alpha: &DMatrix<f64>,
    tol: f64,
) -> Result<Interference> {
    let d = u.dim();
    if psi.dim() != d || alpha.shape() != (d, d) {
        return Err(invalid("interference", "dimensions differ"));
    }
    let mismatch = residual(u.matrix(), alpha);
    if mismatch > tol {
        return Err(Error::Inconsistent(format!("|U|² differs from α by {mismatch:.3e}")));
    }
    let a = psi.amplitudes();
    let um = u.matrix();
    let mut bayes = vec![0.0; d];
    let mut interference = vec![0.0; d];
    let mut imaginary_residue: f64 = 0.0;
    for v in 0..d {
        let mut cross = Complex64::ZERO;
        for x in 0..d {
            bayes[v] += alpha[(x, v)] * a[x].norm_sqr();
            for x2 in (0..d).filter(|&x2| x2 != x) {
                cross += a[x] * a[x2].conj() * um[(x2, v)] * um[(x, v)].conj();
            }
        }
        interference[v] = cross.re;
        imaginary_residue = imaginary_residue.max(cross.im.abs());
    }
    Ok(Interference { bayes, interference, born: born_velocity(psi, u)?, imaginary_residue })
}

/// Exported summary of the representation for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HilbertCertificate {
    pub dim: usize,
    pub c_star: f64,
    pub bound: f64,
    pub overlap_bound_holds: bool,
    pub commutator_norm: f64,
    pub synthesis_residual: f64,
    pub battery: Battery,
}

/// Synthesizes `U` for `target`, builds `X̂`, `V̂` from the pair labels and certifies them.
pub fn model_certificate(
    position_labels: &[i64],
    velocity_labels: &[i64],
    target: &DMatrix<f64>,
    d: f64,
    trials: usize,
    seed: RngSeed,
    exec: Exec,
) -> Result<HilbertCertificate> {
    let synth = synthesize_overlap_unitary(target, 200_000, 1e-12, seed.fork(0))?;
    let to_f = |ls: &[i64]| ls.iter().map(|&l| l as f64).collect::<Vec<_>>();
    let x = HermitianOperator::diagonal(&to_f(position_labels));
    let v = build_velocity_operator(&synth.unitary, &to_f(velocity_labels))?;
    let maassen = maassen_certificate(&synth.unitary, d, std::f64::consts::E, trials, seed.fork(1), exec)?;
    Ok(HilbertCertificate {
        dim: synth.unitary.dim(),
        c_star: maassen.c_star,
        bound: maassen.bound,
        overlap_bound_holds: maassen.overlap_bound_holds,
        commutator_norm: commutator_certificate(&x, &v)?,
        synthesis_residual: synth.residual,
        battery: maassen.battery,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn cm(rows: &[&[f64]]) -> CMatrix {
        CMatrix::from_fn(rows.len(), rows.len(), |r, c| Complex64::new(rows[r][c], 0.0))
    }

    #[test]
    fn dimensions() {
        assert_eq!(hilbert_dimension(2).unwrap(), 4);
        assert_eq!(hilbert_dimension(3).unwrap(), 9);
        assert!(hilbert_dimension(1).is_err());
    }

    #[test]
    fn position_operators() {
        let z = build_position_operator(&[0.0]).unwrap();
        assert_eq!(z.matrix(), &cm(&[&[0.0]]));
        let x = build_position_operator(&[-1.0, 0.0, 1.0]).unwrap();
        assert_eq!(x.eigenvalues(), vec![-1.0, 0.0, 1.0]);
        assert!(build_position_operator(&[1.0, 1.0]).is_err());
    }

    #[test]
    fn operator_validation() {
        assert!(HermitianOperator::new(cm(&[&[0.0, 1.0], &[0.0, 0.0]])).is_err());
        assert!(UnitaryMatrix::new(cm(&[&[1.0, 1.0], &[0.0, 1.0]])).is_err());
        assert!(UnitaryMatrix::new(UnitaryMatrix::fourier(5).matrix().clone()).is_ok());
        let mut rng = RngSeed::new(3, 3).rng();
        assert!(UnitaryMatrix::new(UnitaryMatrix::random(6, &mut rng).matrix().clone()).is_ok());
    }

    #[test]
    fn velocity_operator_spectra() {
        let spec = [-2.0, 0.5, 1.0, 3.0];
        let id = build_velocity_operator(&UnitaryMatrix::identity(4), &spec).unwrap();
        assert_eq!(id, HermitianOperator::diagonal(&spec));
        let p = UnitaryMatrix::permutation(&[2, 0, 3, 1]).unwrap();
        let pv = build_velocity_operator(&p, &spec).unwrap();
        // Basis vector k carries eigenvalue spec[k] and moves to perm[k].
        assert_eq!(pv.matrix()[(2, 2)].re, spec[0]);
        assert_eq!(pv.matrix()[(0, 0)].re, spec[1]);
        let mut rng = RngSeed::new(8, 0).rng();
        let u = UnitaryMatrix::random(4, &mut rng);
        let ev = build_velocity_operator(&u, &spec).unwrap().eigenvalues();
        for (a, b) in ev.iter().zip(spec) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn commutators() {
        let x = HermitianOperator::diagonal(&[0.0, 1.0, 2.0, 3.0]);
        let v_id = build_velocity_operator(&UnitaryMatrix::identity(4), &[0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(commutator_certificate(&x, &v_id).unwrap(), 0.0);
        let f = UnitaryMatrix::fourier(4);
        let v = build_velocity_operator(&f, &[0.0, 1.0, 2.0, 3.0]).unwrap();
        let norm = commutator_certificate(&x, &v).unwrap();
        // Oracle: largest eigenvalue of C†C by power iteration on plain arrays.
        let xm = x.matrix();
        let c = xm * v.matrix() - v.matrix() * xm;
        let g = c.adjoint() * &c;
        let mut w = DVector::from_element(4, Complex64::new(1.0, 0.3));
        let mut lambda = 0.0;
        for _ in 0..500 {
            let next = &g * &w;
            lambda = next.norm() / w.norm();
            w = next.unscale(next.norm());
        }
        assert!(norm > 0.1);
        assert!((norm - lambda.sqrt()).abs() < 1e-8);
        let mut rng = RngSeed::new(5, 5).rng();
        let r = UnitaryMatrix::random(4, &mut rng);
        let rot = |m: &CMatrix| HermitianOperator::new({
            let t = r.matrix() * m * r.matrix().adjoint();
            (&t + t.adjoint()).unscale(2.0)
        }).unwrap();
        let rotated = commutator_certificate(&rot(x.matrix()), &rot(v.matrix())).unwrap();
        assert!((rotated - norm).abs() < 1e-10);
    }

    #[test]
    fn synthesis_trivial_cases() {
        let flat = DMatrix::from_element(4, 4, 0.25);
        let s = synthesize_overlap_unitary(&flat, 100, 1e-12, RngSeed::new(0, 0)).unwrap();
        assert!(s.residual < 1e-12);
        let perm = UnitaryMatrix::permutation(&[1, 2, 0]).unwrap().moduli_squared();
        let s = synthesize_overlap_unitary(&perm, 100, 1e-12, RngSeed::new(0, 0)).unwrap();
        assert!(s.residual < 1e-15);
        let lopsided = DMatrix::from_row_slice(2, 2, &[0.9, 0.1, 0.2, 0.8]);
        assert!(synthesize_overlap_unitary(&lopsided, 100, 1e-12, RngSeed::new(0, 0)).is_err());
    }

    #[test]
    fn synthesis_recovers_hidden_unitaries() {
        for d in 2..=6 {
            let mut rng = RngSeed::new(42, d as u64).rng();
            let hidden = UnitaryMatrix::random(d, &mut rng);
            let s = synthesize_overlap_unitary(&hidden.moduli_squared(), 200_000, 1e-10, RngSeed::new(7, d as u64)).unwrap();
            assert!(s.residual < 1e-8, "d = {d}: residual {} after {} iterations", s.residual, s.iterations);
        }
    }

    #[test]
    fn maassen_examples() {
        let flat = maassen_certificate(&UnitaryMatrix::fourier(4), LN_2, std::f64::consts::E, 200, RngSeed::new(1, 0), Exec::default())
            .unwrap();
        assert!((flat.c_star - 0.5).abs() < 1e-15);
        assert!((flat.bound - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-6);
        assert!(flat.overlap_bound_holds);
        assert_eq!(flat.battery.violations, 0);
        let id = maassen_certificate(&UnitaryMatrix::identity(3), 0.1, std::f64::consts::E, 10, RngSeed::new(1, 0), Exec::default())
            .unwrap();
        assert!(!id.overlap_bound_holds);
        assert!(maassen_certificate(&UnitaryMatrix::identity(3), 0.1, 2.0, 10, RngSeed::new(1, 0), Exec::default()).is_err());
        let mut rng = RngSeed::new(2, 0).rng();
        let r = UnitaryMatrix::random(5, &mut rng);
        let rep = maassen_certificate(&r, 0.0, std::f64::consts::E, 1000, RngSeed::new(9, 0), Exec::default()).unwrap();
        assert_eq!(rep.battery.violations, 0);
    }

    #[test]
    fn states_and_born_rule() {
        let pm = FiniteDistribution::new(vec![0, 1, 2], vec![0.0, 1.0, 0.0]).unwrap();
        let psi = state_from_conditional(&pm, None).unwrap();
        assert_eq!(psi.position_probs(), vec![0.0, 1.0, 0.0]);
        let u = FiniteDistribution::uniform(&[0, 1, 2, 3]).unwrap();
        let flat = state_from_conditional(&u, None).unwrap();
        assert!(flat.amplitudes().iter().all(|z| (z.re - 0.5).abs() < 1e-15 && z.im == 0.0));
        let mut rng = RngSeed::new(4, 4).rng();
        let w = UnitaryMatrix::random(4, &mut rng);
        let phases = [0.3, -1.0, 2.0, 0.0];
        let psi = state_from_conditional(&u, Some(&phases)).unwrap();
        let born = born_velocity(&psi, &w).unwrap();
        for v in 0..4 {
            let mut amp = Complex64::ZERO;
            for x in 0..4 {
                amp += w.matrix()[(x, v)].conj() * Complex64::from_polar(0.5, phases[x]);
            }
            assert!((born[v] - amp.norm_sqr()).abs() < 1e-12);
        }
        assert!((born.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn interference_examples() {
        let f = UnitaryMatrix::fourier(4);
        let alpha = f.moduli_squared();
        let basis = StateVector::from_probs(&[0.0, 0.0, 1.0, 0.0], None).unwrap();
        let dec = interference_decomposition(&basis, &f, &alpha, 1e-12).unwrap();
        assert!(dec.interference.iter().all(|x| x.abs() < 1e-15));
        let flat = StateVector::from_probs(&[0.25; 4], None).unwrap();
        let dec = interference_decomposition(&flat, &f, &alpha, 1e-12).unwrap();
        assert!(dec.interference.iter().any(|x| x.abs() > 0.1));
        assert!(dec.interference.iter().sum::<f64>().abs() < 1e-12);
        for v in 0..4 {
            assert!((dec.born[v] - dec.bayes[v] - dec.interference[v]).abs() < 1e-12);
        }
        let wrong = DMatrix::from_element(4, 4, 0.3);
        assert!(matches!(interference_decomposition(&flat, &f, &wrong, 1e-9), Err(Error::Inconsistent(_))));
    }

    fn model_target(m: usize) -> DMatrix<f64> {
        let t = crate::particle::selection_overlap_target(&crate::particle::SelectionKernel::IidUniform, m).unwrap();
        DMatrix::from_fn(m * m, m * m, |r, c| t[r][c])
    }

    #[test]
    fn model_pipeline_saturates_for_two_walkers() {
        let cfg = crate::space::SpaceConfiguration::new(vec![1, -1], 1);
        let labels = crate::particle::position_pair_labels(&cfg);
        assert_eq!(labels, vec![0, -2, 2, 0]);
        let cert = model_certificate(&labels, &labels, &model_target(2), LN_2, 300, RngSeed::new(3, 1), Exec::default())
            .unwrap();
        assert_eq!(cert.dim, 4);
        assert!(cert.synthesis_residual < 1e-12);
        assert!((cert.c_star - 0.5f64.sqrt()).abs() < 1e-9);
        assert!(cert.overlap_bound_holds);
        assert!(cert.commutator_norm > 1e-6);
        assert_eq!(cert.battery.violations, 0);
    }

    #[test]
    fn model_pipeline_three_walkers() {
        let cfg = crate::space::SpaceConfiguration::new(vec![0, 2, -1], 1);
        let labels = crate::particle::position_pair_labels(&cfg);
        let cert = model_certificate(&labels, &labels, &model_target(3), LN_2, 200, RngSeed::new(4, 1), Exec::default())
            .unwrap();
        assert_eq!(cert.dim, 9);
        assert!(cert.synthesis_residual < 1e-10);
        assert!((cert.c_star - (1.0f64 / 3.0).sqrt()).abs() < 1e-6);
        assert!(cert.overlap_bound_holds && cert.battery.violations == 0);
    }

    #[test]
    fn battery_is_identical_across_exec_paths() {
        let f = UnitaryMatrix::fourier(5);
        let a = maassen_certificate(&f, 0.0, std::f64::consts::E, 64, RngSeed::new(1, 1), Exec::Sequential).unwrap();
        let b = maassen_certificate(&f, 0.0, std::f64::consts::E, 64, RngSeed::new(1, 1), Exec::default()).unwrap();
        assert_eq!(a, b);
    }
}
