//! A ruler of localized particles that measures where a test particle sits.
//!
//! Ruler particle `i` has density `g_σ(y - X_i)²`; the probability that it flips is the
//! overlap `∫ g_σ(y - X_i)² |φ(y)|² dy`. Rulers are products of independent Gaussians, so
//! the `N`-dimensional integral reduces to that one-dimensional overlap.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::par::Exec;
use crate::prob::FiniteDistribution;
use crate::quadrature::{integrate_pieces, normal_pdf};

/// Absolute tolerance for every overlap integral.
pub const QUAD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRuler")]
pub struct RulerSpec {
    centers: Vec<f64>,
    sigma: f64,
    window: (f64, f64),
}

#[derive(Deserialize)]
struct RawRuler {
    centers: Vec<f64>,
    sigma: f64,
    window: (f64, f64),
}

impl TryFrom<RawRuler> for RulerSpec {
    type Error = Error;
    fn try_from(r: RawRuler) -> Result<Self> {
        Self::new(r.centers, r.sigma, r.window)
    }
}

impl RulerSpec {
    pub fn new(centers: Vec<f64>, sigma: f64, window: (f64, f64)) -> Result<Self> {
        if centers.is_empty() {
            return Err(invalid("centers", "a ruler needs at least one particle"));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(invalid("sigma", format!("must be positive, got {sigma}")));
        }
        if !(window.0 < window.1 && window.0.is_finite() && window.1.is_finite()) {
            return Err(invalid("window", "must be a finite interval lo < hi"));
        }
        if let Some(x) = centers.iter().find(|&&x| !(window.0..=window.1).contains(&x)) {
            return Err(invalid("centers", format!("{x} lies outside the window")));
        }
        Ok(Self { centers, sigma, window })
    }

    /// `n` particles at the midpoints of equal cells of the window.
    pub fn uniform(n: usize, sigma: f64, window: (f64, f64)) -> Result<Self> {
        let h = (window.1 - window.0) / n.max(1) as f64;
        Self::new((0..n).map(|k| window.0 + (k as f64 + 0.5) * h).collect(), sigma, window)
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }
}

/// Test particle with `|φ(y)|²` normal of the given mean and standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPhi")]
pub struct GaussianWavefunction {
    mean: f64,
    width: f64,
}

#[derive(Deserialize)]
struct RawPhi {
    mean: f64,
    width: f64,
}

impl TryFrom<RawPhi> for GaussianWavefunction {
    type Error = Error;
    fn try_from(r: RawPhi) -> Result<Self> {
        Self::new(r.mean, r.width)
    }
}

impl GaussianWavefunction {
    pub fn new(mean: f64, width: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(invalid("mean", "must be finite"));
        }
        if !(width > 0.0 && width.is_finite()) {
            return Err(invalid("width", format!("must be positive, got {width}")));
        }
        Ok(Self { mean, width })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    /// `|φ(y)|²`.
    pub fn density(&self, y: f64) -> f64 {
        normal_pdf((y - self.mean) / self.width) / self.width
    }
}

fn break_points(center: f64, scale: f64, phi: &GaussianWavefunction) -> Vec<f64> {
    let mut pts = vec![f64::NEG_INFINITY, f64::INFINITY];
    for k in (-12..=12).step_by(2) {
        pts.push(center + k as f64 * scale);
        pts.push(phi.mean + k as f64 * phi.width);
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// `∫ profile(y - center) |φ(y)|² dy` for an arbitrary ruler-particle density.
///
/// `scale` is the profile's spread; it only places quadrature break points.
pub fn flip_probability_with<F>(profile: F, scale: f64, center: f64, phi: &GaussianWavefunction) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(scale > 0.0) {
        return Err(invalid("scale", "must be positive"));
    }
    let q = integrate_pieces(|y| profile(y - center) * phi.density(y), &break_points(center, scale, phi), QUAD_TOL)?;
    Ok(q.value)
}

/// Flip probability of ruler particle `i` (0-based).
pub fn flip_probability(ruler: &RulerSpec, phi: &GaussianWavefunction, i: usize) -> Result<f64> {
    let &center = ruler.centers.get(i).ok_or(Error::Index { index: i, len: ruler.len() })?;
    let s = ruler.sigma;
    flip_probability_with(|u| normal_pdf(u / s) / s, s, center, phi)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlipDistribution {
    pub raw: Vec<f64>,
    pub raw_sum: f64,
    /// Raw values rescaled to sum to one, labelled by particle index.
    pub normalized: Option<FiniteDistribution>,
}

/// Raw overlaps for every particle, plus their renormalization when `normalize` is set.
pub fn flip_distribution(ruler: &RulerSpec, phi: &GaussianWavefunction, normalize: bool, exec: Exec) -> Result<FlipDistribution> {
    let raw = exec.map(ruler.len(), |i| flip_probability(ruler, phi, i)).into_iter().collect::<Result<Vec<_>>>()?;
    let raw_sum = raw.iter().sum();
    let normalized = if normalize {
        Some(FiniteDistribution::normalized(raw.iter().enumerate().map(|(i, &p)| (i as i64, p)))?)
    } else {
        None
    };
    Ok(FlipDistribution { raw, raw_sum, normalized })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DenseLimitRow {
    pub n: usize,
    pub sigma: f64,
    /// `max_i |P_i - |φ(X_i)|²| / |φ(X_i)|²`.
    pub max_error: f64,
    pub mean_error: f64,
    /// Relative error at the ruler particle closest to the test particle's mean.
    pub center_error: f64,
}

/// Relative deviation of flip probabilities from the pointlike-ruler limit `|φ(X_i)|²`.
pub fn dense_limit_study(
    phi: &GaussianWavefunction,
    window: (f64, f64),
    grid: &[(usize, f64)],
    exec: Exec,
) -> Result<Vec<DenseLimitRow>> {
    grid.iter()
        .map(|&(n, sigma)| {
            let ruler = RulerSpec::uniform(n, sigma, window)?;
            let errs = exec
                .map(n, |i| {
                    let target = phi.density(ruler.centers[i]);
                    flip_probability(&ruler, phi, i).map(|p| (p - target).abs() / target)
                })
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
            let nearest = (0..n)
                .min_by(|&a, &b| (ruler.centers[a] - phi.mean).abs().total_cmp(&(ruler.centers[b] - phi.mean).abs()))
                .expect("non-empty ruler");
            Ok(DenseLimitRow {
                n,
                sigma,
                max_error: errs.iter().copied().fold(0.0, f64::max),
                mean_error: errs.iter().sum::<f64>() / n as f64,
                center_error: errs[nearest],
            })
        })
        .collect()
}

pub fn dense_limit_csv(rows: &[DenseLimitRow]) -> String {
    let mut out = String::from("n,sigma,max_error,mean_error\n");
    for r in rows {
        out.push_str(&format!("{},{:.12e},{:.12e},{:.12e}\n", r.n, r.sigma, r.max_error, r.mean_error));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    use crate::prob::RngSeed;

    /// Convolution of two normal densities, written out directly.
    fn oracle(x: f64, mean: f64, sigma: f64, width: f64) -> f64 {
        let v = sigma * sigma + width * width;
        (-(x - mean).powi(2) / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt()
    }

    #[test]
    fn coincident_unit_gaussians() {
        let ruler = RulerSpec::new(vec![0.0], 1.0, (-5.0, 5.0)).unwrap();
        let phi = GaussianWavefunction::new(0.0, 1.0).unwrap();
        let p = flip_probability(&ruler, &phi, 0).unwrap();
        assert!((p - 1.0 / (4.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12);
        assert!((p - 0.282095).abs() < 1e-6);
    }

    #[test]
    fn validation() {
        assert!(RulerSpec::new(vec![], 1.0, (0.0, 1.0)).is_err());
        assert!(RulerSpec::new(vec![0.5], 0.0, (0.0, 1.0)).is_err());
        assert!(RulerSpec::new(vec![2.0], 1.0, (0.0, 1.0)).is_err());
        assert!(GaussianWavefunction::new(0.0, -1.0).is_err());
        let ruler = RulerSpec::new(vec![0.5], 1.0, (0.0, 1.0)).unwrap();
        let phi = GaussianWavefunction::new(0.0, 1.0).unwrap();
        assert!(matches!(flip_probability(&ruler, &phi, 1), Err(Error::Index { index: 1, len: 1 })));
        assert!(serde_json::from_str::<RulerSpec>(r#"{"centers":[3.0],"sigma":1,"window":[0,1]}"#).is_err());
    }

    #[test]
    fn overlap_vanishes_monotonically_with_separation() {
        let phi = GaussianWavefunction::new(0.0, 1.0).unwrap();
        let ruler = RulerSpec::new((0..12).map(|k| k as f64).collect(), 0.5, (0.0, 11.0)).unwrap();
        let ps: Vec<f64> = (0..12).map(|i| flip_probability(&ruler, &phi, i).unwrap()).collect();
        assert!(ps.windows(2).all(|w| w[1] < w[0]));
        assert!(ps[11] < 1e-20);
    }

    #[test]
    fn quadrature_matches_closed_form() {
        let mut rng = RngSeed::new(99, 0).rng();
        for _ in 0..100 {
            let mean = rng.random_range(-3.0..3.0);
            let width = rng.random_range(0.05..2.0);
            let sigma = rng.random_range(0.01..2.0);
            let centers: Vec<f64> = (0..3).map(|_| rng.random_range(-5.0..5.0)).collect();
            let ruler = RulerSpec::new(centers.clone(), sigma, (-5.0, 5.0)).unwrap();
            let phi = GaussianWavefunction::new(mean, width).unwrap();
            for (i, &x) in centers.iter().enumerate() {
                let p = flip_probability(&ruler, &phi, i).unwrap();
                assert!((p - oracle(x, mean, sigma, width)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn distributions() {
        let phi = GaussianWavefunction::new(0.0, 1.0).unwrap();
        let single = RulerSpec::new(vec![0.3], 0.2, (-1.0, 1.0)).unwrap();
        let d = flip_distribution(&single, &phi, true, Exec::Sequential).unwrap();
        assert_eq!(d.normalized.unwrap(), FiniteDistribution::point_mass(0));
        let sym = RulerSpec::new(vec![-1.0, 0.0, 1.0], 0.3, (-2.0, 2.0)).unwrap();
        let d = flip_distribution(&sym, &phi, true, Exec::default()).unwrap();
        assert!((d.raw[0] - d.raw[2]).abs() < 1e-14);
        let n = d.normalized.unwrap();
        assert!((n.prob(0) - n.prob(2)).abs() < 1e-14);
        assert!((d.raw_sum - 1.0).abs() > 0.1);
        let expected: f64 = [-1.0, 0.0, 1.0].iter().map(|&x| oracle(x, 0.0, 0.3, 1.0)).sum();
        assert!((d.raw_sum - expected).abs() < 1e-9);
        assert!(flip_distribution(&sym, &phi, false, Exec::default()).unwrap().normalized.is_none());
    }

    #[test]
    fn generic_profiles() {
        let phi = GaussianWavefunction::new(0.0, 1.0).unwrap();
        // Uniform ruler particle on [-h, h]: overlap is the CDF difference over 2h.
        let h = 0.5;
        let p = flip_probability_with(|u| if u.abs() <= h { 0.5 / h } else { 0.0 }, h, 0.7, &phi).unwrap();
        let cdf = |z: f64| crate::quadrature::normal_cdf(z);
        assert!((p - (cdf(0.7 + h) - cdf(0.7 - h)) / (2.0 * h)).abs() < 1e-9);
    }

    #[test]
    fn dense_limit_converges() {
        let phi = GaussianWavefunction::new(0.0, 1.0).unwrap();
        let grid: Vec<(usize, f64)> = (0..5).map(|k| (8 << k, 1.0 / (25.0 * (1 << k) as f64))).collect();
        let rows = dense_limit_study(&phi, (-3.0, 3.0), &grid, Exec::default()).unwrap();
        assert!(rows.windows(2).all(|w| w[1].max_error < w[0].max_error));
        let at_hundredth = rows.iter().find(|r| (r.sigma - 0.01).abs() < 1e-15).unwrap();
        assert!(at_hundredth.max_error < 0.01);
        let coarse = dense_limit_study(&phi, (-3.0, 3.0), &[(6, 1.0)], Exec::Sequential).unwrap();
        assert!(coarse[0].center_error > 0.2);
        assert!(dense_limit_csv(&rows).lines().count() == 6);
    }
}
