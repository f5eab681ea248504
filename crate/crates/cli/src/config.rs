//! Experiment configuration: one TOML file per run, sections per module.

use std::path::{Path, PathBuf};

use randspace::geometry::MAX_LATTICE_COORD;
use randspace::particle::SelectionKernel;
use randspace::removal::KernelChoice;
use randspace::ruler::{GaussianWavefunction, RulerSpec};
use randspace::space::{GaussianLaw, Partition, RandomWalkParams, SpaceConfiguration, WienerParams};
use randspace::FiniteDistribution;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    ModelA,
    ModelB,
    Eur,
    Hilbert,
    Distances,
    Ruler,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::ModelA => "model-a",
            Kind::ModelB => "model-b",
            Kind::Eur => "eur",
            Kind::Hilbert => "hilbert",
            Kind::Distances => "distances",
            Kind::Ruler => "ruler",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WalkersSection {
    pub p_right: Vec<f64>,
    pub steps: u64,
    pub spacing: i64,
    pub origin: usize,
    /// Configuration singled out in the report, e.g. a Bayes-defect witness.
    pub focus: Option<Vec<i64>>,
}

impl Default for WalkersSection {
    fn default() -> Self {
        Self { p_right: vec![0.5, 0.5], steps: 1, spacing: 1, origin: 0, focus: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EurSection {
    pub budget: usize,
    pub kernel: KernelChoice,
    pub base: f64,
}

impl Default for EurSection {
    fn default() -> Self {
        Self { budget: 10_000, kernel: KernelChoice::Unconditional, base: std::f64::consts::E }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WienerSection {
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
    pub time_grid: Vec<f64>,
    pub t1: f64,
    pub t2: f64,
    pub lo: f64,
    pub hi: f64,
    pub bins: Vec<usize>,
    /// Paths for the increment-moment check; zero skips it.
    pub samples: usize,
}

impl Default for WienerSection {
    fn default() -> Self {
        Self {
            means: vec![0.0, 0.5],
            variances: vec![1.0, 0.5],
            time_grid: vec![0.0, 1.0, 2.0],
            t1: 0.0,
            t2: 1.0,
            lo: -2.0,
            hi: 2.0,
            bins: vec![4, 8, 16],
            samples: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HilbertSection {
    pub trials: usize,
    pub interference_states: usize,
    /// Hidden unitaries of dimensions `2..=max_recover_dim` for the recovery check.
    pub max_recover_dim: usize,
}

impl Default for HilbertSection {
    fn default() -> Self {
        Self { trials: 1000, interference_states: 1000, max_recover_dim: 6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DistancesSection {
    pub window: i64,
    pub max_points: usize,
    pub asymmetry_window: i64,
    pub asymmetry_max_points: usize,
    pub search_window: i64,
    pub search_min_points: usize,
    pub search_max_points: usize,
    pub search_trials: usize,
}

impl Default for DistancesSection {
    fn default() -> Self {
        Self {
            window: 6,
            max_points: 6,
            asymmetry_window: 5,
            asymmetry_max_points: 6,
            search_window: 8,
            search_min_points: 6,
            search_max_points: 14,
            search_trials: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RulerSection {
    pub mean: f64,
    pub width: f64,
    pub window: (f64, f64),
    pub particles: usize,
    pub sigma: f64,
    /// `(particles, sigma)` rows of the dense-limit study.
    pub study: Vec<(usize, f64)>,
}

impl Default for RulerSection {
    fn default() -> Self {
        Self {
            mean: 0.0,
            width: 1.0,
            window: (-3.0, 3.0),
            particles: 13,
            sigma: 0.25,
            study: vec![(8, 0.04), (16, 0.02), (32, 0.01), (64, 0.005), (128, 0.0025)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub format: Format,
    /// Thread count for parallel sections; never changes results.
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub walkers: WalkersSection,
    #[serde(default)]
    pub selection: Option<SelectionKernel>,
    #[serde(default)]
    pub eur: EurSection,
    #[serde(default)]
    pub wiener: WienerSection,
    #[serde(default)]
    pub hilbert: HilbertSection,
    #[serde(default)]
    pub distances: DistancesSection,
    #[serde(default)]
    pub ruler: RulerSection,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn field(path: &str) -> impl Fn(randspace::Error) -> CliError + '_ {
    move |source| CliError::Config { path: path.to_string(), source }
}

fn bad(path: &str, reason: impl Into<String>) -> CliError {
    CliError::Config {
        path: path.to_string(),
        source: randspace::Error::Validation { field: path.to_string(), reason: reason.into() },
    }
}

/// Parsed core types for the sections a kind reads.
pub struct Validated {
    pub walk: Option<RandomWalkParams>,
    pub selection: SelectionKernel,
    pub focus: Option<SpaceConfiguration>,
    pub wiener: Option<(WienerParams, Vec<Partition>)>,
    pub ruler: Option<(RulerSpec, GaussianWavefunction)>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn selection(&self) -> SelectionKernel {
        self.selection.clone().unwrap_or(SelectionKernel::IidUniform)
    }

    /// Canonical JSON of everything that can change a payload (`out` and `workers` excluded).
    pub fn canonical_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = v.as_object_mut() {
            map.remove("out");
            map.remove("workers");
        }
        serde_json::to_string(&v).expect("value serializes")
    }

    fn walk_params(&self) -> Result<RandomWalkParams, CliError> {
        let w = &self.walkers;
        let initial = vec![FiniteDistribution::point_mass(0); w.p_right.len()];
        if let Some(p) = w.p_right.iter().find(|&&p| !(p > 0.0 && p < 1.0)) {
            return Err(bad("walkers.p_right", format!("{p} makes a walker deterministic; need 0 < p < 1")));
        }
        let params = RandomWalkParams::new(w.p_right.clone(), w.spacing, initial).map_err(field("walkers"))?;
        if w.origin >= params.walkers() {
            return Err(bad("walkers.origin", format!("{} is not a walker index", w.origin)));
        }
        Ok(params)
    }

    pub fn validate(&self) -> Result<Validated, CliError> {
        if self.workers == Some(0) {
            return Err(bad("workers", "must be at least 1"));
        }
        let selection = self.selection();
        let mut out = Validated { walk: None, selection: selection.clone(), focus: None, wiener: None, ruler: None };
        match self.kind {
            Kind::ModelA | Kind::Eur | Kind::Hilbert => {
                let params = self.walk_params()?;
                selection.validate(params.walkers()).map_err(field("selection"))?;
                if let Some(f) = &self.walkers.focus {
                    if f.len() != params.walkers() {
                        return Err(bad("walkers.focus", format!("expected {} positions", params.walkers())));
                    }
                    out.focus = Some(SpaceConfiguration::new(f.clone(), self.walkers.steps));
                }
                if self.kind == Kind::Eur {
                    if self.eur.budget == 0 {
                        return Err(bad("eur.budget", "must be positive"));
                    }
                    if !(self.eur.base > 0.0 && self.eur.base != 1.0 && self.eur.base.is_finite()) {
                        return Err(bad("eur.base", "must be positive and not 1"));
                    }
                }
                if self.kind == Kind::Hilbert && params.walkers() < 2 {
                    return Err(bad("walkers.p_right", "the pair representation needs at least two walkers"));
                }
                out.walk = Some(params);
            }
            Kind::ModelB => {
                let w = &self.wiener;
                if w.means.len() != w.variances.len() {
                    return Err(bad("wiener.variances", "needs one variance per mean"));
                }
                let initial = w
                    .means
                    .iter()
                    .zip(&w.variances)
                    .map(|(&m, &v)| GaussianLaw::new(m, v))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(field("wiener.variances"))?;
                let params = WienerParams::new(initial, w.time_grid.clone()).map_err(field("wiener"))?;
                if w.t2 <= w.t1 || w.t2.is_nan() || w.t1 < w.time_grid[0] {
                    return Err(bad("wiener.t1", "need time_grid[0] <= t1 < t2"));
                }
                selection.validate(params.walkers()).map_err(field("selection"))?;
                let partitions = w
                    .bins
                    .iter()
                    .map(|&k| Partition::uniform_open(w.lo, w.hi, k))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(field("wiener.bins"))?;
                if partitions.is_empty() {
                    return Err(bad("wiener.bins", "list at least one partition size"));
                }
                if self.walkers.origin >= params.walkers() {
                    return Err(bad("walkers.origin", "not a walker index"));
                }
                out.wiener = Some((params, partitions));
            }
            Kind::Distances => {
                let d = &self.distances;
                for (path, w) in [("distances.window", d.window), ("distances.asymmetry_window", d.asymmetry_window), ("distances.search_window", d.search_window)] {
                    if !(1..=MAX_LATTICE_COORD).contains(&w) {
                        return Err(bad(path, "must be a positive lattice size"));
                    }
                }
                if d.max_points > 8 || d.asymmetry_max_points > 8 {
                    return Err(bad("distances.max_points", "exhaustive enumeration is capped at 8 points"));
                }
                if !(3..=d.search_max_points).contains(&d.search_min_points) || d.search_max_points > 64 {
                    return Err(bad("distances.search_min_points", "need 3 <= min <= max <= 64"));
                }
                if (d.search_window * d.search_window) < d.search_max_points as i64 {
                    return Err(bad("distances.search_window", "window too small for the point count"));
                }
            }
            Kind::Ruler => {
                let r = &self.ruler;
                let phi = GaussianWavefunction::new(r.mean, r.width).map_err(field("ruler.width"))?;
                let spec = RulerSpec::uniform(r.particles, r.sigma, r.window).map_err(field("ruler"))?;
                for (k, &(n, s)) in r.study.iter().enumerate() {
                    RulerSpec::uniform(n, s, r.window).map_err(|e| CliError::Config { path: format!("ruler.study[{k}]"), source: e })?;
                }
                out.ruler = Some((spec, phi));
            }
        }
        Ok(out)
    }
}
