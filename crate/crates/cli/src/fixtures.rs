//! Built-in configurations. Each one reproduces a headline result with one command.

use crate::config::ExperimentConfig;
use crate::CliError;

pub struct Fixture {
    pub name: &'static str,
    pub headline: &'static str,
    pub toml: &'static str,
}

pub const FIXTURES: &[Fixture] = &[
    Fixture {
        name: "iid-p05",
        headline: "two symmetric walkers, one step: D = ln 2 and the EUR holds everywhere",
        toml: r#"
kind = "model-a"
seed = 1
[walkers]
p_right = [0.5, 0.5]
steps = 1
"#,
    },
    Fixture {
        name: "delta-witness",
        headline: "configuration (1, 1) carries a nonzero Bayes defect",
        toml: r#"
kind = "model-a"
seed = 2
[walkers]
p_right = [0.5, 0.5]
steps = 1
focus = [1, 1]
"#,
    },
    Fixture {
        name: "eur-p05",
        headline: "adversarial preparations never beat the EUR bound for symmetric walkers",
        toml: r#"
kind = "eur"
seed = 3
[walkers]
p_right = [0.5, 0.5]
steps = 2
[eur]
budget = 10000
"#,
    },
    Fixture {
        name: "hetero-eur",
        headline: "heterogeneous drifts with a Markov selection still satisfy the EUR",
        toml: r#"
kind = "eur"
seed = 4
[walkers]
p_right = [0.3, 0.5, 0.7]
steps = 2
[selection]
mode = "markov"
initial = [0.2, 0.3, 0.5]
transition = [[0.5, 0.25, 0.25], [0.1, 0.8, 0.1], [0.3, 0.3, 0.4]]
[eur]
budget = 10000
"#,
    },
    Fixture {
        name: "wiener-m2",
        headline: "binned Wiener kernels satisfy the EUR at every resolution",
        toml: r#"
kind = "model-b"
seed = 5
[wiener]
means = [0.0, 0.5]
variances = [1.0, 0.5]
bins = [4, 8, 16]
"#,
    },
    Fixture {
        name: "hilbert-m2",
        headline: "two walkers realize a four-dimensional non-commuting pair",
        toml: r#"
kind = "hilbert"
seed = 6
[walkers]
p_right = [0.5, 0.5]
steps = 1
"#,
    },
    Fixture {
        name: "geometry",
        headline: "NNG chains are a semi-metric; the triangulation distance is not",
        toml: r#"
kind = "distances"
seed = 7
"#,
    },
    Fixture {
        name: "ruler-dense",
        headline: "Gaussian ruler flips approach the position density as sigma shrinks",
        toml: r#"
kind = "ruler"
seed = 8
format = "csv"
"#,
    },
];

pub fn find(name: &str) -> Result<&'static Fixture, CliError> {
    FIXTURES.iter().find(|f| f.name == name).ok_or_else(|| CliError::UnknownFixture(name.to_string()))
}

pub fn load(name: &str) -> Result<ExperimentConfig, CliError> {
    ExperimentConfig::from_toml(find(name)?.toml)
}

/// Fixtures whose name or headline contains `filter`.
pub fn list(filter: Option<&str>) -> Vec<&'static Fixture> {
    FIXTURES
        .iter()
        .filter(|f| filter.is_none_or(|q| f.name.contains(q) || f.headline.contains(q)))
        .collect()
}
