//! JSON description of a simulation run.
//!
//! ```json
//! {
//!   "n_per_modality": 100,
//!   "d": 3,
//!   "scenario": { "kind": "gaussian_clusters", "mu_x": [0, 0.5, 0], "mu_y": [0, -0.5, 0], "sigma": 0.01 },
//!   "tau": 0.07,
//!   "lr": 0.01,
//!   "iterations": 100,
//!   "sphere_constrained": false,
//!   "log_every": 10,
//!   "seed": 0
//! }
//! ```
//!
//! Scenario kinds are `gaussian_clusters`, `dim_collapse` (`axis`,
//! `spread`), `info_imbalance` and `explicit` (`x0`, `y0`: embedding files).
//! For `explicit`, `n_per_modality` and `d` may be omitted and are taken
//! from the files.

use std::path::{Path, PathBuf};

use gapkit_core::io::read_embeddings_auto;
use gapkit_core::{Scenario, SimulationConfig};
use serde::Deserialize;

use crate::Failure;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_per_modality: Option<usize>,
    pub d: Option<usize>,
    pub scenario: ScenarioSpec,
    pub tau: f64,
    pub lr: f64,
    pub iterations: usize,
    #[serde(default)]
    pub sphere_constrained: bool,
    #[serde(default = "default_log_every")]
    pub log_every: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_log_every() -> usize {
    1
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioSpec {
    GaussianClusters { mu_x: Vec<f64>, mu_y: Vec<f64>, sigma: f64 },
    DimCollapse { axis: usize, spread: f64 },
    InfoImbalance,
    Explicit { x0: PathBuf, y0: PathBuf },
}

pub fn load(path: &Path) -> Result<SimulationConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let raw: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new(""));
    resolve(raw, base)
}

/// Turns the parsed document into a simulator config, loading explicit
/// initializations relative to `base`.
pub fn resolve(raw: ExperimentConfig, base: &Path) -> Result<SimulationConfig, Failure> {
    let missing = |field: &str| Failure::Usage(format!("config is missing {field:?}"));
    let (scenario, n, d) = match raw.scenario {
        ScenarioSpec::Explicit { x0, y0 } => {
            let x0 = read_embeddings_auto(&base.join(x0))?;
            let y0 = read_embeddings_auto(&base.join(y0))?;
            let (n, d) = (raw.n_per_modality.unwrap_or(x0.n()), raw.d.unwrap_or(x0.d()));
            if (n, d) != (x0.n(), x0.d()) {
                return Err(Failure::Usage(format!(
                    "config declares {n}x{d} but the explicit init is {}x{}",
                    x0.n(),
                    x0.d()
                )));
            }
            (Scenario::Explicit { x0, y0 }, n, d)
        }
        ScenarioSpec::InfoImbalance => {
            (Scenario::InfoImbalance, raw.n_per_modality.unwrap_or(2), raw.d.ok_or_else(|| missing("d"))?)
        }
        other => {
            let n = raw.n_per_modality.ok_or_else(|| missing("n_per_modality"))?;
            let d = raw.d.ok_or_else(|| missing("d"))?;
            let scenario = match other {
                ScenarioSpec::GaussianClusters { mu_x, mu_y, sigma } => {
                    Scenario::GaussianClusters { mu_x, mu_y, sigma }
                }
                ScenarioSpec::DimCollapse { axis, spread } => Scenario::DimCollapse { axis, spread },
                _ => unreachable!("handled above"),
            };
            (scenario, n, d)
        }
    };
    let cfg = SimulationConfig {
        n_per_modality: n,
        d,
        scenario,
        tau: raw.tau,
        lr: raw.lr,
        iterations: raw.iterations,
        sphere_constrained: raw.sphere_constrained,
        log_every: raw.log_every,
        seed: raw.seed,
    };
    cfg.validate()?;
    Ok(cfg)
}
