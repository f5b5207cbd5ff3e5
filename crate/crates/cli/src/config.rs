//! TOML run documents. Unknown keys are rejected everywhere.

use std::path::Path;

use cmmd_core::evaluation::{EvaluationSettings, SweepSpec, SweepVariable, DEFAULT_HELLINGER_GRID, DEFAULT_KDE_GRID};
use cmmd_core::network::{Activation, AdamSettings};
use cmmd_core::simulators::{DesignSampling, ExperimentalDesign, Simulator, SimulatorKind, REFERENCE_POOL_SIZE};
use cmmd_core::training::{OutputScaling, TrainingConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub fn load<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSection {
    pub n_points: usize,
    pub replications: usize,
    #[serde(default)]
    pub sampling: DesignSampling,
    /// Defaults to the simulator's benchmark domain.
    #[serde(default)]
    pub ranges: Option<Vec<(f64, f64)>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub seed: u64,
    pub simulator: Simulator,
    pub design: DesignSection,
}

impl SimulateConfig {
    pub fn design(&self) -> ExperimentalDesign {
        ExperimentalDesign {
            ranges: self.design.ranges.clone().unwrap_or_else(|| self.simulator.domain()),
            n_points: self.design.n_points,
            replications: self.design.replications,
            sampling: self.design.sampling,
            seed: self.seed,
        }
    }
}

/// Training settings. With `preset` set, unspecified fields take the
/// benchmark values for that simulator; otherwise `epochs`, `batch_size`,
/// `noise_dim` and `seed` are required and the rest use library defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSection {
    pub preset: Option<String>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub noise_dim: Option<usize>,
    pub noise_regen_interval: Option<usize>,
    pub lambda: Option<f64>,
    pub seed: Option<u64>,
    pub standardize_inputs: Option<bool>,
    pub output_scaling: Option<OutputScaling>,
    pub adam: Option<AdamSettings>,
    pub hidden: Option<Vec<usize>>,
    pub output_activation: Option<Activation>,
    pub input_lengthscale: Option<f64>,
    pub output_lengthscale: Option<f64>,
    pub train_output_lengthscale: Option<bool>,
    pub train_output_amplitude: Option<bool>,
}

impl TrainingSection {
    pub fn resolve(&self, seed_override: Option<u64>) -> CliResult<TrainingConfig> {
        let seed = seed_override.or(self.seed);
        let mut cfg = match &self.preset {
            Some(name) => TrainingConfig::benchmark(SimulatorKind::parse(name)?, seed.unwrap_or(0)),
            None => {
                let need = |v: Option<usize>, key: &str| {
                    v.ok_or_else(|| CliError::Config(format!("training needs `{key}` when no preset is given")))
                };
                TrainingConfig::new(
                    need(self.epochs, "epochs")?,
                    need(self.batch_size, "batch_size")?,
                    need(self.noise_dim, "noise_dim")?,
                    seed.ok_or_else(|| CliError::Config("training needs `seed` when no preset is given".into()))?,
                )
            }
        };
        macro_rules! take {
            ($($field:ident),*) => { $( if let Some(v) = self.$field.clone() { cfg.$field = v; } )* };
        }
        take!(epochs, batch_size, noise_dim, noise_regen_interval, lambda, standardize_inputs, output_scaling, adam,
              hidden, output_activation, output_lengthscale, train_output_lengthscale, train_output_amplitude);
        if self.input_lengthscale.is_some() {
            cfg.input_lengthscale = self.input_lengthscale;
        }
        if let Some(s) = seed {
            cfg.seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn default_samples() -> usize {
    2000
}
fn default_kde_grid() -> usize {
    DEFAULT_KDE_GRID
}
fn default_hellinger_grid() -> usize {
    DEFAULT_HELLINGER_GRID
}
fn default_pool() -> usize {
    REFERENCE_POOL_SIZE
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationSection {
    #[serde(default = "default_samples")]
    pub samples_per_point: usize,
    #[serde(default = "default_kde_grid")]
    pub kde_grid_size: usize,
    #[serde(default = "default_hellinger_grid")]
    pub hellinger_grid_size: usize,
    #[serde(default = "default_pool")]
    pub reference_pool_size: usize,
}

impl Default for EvaluationSection {
    fn default() -> Self {
        Self {
            samples_per_point: default_samples(),
            kde_grid_size: default_kde_grid(),
            hellinger_grid_size: default_hellinger_grid(),
            reference_pool_size: default_pool(),
        }
    }
}

impl EvaluationSection {
    pub fn settings(&self, seed: u64) -> CliResult<EvaluationSettings> {
        if self.samples_per_point < 2 {
            return Err(CliError::Config("samples_per_point must be at least 2".into()));
        }
        if self.kde_grid_size < 2 || self.hellinger_grid_size < 2 || self.reference_pool_size < 2 {
            return Err(CliError::Config("grid and pool sizes must be at least 2".into()));
        }
        Ok(EvaluationSettings {
            samples_per_point: self.samples_per_point,
            kde_grid_size: self.kde_grid_size,
            hellinger_grid_size: self.hellinger_grid_size,
            reference_pool_size: self.reference_pool_size,
            seed,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateConfig {
    pub seed: u64,
    pub simulator: Simulator,
    /// Number of uniformly random test points; ignored when `points` is set.
    #[serde(default)]
    pub test_points: usize,
    #[serde(default)]
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub evaluation: EvaluationSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub seed: u64,
    pub simulator: Simulator,
    pub varying: SweepVariable,
    pub levels: Vec<usize>,
    pub n_points: usize,
    pub replications: usize,
    pub noise_dim: usize,
    pub repeats: usize,
    pub probe_points: Vec<Vec<f64>>,
    #[serde(default)]
    pub training: TrainingSection,
    #[serde(default)]
    pub evaluation: EvaluationSection,
}

impl SweepConfig {
    pub fn spec(&self) -> SweepSpec {
        SweepSpec {
            varying: self.varying,
            levels: self.levels.clone(),
            n_points: self.n_points,
            replications: self.replications,
            noise_dim: self.noise_dim,
            probe_points: self.probe_points.clone(),
            repeats: self.repeats,
            seed: self.seed,
        }
    }

    /// Training template; the sweep supplies `noise_dim` and per-cell seeds,
    /// so those may be left out of the `[training]` table.
    pub fn template(&self) -> CliResult<TrainingConfig> {
        let mut t = self.training.clone();
        t.noise_dim.get_or_insert(self.noise_dim);
        t.seed.get_or_insert(self.seed);
        t.resolve(None)
    }
}
