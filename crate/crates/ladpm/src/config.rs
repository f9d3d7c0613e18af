//! JSON experiment descriptions.
//!
//! One document fixes the schedule, the oracle, the sampler configuration
//! and the metric selection. Unknown keys are rejected so stale configs
//! fail loudly instead of silently running defaults.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{
    EpsilonOracle, GaussianOracle, GmmOracle, GmmTarget, NoisyOracle, PointMassOracle,
};
use crate::samplers::SamplerConfig;
use crate::schedule::Schedule;
use crate::stream::oracle_stream;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub enum ScheduleConfig {
    DiscreteVp {
        #[serde(default = "default_resolution")]
        resolution: usize,
        #[serde(default)]
        beta_min: Option<f64>,
        #[serde(default)]
        beta_max: Option<f64>,
    },
    ContinuousVp {
        #[serde(default)]
        beta_min: Option<f64>,
        #[serde(default)]
        beta_max: Option<f64>,
    },
}

fn default_resolution() -> usize {
    1000
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig::ContinuousVp {
            beta_min: None,
            beta_max: None,
        }
    }
}

impl ScheduleConfig {
    pub fn build(&self) -> Result<Schedule> {
        match *self {
            ScheduleConfig::DiscreteVp {
                resolution,
                beta_min,
                beta_max,
            } => Schedule::discrete_vp_with(
                resolution,
                beta_min.unwrap_or(1e-4),
                beta_max.unwrap_or(0.02),
            ),
            ScheduleConfig::ContinuousVp { beta_min, beta_max } => {
                Schedule::continuous_vp_with(beta_min.unwrap_or(0.1), beta_max.unwrap_or(20.0))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub enum OracleConfig {
    PointMass {
        x0: Vec<f64>,
        #[serde(default)]
        noise_scale: f64,
    },
    Gaussian {
        mean: Vec<f64>,
        std: f64,
        #[serde(default)]
        noise_scale: f64,
    },
    Gmm {
        weights: Vec<f64>,
        means: Vec<Vec<f64>>,
        stds: Vec<f64>,
        #[serde(default)]
        noise_scale: f64,
    },
}

impl OracleConfig {
    pub fn dim(&self) -> usize {
        match self {
            OracleConfig::PointMass { x0, .. } => x0.len(),
            OracleConfig::Gaussian { mean, .. } => mean.len(),
            OracleConfig::Gmm { means, .. } => means.first().map_or(0, Vec::len),
        }
    }

    pub fn noise_scale(&self) -> f64 {
        match *self {
            OracleConfig::PointMass { noise_scale, .. }
            | OracleConfig::Gaussian { noise_scale, .. }
            | OracleConfig::Gmm { noise_scale, .. } => noise_scale,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim() == 0 {
            return Err(Error::Config("oracle dimension must be positive".into()));
        }
        if self.noise_scale() < 0.0 {
            return Err(Error::Config("noise_scale must be non-negative".into()));
        }
        match self {
            OracleConfig::PointMass { .. } => Ok(()),
            OracleConfig::Gaussian { std, .. } => GaussianOracle::new(vec![0.0], *std).map(|_| ()),
            OracleConfig::Gmm {
                weights,
                means,
                stds,
                ..
            } => {
                let target = GmmTarget::new(weights.clone(), means.clone(), stds.clone())?;
                GmmOracle::new(target).map(|_| ())
            }
        }
    }

    /// Analytic target distribution used by metrics, as a mixture.
    pub fn target(&self) -> Result<GmmTarget> {
        match self {
            OracleConfig::PointMass { x0, .. } => {
                GmmTarget::new(vec![1.0], vec![x0.clone()], vec![0.0])
            }
            OracleConfig::Gaussian { mean, std, .. } => {
                GmmTarget::new(vec![1.0], vec![mean.clone()], vec![*std])
            }
            OracleConfig::Gmm {
                weights,
                means,
                stds,
                ..
            } => GmmTarget::new(weights.clone(), means.clone(), stds.clone()),
        }
    }

    /// Known clean sample when the data distribution is degenerate.
    pub fn x_true(&self) -> Option<Vec<f64>> {
        match self {
            OracleConfig::PointMass { x0, .. } => Some(x0.clone()),
            _ => None,
        }
    }

    /// Build the per-chain predictor; noisy wrappers own one stream per chain.
    pub fn build(&self, seed: u64, chain: u64) -> Result<Box<dyn EpsilonOracle>> {
        let inner: Box<dyn EpsilonOracle> = match self {
            OracleConfig::PointMass { x0, .. } => Box::new(PointMassOracle::new(x0.clone())),
            OracleConfig::Gaussian { mean, std, .. } => {
                Box::new(GaussianOracle::new(mean.clone(), *std)?)
            }
            OracleConfig::Gmm {
                weights,
                means,
                stds,
                ..
            } => Box::new(GmmOracle::new(GmmTarget::new(
                weights.clone(),
                means.clone(),
                stds.clone(),
            )?)?),
        };
        let scale = self.noise_scale();
        if scale > 0.0 {
            Ok(Box::new(NoisyOracle::new(
                inner,
                scale,
                oracle_stream(seed, chain),
            )?))
        } else {
            Ok(inner)
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsConfig {
    /// Exact 1-D Wasserstein-1 against an i.i.d. reference (dim 1 only).
    pub wasserstein1: bool,
    /// Sliced Wasserstein projection count; 0 skips the metric.
    pub sliced_projections: usize,
    /// Compare sample moments against the closed-form target moments.
    pub moments: bool,
    /// Reference draw count; defaults to the sampler's num_samples.
    pub reference_samples: Option<usize>,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            wasserstein1: true,
            sliced_projections: 0,
            moments: true,
            reference_samples: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub schedule: ScheduleConfig,
    pub oracle: OracleConfig,
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub metrics: MetricsConfig,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl FromStr for ExperimentConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("config parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        text.parse()
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.build()?;
        self.oracle.validate()?;
        self.sampler.validate()?;
        Ok(())
    }

    /// Canonical serialization for hashing and report embedding.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
