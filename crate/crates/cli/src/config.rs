use std::path::{Path, PathBuf};

use denoise_core::denoiser::DenoiserSpec;
use denoise_core::flow::ScheduleSpec;
use denoise_core::inverse::{OperatorSpec, StepWeight};
use denoise_core::scalar::ScalarPrior;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

/// Resolves `p` against the directory holding the config file.
pub fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn default_fdr() -> f64 {
    0.1
}

fn default_dim() -> usize {
    16
}

fn default_points() -> usize {
    8
}

fn default_max_iter() -> usize {
    1000
}

fn default_tol() -> f64 {
    1e-8
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Pgm,
}

impl OutputFormat {
    pub fn ext(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Pgm => "pgm",
        }
    }
}

/// Grid shape for CSV inputs, which carry no shape of their own.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridShape {
    pub rows: usize,
    pub cols: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DenoiseConfig {
    pub input: PathBuf,
    #[serde(default)]
    pub shape: Option<GridShape>,
    pub denoiser: DenoiserSpec,
    pub alpha: f64,
    /// Adds seeded Gaussian noise of this standard deviation before denoising.
    #[serde(default)]
    pub add_noise: Option<f64>,
    /// Clean reference for PSNR.
    #[serde(default)]
    pub reference: Option<PathBuf>,
    #[serde(default)]
    pub output: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecomposeConfig {
    pub input: PathBuf,
    #[serde(default)]
    pub shape: Option<GridShape>,
    pub denoiser: DenoiserSpec,
    pub alpha: f64,
    pub levels: usize,
    #[serde(default)]
    pub format: Option<OutputFormat>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecombineConfig {
    pub input: PathBuf,
    #[serde(default)]
    pub shape: Option<GridShape>,
    pub denoiser: DenoiserSpec,
    pub alpha: f64,
    pub beta_base: f64,
    /// One coefficient per level, finest first.
    pub betas: Vec<f64>,
    #[serde(default)]
    pub output: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropertyName {
    Identity,
    Symmetry,
    Conservative,
    Lipschitz,
    Homogeneity,
}

fn default_properties() -> Vec<PropertyName> {
    vec![
        PropertyName::Identity,
        PropertyName::Symmetry,
        PropertyName::Conservative,
        PropertyName::Lipschitz,
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub denoiser: DenoiserSpec,
    pub alpha: f64,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_points")]
    pub test_points: usize,
    #[serde(default = "default_properties")]
    pub properties: Vec<PropertyName>,
    #[serde(default)]
    pub lipschitz_bound: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    /// Scalar prior; its MMSE denoiser supplies `E[x₀|x_t]`.
    pub prior: ScalarPrior,
    #[serde(default)]
    pub schedule: Option<ScheduleSpec>,
    pub samples: usize,
    #[serde(default = "one")]
    pub dim: usize,
}

fn one() -> usize {
    1
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    Red,
    Bridge,
    Dps,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DpsConfig {
    #[serde(default)]
    pub weight: StepWeight,
    pub schedule: ScheduleSpec,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub measurement: PathBuf,
    /// Shape of the unknown; defaults to the measurement's shape.
    #[serde(default)]
    pub shape: Option<GridShape>,
    pub operator: OperatorSpec,
    pub method: SolveMethod,
    pub lambda: f64,
    pub denoiser: DenoiserSpec,
    pub alpha: f64,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub dps: Option<DpsConfig>,
    #[serde(default)]
    pub output: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnomalyConfig {
    pub input: PathBuf,
    #[serde(default)]
    pub shape: Option<GridShape>,
    pub denoiser: DenoiserSpec,
    pub alpha: f64,
    #[serde(default = "default_fdr")]
    pub fdr_q: f64,
    #[serde(default)]
    pub add_noise: Option<f64>,
}
