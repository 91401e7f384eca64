//! Scenario configuration files.

use crate::CliError;
use fpr_core::medium::{make_medium, Medium};
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct ScenarioConfig {
    pub medium: MediumConfig,
    pub geometry: Option<Geometry>,
    pub modes: Option<Modes>,
    pub tau_list: Option<Vec<f64>>,
    pub kappa_grid: Option<KappaGrid>,
    pub kappa: Option<f64>,
    pub mode: Option<ModeRef>,
    pub source: Option<ShellSource>,
    pub far_field: Option<FarFieldConfig>,
    pub micro: Option<MicroConfig>,
    pub pulse: Option<PulseConfig>,
    pub contour: Option<ContourConfig>,
    pub asymptotics: Option<AsymptoticsConfig>,
    #[serde(default)]
    pub outputs: Outputs,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumConfig {
    pub rho0: f64,
    pub k0: f64,
    pub rho1: f64,
    pub k1: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "lowercase")]
pub enum Geometry {
    Sphere {
        #[serde(default = "one")]
        radius: f64,
        #[serde(default = "three")]
        refinement: usize,
    },
    Spheroid {
        a: f64,
        b: f64,
        #[serde(default = "three")]
        refinement: usize,
    },
    /// OFF file, relative to the config file.
    Mesh(PathBuf),
}

fn one() -> f64 {
    1.0
}

fn three() -> usize {
    3
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct Modes {
    pub n_max: usize,
    pub k_max: usize,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KappaGrid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl KappaGrid {
    pub fn points(&self) -> Vec<f64> {
        fpr_core::timedomain::linspace(self.start, self.stop, self.count)
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeRef {
    pub n: usize,
    pub k: usize,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShellSource {
    #[serde(default)]
    pub n: usize,
    pub inner: f64,
    pub outer: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FarFieldConfig {
    pub count: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct MicroConfig {
    pub epsilon: f64,
    /// Driving frequency; alternatively `alpha` sets `epsilon omega = z0 + epsilon^alpha`.
    pub omega: Option<f64>,
    pub alpha: Option<f64>,
    pub y0: [f64; 3],
    pub points: Vec<[f64; 3]>,
    #[serde(default = "directions")]
    pub far_field_count: usize,
}

fn directions() -> usize {
    181
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct PulseConfig {
    pub duration: f64,
    pub p: u32,
    pub shell_inner: f64,
    pub shell_outer: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct ContourConfig {
    pub epsilon: f64,
    pub obs_radii: Vec<f64>,
    pub t_start: f64,
    /// Defaults to the end of the admissible window.
    pub t_end: Option<f64>,
    pub samples: usize,
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct AsymptoticsConfig {
    #[serde(default = "minnaert_taus")]
    pub minnaert_taus: Vec<f64>,
    #[serde(default = "fp_taus")]
    pub fp_taus: Vec<f64>,
    #[serde(default = "count_tau")]
    pub count_tau: f64,
}

impl Default for AsymptoticsConfig {
    fn default() -> Self {
        AsymptoticsConfig { minnaert_taus: minnaert_taus(), fp_taus: fp_taus(), count_tau: count_tau() }
    }
}

fn minnaert_taus() -> Vec<f64> {
    vec![1e-3, 1e-4, 1e-5]
}

fn fp_taus() -> Vec<f64> {
    vec![1e-2, 1e-3, 1e-4]
}

fn count_tau() -> f64 {
    1e-4
}

/// Output file names, relative to `--out`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    pub csv: Option<String>,
    pub report: Option<String>,
}

/// A parsed config with its derived medium and resolved paths.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub medium: Medium,
    pub mesh_path: Option<PathBuf>,
}

pub fn load(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
    parse(&text, path.parent().unwrap_or(Path::new(".")))
}

pub fn parse(text: &str, base: &Path) -> Result<Scenario, CliError> {
    let config: ScenarioConfig =
        serde_json::from_str(text).map_err(|e| CliError::Validation(format!("invalid config: {e}")))?;
    let md = config.medium;
    let medium = make_medium(md.rho0, md.k0, md.rho1, md.k1, md.tau)
        .map_err(|e| CliError::Validation(format!("medium: {e}")))?;
    let mesh_path = match &config.geometry {
        Some(Geometry::Mesh(p)) => {
            let full = base.join(p);
            if !full.is_file() {
                return Err(CliError::Validation(format!("geometry.mesh: {} does not exist", full.display())));
            }
            Some(full)
        }
        _ => None,
    };
    Ok(Scenario { config, medium, mesh_path })
}

/// The named block, or a validation error naming the missing key.
pub fn require<'a, T>(value: &'a Option<T>, key: &str) -> Result<&'a T, CliError> {
    value.as_ref().ok_or_else(|| CliError::Validation(format!("config is missing key `{key}`")))
}
