//! Run configuration for verification campaigns, in JSON or TOML.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::coupling::IncrementLaw;
use crate::error::{Error, Result};
use crate::geometry::Geometry;
use crate::par::Execution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    FlatExact,
    FlatMc,
    Relativistic,
    GeneralCd,
    ManifoldCoupling,
    Iterated,
    Heisenberg,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::FlatExact,
        Scenario::FlatMc,
        Scenario::Relativistic,
        Scenario::GeneralCd,
        Scenario::ManifoldCoupling,
        Scenario::Iterated,
        Scenario::Heisenberg,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Scenario::FlatExact => "flat-exact",
            Scenario::FlatMc => "flat-mc",
            Scenario::Relativistic => "relativistic",
            Scenario::GeneralCd => "general-cd",
            Scenario::ManifoldCoupling => "manifold-coupling",
            Scenario::Iterated => "iterated",
            Scenario::Heisenberg => "heisenberg",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|c| c.id() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown scenario `{s}`")))
    }
}

/// Generator parameters; unset entries take the scenario default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<Geometry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,
}

/// Monte Carlo settings shared by every simulated row of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSettings {
    pub n_paths: usize,
    pub dt: f64,
    #[serde(default = "yes")]
    pub crn: bool,
    /// Step of the centered differences used for gradients of `P_t f`.
    #[serde(default = "default_fd_step")]
    pub fd_step: f64,
    #[serde(default)]
    pub increment_law: IncrementLaw,
}

fn yes() -> bool {
    true
}

fn default_fd_step() -> f64 {
    1e-3
}

fn default_z() -> f64 {
    4.0
}

impl SimSettings {
    pub fn new(n_paths: usize, dt: f64) -> Self {
        Self {
            n_paths,
            dt,
            crn: true,
            fd_step: default_fd_step(),
            increment_law: IncrementLaw::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub generator: GeneratorParams,
    /// Field library ids.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fields: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<f64>>>,
    /// Second points for two-point inequalities, one per entry of `points`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partner_points: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    /// Size of the random point cloud of the pointwise suites.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimSettings>,
    #[serde(default = "default_z")]
    pub z: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<f64>>,
    /// Wang-Harnack exponent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_cap: Option<f64>,
    #[serde(default)]
    pub exec: Execution,
}

impl RunConfig {
    pub fn new(scenario: Scenario) -> Self {
        Self {
            scenario,
            seed: 0,
            generator: GeneratorParams::default(),
            fields: None,
            points: None,
            partner_points: None,
            times: None,
            random_points: None,
            sim: None,
            z: default_z(),
            q: None,
            alpha: None,
            k_cap: None,
            exec: Execution::default(),
        }
    }

    /// Parses JSON or TOML, chosen by extension (`.toml`) or by content.
    pub fn parse(text: &str, toml_hint: bool) -> Result<Self> {
        let trimmed = text.trim_start();
        if toml_hint || !(trimmed.starts_with('{')) {
            toml::from_str(text).map_err(|e| Error::Config(format!("TOML: {e}")))
        } else {
            serde_json::from_str(text).map_err(|e| Error::Config(format!("JSON: {e}")))
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let toml_hint = path.extension().is_some_and(|e| e == "toml");
        Self::parse(&text, toml_hint)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
