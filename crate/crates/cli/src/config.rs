//! Run configuration: a flat TOML file plus command-line overrides.
//!
//! ```toml
//! n_sites = 5
//! n_types = 2
//! alpha = [1.0, 2.0]
//! beta = [2.0, 1.0]
//! delta = [1.0, 1.0]
//! boundary_hops = true
//! seed = 1
//! max_events = 1000000
//! warmup_fraction = 0.2
//! replicas = 10
//! ```
//!
//! Keys left out take their default values.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use ssep::{ModelParams, SimConfig};

use crate::error::{CliError, Result};

/// Environment variable overriding the exact-engine state cap.
pub const STATE_CAP_ENV: &str = "SSEP_EXACT_STATE_CAP";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(CliError::Config(format!(
                "format must be json or csv, got `{other}`"
            ))),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Json => "json",
            OutputFormat::Csv => "csv",
        })
    }
}

/// Acceptance thresholds used by `verify`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Solved vs closed-form stationary law, elementwise.
    pub oracle: f64,
    /// Site marginals against their closed form and across sites.
    pub marginal: f64,
    /// Flux and sojourn identities.
    pub identity: f64,
    /// Global and pairwise balance residuals.
    pub balance: f64,
    /// Reversed against forward rates, entrywise.
    pub reversed: f64,
    /// Distance from the uniform law when arrival and departure rates agree.
    pub uniformity: f64,
    /// Change in the solved law under hop-rate and hop-policy variations.
    pub independence: f64,
    /// Relative mismatch of rate products around cycles.
    pub cycle: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            oracle: 1e-10,
            marginal: 1e-12,
            identity: 1e-12,
            balance: 1e-12,
            reversed: 1e-12,
            uniformity: 1e-10,
            independence: 1e-10,
            cycle: 1e-10,
        }
    }
}

impl Tolerances {
    fn validate(&self) -> Result<()> {
        let named = [
            ("tol_oracle", self.oracle),
            ("tol_marginal", self.marginal),
            ("tol_identity", self.identity),
            ("tol_balance", self.balance),
            ("tol_reversed", self.reversed),
            ("tol_uniformity", self.uniformity),
            ("tol_independence", self.independence),
            ("tol_cycle", self.cycle),
        ];
        for (name, v) in named {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Config(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelParams,
    pub sim: SimConfig,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
    pub tolerances: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: default_model(),
            sim: SimConfig::default(),
            output: None,
            format: OutputFormat::Json,
            tolerances: Tolerances::default(),
        }
    }
}

fn default_model() -> ModelParams {
    ModelParams::new(5, 2, vec![1.0, 2.0], vec![2.0, 1.0], vec![1.0, 1.0], true)
        .expect("default model is valid")
}

/// TOML integers are signed 64-bit; larger seeds are written as strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum Seed {
    Int(i64),
    Text(String),
}

impl Seed {
    fn from_u64(seed: u64) -> Self {
        match i64::try_from(seed) {
            Ok(v) => Seed::Int(v),
            Err(_) => Seed::Text(seed.to_string()),
        }
    }

    fn to_u64(&self) -> Result<u64> {
        match self {
            Seed::Int(v) => u64::try_from(*v)
                .map_err(|_| CliError::Config(format!("seed must be non-negative, got {v}"))),
            Seed::Text(s) => s.parse().map_err(|_| {
                CliError::Config(format!("seed `{s}` is not an unsigned 64-bit integer"))
            }),
        }
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    n_sites: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_types: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    boundary_hops: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<Seed>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_events: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    warmup_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    replicas: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    batches: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    record_trajectory: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    output: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    format: Option<OutputFormat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tol_oracle: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tol_marginal: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tol_identity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tol_balance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tol_reversed: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tol_uniformity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tol_independence: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tol_cycle: Option<f64>,
}

/// Values given on the command line; each replaces the file value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub output: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub seed: Option<u64>,
    pub max_events: Option<u64>,
    pub replicas: Option<usize>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let file: FileConfig = toml::from_str(text)?;
        Self::from_file(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Every field written out, so that `parse(emit(c)) == c`.
    pub fn emit(&self) -> Result<String> {
        let m = &self.model;
        let t = &self.tolerances;
        let file = FileConfig {
            n_sites: Some(m.n_sites()),
            n_types: Some(m.n_types()),
            alpha: Some(m.alpha().to_vec()),
            beta: Some(m.beta().to_vec()),
            delta: Some(m.delta().to_vec()),
            boundary_hops: Some(m.boundary_hops()),
            seed: Some(Seed::from_u64(self.sim.seed)),
            max_events: Some(self.sim.max_events),
            warmup_fraction: Some(self.sim.warmup_fraction),
            replicas: Some(self.sim.replicas),
            batches: Some(self.sim.batches),
            record_trajectory: Some(self.sim.record_trajectory),
            output: self.output.clone(),
            format: Some(self.format),
            tol_oracle: Some(t.oracle),
            tol_marginal: Some(t.marginal),
            tol_identity: Some(t.identity),
            tol_balance: Some(t.balance),
            tol_reversed: Some(t.reversed),
            tol_uniformity: Some(t.uniformity),
            tol_independence: Some(t.independence),
            tol_cycle: Some(t.cycle),
        };
        Ok(toml::to_string(&file)?)
    }

    fn from_file(f: FileConfig) -> Result<Self> {
        let d = RunConfig::default();
        let model = ModelParams::new(
            f.n_sites.unwrap_or(d.model.n_sites()),
            f.n_types.unwrap_or(d.model.n_types()),
            f.alpha.unwrap_or_else(|| d.model.alpha().to_vec()),
            f.beta.unwrap_or_else(|| d.model.beta().to_vec()),
            f.delta.unwrap_or_else(|| d.model.delta().to_vec()),
            f.boundary_hops.unwrap_or(d.model.boundary_hops()),
        )?;
        let sim = SimConfig {
            seed: f
                .seed
                .map(|s| s.to_u64())
                .transpose()?
                .unwrap_or(d.sim.seed),
            max_events: f.max_events.unwrap_or(d.sim.max_events),
            warmup_fraction: f.warmup_fraction.unwrap_or(d.sim.warmup_fraction),
            replicas: f.replicas.unwrap_or(d.sim.replicas),
            record_trajectory: f.record_trajectory.unwrap_or(d.sim.record_trajectory),
            batches: f.batches.unwrap_or(d.sim.batches),
        };
        let dt = d.tolerances;
        let tolerances = Tolerances {
            oracle: f.tol_oracle.unwrap_or(dt.oracle),
            marginal: f.tol_marginal.unwrap_or(dt.marginal),
            identity: f.tol_identity.unwrap_or(dt.identity),
            balance: f.tol_balance.unwrap_or(dt.balance),
            reversed: f.tol_reversed.unwrap_or(dt.reversed),
            uniformity: f.tol_uniformity.unwrap_or(dt.uniformity),
            independence: f.tol_independence.unwrap_or(dt.independence),
            cycle: f.tol_cycle.unwrap_or(dt.cycle),
        };
        let config = RunConfig {
            model,
            sim,
            output: f.output,
            format: f.format.unwrap_or_default(),
            tolerances,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        self.tolerances.validate()
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(p) = &o.output {
            self.output = Some(p.clone());
        }
        if let Some(f) = o.format {
            self.format = f;
        }
        if let Some(s) = o.seed {
            self.sim.seed = s;
        }
        if let Some(e) = o.max_events {
            self.sim.max_events = e;
        }
        if let Some(r) = o.replicas {
            self.sim.replicas = r;
        }
        self.validate()
    }
}

/// State cap from [`STATE_CAP_ENV`], falling back to the library default.
pub fn state_cap_from_env() -> Result<u64> {
    match std::env::var(STATE_CAP_ENV) {
        Ok(v) => v
            .trim()
            .parse::<u64>()
            .ok()
            .filter(|&c| c > 0)
            .ok_or_else(|| {
                CliError::Config(format!(
                    "{STATE_CAP_ENV} must be a positive integer, got `{v}`"
                ))
            }),
        Err(std::env::VarError::NotPresent) => Ok(ssep::exact::DEFAULT_STATE_CAP),
        Err(e) => Err(CliError::Config(format!("{STATE_CAP_ENV}: {e}"))),
    }
}
