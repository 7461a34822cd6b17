//! Run configuration: a single JSON document with CLI-flag overrides,
//! hashed into every output for provenance.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use spurt_core::{HbgParams, HmmModel, StateBinning, Thresholds};

/// Environment variable consulted when no `--config` flag is given.
pub const CONFIG_ENV: &str = "SPURT_CONFIG";

#[derive(Debug)]
pub enum CliError {
    /// Invalid configuration or parameters (exit code 2).
    Config(String),
    /// Unreadable, malformed or unwritable data files (exit code 3).
    Data(String),
    /// Numerical failure during computation (exit code 4).
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config: {m}"),
            CliError::Data(m) => write!(f, "data: {m}"),
            CliError::Numeric(m) => write!(f, "numerical: {m}"),
        }
    }
}

/// Map a core error to the CLI error classes: bad inputs are data errors,
/// evaluation breakdowns are numerical.
pub fn core_error(e: spurt_core::Error) -> CliError {
    match e {
        spurt_core::Error::ImpossibleObservation { .. } => CliError::Numeric(e.to_string()),
        _ => CliError::Data(e.to_string()),
    }
}

/// Simulation model parameters as plain fields (kept apart from `HmmModel`
/// so a config document stays hand-editable).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub p0: f64,
    pub q0: f64,
    pub gamma0: f64,
    pub mu0: f64,
    pub gamma1: f64,
    pub mu1: f64,
    /// Initial probability of the quiet state; stationary when omitted.
    pub pi0: Option<f64>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            p0: 0.4,
            q0: 0.6,
            gamma0: 0.1,
            mu0: 0.3,
            gamma1: 0.2,
            mu1: 0.4,
            pi0: None,
        }
    }
}

impl ModelConfig {
    pub fn build(&self, delta: usize) -> Result<HmmModel, CliError> {
        let emit = [
            HbgParams::new(self.gamma0, self.mu0)
                .map_err(|e| CliError::Config(e.to_string()))?,
            HbgParams::new(self.gamma1, self.mu1)
                .map_err(|e| CliError::Config(e.to_string()))?,
        ];
        let mut model = HmmModel::new([0.5, 0.5], self.p0, self.q0, emit, delta)
            .map_err(|e| CliError::Config(e.to_string()))?;
        model.pi = match self.pi0 {
            Some(pi0) if (0.0..=1.0).contains(&pi0) => [pi0, 1.0 - pi0],
            Some(pi0) => {
                return Err(CliError::Config(format!("pi0 = {pi0} outside [0, 1]")))
            }
            None => model.stationary(),
        };
        Ok(model)
    }
}

/// The effective run configuration. Unknown keys in the document are
/// rejected so typos cannot silently fall back to defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub delta: usize,
    pub seed: u64,
    pub n_days: usize,
    pub binning: StateBinning,
    pub model: ModelConfig,
    pub thresholds: Thresholds,
    pub max_iters: usize,
    pub tol: f64,
    pub trials: u64,
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            delta: 7,
            seed: 7,
            n_days: 1500 * 7,
            binning: StateBinning::WindowConstant,
            model: ModelConfig::default(),
            thresholds: Thresholds::default(),
            max_iters: 500,
            tol: 1e-6,
            trials: 25_000,
            workers: 1,
        }
    }
}

impl RunConfig {
    /// Load from the given path, the `SPURT_CONFIG` environment variable,
    /// or defaults, then validate.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let chosen = match path {
            Some(p) => Some(p.to_path_buf()),
            None => std::env::var_os(CONFIG_ENV).map(Into::into),
        };
        let config = match chosen {
            Some(p) => {
                let text = std::fs::read_to_string(&p).map_err(|e| {
                    CliError::Config(format!("cannot read {}: {e}", p.display()))
                })?;
                serde_json::from_str::<RunConfig>(&text).map_err(|e| {
                    CliError::Config(format!("invalid config {}: {e}", p.display()))
                })?
            }
            None => RunConfig::default(),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.delta < 2 {
            return Err(CliError::Config(format!(
                "delta = {} must be at least 2",
                self.delta
            )));
        }
        if self.workers == 0 {
            return Err(CliError::Config("workers must be positive".into()));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(CliError::Config(format!("tol = {} must be positive", self.tol)));
        }
        self.thresholds
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))
    }

    /// Canonical single-line JSON of the effective configuration.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// FNV-1a hash of the canonical JSON, stable across runs and platforms.
    pub fn hash(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for byte in self.canonical_json().into_bytes() {
            h ^= u64::from(byte);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("{h:016x}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_hash_stably() {
        let config = RunConfig::default();
        config.validate().unwrap();
        assert_eq!(config.hash(), config.hash());
        let mut other = RunConfig::default();
        other.seed += 1;
        assert_ne!(config.hash(), other.hash());
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = serde_json::from_str::<RunConfig>(r#"{"detla": 7}"#).unwrap_err();
        assert!(err.to_string().contains("detla"));
    }

    #[test]
    fn stationary_initial_distribution_by_default() {
        let model = ModelConfig::default().build(7).unwrap();
        assert!((model.pi[1] - 0.4).abs() < 1e-12);
    }
}
