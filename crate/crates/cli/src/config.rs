//! Run configuration, parsed from TOML.

use std::path::Path;

use anyhow::{Context, Result};
use rfcover::envs::EnvSpec;
use rfcover::explore::{Algorithm, ParamOverrides};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParameterMode {
    /// Report the analysis schedule only; its tolerances are not executable.
    Theory,
    Practical,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    #[serde(default)]
    pub pco: ParamOverrides,
    #[serde(default)]
    pub pcr: ParamOverrides,
}

impl Overrides {
    pub fn for_algorithm(&self, algorithm: Algorithm) -> &ParamOverrides {
        match algorithm {
            Algorithm::Pco => &self.pco,
            Algorithm::Pcr => &self.pcr,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub parameter_mode: ParameterMode,
    #[serde(default)]
    pub seed: u64,
    /// Target cover accuracy, also the `eps_final` of the schedule.
    pub eps: f64,
    pub delta: f64,
    /// Seeded instances per environment.
    #[serde(default = "one")]
    pub runs: usize,
    #[serde(default)]
    pub algorithms: Vec<Algorithm>,
    /// Latent state bound handed to the algorithms; the model's own count if absent.
    #[serde(default)]
    pub s_count: Option<usize>,
    #[serde(default)]
    pub envs: Vec<EnvSpec>,
    #[serde(default)]
    pub overrides: Overrides,
}

fn one() -> usize {
    1
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text)?;
        if !(cfg.eps > 0.0 && cfg.eps < 1.0) {
            anyhow::bail!("field `eps`: {} is outside (0, 1)", cfg.eps);
        }
        if !(cfg.delta > 0.0 && cfg.delta < 1.0) {
            anyhow::bail!("field `delta`: {} is outside (0, 1)", cfg.delta);
        }
        if cfg.s_count == Some(0) {
            anyhow::bail!("field `s_count`: must be positive");
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("config error in {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_has_an_empty_matrix() {
        let cfg = Config::parse("parameter_mode = \"practical\"\neps = 0.1\ndelta = 0.1\n").unwrap();
        assert!(cfg.envs.is_empty() && cfg.algorithms.is_empty());
        assert_eq!(cfg.runs, 1);
    }

    #[test]
    fn unknown_fields_are_named() {
        let text = "parameter_mode = \"practical\"\neps = 0.1\ndelta = 0.1\n[overrides.pco]\nsampels = 3\n";
        let err = format!("{:#}", Config::parse(text).unwrap_err());
        assert!(err.contains("sampels"), "{err}");
    }

    #[test]
    fn out_of_range_accuracy_is_rejected() {
        let err = Config::parse("parameter_mode = \"theory\"\neps = 2.0\ndelta = 0.1\n").unwrap_err();
        assert!(err.to_string().contains("eps"));
    }
}
