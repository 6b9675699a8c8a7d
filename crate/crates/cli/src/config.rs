//! Experiment configuration file (TOML).

use std::path::{Path, PathBuf};

use plsagg_core::{AggregationKind, NoiseModel, PenaltyConfig, SearchMode};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Aggregate,
    Oracle,
    CheckIneq,
    RateSweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Aggregate => "aggregate",
            Command::Oracle => "oracle",
            Command::CheckIneq => "check-ineq",
            Command::RateSweep => "rate-sweep",
        }
    }
}

/// The target `f`: a named CSV column or coefficients over the dictionary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetSpec {
    Column(String),
    Coefficients(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_search")]
    pub search: SearchMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_support: Option<usize>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_sweeps")]
    pub max_sweeps: usize,
}

fn default_search() -> SearchMode {
    SearchMode::Exhaustive
}

fn default_tol() -> f64 {
    1e-8
}

fn default_max_sweeps() -> usize {
    100_000
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { search: default_search(), max_support: None, tol: default_tol(), max_sweeps: default_max_sweeps() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub kind: AggregationKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default = "default_gap_tol")]
    pub gap_tol: f64,
}

fn default_gap_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InequalityConfig {
    /// `ε` in the ℓ₁ bound.
    #[serde(default = "default_eps")]
    pub eps: f64,
}

fn default_eps() -> f64 {
    plsagg_core::sim::DEFAULT_EPS
}

impl Default for InequalityConfig {
    fn default() -> Self {
        Self { eps: default_eps() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grids {
    pub kind: AggregationKind,
    pub n: Vec<usize>,
    pub m: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub penalty: Option<PenaltyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleConfig>,
    #[serde(default)]
    pub inequality: InequalityConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grids: Option<Grids>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::config(format!("invalid config: {}", e.message())))
    }

    /// Reads a config file; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let Some(p) = &cfg.input_path {
            if p.is_relative() {
                cfg.input_path = Some(base.join(p));
            }
        }
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        Ok(cfg)
    }

    #[cfg(test)]
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if let Some(p) = &self.input_path {
            if !p.is_file() {
                return Err(CliError::config(format!("input_path {} does not exist", p.display())));
            }
        }
        let need = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(CliError::config(format!("command {} requires {what}", self.command.name())))
            }
        };
        match self.command {
            Command::Aggregate => {
                need(self.input_path.is_some(), "input_path")?;
                need(self.penalty.is_some(), "a [penalty] table")?;
            }
            Command::Oracle => {
                need(self.input_path.is_some(), "input_path")?;
                need(self.target.is_some(), "a target")?;
                need(self.oracle.is_some(), "an [oracle] table")?;
            }
            Command::CheckIneq => {
                need(self.input_path.is_some(), "input_path")?;
                need(self.penalty.is_some(), "a [penalty] table")?;
                need(self.target.is_some(), "a target")?;
                need(self.noise.is_some(), "a [noise] table")?;
                need(self.replicates.is_some_and(|r| r >= 2), "replicates >= 2")?;
            }
            Command::RateSweep => {
                need(self.penalty.is_some(), "a [penalty] table")?;
                need(self.noise.is_some(), "a [noise] table")?;
                need(self.replicates.is_some_and(|r| r >= 2), "replicates >= 2")?;
                let g = self.grids.as_ref().ok_or_else(|| CliError::config("command rate-sweep requires [grids]"))?;
                if g.n.is_empty() || g.m.is_empty() {
                    return Err(CliError::config("rate-sweep grids n and m must be nonempty"));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use plsagg_core::L1Factor;

    const FULL: &str = r#"
schema_version = 1
command = "check_ineq"
input_path = "dict.csv"
output_dir = "out"
replicates = 200
target = { coefficients = [1.0, 0.0, 0.5] }

[penalty]
kind = "l1"
sigma_sq = 0.25
l1_factor = "two_sqrt_two"

[noise]
sigma = 0.5
seed = 11

[solver]
search = "greedy"
max_support = 3

[inequality]
eps = 1.5

[grids]
kind = "S"
n = [100, 200]
m = [8]
d = 2
"#;

    #[test]
    fn round_trip_is_identity() {
        let cfg = ExperimentConfig::parse(FULL).unwrap();
        assert_eq!(cfg.command, Command::CheckIneq);
        assert_eq!(cfg.penalty.unwrap().l1_factor, L1Factor::TwoSqrtTwo);
        assert_eq!(cfg.target, Some(TargetSpec::Coefficients(vec![1.0, 0.0, 0.5])));
        let again = ExperimentConfig::parse(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn minimal_round_trip() {
        let text = "schema_version = 1\ncommand = \"oracle\"\ninput_path = \"x.csv\"\noutput_dir = \"o\"\n\
                    target = { column = \"f3\" }\n[oracle]\nkind = \"MS\"\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(ExperimentConfig::parse(&cfg.to_toml()).unwrap(), cfg);
        assert_eq!(cfg.oracle.unwrap().gap_tol, 1e-10);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{FULL}\nbogus = 1\n");
        assert!(ExperimentConfig::parse(&text).is_err());
        let nested = FULL.replace("seed = 11", "seed = 11\ncolour = 3");
        assert!(ExperimentConfig::parse(&nested).is_err());
    }

    #[test]
    fn validation_catches_missing_pieces() {
        let mut cfg = ExperimentConfig::parse(FULL).unwrap();
        cfg.input_path = None;
        cfg.command = Command::RateSweep;
        cfg.validate().unwrap();
        cfg.grids.as_mut().unwrap().n.clear();
        assert!(cfg.validate().is_err());
        cfg.command = Command::Aggregate;
        assert!(cfg.validate().is_err());
        let mut wrong = ExperimentConfig::parse(FULL).unwrap();
        wrong.schema_version = 2;
        assert!(wrong.validate().is_err());
    }
}
