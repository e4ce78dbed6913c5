//! Command-line flags and their JSON config-file mirror.
//!
//! A config file is a flat JSON object whose keys are the long flag names
//! (`{"beta": 0.29, "tol-t": 0.001}`); flags given on the command line win.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

pub const DEFAULT_BETA: f64 = 0.29;
pub const DEFAULT_GAMMA: f64 = 0.1;
pub const DEFAULT_I0: f64 = 1.49e-5;
pub const DEFAULT_ALPHA_LOCK: f64 = 0.231;
pub const DEFAULT_PRECISION: usize = 10;

#[derive(Debug, Parser)]
#[command(
    name = "lockdown",
    version,
    about = "Optimal start time of a finite lockdown in the SIR model"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal start time and final size for one lockdown.
    Optimize(OptimizeArgs),
    /// Time series of (S, I, R, u) under a lockdown policy.
    Trajectory(TrajectoryArgs),
    /// Grid of optimal solutions over R0, alpha and duration.
    Sweep(SweepArgs),
    /// Start-time tables for total and partial lockdowns.
    Tables(TablesArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    #[default]
    Bisection,
    Trisection,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct RateArgs {
    /// Infection rate (1/day)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Recovery rate (1/day)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SeedArgs {
    /// Initial infected proportion
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub i0: Option<f64>,
    /// Initial susceptible proportion [default: 1 - i0]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s0: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SolverArgs {
    /// RK4 step (days) [default: 0.01]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Width of the final bracket on T* (days) [default: 0.001]
    #[arg(long = "tol-t")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol_t: Option<f64>,
    /// Tolerance of the final-size root solve [default: 1e-10]
    #[arg(long = "tol-s")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol_s: Option<f64>,
    /// Iteration cap for the start-time search [default: 200]
    #[arg(long = "max-iter")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct OutputArgs {
    /// Write results here instead of stdout
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    /// Significant digits in CSV output [default: 10]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub precision: Option<usize>,
    /// JSON config file; flags override its values
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct OptimizeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub rates: RateArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub seed: SeedArgs,
    /// Maximal lockdown intensity in [0, 1) [default: 0.231]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Lockdown duration (days)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub algorithm: Option<Algorithm>,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct TrajectoryArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub rates: RateArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub seed: SeedArgs,
    /// Maximal lockdown intensity in [0, 1) [default: 0.231]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Lockdown duration (days)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    /// Lockdown start (days) [default: the optimal start]
    #[arg(long = "t-start")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_start: Option<f64>,
    /// Horizon (days) [default: lockdown end + 200]
    #[arg(long = "t-end")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    /// Keep every n-th integration node [default: 10]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stride: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SweepArgs {
    /// Basic reproduction numbers, comma separated
    #[arg(long = "r0", value_delimiter = ',')]
    #[serde(rename = "r0", skip_serializing_if = "Option::is_none")]
    pub r0_values: Option<Vec<f64>>,
    /// Lockdown intensities, comma separated
    #[arg(long = "alphas", value_delimiter = ',')]
    #[serde(rename = "alphas", skip_serializing_if = "Option::is_none")]
    pub alpha_values: Option<Vec<f64>>,
    /// Lockdown durations (days), comma separated
    #[arg(long = "durations", value_delimiter = ',')]
    #[serde(rename = "durations", skip_serializing_if = "Option::is_none")]
    pub d_values: Option<Vec<f64>>,
    /// Recovery rate of the swept systems (1/day) [default: 0.1]
    #[arg(long = "base-gamma")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base_gamma: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub seed: SeedArgs,
    /// Worker threads [default: all cores]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct TablesArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub rates: RateArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub seed: SeedArgs,
    /// Intensity of the partial-lockdown table [default: 0.231]
    #[arg(long = "alpha-lock")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_lock: Option<f64>,
    /// Lockdown durations (days), comma separated [default: 30,60,90]
    #[arg(long = "durations", value_delimiter = ',')]
    #[serde(rename = "durations", skip_serializing_if = "Option::is_none")]
    pub d_values: Option<Vec<f64>>,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutputArgs,
}

/// Overlays the values set on the command line onto the config document at
/// `path`, if any.
pub fn layered<T>(cli: T, path: Option<&Path>) -> Result<T, CliError>
where
    T: Serialize + DeserializeOwned,
{
    let Some(path) = path else {
        return Ok(cli);
    };
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let mut base: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let Value::Object(base_map) = &mut base else {
        return Err(CliError::Validation(format!(
            "{}: expected a JSON object",
            path.display()
        )));
    };
    let Value::Object(overrides) = serde_json::to_value(&cli).map_err(CliError::from)? else {
        unreachable!("argument structs serialize to objects");
    };
    base_map.extend(overrides);
    serde_json::from_value(base)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

impl SolverArgs {
    pub fn settings(&self) -> lockdown_core::SolverSettings {
        let d = lockdown_core::SolverSettings::default();
        lockdown_core::SolverSettings {
            dt: self.dt.unwrap_or(d.dt),
            tol_t: self.tol_t.unwrap_or(d.tol_t),
            tol_s: self.tol_s.unwrap_or(d.tol_s),
            max_iter: self.max_iter.unwrap_or(d.max_iter),
        }
    }
}

impl RateArgs {
    pub fn params(&self) -> Result<lockdown_core::ModelParams, CliError> {
        Ok(lockdown_core::ModelParams::new(
            self.beta.unwrap_or(DEFAULT_BETA),
            self.gamma.unwrap_or(DEFAULT_GAMMA),
        )?)
    }
}

impl SeedArgs {
    pub fn state(&self) -> Result<lockdown_core::EpidemicState, CliError> {
        let i0 = self.i0.unwrap_or(DEFAULT_I0);
        let s0 = self.s0.unwrap_or(1.0 - i0);
        Ok(lockdown_core::EpidemicState::new(s0, i0)?)
    }
}

impl OutputArgs {
    pub fn format_or(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }

    pub fn precision(&self) -> Result<usize, CliError> {
        match self.precision.unwrap_or(DEFAULT_PRECISION) {
            p @ 1..=17 => Ok(p),
            p => Err(CliError::Validation(format!(
                "precision {p} must lie in 1..=17"
            ))),
        }
    }
}

pub(crate) fn required(value: Option<f64>, flag: &str) -> Result<f64, CliError> {
    value.ok_or_else(|| CliError::Validation(format!("missing --{flag}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        fs::write(
            &path,
            r#"{"beta": 0.5, "gamma": 0.2, "duration": 45, "tol-t": 0.01}"#,
        )
        .unwrap();
        let cli = OptimizeArgs {
            rates: RateArgs {
                beta: Some(0.3),
                gamma: None,
            },
            ..Default::default()
        };
        let merged = layered(cli, Some(&path)).unwrap();
        assert_eq!(merged.rates.beta, Some(0.3));
        assert_eq!(merged.rates.gamma, Some(0.2));
        assert_eq!(merged.duration, Some(45.0));
        assert_eq!(merged.solver.tol_t, Some(0.01));
    }

    #[test]
    fn bad_file_is_a_validation_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        fs::write(&path, "[1, 2]").unwrap();
        let err = layered(OptimizeArgs::default(), Some(&path)).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let missing = layered(
            OptimizeArgs::default(),
            Some(Path::new("/nonexistent/x.json")),
        )
        .unwrap_err();
        assert_eq!(missing.exit_code(), 2);
    }

    #[test]
    fn config_round_trip_is_idempotent() {
        let text = r#"{"beta":0.29,"gamma":0.1,"i0":1.49e-5,"alpha":0.231,"duration":30.0,
            "algorithm":"trisection","dt":0.01,"tol-t":0.001,"format":"csv","precision":12}"#;
        let parsed: OptimizeArgs = serde_json::from_str(text).unwrap();
        let once = serde_json::to_string(&parsed).unwrap();
        let reparsed: OptimizeArgs = serde_json::from_str(&once).unwrap();
        assert_eq!(parsed, reparsed);
        assert_eq!(once, serde_json::to_string(&reparsed).unwrap());

        let sweep: SweepArgs = serde_json::from_str(
            r#"{"r0":[1.5,2.5],"alphas":[0.1],"durations":[30,60],"threads":2}"#,
        )
        .unwrap();
        assert_eq!(sweep.r0_values, Some(vec![1.5, 2.5]));
        let again: SweepArgs =
            serde_json::from_str(&serde_json::to_string(&sweep).unwrap()).unwrap();
        assert_eq!(sweep, again);
    }

    #[test]
    fn defaults_follow_the_reference_setup() {
        let p = RateArgs::default().params().unwrap();
        assert_eq!((p.beta, p.gamma), (0.29, 0.1));
        let x = SeedArgs::default().state().unwrap();
        assert_eq!(x.i, 1.49e-5);
        assert_eq!(x.s, 1.0 - 1.49e-5);
    }
}
