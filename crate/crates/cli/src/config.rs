//! Run configuration: one TOML file per run. Every block is optional; a
//! missing block falls back to the verb's default, a present block must be
//! complete. Unknown keys are errors.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight: Option<WeightConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub operator: Option<OperatorConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub identity: Option<IdentityConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inverse: Option<InverseConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub demo: Option<DemoConfig>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub nt: usize,
    pub t_final: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    /// Brownian paths per ensemble
    pub paths: usize,
    /// manufactured pairs or random problems
    pub members: usize,
    /// GL only: members used to fit C(μ), default half of them
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<usize>,
    /// GL only: factor applied to the fitted constant, default 2
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub safety: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightConfig {
    pub mu: f64,
    /// observation interval
    pub g0: [f64; 2],
    /// time exponent of the weight denominator
    #[serde(default = "one")]
    pub k: u32,
    /// also run the λ → ∞ check on B; it is known to fail at μ = 4
    #[serde(default)]
    pub leading_order_check: bool,
    #[serde(default)]
    pub trace_xs: Vec<f64>,
    #[serde(default)]
    pub trace_ts: Vec<f64>,
}

fn one() -> u32 {
    1
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorConfig {
    pub b_max: f64,
    pub coefficient_amp: f64,
    pub source_amp: f64,
    pub w0_modes: u32,
    /// heat pairs: sine modes per pair
    #[serde(default = "four")]
    pub modes: usize,
    /// heat pairs: include the Brownian part
    #[serde(default = "yes")]
    pub stochastic: bool,
}

fn four() -> usize {
    4
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub lambdas: Vec<f64>,
    #[serde(default)]
    pub mus: Vec<f64>,
    /// GL: start of the time window
    #[serde(default)]
    pub delta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentityConfig {
    /// random exact assignments for the jet oracle
    pub assignments: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InverseConfig {
    pub t1: f64,
    pub t2: f64,
    pub t0: f64,
    pub mu1: f64,
    pub c_tau: f64,
    pub mu_max: f64,
    pub max_spread: f64,
    pub epsilons: Vec<f64>,
    /// exponent the uniqueness slope is tested against; defaults to τ(t1)
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_fit: Option<f64>,
    /// which member the uniqueness probe uses
    #[serde(default)]
    pub probe_member: usize,
    /// optimize_mu against the grid on this many random draws
    #[serde(default = "hundred")]
    pub optimizer_draws: usize,
}

fn hundred() -> usize {
    100
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemoConfig {
    pub systems: usize,
    pub dim: usize,
    pub t_final: f64,
    pub steps: usize,
    pub functions: usize,
    /// λ = λ*·m for each m
    pub lambda_multipliers: Vec<f64>,
    pub cells: usize,
    pub x0: f64,
    pub slope: f64,
    pub gamma0: f64,
    /// constant to test against; defaults to the explicit one
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<f64>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

pub fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), CliError> {
    if cond {
        Ok(())
    } else {
        Err(CliError::Config(msg()))
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        check(self.nx >= 3 && self.nt >= 2 && self.t_final > 0.0 && self.t_final.is_finite(), || {
            format!("grid needs nx >= 3, nt >= 2, t_final > 0; got {self:?}")
        })
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        check(self.paths >= 2 && self.members >= 1, || format!("ensemble needs paths >= 2, members >= 1; got {self:?}"))
    }

    /// Fills in the GL fit parameters and checks them.
    pub fn with_fit_defaults(mut self) -> Result<Self, CliError> {
        let calibration = *self.calibration.get_or_insert((self.members / 2).max(1));
        let safety = *self.safety.get_or_insert(2.0);
        check(calibration >= 1 && calibration <= self.members && safety > 0.0, || {
            format!("ensemble needs 1 <= calibration <= members and safety > 0; got {self:?}")
        })?;
        Ok(self)
    }
}
