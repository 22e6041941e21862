use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::HarnessError;
use crate::backend::BackendSpec;
use crate::lindblad::IntegratorConfig;
use crate::model::{DynamicsLevel, ModelParams};
use crate::optimize::SearchConfig;
use crate::rates::RateParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Fig1,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
    Fig9,
}

impl Preset {
    pub const ALL: [Preset; 6] = [
        Preset::Fig1,
        Preset::Fig5,
        Preset::Fig6,
        Preset::Fig7,
        Preset::Fig8,
        Preset::Fig9,
    ];
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Preset::Fig1 => "fig1",
            Preset::Fig5 => "fig5",
            Preset::Fig6 => "fig6",
            Preset::Fig7 => "fig7",
            Preset::Fig8 => "fig8",
            Preset::Fig9 => "fig9",
        };
        f.write_str(s)
    }
}

impl FromStr for Preset {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Preset::ALL
            .into_iter()
            .find(|p| p.to_string() == s)
            .ok_or_else(|| format!("unknown preset `{s}` (expected one of fig1, fig5, fig6, fig7, fig8, fig9)"))
    }
}

/// What to run. Serialized as `simulate`, `optimize`, `ramsey`, `rates`,
/// `compare` or `preset:<name>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Scenario {
    Simulate,
    Optimize,
    Ramsey,
    Rates,
    Compare,
    Preset(Preset),
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scenario::Simulate => f.write_str("simulate"),
            Scenario::Optimize => f.write_str("optimize"),
            Scenario::Ramsey => f.write_str("ramsey"),
            Scenario::Rates => f.write_str("rates"),
            Scenario::Compare => f.write_str("compare"),
            Scenario::Preset(p) => write!(f, "preset:{p}"),
        }
    }
}

impl TryFrom<String> for Scenario {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        Ok(match s.as_str() {
            "simulate" => Scenario::Simulate,
            "optimize" => Scenario::Optimize,
            "ramsey" => Scenario::Ramsey,
            "rates" => Scenario::Rates,
            "compare" => Scenario::Compare,
            other => match other.strip_prefix("preset:") {
                Some(p) => Scenario::Preset(p.parse()?),
                None => return Err(format!("unknown scenario `{other}`")),
            },
        })
    }
}

impl From<Scenario> for String {
    fn from(s: Scenario) -> String {
        s.to_string()
    }
}

/// A list of points or an evenly spaced (optionally logarithmic) range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Points(Vec<f64>),
    Range {
        start: f64,
        stop: f64,
        n: usize,
        #[serde(default)]
        log: bool,
    },
}

impl Grid {
    pub fn linspace(start: f64, stop: f64, n: usize) -> Self {
        Grid::Range {
            start,
            stop,
            n,
            log: false,
        }
    }

    pub fn logspace(start: f64, stop: f64, n: usize) -> Self {
        Grid::Range {
            start,
            stop,
            n,
            log: true,
        }
    }

    pub fn points(&self) -> Vec<f64> {
        match *self {
            Grid::Points(ref p) => p.clone(),
            Grid::Range { start, stop, n, log } => {
                if n == 1 {
                    return vec![start];
                }
                (0..n)
                    .map(|k| {
                        let s = k as f64 / (n - 1) as f64;
                        if log {
                            10f64.powf(start.log10() + s * (stop.log10() - start.log10()))
                        } else {
                            start + s * (stop - start)
                        }
                    })
                    .collect()
            }
        }
    }

    pub fn validate(&self, path: &str, from_zero: bool) -> Result<(), HarnessError> {
        if let Grid::Range { start, n, log: true, .. } = *self {
            if !(start > 0.0) || n == 0 {
                return Err(HarnessError::config(path, "logarithmic ranges need start > 0 and n > 0"));
            }
        }
        let p = self.points();
        if p.is_empty() {
            return Err(HarnessError::config(path, "grid is empty"));
        }
        if p.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(HarnessError::config(path, "grid values must be finite and >= 0"));
        }
        if let Some(w) = p.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(HarnessError::config(
                path,
                format!("grid must be strictly increasing ({} then {})", w[0], w[1]),
            ));
        }
        if from_zero && p[0] != 0.0 {
            return Err(HarnessError::config(path, "time grid must start at 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub params: ModelParams,
    pub backend: BackendSpec,
    /// Time grid for simulations; must start at 0.
    pub times: Grid,
    /// Ramsey waiting times.
    pub taus: Grid,
    pub integrator: IntegratorConfig,
    pub search: SearchConfig,
    /// Target time of the numeric optimization.
    pub t_star: f64,
    /// Explicit rate-model rates; derived from `params` when absent.
    pub rates: Option<RateParams>,
    pub back_flow: bool,
    /// Correction backend of the metrology presets.
    pub ec_level: DynamicsLevel,
    /// Reference rate, for display only; all quantities are in its units.
    pub gamma_ref: f64,
    pub output: Option<PathBuf>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            scenario: Scenario::Simulate,
            params: ModelParams {
                g_sideband: 5000.0,
                ..Default::default()
            },
            backend: BackendSpec::default(),
            times: Grid::linspace(0.0, 1.0, 21),
            taus: Grid::logspace(1e-2, 1e2, 41),
            integrator: IntegratorConfig::default(),
            search: SearchConfig::default(),
            t_star: 1.0,
            rates: None,
            back_flow: false,
            ec_level: DynamicsLevel::EffectiveJump,
            gamma_ref: 1.0,
            output: None,
        }
    }
}

impl ScenarioConfig {
    pub fn preset(p: Preset) -> Self {
        ScenarioConfig {
            scenario: Scenario::Preset(p),
            ..Default::default()
        }
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::config("config", e.to_string()))
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.params
            .validate()
            .map_err(|e| HarnessError::config("params", e.to_string()))?;
        self.integrator
            .validate()
            .map_err(|e| HarnessError::config("integrator", e.to_string()))?;
        self.times.validate("times", true)?;
        self.taus.validate("taus", false)?;
        if self.taus.points().first() == Some(&0.0) && self.scenario == Scenario::Ramsey && self.params.signal == 0.0 {
            return Err(HarnessError::config("taus", "sensitivity needs waiting times > 0"));
        }
        if let Some(r) = &self.rates {
            r.validate().map_err(|e| HarnessError::config("rates", e.to_string()))?;
        }
        if !(self.t_star > 0.0) {
            return Err(HarnessError::config("t_star", "must be positive"));
        }
        if !(self.gamma_ref > 0.0) {
            return Err(HarnessError::config("gamma_ref", "must be positive"));
        }
        let t = self.backend.truncation;
        if t.n_max == 0 || t.max_exc == 0 {
            return Err(HarnessError::config("backend.truncation", "n_max and max_exc must be >= 1"));
        }
        let (nk, nr) = self.search.grid;
        if nk < 2 || nr < 2 {
            return Err(HarnessError::config("search.grid", "needs at least 2 points per axis"));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form (keys sorted), so that key order
    /// in the input does not matter. The output path is excluded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = None;
        let v = serde_json::to_value(&c).expect("config serializes");
        let text = serde_json::to_string(&v).expect("value serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
