//! One entry point for building the Lindblad model of any dynamics level.

use serde::{Deserialize, Serialize};

use crate::effective::{build_effective_model, EffectiveOptions, EffectiveRates};
use crate::error::{Error, Result};
use crate::lindblad::LindbladModel;
use crate::model::{CodeVariant, DynamicsLevel, ModelParams, System, Truncation};

/// Everything needed to build a model besides the physical parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendSpec {
    pub level: DynamicsLevel,
    pub variant: CodeVariant,
    pub truncation: Truncation,
    pub effective: EffectiveOptions,
}

impl Default for BackendSpec {
    fn default() -> Self {
        BackendSpec {
            level: DynamicsLevel::EngineeredDecay,
            variant: CodeVariant::BitFlipIndividual,
            truncation: Truncation::default(),
            effective: EffectiveOptions::default(),
        }
    }
}

impl BackendSpec {
    pub fn new(level: DynamicsLevel) -> Self {
        BackendSpec {
            level,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct Backend {
    pub system: System,
    pub model: LindbladModel,
    /// Present for the effective level.
    pub rates: Option<EffectiveRates>,
}

impl Backend {
    pub fn new(spec: &BackendSpec, p: &ModelParams) -> Result<Self> {
        if spec.level == DynamicsLevel::RateModel {
            return Err(Error::UnsupportedLevel("a Lindblad model", spec.level.to_string()));
        }
        let system = System::new(spec.variant, spec.level, spec.truncation)?;
        let (model, rates) = if spec.level == DynamicsLevel::EffectiveJump {
            let (m, r) = build_effective_model(p, spec.variant, &spec.effective)?;
            (m, Some(r))
        } else {
            (system.lindblad_model(p)?, None)
        };
        Ok(Backend {
            system,
            model,
            rates,
        })
    }

    /// Factor applied to codeword fidelities: (1 − f_e) for the effective
    /// level with strong-driving corrections, 1 otherwise.
    pub fn fidelity_factor(&self) -> f64 {
        self.rates.map_or(1.0, |r| 1.0 - r.f_e)
    }
}
