//! Flat TOML/JSON run configuration. Every key is optional and overrides
//! the matching preset field; command-line flags override the file.

use std::path::Path;

use serde::Deserialize;

use super::{ExperimentSpec, HarnessError};
use crate::sim::{Algorithm, ConfigError, PlumeVariant};

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Option<String>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<String>,
    pub tick_budget: Option<u64>,
    pub algorithms: Option<Vec<Algorithm>>,
    pub sizes: Option<Vec<usize>>,
    pub plumes: Option<Vec<PlumeVariant>>,
    pub p_generic: Option<Vec<f64>>,
    pub p_inplume: Option<Vec<f64>>,
}

impl RunConfig {
    pub fn parse(text: &str, json: bool) -> Result<Self, ConfigError> {
        if json {
            serde_json::from_str(text).map_err(|e| ConfigError::Invalid(e.to_string()))
        } else {
            toml::from_str(text).map_err(|e| ConfigError::Invalid(e.to_string()))
        }
    }

    /// Reads a `.json` file as JSON and anything else as TOML.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let json = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("json"));
        Ok(Self::parse(&text, json)?)
    }

    pub fn apply(&self, spec: &mut ExperimentSpec) {
        if let Some(v) = self.trials {
            spec.trials = v;
        }
        if let Some(v) = self.seed {
            spec.base_seed = v;
        }
        if let Some(v) = self.tick_budget {
            spec.tick_budget = v;
        }
        if let Some(v) = &self.algorithms {
            spec.algorithms = v.clone();
        }
        if let Some(v) = &self.sizes {
            spec.sizes = v.clone();
        }
        if let Some(v) = &self.plumes {
            spec.plumes = v.clone();
        }
        if let Some(v) = &self.p_generic {
            spec.p_generic = v.clone();
        }
        if let Some(v) = &self.p_inplume {
            spec.p_inplume = v.clone();
        }
    }
}
