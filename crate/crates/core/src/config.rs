//! JSON run configuration shared by the CLI subcommands. Every key is
//! optional; absent keys fall back to each command's defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::entropy::ScaleMode;
use crate::error::{Error, Result};
use crate::restructure::{Estimator, RestructureConfig};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub alpha: Option<f64>,
    pub k: Option<usize>,
    pub tau: Option<f64>,
    pub m: Option<usize>,
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
    pub lr: Option<f64>,
    pub steps: Option<usize>,
    pub trials: Option<usize>,
    pub estimator: Option<Estimator>,
    pub scale_mode: Option<ScaleMode>,
    pub parts_min: Option<usize>,
    pub delta: Option<f64>,
    #[serde(rename = "constant_C")]
    pub constant_c: Option<f64>,
}

impl RunConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::invalid(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    /// Applies the set keys on top of `base`.
    pub fn restructure(&self, base: RestructureConfig) -> RestructureConfig {
        RestructureConfig {
            lambda: self.lambda.unwrap_or(base.lambda),
            mu: self.mu.unwrap_or(base.mu),
            estimator: self.estimator.unwrap_or(base.estimator),
            k: self.k.or(base.k),
            alpha: self.alpha.unwrap_or(base.alpha),
            scale_mode: self.scale_mode.unwrap_or(base.scale_mode),
            m: self.m.unwrap_or(base.m),
            tau: self.tau.unwrap_or(base.tau),
            steps: self.steps.unwrap_or(base.steps),
            lr: self.lr.unwrap_or(base.lr),
            ..base
        }
    }
}
