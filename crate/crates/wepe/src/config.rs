//! Run configuration file: one JSON document with `mode`, `lattice`,
//! `encoder` and `surrogate` sections consumed by the CLI.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoder::EncoderConfig;
use crate::lattice::LatticeParams;
use crate::surrogate::SurrogateConfig;
use crate::util::inverse_softplus;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunMode {
    Pretrain,
    Finetune,
}

/// Encoder section of the config file; the lattice lives in its own section,
/// so this carries the remaining encoder fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderSection {
    pub alpha_u: f64,
    pub alpha_v: f64,
    pub alpha_scale_raw: f64,
    pub alpha_learn: f64,
    pub beta_pos: f64,
    pub grid_h: u32,
    pub grid_w: u32,
    pub proj_dim: u32,
    pub proj_seed: u64,
}

impl From<&EncoderConfig> for EncoderSection {
    fn from(cfg: &EncoderConfig) -> Self {
        Self {
            alpha_u: cfg.alpha_u,
            alpha_v: cfg.alpha_v,
            alpha_scale_raw: cfg.alpha_scale_raw,
            alpha_learn: cfg.alpha_learn,
            beta_pos: cfg.beta_pos,
            grid_h: cfg.grid_h,
            grid_w: cfg.grid_w,
            proj_dim: cfg.proj_dim,
            proj_seed: cfg.proj_seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub mode: RunMode,
    pub lattice: LatticeParams,
    pub encoder: EncoderSection,
    pub surrogate: SurrogateConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let enc = EncoderConfig::default();
        Self {
            mode: RunMode::Pretrain,
            lattice: enc.lattice.clone(),
            encoder: EncoderSection::from(&enc),
            surrogate: SurrogateConfig::default(),
        }
    }
}

impl RunConfig {
    /// Assemble the full encoder configuration from the `encoder` and
    /// `lattice` sections.
    pub fn encoder_config(&self) -> EncoderConfig {
        let s = &self.encoder;
        EncoderConfig {
            alpha_u: s.alpha_u,
            alpha_v: s.alpha_v,
            alpha_scale_raw: s.alpha_scale_raw,
            alpha_learn: s.alpha_learn,
            beta_pos: s.beta_pos,
            grid_h: s.grid_h,
            grid_w: s.grid_w,
            proj_dim: s.proj_dim,
            proj_seed: s.proj_seed,
            lattice: self.lattice.clone(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.lattice
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let s = &self.encoder;
        if s.alpha_u <= 0.0 || s.alpha_v <= 0.0 {
            return Err(ConfigError::Invalid("alpha_u and alpha_v must be > 0".into()));
        }
        if s.grid_h < 1 || s.grid_w < 1 {
            return Err(ConfigError::Invalid("grid dimensions must be >= 1".into()));
        }
        if s.proj_dim < 4 {
            return Err(ConfigError::Invalid("proj_dim must be >= 4".into()));
        }
        if self.surrogate.beta <= 0.0
            || self.surrogate.alpha <= 0.0
            || self.surrogate.r_eps <= 0.0
        {
            return Err(ConfigError::Invalid(
                "surrogate beta, alpha and r_eps must be > 0".into(),
            ));
        }
        Ok(())
    }

    pub fn from_file<P: AsRef<Path>>(path: P) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        let cfg: RunConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_file<P: AsRef<Path>>(&self, path: P) -> Result<(), ConfigError> {
        Ok(std::fs::write(path, serde_json::to_string_pretty(self)?)?)
    }

    /// Convenience constructor for sweeps: defaults with the given lattice
    /// scale factors and tanh compression.
    pub fn with_alpha_and_scale(alpha: f64, alpha_scale: f64) -> Self {
        let mut cfg = Self::default();
        cfg.encoder.alpha_u = alpha;
        cfg.encoder.alpha_v = alpha;
        cfg.encoder.alpha_scale_raw = inverse_softplus(alpha_scale);
        cfg
    }
}
