//! Run configuration: one serializable struct drives every experiment.
//!
//! The full config is written into the output directory before any training
//! step so a run can be reproduced from its artifacts alone.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::env::{DrConfig, EnvConfig};
use crate::model::{self, RobotModel};
use crate::motion::{self, GaitKind, GaitParams, ReferenceMotion};
use crate::ppo::PpoConfig;

/// Where a reference motion comes from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum MotionSpec {
    /// A `.motion` CSV file.
    File {
        path: String,
        #[serde(default)]
        scale: Option<f64>,
    },
    /// A procedural gait.
    Gait {
        kind: GaitKind,
        #[serde(default)]
        params: Option<GaitParams>,
        #[serde(default)]
        scale: Option<f64>,
    },
}

/// Network topology shared by actor and critic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetConfig {
    pub hidden: Vec<usize>,
    /// Initial policy standard deviation.
    pub init_std: f64,
    /// Output-layer gain of the actor so initial residuals start near zero.
    pub actor_output_gain: f64,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            hidden: vec![256; 8],
            init_std: 0.25,
            actor_output_gain: 0.01,
        }
    }
}

/// Early-stop target checked at each periodic evaluation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrainTarget {
    pub living_rate: f64,
    pub success_rate: f64,
    /// Do not stop before this many iterations.
    pub min_iterations: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    /// Model file path, or `biped7` for the bundled robot.
    pub model: String,
    pub motions: Vec<MotionSpec>,
    pub env: EnvConfig,
    pub dr: DrConfig,
    pub ppo: PpoConfig,
    pub net: NetConfig,
    /// Use the priority scheduler; uniform full-motion sampling otherwise.
    pub aps: bool,
    /// Feed privileged extras to the critic.
    pub privileged_critic: bool,
    pub seed: u64,
    pub out_dir: String,
    /// Total environment steps to train for.
    pub total_steps: u64,
    /// Iterations between periodic evaluations (0 disables).
    pub eval_every: u64,
    pub eval_episodes: usize,
    /// Iterations between checkpoints.
    pub checkpoint_every: u64,
    #[serde(default)]
    pub target: Option<TrainTarget>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: "biped7".to_string(),
            motions: vec![
                MotionSpec::Gait {
                    kind: GaitKind::Stand,
                    params: None,
                    scale: None,
                },
                MotionSpec::Gait {
                    kind: GaitKind::Squat,
                    params: None,
                    scale: None,
                },
                MotionSpec::Gait {
                    kind: GaitKind::Walk,
                    params: None,
                    scale: None,
                },
            ],
            env: EnvConfig::default(),
            dr: DrConfig::default(),
            ppo: PpoConfig::default(),
            net: NetConfig::default(),
            aps: true,
            privileged_critic: true,
            seed: 1,
            out_dir: "runs/latest".to_string(),
            total_steps: 2_000_000,
            eval_every: 2,
            eval_episodes: 1,
            checkpoint_every: 10,
            target: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Model(#[from] model::ModelError),
    #[error(transparent)]
    Motion(#[from] motion::MotionError),
    #[error("config invalid: {0}")]
    Invalid(String),
}

impl RunConfig {
    /// The quick standing-only pipeline check.
    pub fn preset_stand_smoke() -> RunConfig {
        RunConfig {
            motions: vec![MotionSpec::Gait {
                kind: GaitKind::Stand,
                params: None,
                scale: None,
            }],
            total_steps: 50_000,
            ppo: PpoConfig {
                num_envs: 8,
                steps_per_env: 128,
                ..PpoConfig::default()
            },
            target: Some(TrainTarget {
                living_rate: 90.0,
                success_rate: 80.0,
                min_iterations: 3,
            }),
            out_dir: "runs/stand-smoke".to_string(),
            ..RunConfig::default()
        }
    }

    /// The stand/squat/walk training setup on the bundled biped.
    pub fn preset_desk() -> RunConfig {
        RunConfig {
            target: Some(TrainTarget {
                living_rate: 90.0,
                success_rate: 80.0,
                min_iterations: 3,
            }),
            out_dir: "runs/desk".to_string(),
            ..RunConfig::default()
        }
    }

    pub fn preset(name: &str) -> Option<RunConfig> {
        match name {
            "stand-smoke" => Some(Self::preset_stand_smoke()),
            "desk" => Some(Self::preset_desk()),
            _ => None,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<RunConfig, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let config: RunConfig = serde_json::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.motions.is_empty() {
            return Err(ConfigError::Invalid("no motions configured".into()));
        }
        if self.ppo.num_envs == 0 || self.ppo.steps_per_env == 0 {
            return Err(ConfigError::Invalid(
                "ppo.num_envs and ppo.steps_per_env must be positive".into(),
            ));
        }
        if !(self.ppo.gamma > 0.0 && self.ppo.gamma <= 1.0)
            || !(self.ppo.gae_lambda > 0.0 && self.ppo.gae_lambda <= 1.0)
        {
            return Err(ConfigError::Invalid(
                "gamma and gae_lambda must lie in (0, 1]".into(),
            ));
        }
        if !(self.ppo.clip_eps > 0.0) {
            return Err(ConfigError::Invalid("clip_eps must be positive".into()));
        }
        if self.net.hidden.is_empty() {
            return Err(ConfigError::Invalid("net.hidden must be non-empty".into()));
        }
        Ok(())
    }

    /// Load the robot model this config names.
    pub fn load_model(&self) -> Result<RobotModel, ConfigError> {
        if self.model == "biped7" {
            Ok(RobotModel::bundled_biped7())
        } else {
            Ok(model::load_model(&self.model)?)
        }
    }

    /// Materialize every motion spec against the model.
    pub fn build_motions(
        &self,
        model: &RobotModel,
    ) -> Result<Vec<Arc<ReferenceMotion>>, ConfigError> {
        let mut out = Vec::new();
        for (id, spec) in self.motions.iter().enumerate() {
            let (mut motion, scale) = match spec {
                MotionSpec::File { path, scale } => (motion::load_motion(path, model)?, *scale),
                MotionSpec::Gait {
                    kind,
                    params,
                    scale,
                } => {
                    let p = params.clone().unwrap_or_default();
                    (motion::generate_gait(*kind, &p, model)?, *scale)
                }
            };
            if let Some(ratio) = scale {
                motion = motion.scale_root(ratio)?;
            }
            motion.id = id;
            out.push(Arc::new(motion));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_valid_and_round_trips() {
        let config = RunConfig::default();
        config.validate().unwrap();
        let json = config.to_json();
        let back: RunConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_json(), json);
    }

    #[test]
    fn presets_build_motions() {
        let config = RunConfig::preset("stand-smoke").unwrap();
        let model = config.load_model().unwrap();
        let motions = config.build_motions(&model).unwrap();
        assert_eq!(motions.len(), 1);
        assert_eq!(motions[0].name, "stand");
        assert!(RunConfig::preset("desk").is_some());
        assert!(RunConfig::preset("nope").is_none());
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut config = RunConfig::default();
        config.motions.clear();
        assert!(config.validate().is_err());
        let mut config = RunConfig::default();
        config.ppo.gamma = 1.5;
        assert!(config.validate().is_err());
    }
}
