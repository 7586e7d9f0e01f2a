//! Checkpoints: policy, critic, normalizers, scheduler state, and the run
//! config, as one versioned JSON document (exact f64 round-trip).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::aps::SchedulerState;
use crate::config::RunConfig;
use crate::model::RobotModel;
use crate::nn::{GaussianPolicy, Mlp};
use crate::ppo::RunningNorm;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config: RunConfig,
    pub actor: GaussianPolicy,
    pub critic: Mlp,
    pub actor_norm: RunningNorm,
    pub critic_norm: RunningNorm,
    pub scheduler: Option<SchedulerState>,
    pub env_steps: u64,
    pub iteration: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("cannot access checkpoint {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("checkpoint parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error("checkpoint/model mismatch: {0}")]
    Mismatch(String),
}

impl Checkpoint {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CheckpointError> {
        let path = path.as_ref();
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|source| CheckpointError::Io {
                path: path.display().to_string(),
                source,
            })?;
        }
        let json = serde_json::to_string(self)?;
        std::fs::write(path, json).map_err(|source| CheckpointError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Checkpoint, CheckpointError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| CheckpointError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let ckpt: Checkpoint = serde_json::from_str(&text)?;
        if ckpt.version != CHECKPOINT_VERSION {
            return Err(CheckpointError::Version(ckpt.version));
        }
        Ok(ckpt)
    }

    /// Dimension checks against a model before running the networks.
    pub fn validate_against(&self, model: &RobotModel) -> Result<(), CheckpointError> {
        let dof = model.dof();
        let obs_goal = crate::env::Observation::dim(dof) + crate::env::Goal::dim(dof);
        if self.actor.mlp.input_dim() != obs_goal {
            return Err(CheckpointError::Mismatch(format!(
                "actor expects input dim {}, model gives {}",
                self.actor.mlp.input_dim(),
                obs_goal
            )));
        }
        if self.actor.mlp.output_dim() != dof {
            return Err(CheckpointError::Mismatch(format!(
                "actor outputs {} actions, model has {} joints",
                self.actor.mlp.output_dim(),
                dof
            )));
        }
        let priv_dim = if self.config.privileged_critic {
            crate::env::PrivilegedExtras::dim(model.feet.len())
        } else {
            0
        };
        if self.critic.input_dim() != obs_goal + priv_dim {
            return Err(CheckpointError::Mismatch(format!(
                "critic expects input dim {}, model gives {}",
                self.critic.input_dim(),
                obs_goal + priv_dim
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    #[test]
    fn save_load_round_trip_and_validation() {
        let mut rng = StdRng::seed_from_u64(0);
        let model = RobotModel::bundled_biped7();
        let dof = model.dof();
        let obs_goal = crate::env::Observation::dim(dof) + crate::env::Goal::dim(dof);
        let priv_dim = crate::env::PrivilegedExtras::dim(model.feet.len());
        let ckpt = Checkpoint {
            version: CHECKPOINT_VERSION,
            config: RunConfig::default(),
            actor: GaussianPolicy::new(Mlp::new(obs_goal, &[16], dof, 0.01, &mut rng), 0.25),
            critic: Mlp::new(obs_goal + priv_dim, &[16], 1, 1.0, &mut rng),
            actor_norm: RunningNorm::new(obs_goal),
            critic_norm: RunningNorm::new(obs_goal + priv_dim),
            scheduler: None,
            env_steps: 123,
            iteration: 4,
        };
        ckpt.validate_against(&model).unwrap();
        let dir = std::env::temp_dir().join("tether_ckpt_test");
        let path = dir.join("ckpt.json");
        ckpt.save(&path).unwrap();
        let back = Checkpoint::load(&path).unwrap();
        assert_eq!(back.actor, ckpt.actor);
        assert_eq!(back.critic, ckpt.critic);
        assert_eq!(back.env_steps, 123);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn dimension_mismatch_detected() {
        let mut rng = StdRng::seed_from_u64(0);
        let model = RobotModel::bundled_biped7();
        let ckpt = Checkpoint {
            version: CHECKPOINT_VERSION,
            config: RunConfig::default(),
            actor: GaussianPolicy::new(Mlp::new(10, &[8], 3, 0.01, &mut rng), 0.25),
            critic: Mlp::new(12, &[8], 1, 1.0, &mut rng),
            actor_norm: RunningNorm::new(10),
            critic_norm: RunningNorm::new(12),
            scheduler: None,
            env_steps: 0,
            iteration: 0,
        };
        assert!(ckpt.validate_against(&model).is_err());
    }
}
