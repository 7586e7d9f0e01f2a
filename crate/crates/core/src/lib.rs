//! Motion-imitation reinforcement learning for a planar floating-base biped.
//!
//! A policy outputs bounded residual corrections around kinematic reference
//! motions; a PD-controlled rigid-body simulation executes the corrected
//! joint targets. Training uses PPO with an asymmetric actor-critic, a
//! priority-based motion scheduler, and optional domain randomization;
//! evaluation reports living/success rates and tracking distances.

pub mod aps;
pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod env;
pub mod metrics;
pub mod model;
pub mod motion;
pub mod nn;
pub mod ppo;
pub mod rewards;
pub mod sim;
pub mod trainer;

pub use model::{load_model, GeneralizedPose, RobotModel};

