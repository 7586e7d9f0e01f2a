//! Command-line entry points: `train`, `eval`, `replay`, `noise-sweep`, and
//! `ablate`.
//!
//! Exit codes: 0 on success, 1 on user error, 2 on simulation or
//! optimization divergence.

use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use crate::checkpoint::Checkpoint;
use crate::config::{RunConfig, TrainTarget};
use crate::trainer::{self, EvalSetup, TrainError};

#[derive(Debug, Parser)]
#[command(
    name = "tether",
    about = "Motion-imitation RL for a planar biped: bounded residual policies around reference motions",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a policy with the collect/update loop.
    Train(TrainArgs),
    /// Evaluate a checkpoint with deterministic mean actions.
    Eval(EvalArgs),
    /// Dump one deterministic episode tick by tick as CSV.
    Replay(ReplayArgs),
    /// Evaluate a checkpoint under increasing reference noise.
    NoiseSweep(NoiseSweepArgs),
    /// Run the ablation arms (constraints, privileged critic, scheduler,
    /// randomization) under a shared budget and seeds.
    Ablate(AblateArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// JSON config file; defaults come from --preset otherwise.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Built-in preset: stand-smoke | desk.
    #[arg(long, default_value = "desk")]
    pub preset: String,
    /// Override total environment steps.
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for config, logs, and checkpoints.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Disable the priority scheduler (uniform full-motion sampling).
    #[arg(long)]
    pub no_aps: bool,
    /// Remove the residual bounds (sets both deltas to infinity).
    #[arg(long)]
    pub no_constraints: bool,
    /// Give the critic the actor's observation only.
    #[arg(long)]
    pub no_privileged: bool,
    /// Enable domain randomization.
    #[arg(long)]
    pub dr: bool,
    /// Stop once an evaluation reaches living/success targets (percent).
    #[arg(long, num_args = 2, value_names = ["LIVING", "SUCCESS"])]
    pub target: Option<Vec<f64>>,
}

impl TrainArgs {
    pub fn build_config(&self) -> Result<RunConfig, String> {
        let mut config = match &self.config {
            Some(path) => RunConfig::load(path).map_err(|e| e.to_string())?,
            None => RunConfig::preset(&self.preset)
                .ok_or_else(|| format!("unknown preset `{}`", self.preset))?,
        };
        if let Some(steps) = self.steps {
            config.total_steps = steps;
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(out) = &self.out {
            config.out_dir = out.display().to_string();
        }
        if self.no_aps {
            config.aps = false;
        }
        if self.no_constraints {
            config.env.delta_arms = f64::INFINITY;
            config.env.delta_legs_torso = f64::INFINITY;
        }
        if self.no_privileged {
            config.privileged_critic = false;
        }
        if self.dr {
            config.dr.enabled = true;
        }
        if let Some(t) = &self.target {
            config.target = Some(TrainTarget {
                living_rate: t[0],
                success_rate: t[1],
                min_iterations: 3,
            });
        }
        Ok(config)
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Episodes per motion.
    #[arg(long, default_value_t = 1)]
    pub episodes: usize,
    /// Evaluate under the config's domain randomization.
    #[arg(long)]
    pub dr: bool,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Output directory; defaults next to the checkpoint.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Motion name from the run config (e.g. `walk`).
    #[arg(long)]
    pub motion: String,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NoiseSweepArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Motion name; all configured motions when omitted.
    #[arg(long)]
    pub motion: Option<String>,
    /// Noise levels in degrees.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 5.0, 10.0])]
    pub sigmas: Vec<f64>,
    #[arg(long, default_value_t = 50)]
    pub episodes: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    /// Seeds to run per arm.
    #[arg(long, value_delimiter = ',', default_values_t = vec![1u64, 2, 3])]
    pub seeds: Vec<u64>,
    /// Environment steps per run.
    #[arg(long, default_value_t = 30_000)]
    pub steps: u64,
    /// Hidden layer widths for the (smaller) ablation networks.
    #[arg(long, value_delimiter = ',', default_values_t = vec![128usize, 128, 128, 128])]
    pub hidden: Vec<usize>,
    #[arg(long, default_value = "runs/ablate")]
    pub out: PathBuf,
}

/// Ablation arms: each toggles exactly one training mechanism.
pub const ABLATION_ARMS: [(&str, bool, bool, bool, bool); 5] = [
    // (name, constraints, privileged, aps, dr)
    ("full", true, true, true, false),
    ("no_ct", false, true, true, false),
    ("no_priv", true, false, true, false),
    ("no_aps", true, true, false, false),
    ("plus_dr", true, true, true, true),
];

/// Build the config for one ablation arm.
pub fn ablation_config(
    arm: (&str, bool, bool, bool, bool),
    seed: u64,
    steps: u64,
    hidden: &[usize],
    out_root: &std::path::Path,
) -> RunConfig {
    let (name, ct, privileged, aps, dr) = arm;
    let mut config = RunConfig::preset_desk();
    config.seed = seed;
    config.total_steps = steps;
    config.aps = aps;
    config.privileged_critic = privileged;
    config.dr.enabled = dr;
    config.net.hidden = hidden.to_vec();
    config.ppo.num_envs = 8;
    config.ppo.steps_per_env = 128;
    config.eval_every = 0;
    config.checkpoint_every = 0;
    config.target = None;
    if !ct {
        config.env.delta_arms = f64::INFINITY;
        config.env.delta_legs_torso = f64::INFINITY;
    }
    config.out_dir = out_root
        .join(format!("{name}_seed{seed}"))
        .display()
        .to_string();
    config
}

/// One ablation result row.
#[derive(Debug, Clone)]
pub struct AblationRow {
    pub arm: String,
    pub seed: u64,
    pub living_rate: f64,
    pub success_rate: f64,
    pub style_distance: f64,
    pub root_pos_distance: f64,
    pub root_rot_distance: f64,
    pub completion_iteration: Option<u64>,
}

pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut s = String::from(
        "arm,seed,living_rate,success_rate,style_distance,root_pos_distance,root_rot_distance,completion_iteration\n",
    );
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.arm,
            r.seed,
            r.living_rate,
            r.success_rate,
            r.style_distance,
            r.root_pos_distance,
            r.root_rot_distance,
            r.completion_iteration
                .map(|i| i.to_string())
                .unwrap_or_default()
        ));
    }
    s
}

/// Train one arm and evaluate its final policy on the training motions.
pub fn run_ablation_arm(config: &RunConfig) -> Result<AblationRow, TrainError> {
    let output = trainer::train(config)?;
    let ckpt = Checkpoint::load(&output.final_checkpoint)?;
    let model = Arc::new(config.load_model()?);
    let motions = config.build_motions(&model)?;
    let names: Vec<String> = motions.iter().map(|m| m.name.clone()).collect();
    let (report, _) = trainer::evaluate(&EvalSetup {
        model: &model,
        motions: &motions,
        motion_names: &names,
        actor: &ckpt.actor,
        actor_norm: &ckpt.actor_norm,
        env_config: &config.env,
        dr: None,
        episodes_per_motion: 1,
        seed: config.seed.wrapping_add(77),
        noise_sigma: 0.0,
    })?;
    Ok(AblationRow {
        arm: String::new(),
        seed: config.seed,
        living_rate: report.living_rate,
        success_rate: report.success_rate,
        style_distance: report.style_distance,
        root_pos_distance: report.root_pos_distance,
        root_rot_distance: report.root_rot_distance,
        completion_iteration: output.all_completed_iteration,
    })
}
