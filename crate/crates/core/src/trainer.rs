//! Training, evaluation, replay, and noise-sweep drivers.
//!
//! `train` runs the collect/update loop with periodic evaluation and
//! checkpointing; `evaluate` rolls deterministic mean-action episodes and
//! aggregates the metrics; `replay` dumps one episode tick by tick;
//! `noise_sweep` evaluates under increasingly noisy references.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::SeedableRng;

use crate::aps::Scheduler;
use crate::checkpoint::{Checkpoint, CheckpointError, CHECKPOINT_VERSION};
use crate::config::{ConfigError, RunConfig};
use crate::env::{randomize_domain, DrConfig, Env, EnvError, Goal, Observation, PrivilegedExtras, TerminationCause};
use crate::metrics::{EpisodeOutcome, EpisodeTrace, EvalReport};
use crate::model::RobotModel;
use crate::motion::ReferenceMotion;
use crate::nn::{Adam, GaussianPolicy, Mlp};
use crate::ppo::{ppo_update, Collector, MotionSampler, PpoError, RunningNorm};
use crate::rewards::RewardBreakdown;

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Ppo(#[from] PpoError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("i/o error at {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl TrainError {
    /// True for simulation/optimization divergence (process exit code 2).
    pub fn is_divergence(&self) -> bool {
        matches!(
            self,
            TrainError::Ppo(PpoError::NonFinite { .. })
                | TrainError::Ppo(PpoError::Env(EnvError::Sim(_)))
                | TrainError::Env(EnvError::Sim(_))
        )
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> TrainError + '_ {
    move |source| TrainError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub out_dir: PathBuf,
    pub final_checkpoint: PathBuf,
    pub iterations: u64,
    pub env_steps: u64,
    /// First iteration by which every motion had been completed end-to-end
    /// at least once.
    pub all_completed_iteration: Option<u64>,
    pub final_eval: Option<EvalReport>,
}

/// Build actor and critic networks for a model under a config.
pub fn build_networks(config: &RunConfig, model: &RobotModel, rng: &mut StdRng) -> (GaussianPolicy, Mlp) {
    let dof = model.dof();
    let obs_goal = Observation::dim(dof) + Goal::dim(dof);
    let critic_in = if config.privileged_critic {
        obs_goal + PrivilegedExtras::dim(model.feet.len())
    } else {
        obs_goal
    };
    let actor_mlp = Mlp::new(
        obs_goal,
        &config.net.hidden,
        dof,
        config.net.actor_output_gain,
        rng,
    );
    let actor = GaussianPolicy::new(actor_mlp, config.net.init_std);
    let critic = Mlp::new(critic_in, &config.net.hidden, 1, 1.0, rng);
    (actor, critic)
}

/// Run the full training loop described by `config`.
pub fn train(config: &RunConfig) -> Result<TrainOutput, TrainError> {
    config.validate()?;
    let out_dir = PathBuf::from(&config.out_dir);
    fs::create_dir_all(&out_dir).map_err(io_err(&out_dir))?;
    // Persist the exact configuration before any training step.
    let config_path = out_dir.join("config.json");
    fs::write(&config_path, config.to_json()).map_err(io_err(&config_path))?;

    let model = Arc::new(config.load_model()?);
    let motions = Arc::new(config.build_motions(&model)?);
    let motion_names: Vec<String> = motions.iter().map(|m| m.name.clone()).collect();
    let motion_lens: Vec<usize> = motions.iter().map(|m| m.len()).collect();

    let mut net_rng = StdRng::seed_from_u64(config.seed);
    let (mut actor, mut critic) = build_networks(config, &model, &mut net_rng);
    let mut actor_adam = Adam::for_mlp_plus(&actor.mlp, actor.log_std.len(), config.ppo.learning_rate);
    let mut critic_adam = Adam::for_mlp(&critic, config.ppo.learning_rate);

    let sampler = if config.aps {
        MotionSampler::Priority(Scheduler::new(&motion_lens, config.seed.wrapping_add(1)))
    } else {
        MotionSampler::Uniform {
            rng: StdRng::seed_from_u64(config.seed.wrapping_add(1)),
            n_motions: motions.len(),
        }
    };
    let mut collector = Collector::new(
        model.clone(),
        motions.clone(),
        config.env.clone(),
        config.dr.clone(),
        sampler,
        config.ppo.num_envs,
        config.seed.wrapping_add(2),
        config.privileged_critic,
    )?;
    let mut update_rng = StdRng::seed_from_u64(config.seed.wrapping_add(3));

    let log_path = out_dir.join("training_log.csv");
    let mut log = fs::File::create(&log_path).map_err(io_err(&log_path))?;
    writeln!(
        log,
        "iteration,env_steps,reward_total,{},episodes,falls,deviations,motion_ends,\
         surrogate_loss,value_loss,kl,clip_fraction,policy_entropy,eval_living,eval_success",
        RewardBreakdown::TERM_NAMES
            .iter()
            .map(|n| format!("r_{n}"))
            .collect::<Vec<_>>()
            .join(",")
    )
    .map_err(io_err(&log_path))?;
    let sched_path = out_dir.join("scheduler_log.csv");
    let mut sched_log = fs::File::create(&sched_path).map_err(io_err(&sched_path))?;
    writeln!(sched_log, "iteration,motion,name,count,priority,start").map_err(io_err(&sched_path))?;

    let started = Instant::now();
    let steps_per_iter = (config.ppo.num_envs * config.ppo.steps_per_env) as u64;
    let mut env_steps: u64 = 0;
    let mut iteration: u64 = 0;
    let mut completed = vec![false; motions.len()];
    let mut all_completed_iteration = None;
    let mut final_eval = None;

    while env_steps < config.total_steps {
        iteration += 1;
        let (mut buffer, stats) =
            collector.collect(&actor, &critic, config.ppo.steps_per_env, config.ppo.gamma)?;
        env_steps += stats.steps as u64;
        buffer.finish(config.ppo.gamma, config.ppo.gae_lambda);
        let ppo_stats = ppo_update(
            &buffer,
            &mut actor,
            &mut critic,
            &mut actor_adam,
            &mut critic_adam,
            &config.ppo,
            &mut update_rng,
        )?;

        // Completion bookkeeping for both sampler kinds.
        match collector.sampler.scheduler() {
            Some(s) => {
                for (m, &n) in s.state.counts.iter().enumerate() {
                    if n > 0 {
                        completed[m] = true;
                    }
                }
            }
            None => {
                for e in &stats.episodes {
                    if e.cause == TerminationCause::MotionEnd && e.from_start {
                        completed[e.motion] = true;
                    }
                }
            }
        }
        if all_completed_iteration.is_none() && completed.iter().all(|&c| c) {
            all_completed_iteration = Some(iteration);
        }

        let falls = stats
            .episodes
            .iter()
            .filter(|e| e.cause == TerminationCause::Fall)
            .count();
        let deviations = stats
            .episodes
            .iter()
            .filter(|e| e.cause == TerminationCause::Deviation)
            .count();
        let ends = stats
            .episodes
            .iter()
            .filter(|e| e.cause == TerminationCause::MotionEnd)
            .count();

        let mut eval_cells = (String::new(), String::new());
        let should_eval = config.eval_every > 0 && iteration % config.eval_every == 0;
        if should_eval {
            let report = evaluate(&EvalSetup {
                model: &model,
                motions: &motions,
                motion_names: &motion_names,
                actor: &actor,
                actor_norm: &collector.actor_norm,
                env_config: &config.env,
                dr: None,
                episodes_per_motion: config.eval_episodes.max(1),
                seed: config.seed.wrapping_add(9000),
                noise_sigma: 0.0,
            })?
            .0;
            eval_cells = (report.living_rate.to_string(), report.success_rate.to_string());
            let reached = config.target.is_some_and(|t| {
                iteration >= t.min_iterations
                    && report.living_rate >= t.living_rate
                    && report.success_rate >= t.success_rate
            });
            final_eval = Some(report);
            if reached {
                write_log_row(
                    &mut log, &log_path, iteration, env_steps, &stats.mean_reward_terms,
                    stats.mean_reward, stats.episodes.len(), falls, deviations, ends,
                    &ppo_stats, &eval_cells,
                )?;
                log_scheduler(&mut sched_log, &sched_path, iteration, &collector, &motion_names)?;
                break;
            }
        }
        write_log_row(
            &mut log, &log_path, iteration, env_steps, &stats.mean_reward_terms,
            stats.mean_reward, stats.episodes.len(), falls, deviations, ends,
            &ppo_stats, &eval_cells,
        )?;
        log_scheduler(&mut sched_log, &sched_path, iteration, &collector, &motion_names)?;

        if config.checkpoint_every > 0 && iteration % config.checkpoint_every == 0 {
            let path = out_dir.join(format!("checkpoint_{iteration:06}.json"));
            make_checkpoint(config, &actor, &critic, &collector, env_steps, iteration).save(&path)?;
        }
        let _ = steps_per_iter;
    }

    let final_checkpoint = out_dir.join("checkpoint_final.json");
    make_checkpoint(config, &actor, &critic, &collector, env_steps, iteration)
        .save(&final_checkpoint)?;
    eprintln!(
        "training done: {iteration} iterations, {env_steps} env steps, {:.1} s",
        started.elapsed().as_secs_f64()
    );

    Ok(TrainOutput {
        out_dir,
        final_checkpoint,
        iterations: iteration,
        env_steps,
        all_completed_iteration,
        final_eval,
    })
}

#[allow(clippy::too_many_arguments)]
fn write_log_row(
    log: &mut fs::File,
    path: &Path,
    iteration: u64,
    env_steps: u64,
    terms: &[f64; 8],
    total: f64,
    episodes: usize,
    falls: usize,
    deviations: usize,
    ends: usize,
    ppo: &crate::ppo::PpoStats,
    eval: &(String, String),
) -> Result<(), TrainError> {
    writeln!(
        log,
        "{iteration},{env_steps},{total},{},{episodes},{falls},{deviations},{ends},{},{},{},{},{},{},{}",
        terms.map(|t| t.to_string()).join(","),
        ppo.surrogate_loss,
        ppo.value_loss,
        ppo.kl,
        ppo.clip_fraction,
        ppo.entropy,
        eval.0,
        eval.1
    )
    .map_err(io_err(path))
}

fn log_scheduler(
    log: &mut fs::File,
    path: &Path,
    iteration: u64,
    collector: &Collector,
    names: &[String],
) -> Result<(), TrainError> {
    if let Some(s) = collector.sampler.scheduler() {
        for m in 0..names.len() {
            writeln!(
                log,
                "{iteration},{m},{},{},{},{}",
                names[m], s.state.counts[m], s.state.priorities[m], s.state.starts[m]
            )
            .map_err(io_err(path))?;
        }
    }
    Ok(())
}

fn make_checkpoint(
    config: &RunConfig,
    actor: &GaussianPolicy,
    critic: &Mlp,
    collector: &Collector,
    env_steps: u64,
    iteration: u64,
) -> Checkpoint {
    Checkpoint {
        version: CHECKPOINT_VERSION,
        config: config.clone(),
        actor: actor.clone(),
        critic: critic.clone(),
        actor_norm: collector.actor_norm.clone(),
        critic_norm: collector.critic_norm.clone(),
        scheduler: collector.sampler.scheduler().map(|s| s.state.clone()),
        env_steps,
        iteration,
    }
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

pub struct EvalSetup<'a> {
    pub model: &'a Arc<RobotModel>,
    pub motions: &'a [Arc<ReferenceMotion>],
    pub motion_names: &'a [String],
    pub actor: &'a GaussianPolicy,
    pub actor_norm: &'a RunningNorm,
    pub env_config: &'a crate::env::EnvConfig,
    /// Domain randomization during evaluation; `None` disables it.
    pub dr: Option<&'a DrConfig>,
    pub episodes_per_motion: usize,
    pub seed: u64,
    /// Gaussian reference-noise level (rad); a fresh noise seed per episode.
    pub noise_sigma: f64,
}

/// Deterministic mean-action evaluation over every motion.
pub fn evaluate(setup: &EvalSetup) -> Result<(EvalReport, Vec<EpisodeOutcome>), TrainError> {
    let mut norm = setup.actor_norm.clone();
    norm.frozen = true;
    let mut outcomes = Vec::new();
    let dr_off = DrConfig::default();
    for (m, motion) in setup.motions.iter().enumerate() {
        for e in 0..setup.episodes_per_motion {
            let ep_seed = setup
                .seed
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add((m * 1009 + e) as u64);
            let mut rng = StdRng::seed_from_u64(ep_seed);
            let eval_motion = if setup.noise_sigma > 0.0 {
                Arc::new(motion.inject_noise(setup.noise_sigma, ep_seed ^ 0x5EED))
            } else {
                motion.clone()
            };
            let params = randomize_domain(
                &mut rng,
                setup.dr.unwrap_or(&dr_off),
                setup.model.links.len(),
            );
            let mut env = Env::new(
                setup.model.clone(),
                eval_motion.clone(),
                setup.env_config.clone(),
                ep_seed,
            );
            let (mut obs, mut goal) = env.reset(eval_motion.clone(), 0, params)?;
            let mut trace = EpisodeTrace::default();
            let cause = loop {
                let mut input = obs.to_vec();
                input.extend(goal.to_vec());
                let action = setup.actor.mlp.forward(&norm.normalize(&input));
                let result = env.step(&action)?;
                record_trace(&mut trace, &env);
                obs = result.obs;
                goal = result.goal;
                if let Some(c) = result.done {
                    break c;
                }
            };
            outcomes.push(EpisodeOutcome {
                motion: m,
                cause,
                trace,
            });
        }
    }
    let report = EvalReport::build(
        &outcomes,
        setup.motion_names,
        setup.model.human_to_robot_ratio,
    );
    Ok((report, outcomes))
}

/// Per-tick tracking errors against the frame the step targeted.
fn record_trace(trace: &mut EpisodeTrace, env: &Env) {
    let state = env.sim_state();
    let reference = env.current_reference();
    let dx = state.pose.root_x - reference.root_pos[0];
    let dz = state.pose.root_z - reference.root_pos[1];
    let root_err = (dx * dx + dz * dz).sqrt();
    trace.root_err.push(root_err);
    trace.root_sq_err.push(dx * dx + dz * dz);
    trace
        .pitch_err
        .push((state.pose.root_pitch - reference.root_pitch).abs());
    // Root-relative joint positions, simulated vs reference.
    let model = env.model();
    let sim_fk = model.forward_kinematics(&state.pose);
    let ref_fk = model.forward_kinematics(&reference.pose());
    let mut acc = 0.0;
    let nj = model.joints.len();
    for j in 0..nj {
        let sx = sim_fk.joint_world[j][0] - state.pose.root_x;
        let sz = sim_fk.joint_world[j][1] - state.pose.root_z;
        let rx = ref_fk.joint_world[j][0] - reference.root_pos[0];
        let rz = ref_fk.joint_world[j][1] - reference.root_pos[1];
        acc += (sx - rx).powi(2) + (sz - rz).powi(2);
    }
    trace.style_sq_err.push(acc / nj as f64);
}

// ---------------------------------------------------------------------------
// Replay and noise sweep
// ---------------------------------------------------------------------------

/// Deterministic mean-action rollout dumped tick by tick as CSV.
pub fn replay(
    ckpt: &Checkpoint,
    model: &Arc<RobotModel>,
    motion: &Arc<ReferenceMotion>,
) -> Result<String, TrainError> {
    let mut norm = ckpt.actor_norm.clone();
    norm.frozen = true;
    let dof = model.dof();
    let mut env = Env::new(model.clone(), motion.clone(), ckpt.config.env.clone(), 0);
    let params = crate::env::EpisodeParams::nominal(model.links.len());
    let (mut obs, mut goal) = env.reset(motion.clone(), 0, params)?;

    let mut csv = String::from("tick,time");
    for part in ["", "ref_"] {
        csv.push_str(&format!(",{part}root_x,{part}root_z,{part}root_pitch"));
        for j in 0..dof {
            csv.push_str(&format!(",{part}q{j}"));
        }
    }
    csv.push_str(",reward_total");
    for name in RewardBreakdown::TERM_NAMES {
        csv.push_str(&format!(",r_{name}"));
    }
    for f in 0..model.feet.len() {
        csv.push_str(&format!(",contact_{f},ref_contact_{f}"));
    }
    csv.push('\n');

    let mut tick = 0usize;
    loop {
        let mut input = obs.to_vec();
        input.extend(goal.to_vec());
        let action = ckpt.actor.mlp.forward(&norm.normalize(&input));
        let result = env.step(&action)?;
        let state = env.sim_state();
        let reference = env.current_reference();
        csv.push_str(&format!("{tick},{}", state.time));
        csv.push_str(&format!(
            ",{},{},{}",
            state.pose.root_x, state.pose.root_z, state.pose.root_pitch
        ));
        for q in &state.pose.q {
            csv.push_str(&format!(",{q}"));
        }
        csv.push_str(&format!(
            ",{},{},{}",
            reference.root_pos[0], reference.root_pos[1], reference.root_pitch
        ));
        for q in &reference.q {
            csv.push_str(&format!(",{q}"));
        }
        csv.push_str(&format!(",{}", result.reward.total));
        for t in result.reward.terms() {
            csv.push_str(&format!(",{t}"));
        }
        for f in 0..model.feet.len() {
            csv.push_str(&format!(
                ",{},{}",
                state.foot_contact[f] as u8, reference.contact[f] as u8
            ));
        }
        csv.push('\n');
        tick += 1;
        obs = result.obs;
        goal = result.goal;
        if result.done.is_some() {
            break;
        }
    }
    Ok(csv)
}

/// Evaluate at each reference-noise level; returns `(sigma_rad, report)`
/// rows in the order given.
pub fn noise_sweep(
    ckpt: &Checkpoint,
    model: &Arc<RobotModel>,
    motions: &[Arc<ReferenceMotion>],
    motion_names: &[String],
    sigmas_rad: &[f64],
    episodes: usize,
    seed: u64,
) -> Result<Vec<(f64, EvalReport)>, TrainError> {
    let mut rows = Vec::new();
    for &sigma in sigmas_rad {
        let (report, _) = evaluate(&EvalSetup {
            model,
            motions,
            motion_names,
            actor: &ckpt.actor,
            actor_norm: &ckpt.actor_norm,
            env_config: &ckpt.config.env,
            dr: None,
            episodes_per_motion: episodes,
            seed,
            noise_sigma: sigma,
        })?;
        rows.push((sigma, report));
    }
    Ok(rows)
}

/// CSV for the noise sweep, one row per noise level.
pub fn noise_sweep_csv(rows: &[(f64, EvalReport)]) -> String {
    let mut s = String::from(
        "sigma_deg,living_rate,success_rate,style_distance,root_pos_distance,root_rot_distance\n",
    );
    for (sigma, r) in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            sigma.to_degrees(),
            r.living_rate,
            r.success_rate,
            r.style_distance,
            r.root_pos_distance,
            r.root_rot_distance
        ));
    }
    s
}
