//! Proximal policy optimization with GAE and an asymmetric actor-critic.
//!
//! The actor consumes observation+goal; the critic additionally consumes
//! privileged extras. Rollouts run across environments in lockstep ticks,
//! with episode ends handled in environment order so the whole collection is
//! bit-reproducible regardless of thread scheduling.

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::aps::Scheduler;
use crate::env::{randomize_domain, DrConfig, Env, EnvError, TerminationCause};
use crate::motion::ReferenceMotion;
use crate::nn::{GaussianPolicy, Mat, Mlp, MlpGrads};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PpoConfig {
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_eps: f64,
    pub epochs: usize,
    pub minibatch_size: usize,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub max_grad_norm: f64,
    pub num_envs: usize,
    pub steps_per_env: usize,
    pub learning_rate: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            gae_lambda: 0.95,
            clip_eps: 0.2,
            epochs: 5,
            minibatch_size: 512,
            entropy_coef: 0.0,
            value_coef: 0.5,
            max_grad_norm: 1.0,
            num_envs: 16,
            steps_per_env: 256,
            learning_rate: 3e-4,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PpoError {
    #[error("non-finite loss during update (surrogate {surrogate}, value {value})")]
    NonFinite { surrogate: f64, value: f64 },
    #[error(transparent)]
    Env(#[from] EnvError),
}

// ---------------------------------------------------------------------------
// Running observation normalization
// ---------------------------------------------------------------------------

/// Welford running mean/std normalizer, frozen at evaluation time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunningNorm {
    pub count: f64,
    pub mean: Vec<f64>,
    m2: Vec<f64>,
    pub frozen: bool,
}

impl RunningNorm {
    pub fn new(dim: usize) -> Self {
        Self {
            count: 0.0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
            frozen: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn update(&mut self, x: &[f64]) {
        if self.frozen {
            return;
        }
        assert_eq!(x.len(), self.mean.len());
        self.count += 1.0;
        for i in 0..x.len() {
            let d = x[i] - self.mean[i];
            self.mean[i] += d / self.count;
            self.m2[i] += d * (x[i] - self.mean[i]);
        }
    }

    pub fn std(&self, i: usize) -> f64 {
        if self.count < 2.0 {
            1.0
        } else {
            (self.m2[i] / (self.count - 1.0)).sqrt().max(1e-6)
        }
    }

    /// `(x - mean) / std`, clipped to ±10.
    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(i, &v)| ((v - self.mean[i]) / self.std(i)).clamp(-10.0, 10.0))
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Rollout storage
// ---------------------------------------------------------------------------

/// One stored control tick.
#[derive(Debug, Clone)]
pub struct Transition {
    pub actor_in: Vec<f64>,
    pub critic_in: Vec<f64>,
    pub action: Vec<f64>,
    pub log_prob: f64,
    pub reward: f64,
    pub value: f64,
    pub done: bool,
    pub reward_terms: [f64; 8],
}

/// Transitions of one environment over a collection window.
#[derive(Debug, Clone, Default)]
pub struct EnvTrajectory {
    pub steps: Vec<Transition>,
    /// Value bootstrap for a truncated (still running) final step.
    pub bootstrap: f64,
}

/// All transitions of one iteration plus computed advantages.
#[derive(Debug, Clone, Default)]
pub struct RolloutBuffer {
    pub trajectories: Vec<EnvTrajectory>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl RolloutBuffer {
    pub fn len(&self) -> usize {
        self.trajectories.iter().map(|t| t.steps.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat view in (env, time) order matching `advantages`/`returns`.
    pub fn flat_steps(&self) -> Vec<&Transition> {
        self.trajectories
            .iter()
            .flat_map(|t| t.steps.iter())
            .collect()
    }

    /// GAE over every trajectory, then advantage normalization across the
    /// whole batch.
    pub fn finish(&mut self, gamma: f64, lambda: f64) {
        self.advantages.clear();
        self.returns.clear();
        for traj in &self.trajectories {
            let rewards: Vec<f64> = traj.steps.iter().map(|s| s.reward).collect();
            let values: Vec<f64> = traj.steps.iter().map(|s| s.value).collect();
            let dones: Vec<bool> = traj.steps.iter().map(|s| s.done).collect();
            let (adv, ret) = compute_gae(&rewards, &values, &dones, traj.bootstrap, gamma, lambda);
            self.advantages.extend(adv);
            self.returns.extend(ret);
        }
    }
}

/// Generalized advantage estimation.
///
/// `delta_t = r_t + gamma * V_{t+1} * (1 - done_t) - V_t` and
/// `A_t = delta_t + gamma * lambda * (1 - done_t) * A_{t+1}`, with
/// `bootstrap` standing in for the value past the final step. Returns
/// advantages and `returns = A + V`.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    bootstrap: f64,
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(rewards.len(), values.len(), "length mismatch");
    assert_eq!(rewards.len(), dones.len(), "length mismatch");
    let n = rewards.len();
    let mut advantages = vec![0.0; n];
    let mut next_adv = 0.0;
    for t in (0..n).rev() {
        let not_done = if dones[t] { 0.0 } else { 1.0 };
        let next_value = if t + 1 < n { values[t + 1] } else { bootstrap };
        let delta = rewards[t] + gamma * next_value * not_done - values[t];
        next_adv = delta + gamma * lambda * not_done * next_adv;
        advantages[t] = next_adv;
    }
    let returns = advantages.iter().zip(values).map(|(a, v)| a + v).collect();
    (advantages, returns)
}

// ---------------------------------------------------------------------------
// Rollout collection
// ---------------------------------------------------------------------------

/// Which motion an episode trains on next.
pub enum MotionSampler {
    /// Priority scheduler with growing clips.
    Priority(Scheduler),
    /// Uniform motion draw, always from frame 0.
    Uniform { rng: StdRng, n_motions: usize },
}

impl MotionSampler {
    pub fn initial(&mut self) -> (usize, usize) {
        match self {
            MotionSampler::Priority(s) => {
                let a = s.initial_assignment();
                (a.motion, a.start)
            }
            MotionSampler::Uniform { rng, n_motions } => (rng.random_range(0..*n_motions), 0),
        }
    }

    pub fn on_episode_end(&mut self, motion: usize, success: bool) -> (usize, usize) {
        match self {
            MotionSampler::Priority(s) => {
                let a = s.on_clip_end(motion, success);
                (a.motion, a.start)
            }
            MotionSampler::Uniform { rng, n_motions } => (rng.random_range(0..*n_motions), 0),
        }
    }

    pub fn scheduler(&self) -> Option<&Scheduler> {
        match self {
            MotionSampler::Priority(s) => Some(s),
            MotionSampler::Uniform { .. } => None,
        }
    }
}

/// One environment with its sampling stream and pending normalized inputs.
pub struct EnvSlot {
    pub env: Env,
    pub motion_idx: usize,
    rng: StdRng,
    raw_actor: Vec<f64>,
    raw_critic: Vec<f64>,
    actor_in: Vec<f64>,
    critic_in: Vec<f64>,
    episode_ticks: usize,
    episode_reward: f64,
    episode_from_start: bool,
}

/// Scratch results of one parallel tick.
struct TickOut {
    transition: Transition,
    done: Option<TerminationCause>,
    raw_actor: Vec<f64>,
    raw_critic: Vec<f64>,
}

/// A finished episode, for logs and curriculum bookkeeping.
#[derive(Debug, Clone, Copy)]
pub struct EpisodeEnd {
    pub motion: usize,
    pub cause: TerminationCause,
    pub ticks: usize,
    pub reward_sum: f64,
    /// True when the episode started at clip start 0 (a full-motion run).
    pub from_start: bool,
}

/// Aggregates from one collection window.
#[derive(Debug, Clone, Default)]
pub struct CollectStats {
    pub steps: usize,
    pub episodes: Vec<EpisodeEnd>,
    pub mean_reward_terms: [f64; 8],
    pub mean_reward: f64,
}

/// Everything rollout collection needs besides the networks.
pub struct Collector {
    pub slots: Vec<EnvSlot>,
    pub sampler: MotionSampler,
    pub motions: Arc<Vec<Arc<ReferenceMotion>>>,
    pub dr: DrConfig,
    pub actor_norm: RunningNorm,
    pub critic_norm: RunningNorm,
    /// When false the critic sees exactly the actor input (the symmetric
    /// ablation arm).
    pub privileged_critic: bool,
}

impl Collector {
    /// Build `num_envs` environments, assign initial motions, and reset.
    pub fn new(
        model: Arc<crate::model::RobotModel>,
        motions: Arc<Vec<Arc<ReferenceMotion>>>,
        env_config: crate::env::EnvConfig,
        dr: DrConfig,
        mut sampler: MotionSampler,
        num_envs: usize,
        seed: u64,
        privileged_critic: bool,
    ) -> Result<Self, EnvError> {
        let dof = model.dof();
        let obs_goal = crate::env::Observation::dim(dof) + crate::env::Goal::dim(dof);
        let priv_dim = if privileged_critic {
            crate::env::PrivilegedExtras::dim(model.feet.len())
        } else {
            0
        };
        let mut actor_norm = RunningNorm::new(obs_goal);
        let mut critic_norm = RunningNorm::new(obs_goal + priv_dim);
        let mut slots = Vec::with_capacity(num_envs);
        for i in 0..num_envs {
            let (motion_idx, start) = sampler.initial();
            let env_seed = seed
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add(i as u64);
            let mut rng = StdRng::seed_from_u64(env_seed ^ 0xA5A5_A5A5);
            let params = randomize_domain(&mut rng, &dr, model.links.len());
            let mut env = Env::new(
                model.clone(),
                motions[motion_idx].clone(),
                env_config.clone(),
                env_seed,
            );
            let (obs, goal) = env.reset(motions[motion_idx].clone(), start, params)?;
            let mut raw_actor = obs.to_vec();
            raw_actor.extend(goal.to_vec());
            let mut raw_critic = raw_actor.clone();
            if privileged_critic {
                raw_critic.extend(env.privileged_now().to_vec());
            }
            actor_norm.update(&raw_actor);
            critic_norm.update(&raw_critic);
            slots.push(EnvSlot {
                env,
                motion_idx,
                rng,
                actor_in: actor_norm.normalize(&raw_actor),
                critic_in: critic_norm.normalize(&raw_critic),
                raw_actor,
                raw_critic,
                episode_ticks: 0,
                episode_reward: 0.0,
                episode_from_start: start == 0,
            });
        }
        Ok(Self {
            slots,
            sampler,
            motions,
            dr,
            actor_norm,
            critic_norm,
            privileged_critic,
        })
    }

    /// Run `steps` lockstep ticks across all environments.
    ///
    /// Per tick: a parallel phase (policy forward, sampling, env step, value)
    /// and a serial phase in slot order (bookkeeping, episode ends via the
    /// sampler, normalizer updates), keeping results independent of thread
    /// scheduling.
    pub fn collect(
        &mut self,
        actor: &GaussianPolicy,
        critic: &Mlp,
        steps: usize,
        gamma: f64,
    ) -> Result<(RolloutBuffer, CollectStats), PpoError> {
        let n = self.slots.len();
        let mut buffer = RolloutBuffer {
            trajectories: vec![EnvTrajectory::default(); n],
            ..RolloutBuffer::default()
        };
        let mut stats = CollectStats::default();
        let mut term_sums = [0.0f64; 8];

        let privileged = self.privileged_critic;
        for _ in 0..steps {
            let outs: Vec<Result<TickOut, EnvError>> = self
                .slots
                .par_iter_mut()
                .map(|slot| tick_slot(slot, actor, critic, privileged))
                .collect();

            for (i, out) in outs.into_iter().enumerate() {
                let out = out?;
                let slot = &mut self.slots[i];
                slot.episode_ticks += 1;
                slot.episode_reward += out.transition.reward;
                for (acc, term) in term_sums.iter_mut().zip(out.transition.reward_terms) {
                    *acc += term;
                }
                stats.steps += 1;
                let mut transition = out.transition;

                if let Some(cause) = out.done {
                    // Time-limit termination bootstraps through the terminal
                    // observation; failures do not.
                    if cause == TerminationCause::MotionEnd {
                        let term_in = self.critic_norm.normalize(&out.raw_critic);
                        let v_term = critic.forward(&term_in)[0];
                        transition.reward += gamma * v_term;
                    }
                    let success = cause == TerminationCause::MotionEnd;
                    stats.episodes.push(EpisodeEnd {
                        motion: slot.motion_idx,
                        cause,
                        ticks: slot.episode_ticks,
                        reward_sum: slot.episode_reward,
                        from_start: slot.episode_from_start,
                    });
                    let (next_motion, start) = self.sampler.on_episode_end(slot.motion_idx, success);
                    let params =
                        randomize_domain(&mut slot.rng, &self.dr, slot.env.model().links.len());
                    let (obs, goal) = slot
                        .env
                        .reset(self.motions[next_motion].clone(), start, params)?;
                    slot.motion_idx = next_motion;
                    slot.episode_ticks = 0;
                    slot.episode_reward = 0.0;
                    slot.episode_from_start = start == 0;
                    let mut raw_actor = obs.to_vec();
                    raw_actor.extend(goal.to_vec());
                    let mut raw_critic = raw_actor.clone();
                    if privileged {
                        raw_critic.extend(slot.env.privileged_now().to_vec());
                    }
                    slot.raw_actor = raw_actor;
                    slot.raw_critic = raw_critic;
                } else {
                    slot.raw_actor = out.raw_actor;
                    slot.raw_critic = out.raw_critic;
                }

                self.actor_norm.update(&slot.raw_actor);
                self.critic_norm.update(&slot.raw_critic);
                slot.actor_in = self.actor_norm.normalize(&slot.raw_actor);
                slot.critic_in = self.critic_norm.normalize(&slot.raw_critic);
                buffer.trajectories[i].steps.push(transition);
            }
        }

        // Truncation bootstrap for still-running episodes.
        for (i, slot) in self.slots.iter().enumerate() {
            let last_done = buffer.trajectories[i]
                .steps
                .last()
                .map(|s| s.done)
                .unwrap_or(true);
            buffer.trajectories[i].bootstrap = if last_done {
                0.0
            } else {
                critic.forward(&slot.critic_in)[0]
            };
        }

        if stats.steps > 0 {
            for (m, s) in stats.mean_reward_terms.iter_mut().zip(term_sums) {
                *m = s / stats.steps as f64;
            }
            stats.mean_reward = stats.mean_reward_terms.iter().sum();
        }
        Ok((buffer, stats))
    }
}

fn tick_slot(
    slot: &mut EnvSlot,
    actor: &GaussianPolicy,
    critic: &Mlp,
    privileged: bool,
) -> Result<TickOut, EnvError> {
    let mean = actor.mlp.forward(&slot.actor_in);
    let action = actor.sample(&mean, &mut slot.rng);
    let log_prob = actor.log_prob(&mean, &action);
    let value = critic.forward(&slot.critic_in)[0];
    let result = slot.env.step(&action)?;
    let mut raw_actor = result.obs.to_vec();
    raw_actor.extend(result.goal.to_vec());
    let mut raw_critic = raw_actor.clone();
    if privileged {
        raw_critic.extend(result.privileged.to_vec());
    }
    Ok(TickOut {
        transition: Transition {
            actor_in: slot.actor_in.clone(),
            critic_in: slot.critic_in.clone(),
            action,
            log_prob,
            reward: result.reward.total,
            value,
            done: result.done.is_some(),
            reward_terms: result.reward.terms(),
        },
        done: result.done,
        raw_actor,
        raw_critic,
    })
}

// ---------------------------------------------------------------------------
// PPO update
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct PpoStats {
    pub surrogate_loss: f64,
    pub value_loss: f64,
    pub kl: f64,
    pub clip_fraction: f64,
    pub entropy: f64,
}

/// Clipped-surrogate PPO update over the buffer.
pub fn ppo_update(
    buffer: &RolloutBuffer,
    actor: &mut GaussianPolicy,
    critic: &mut Mlp,
    actor_adam: &mut crate::nn::Adam,
    critic_adam: &mut crate::nn::Adam,
    config: &PpoConfig,
    rng: &mut StdRng,
) -> Result<PpoStats, PpoError> {
    let steps = buffer.flat_steps();
    let n = steps.len();
    assert!(n > 0, "empty rollout buffer");
    assert_eq!(buffer.advantages.len(), n, "advantages not computed");

    // Normalize advantages over the whole batch.
    let mean = buffer.advantages.iter().sum::<f64>() / n as f64;
    let var = buffer
        .advantages
        .iter()
        .map(|a| (a - mean).powi(2))
        .sum::<f64>()
        / n as f64;
    let std = var.sqrt().max(1e-8);
    let advantages: Vec<f64> = buffer.advantages.iter().map(|a| (a - mean) / std).collect();

    let mut stats = PpoStats::default();
    let mut batches = 0usize;
    let mut indices: Vec<usize> = (0..n).collect();
    let mb = config.minibatch_size.min(n).max(1);

    for _ in 0..config.epochs {
        indices.shuffle(rng);
        for chunk in indices.chunks(mb) {
            let b = chunk.len();
            let actor_x = Mat::from_rows(chunk.iter().map(|&i| steps[i].actor_in.clone()).collect());
            let critic_x =
                Mat::from_rows(chunk.iter().map(|&i| steps[i].critic_in.clone()).collect());

            // Actor pass.
            let cache = actor.mlp.forward_batch(&actor_x);
            let means = cache.output();
            let mut dout = Mat::zeros(b, actor.action_dim());
            let mut d_log_std = vec![0.0; actor.action_dim()];
            let mut surrogate = 0.0;
            let mut kl = 0.0;
            let mut clipped = 0usize;
            for (row, &i) in chunk.iter().enumerate() {
                let step = steps[i];
                let mean_row = means.row(row);
                let logp_new = actor.log_prob(mean_row, &step.action);
                let ratio = (logp_new - step.log_prob).exp();
                let adv = advantages[i];
                let unclipped = ratio * adv;
                let clip_r = ratio.clamp(1.0 - config.clip_eps, 1.0 + config.clip_eps);
                surrogate += -unclipped.min(clip_r * adv);
                kl += step.log_prob - logp_new;
                if (ratio - 1.0).abs() > config.clip_eps {
                    clipped += 1;
                }
                // Gradient flows only where the unclipped branch is active.
                let active = if adv >= 0.0 {
                    ratio <= 1.0 + config.clip_eps
                } else {
                    ratio >= 1.0 - config.clip_eps
                };
                if active {
                    let coef = -adv * ratio / b as f64;
                    let (d_mean, d_ls) = actor.log_prob_grads(mean_row, &step.action);
                    for j in 0..actor.action_dim() {
                        dout.row_mut(row)[j] = coef * d_mean[j];
                        d_log_std[j] += coef * d_ls[j];
                    }
                }
            }
            // Entropy bonus pushes log-std up.
            for g in d_log_std.iter_mut() {
                *g -= config.entropy_coef;
            }
            let (mut actor_grads, _) = actor.mlp.backward_batch(&cache, &dout);
            clip_policy_grads(&mut actor_grads, &mut d_log_std, config.max_grad_norm);
            actor_adam.next_step();
            actor_adam.update_mlp_grouped(&mut actor.mlp, &actor_grads, 0);
            let ls_group = 2 * actor.mlp.weights.len();
            actor_adam.update_group(ls_group, &mut actor.log_std, &d_log_std);

            // Critic pass.
            let vcache = critic.forward_batch(&critic_x);
            let mut vdout = Mat::zeros(b, 1);
            let mut value_loss = 0.0;
            for (row, &i) in chunk.iter().enumerate() {
                let v = vcache.output().row(row)[0];
                let err = v - buffer.returns[i];
                value_loss += config.value_coef * err * err;
                vdout.row_mut(row)[0] = 2.0 * config.value_coef * err / b as f64;
            }
            let (mut critic_grads, _) = critic.backward_batch(&vcache, &vdout);
            let norm = critic_grads.l2_norm();
            if norm > config.max_grad_norm {
                critic_grads.scale(config.max_grad_norm / norm);
            }
            critic_adam.update_mlp(critic, &critic_grads);

            let surrogate = surrogate / b as f64;
            let value_loss = value_loss / b as f64;
            if !surrogate.is_finite() || !value_loss.is_finite() {
                return Err(PpoError::NonFinite {
                    surrogate,
                    value: value_loss,
                });
            }
            stats.surrogate_loss += surrogate;
            stats.value_loss += value_loss;
            stats.kl += kl / b as f64;
            stats.clip_fraction += clipped as f64 / b as f64;
            batches += 1;
        }
    }
    if batches > 0 {
        stats.surrogate_loss /= batches as f64;
        stats.value_loss /= batches as f64;
        stats.kl /= batches as f64;
        stats.clip_fraction /= batches as f64;
    }
    stats.entropy = actor.entropy();
    Ok(stats)
}

/// Global-norm clip over MLP grads and the log-std gradient together.
fn clip_policy_grads(grads: &mut MlpGrads, d_log_std: &mut [f64], max_norm: f64) {
    let mlp_norm = grads.l2_norm();
    let ls_sq: f64 = d_log_std.iter().map(|v| v * v).sum();
    let total = (mlp_norm * mlp_norm + ls_sq).sqrt();
    if total > max_norm {
        let s = max_norm / total;
        grads.scale(s);
        for v in d_log_std.iter_mut() {
            *v *= s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Adam;

    #[test]
    fn gae_single_terminal_step() {
        let (adv, ret) = compute_gae(&[1.0], &[0.0], &[true], 0.0, 0.99, 0.95);
        assert_eq!(adv, vec![1.0]);
        assert_eq!(ret, vec![1.0]);
    }

    #[test]
    fn gae_zero_rewards_zero_values() {
        let (adv, ret) = compute_gae(&[0.0; 10], &[0.0; 10], &[false; 10], 0.0, 0.99, 0.95);
        assert!(adv.iter().all(|&a| a == 0.0));
        assert!(ret.iter().all(|&r| r == 0.0));
    }

    /// With lambda = 1 the advantage reduces to the discounted Monte-Carlo
    /// return minus the value; checked against a brute-force sum.
    #[test]
    fn gae_lambda_one_matches_brute_force_discounted_sums() {
        let mut rng = StdRng::seed_from_u64(5);
        let gamma = 0.99;
        for _ in 0..100 {
            let n = 50;
            let rewards: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let values: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut dones = vec![false; n];
            // A couple of mid-sequence terminations.
            let cut = rng.random_range(5..n - 5);
            dones[cut] = true;
            dones[n - 1] = rng.random_bool(0.5);
            let bootstrap = if dones[n - 1] {
                0.0
            } else {
                rng.random_range(-1.0..1.0)
            };
            let (adv, _) = compute_gae(&rewards, &values, &dones, bootstrap, gamma, 1.0);
            for t in 0..n {
                // Brute force: discounted reward sum to the episode end, plus
                // the discounted bootstrap if the sequence was truncated.
                let mut expected = 0.0;
                let mut disc = 1.0;
                let mut k = t;
                loop {
                    expected += disc * rewards[k];
                    if dones[k] {
                        break;
                    }
                    if k + 1 == n {
                        expected += disc * gamma * bootstrap;
                        break;
                    }
                    disc *= gamma;
                    k += 1;
                }
                expected -= values[t];
                assert!(
                    (adv[t] - expected).abs() < 1e-10,
                    "t={t}: {} vs {}",
                    adv[t],
                    expected
                );
            }
        }
    }

    #[test]
    fn advantage_normalization_contract() {
        let mut rng = StdRng::seed_from_u64(2);
        let n = 512;
        let mut buffer = RolloutBuffer::default();
        let mut traj = EnvTrajectory::default();
        for _ in 0..n {
            traj.steps.push(Transition {
                actor_in: vec![0.0; 2],
                critic_in: vec![0.0; 3],
                action: vec![0.0],
                log_prob: 0.0,
                reward: rng.random_range(-2.0..2.0),
                value: rng.random_range(-1.0..1.0),
                done: rng.random_bool(0.05),
                reward_terms: [0.0; 8],
            });
        }
        buffer.trajectories.push(traj);
        buffer.finish(0.99, 0.95);
        let mean = buffer.advantages.iter().sum::<f64>() / n as f64;
        let std = (buffer
            .advantages
            .iter()
            .map(|a| (a - mean).powi(2))
            .sum::<f64>()
            / n as f64)
            .sqrt();
        let normalized: Vec<f64> = buffer.advantages.iter().map(|a| (a - mean) / std).collect();
        let m2 = normalized.iter().sum::<f64>() / n as f64;
        let s2 = (normalized.iter().map(|a| (a - m2).powi(2)).sum::<f64>() / n as f64).sqrt();
        assert!(m2.abs() < 1e-10);
        assert!((s2 - 1.0).abs() < 1e-6);
    }

    fn synthetic_buffer(
        actor: &GaussianPolicy,
        n: usize,
        seed: u64,
        reward_of: impl Fn(&[f64]) -> f64,
    ) -> RolloutBuffer {
        let mut rng = StdRng::seed_from_u64(seed);
        let mut traj = EnvTrajectory::default();
        for _ in 0..n {
            let obs = vec![1.0];
            let mean = actor.mlp.forward(&obs);
            let action = actor.sample(&mean, &mut rng);
            let log_prob = actor.log_prob(&mean, &action);
            traj.steps.push(Transition {
                actor_in: obs.clone(),
                critic_in: obs,
                action: action.clone(),
                log_prob,
                reward: reward_of(&action),
                value: 0.0,
                done: true,
                reward_terms: [0.0; 8],
            });
        }
        let mut buffer = RolloutBuffer {
            trajectories: vec![traj],
            ..RolloutBuffer::default()
        };
        buffer.finish(0.99, 0.95);
        buffer
    }

    /// Fresh policy on its own samples: every ratio is exactly 1, nothing
    /// clips, and the approximate KL is zero.
    #[test]
    fn identical_policy_has_unit_ratios_and_zero_clip() {
        let mut rng = StdRng::seed_from_u64(0);
        let mlp = Mlp::new(1, &[8], 1, 0.01, &mut rng);
        let mut actor = GaussianPolicy::new(mlp, 0.25);
        let mut critic = Mlp::new(1, &[8], 1, 1.0, &mut rng);
        let buffer = synthetic_buffer(&actor, 64, 1, |a| -a[0] * a[0]);
        let config = PpoConfig {
            epochs: 1,
            minibatch_size: 64,
            ..PpoConfig::default()
        };
        let mut a_adam = Adam::for_mlp_plus(&actor.mlp, actor.log_std.len(), 0.0);
        let mut c_adam = Adam::for_mlp(&critic, 0.0);
        let mut urng = StdRng::seed_from_u64(3);
        let stats = ppo_update(
            &buffer,
            &mut actor,
            &mut critic,
            &mut a_adam,
            &mut c_adam,
            &config,
            &mut urng,
        )
        .unwrap();
        assert_eq!(stats.clip_fraction, 0.0);
        assert!(stats.kl.abs() < 1e-12);
    }

    /// With clipping disabled and ratios at 1, the surrogate gradient equals
    /// the vanilla policy-gradient estimator on the same batch.
    #[test]
    fn unclipped_update_matches_vanilla_policy_gradient() {
        let mut rng = StdRng::seed_from_u64(4);
        let mlp = Mlp::new(1, &[8], 1, 0.5, &mut rng);
        let actor = GaussianPolicy::new(mlp, 0.3);
        let buffer = synthetic_buffer(&actor, 128, 9, |a| -(a[0] - 0.5).powi(2));
        let n = buffer.len();

        // Normalized advantages, as the update uses them.
        let mean = buffer.advantages.iter().sum::<f64>() / n as f64;
        let std = (buffer
            .advantages
            .iter()
            .map(|a| (a - mean).powi(2))
            .sum::<f64>()
            / n as f64)
            .sqrt()
            .max(1e-8);

        // Vanilla policy gradient of -E[A log pi(a|s)] via per-sample grads.
        let steps = buffer.flat_steps();
        let x = Mat::from_rows(steps.iter().map(|s| s.actor_in.clone()).collect());
        let cache = actor.mlp.forward_batch(&x);
        let mut dout = Mat::zeros(n, 1);
        for (i, step) in steps.iter().enumerate() {
            let adv = (buffer.advantages[i] - mean) / std;
            let (d_mean, _) = actor.log_prob_grads(cache.output().row(i), &step.action);
            dout.row_mut(i)[0] = -adv * d_mean[0] / n as f64;
        }
        let (pg, _) = actor.mlp.backward_batch(&cache, &dout);

        // Surrogate gradient with an effectively unbounded clip range, one
        // epoch, full batch: reconstruct through the same path ppo_update
        // takes (ratio = 1 at the first step).
        let mut dout2 = Mat::zeros(n, 1);
        for (i, step) in steps.iter().enumerate() {
            let adv = (buffer.advantages[i] - mean) / std;
            let logp_new = actor.log_prob(cache.output().row(i), &step.action);
            let ratio = (logp_new - step.log_prob).exp();
            let (d_mean, _) = actor.log_prob_grads(cache.output().row(i), &step.action);
            dout2.row_mut(i)[0] = -adv * ratio * d_mean[0] / n as f64;
        }
        let (surr, _) = actor.mlp.backward_batch(&cache, &dout2);

        let mut dot = 0.0;
        let mut na = 0.0;
        let mut nb = 0.0;
        for l in 0..pg.dw.len() {
            for (a, b) in pg.dw[l].data.iter().zip(&surr.dw[l].data) {
                dot += a * b;
                na += a * a;
                nb += b * b;
            }
            for (a, b) in pg.db[l].iter().zip(&surr.db[l]) {
                dot += a * b;
                na += a * a;
                nb += b * b;
            }
        }
        let cosine = dot / (na.sqrt() * nb.sqrt());
        assert!(cosine > 0.999, "cosine similarity {cosine}");
    }

    /// One-state bandit with reward -a²: the policy mean must converge to 0.
    #[test]
    fn bandit_mean_converges_to_zero() {
        let mut rng = StdRng::seed_from_u64(11);
        let mlp = Mlp::new(1, &[16], 1, 0.5, &mut rng);
        let mut actor = GaussianPolicy::new(mlp, 0.4);
        let mut critic = Mlp::new(1, &[16], 1, 1.0, &mut rng);
        let config = PpoConfig {
            epochs: 4,
            minibatch_size: 64,
            learning_rate: 3e-3,
            ..PpoConfig::default()
        };
        let mut a_adam = Adam::for_mlp_plus(&actor.mlp, 1, config.learning_rate);
        let mut c_adam = Adam::for_mlp(&critic, config.learning_rate);
        let mut urng = StdRng::seed_from_u64(12);
        for it in 0..200 {
            let buffer = synthetic_buffer(&actor, 128, 100 + it, |a| -a[0] * a[0]);
            ppo_update(
                &buffer,
                &mut actor,
                &mut critic,
                &mut a_adam,
                &mut c_adam,
                &config,
                &mut urng,
            )
            .unwrap();
        }
        let mean = actor.mlp.forward(&[1.0])[0];
        assert!(mean.abs() < 0.05, "bandit mean {mean} did not converge");
    }

    #[test]
    fn running_norm_welford_and_freeze() {
        let mut norm = RunningNorm::new(2);
        let data = [[1.0, 10.0], [2.0, 20.0], [3.0, 30.0], [4.0, 40.0]];
        for x in &data {
            norm.update(x);
        }
        assert!((norm.mean[0] - 2.5).abs() < 1e-12);
        assert!((norm.std(1) - (500.0f64 / 3.0).sqrt()).abs() < 1e-9);
        let before = norm.clone();
        norm.frozen = true;
        norm.update(&[100.0, 100.0]);
        assert_eq!(norm.mean, before.mean);
        // Normalization clips to ±10.
        let z = norm.normalize(&[1e9, 0.0]);
        assert_eq!(z[0], 10.0);
    }
}
