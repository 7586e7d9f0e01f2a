//! Goal-conditioned imitation environment.
//!
//! The actor sees proprioception plus the next reference frame as a goal;
//! the critic additionally receives privileged state (global poses, feet,
//! contacts). Actions are residuals around the reference joint angles,
//! clamped per joint group before the joint-limit clamp, then tracked by PD
//! through two 120 Hz simulation substeps per 60 Hz control tick. Sensory
//! noise perturbs only the observation returned to the actor; rewards,
//! privileged state, and termination use the clean simulator state.

use std::sync::Arc;

use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::model::{DeltaGroup, RobotModel};
use crate::motion::{Frame, ReferenceMotion};
use crate::rewards::{compute_rewards, RewardBreakdown, RewardInputs, RewardWeights};
use crate::sim::{self, SimError, SimOptions, SimState, Terrain};

/// Default residual bound for arm joints: 10 degrees.
pub const DELTA_ARMS: f64 = 10.0 * std::f64::consts::PI / 180.0;
/// Default residual bound for leg/torso joints: 30 degrees.
pub const DELTA_LEGS_TORSO: f64 = 30.0 * std::f64::consts::PI / 180.0;

/// Environment constants; shared by every episode of a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnvConfig {
    pub delta_arms: f64,
    pub delta_legs_torso: f64,
    /// Control period (s); two sim substeps run per control tick.
    pub control_dt: f64,
    pub sim_substeps: usize,
    /// Fall when torso height drops below this fraction of standing height.
    pub fall_height_frac: f64,
    /// Fall when |pitch| exceeds this angle (rad).
    pub fall_pitch: f64,
    /// Root deviation threshold before scaling by the human-to-robot ratio.
    pub deviation_base: f64,
    pub rewards: RewardWeights,
    pub sim: SimOptions,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            delta_arms: DELTA_ARMS,
            delta_legs_torso: DELTA_LEGS_TORSO,
            control_dt: 1.0 / 60.0,
            sim_substeps: 2,
            fall_height_frac: 0.4,
            fall_pitch: 60.0 * std::f64::consts::PI / 180.0,
            deviation_base: 0.5,
            rewards: RewardWeights::default(),
            sim: SimOptions::default(),
        }
    }
}

/// Domain-randomization ranges; the defaults match the training table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DrConfig {
    pub enabled: bool,
    pub pd_factor: (f64, f64),
    pub link_mass: (f64, f64),
    pub friction: (f64, f64),
    /// Additive uniform half-ranges for per-step sensory noise.
    pub noise_ang_vel: f64,
    pub noise_joint_pos: f64,
    pub noise_joint_vel: f64,
    pub rough_terrain_amplitude: f64,
    pub rough_terrain_correlation: f64,
}

impl Default for DrConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            pd_factor: (0.75, 1.25),
            link_mass: (0.7, 1.3),
            friction: (0.5, 2.0),
            noise_ang_vel: 0.1,
            noise_joint_pos: 0.1,
            noise_joint_vel: 1.0,
            rough_terrain_amplitude: 0.02,
            rough_terrain_correlation: 0.5,
        }
    }
}

/// Per-episode randomization draws.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpisodeParams {
    pub pd_factor: f64,
    pub mass_factors: Vec<f64>,
    pub friction_factor: f64,
    pub terrain: Terrain,
    pub noise_ang_vel: f64,
    pub noise_joint_pos: f64,
    pub noise_joint_vel: f64,
}

impl EpisodeParams {
    /// Identity parameters: no randomization, flat terrain, no noise.
    pub fn nominal(n_links: usize) -> Self {
        Self {
            pd_factor: 1.0,
            mass_factors: vec![1.0; n_links],
            friction_factor: 1.0,
            terrain: Terrain::Flat,
            noise_ang_vel: 0.0,
            noise_joint_pos: 0.0,
            noise_joint_vel: 0.0,
        }
    }
}

/// Draw per-episode parameters from the configured ranges.
pub fn randomize_domain(rng: &mut StdRng, config: &DrConfig, n_links: usize) -> EpisodeParams {
    if !config.enabled {
        return EpisodeParams::nominal(n_links);
    }
    let pd_factor = rng.random_range(config.pd_factor.0..=config.pd_factor.1);
    let mass_factors = (0..n_links)
        .map(|_| rng.random_range(config.link_mass.0..=config.link_mass.1))
        .collect();
    let friction_factor = rng.random_range(config.friction.0..=config.friction.1);
    let terrain = if rng.random_bool(0.5) {
        Terrain::Flat
    } else {
        Terrain::Rough {
            amplitude: config.rough_terrain_amplitude,
            correlation_length: config.rough_terrain_correlation,
            seed: rng.random_range(0..u64::MAX),
        }
    };
    EpisodeParams {
        pd_factor,
        mass_factors,
        friction_factor,
        terrain,
        noise_ang_vel: config.noise_ang_vel,
        noise_joint_pos: config.noise_joint_pos,
        noise_joint_vel: config.noise_joint_vel,
    }
}

/// Actor observation. `to_vec` layout: q (J), dq (J), root linear velocity
/// (2), root angular velocity (1), last applied residual (J), projected
/// gravity (2).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub q: Vec<f64>,
    pub dq: Vec<f64>,
    pub root_vel: [f64; 2],
    pub root_ang_vel: f64,
    pub last_action: Vec<f64>,
    pub projected_gravity: [f64; 2],
}

impl Observation {
    pub fn dim(dof: usize) -> usize {
        3 * dof + 5
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(Self::dim(self.q.len()));
        v.extend(&self.q);
        v.extend(&self.dq);
        v.extend(self.root_vel);
        v.push(self.root_ang_vel);
        v.extend(&self.last_action);
        v.extend(self.projected_gravity);
        v
    }
}

/// Goal: the next reference frame. `to_vec` layout: q_ref (J), dq_ref (J),
/// v_ref (2), w_ref (1), torso height reference (1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Goal {
    pub q_ref: Vec<f64>,
    pub dq_ref: Vec<f64>,
    pub v_ref: [f64; 2],
    pub w_ref: f64,
    pub torso_height_ref: f64,
}

impl Goal {
    pub fn dim(dof: usize) -> usize {
        2 * dof + 4
    }

    pub fn from_frame(f: &Frame) -> Self {
        Self {
            q_ref: f.q.clone(),
            dq_ref: f.dq.clone(),
            v_ref: f.root_vel,
            w_ref: f.root_ang_vel,
            torso_height_ref: f.torso_height,
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(Self::dim(self.q_ref.len()));
        v.extend(&self.q_ref);
        v.extend(&self.dq_ref);
        v.extend(self.v_ref);
        v.push(self.w_ref);
        v.push(self.torso_height_ref);
        v
    }
}

/// Critic-only extras. `to_vec` layout: sim root pose (3), reference root
/// pose (3), per foot root-relative position (2) and velocity (2), sim
/// contact flags, reference contact flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivilegedExtras {
    pub root_pose: [f64; 3],
    pub ref_root_pose: [f64; 3],
    pub feet_local_pos: Vec<[f64; 2]>,
    pub feet_local_vel: Vec<[f64; 2]>,
    pub sim_contacts: Vec<bool>,
    pub ref_contacts: Vec<bool>,
}

impl PrivilegedExtras {
    pub fn dim(n_feet: usize) -> usize {
        6 + 6 * n_feet
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(Self::dim(self.feet_local_pos.len()));
        v.extend(self.root_pose);
        v.extend(self.ref_root_pose);
        for p in &self.feet_local_pos {
            v.extend(*p);
        }
        for p in &self.feet_local_vel {
            v.extend(*p);
        }
        v.extend(self.sim_contacts.iter().map(|&c| c as u8 as f64));
        v.extend(self.ref_contacts.iter().map(|&c| c as u8 as f64));
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TerminationCause {
    Fall,
    Deviation,
    MotionEnd,
}

impl TerminationCause {
    pub fn as_str(&self) -> &'static str {
        match self {
            TerminationCause::Fall => "fall",
            TerminationCause::Deviation => "deviation",
            TerminationCause::MotionEnd => "motion_end",
        }
    }
}

/// Everything one control tick returns.
#[derive(Debug, Clone)]
pub struct StepResult {
    pub obs: Observation,
    pub goal: Goal,
    pub reward: RewardBreakdown,
    pub done: Option<TerminationCause>,
    pub privileged: PrivilegedExtras,
}

#[derive(Debug, thiserror::Error)]
pub enum EnvError {
    #[error("start index {index} out of range for motion of {len} frames")]
    StartIndex { index: usize, len: usize },
    #[error("stepping a finished episode (cause: {cause})")]
    Done { cause: &'static str },
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Clamp a residual action into its per-group bound, add it to the reference
/// joint angles, and clamp into the joint limits.
pub fn apply_action(
    action: &[f64],
    q_ref: &[f64],
    model: &RobotModel,
    delta_arms: f64,
    delta_legs_torso: f64,
) -> Vec<f64> {
    assert_eq!(action.len(), model.dof(), "action dimension mismatch");
    assert_eq!(q_ref.len(), model.dof(), "reference dimension mismatch");
    let target: Vec<f64> = action
        .iter()
        .zip(q_ref)
        .zip(&model.joints)
        .map(|((&a, &qr), joint)| {
            let delta = match joint.delta_group {
                DeltaGroup::Arms => delta_arms,
                DeltaGroup::LegsTorso => delta_legs_torso,
            };
            qr + a.clamp(-delta, delta)
        })
        .collect();
    model.clamp_to_limits(&target)
}

/// One simulated imitation episode stream.
pub struct Env {
    base_model: Arc<RobotModel>,
    model: RobotModel,
    config: EnvConfig,
    motion: Arc<ReferenceMotion>,
    params: EpisodeParams,
    sim_opts: SimOptions,
    state: SimState,
    /// Reference time of the current tick (s).
    ref_time: f64,
    last_action: Vec<f64>,
    prev_joint_vel: Vec<f64>,
    standing_height: f64,
    done: Option<TerminationCause>,
    rng: StdRng,
}

impl Env {
    pub fn new(model: Arc<RobotModel>, motion: Arc<ReferenceMotion>, config: EnvConfig, seed: u64) -> Self {
        let dof = model.dof();
        let n_feet = model.feet.len();
        let standing_height = model.standing_height();
        let params = EpisodeParams::nominal(model.links.len());
        let state = SimState::new(
            crate::model::GeneralizedPose::zero(dof),
            [0.0; 3],
            &vec![0.0; dof],
            n_feet,
        );
        Self {
            model: (*model).clone(),
            base_model: model,
            config,
            motion,
            params,
            sim_opts: SimOptions::default(),
            state,
            ref_time: 0.0,
            last_action: vec![0.0; dof],
            prev_joint_vel: vec![0.0; dof],
            standing_height,
            done: None,
            rng: StdRng::seed_from_u64(seed),
        }
    }

    pub fn model(&self) -> &RobotModel {
        &self.base_model
    }

    pub fn motion(&self) -> &Arc<ReferenceMotion> {
        &self.motion
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn sim_state(&self) -> &SimState {
        &self.state
    }

    pub fn done(&self) -> Option<TerminationCause> {
        self.done
    }

    /// Root deviation threshold for this model.
    pub fn deviation_threshold(&self) -> f64 {
        self.config.deviation_base * self.base_model.human_to_robot_ratio
    }

    /// Reference frame at the current control tick.
    pub fn current_reference(&self) -> Frame {
        self.motion
            .sample(self.ref_time.min(self.motion.duration()))
            .expect("reference cursor stays in range")
    }

    /// Start an episode of `motion` at `start_index`, with the given
    /// randomization draws. The simulator is initialized from the reference
    /// frame, shifted vertically so the lowest foot touches the terrain.
    pub fn reset(
        &mut self,
        motion: Arc<ReferenceMotion>,
        start_index: usize,
        params: EpisodeParams,
    ) -> Result<(Observation, Goal), EnvError> {
        if start_index >= motion.len() {
            return Err(EnvError::StartIndex {
                index: start_index,
                len: motion.len(),
            });
        }
        self.motion = motion;
        self.model = self
            .base_model
            .randomized(&params.mass_factors, params.pd_factor);
        self.sim_opts = self.config.sim.clone();
        self.sim_opts.contact.mu = self.config.sim.contact.mu * params.friction_factor;
        self.ref_time = start_index as f64 / self.motion.frame_rate;
        let frame = self.motion.frames[start_index].clone();

        let mut pose = frame.pose();
        // Place the feet on the terrain: shift the root so the lowest foot
        // point sits exactly on the ground beneath it.
        let fk = self.model.forward_kinematics(&pose);
        let drop = fk
            .foot_world
            .iter()
            .map(|p| p[1] - params.terrain.height(p[0]))
            .fold(f64::INFINITY, f64::min);
        if drop.is_finite() {
            pose.root_z -= drop;
        }
        self.state = SimState::new(
            pose,
            [frame.root_vel[0], frame.root_vel[1], frame.root_ang_vel],
            &frame.dq,
            self.base_model.feet.len(),
        );
        let dof = self.base_model.dof();
        self.last_action = vec![0.0; dof];
        self.prev_joint_vel = frame.dq.clone();
        self.done = None;
        self.params = params;
        Ok((self.observation(), self.goal()))
    }

    /// Apply a residual action and advance one control tick.
    pub fn step(&mut self, action: &[f64]) -> Result<StepResult, EnvError> {
        if let Some(cause) = self.done {
            return Err(EnvError::Done {
                cause: cause.as_str(),
            });
        }
        let duration = self.motion.duration();
        let target_time = (self.ref_time + self.config.control_dt).min(duration);
        let target = self
            .motion
            .sample(target_time)
            .expect("target time clamped to duration");

        let q_des = apply_action(
            action,
            &target.q,
            &self.model,
            self.config.delta_arms,
            self.config.delta_legs_torso,
        );
        let applied: Vec<f64> = q_des.iter().zip(&target.q).map(|(d, r)| d - r).collect();

        let sub_dt = self.config.control_dt / self.config.sim_substeps as f64;
        for _ in 0..self.config.sim_substeps {
            sim::step(
                &mut self.state,
                &q_des,
                &self.model,
                &self.params.terrain,
                &self.sim_opts,
                sub_dt,
            )?;
        }
        self.ref_time = target_time;

        // Termination: fall, root deviation, or end of motion.
        let torso_height =
            self.state.pose.root_z - self.params.terrain.height(self.state.pose.root_x);
        let fell = torso_height < self.config.fall_height_frac * self.standing_height
            || self.state.pose.root_pitch.abs() > self.config.fall_pitch;
        let dx = self.state.pose.root_x - target.root_pos[0];
        let dz = self.state.pose.root_z - target.root_pos[1];
        let deviated = (dx * dx + dz * dz).sqrt() > self.deviation_threshold();
        let ended = target_time >= duration - 1e-9;
        self.done = if fell {
            Some(TerminationCause::Fall)
        } else if deviated {
            Some(TerminationCause::Deviation)
        } else if ended {
            Some(TerminationCause::MotionEnd)
        } else {
            None
        };

        let reward = compute_rewards(
            &RewardInputs {
                model: &self.model,
                state: &self.state,
                reference: &target,
                prev_joint_vel: &self.prev_joint_vel,
                control_dt: self.config.control_dt,
                sim_contacts: &self.state.foot_contact,
                ref_contacts: &target.contact,
                fell,
            },
            &self.config.rewards,
        );

        self.prev_joint_vel = self.state.joint_vel().to_vec();
        self.last_action = applied;

        Ok(StepResult {
            obs: self.observation(),
            goal: self.goal(),
            reward,
            done: self.done,
            privileged: self.privileged(&target),
        })
    }

    /// Privileged extras for the current state against the current
    /// reference frame (the frame the last step targeted, or the start frame
    /// right after a reset).
    pub fn privileged_now(&self) -> PrivilegedExtras {
        let reference = self.current_reference();
        self.privileged(&reference)
    }

    /// Actor observation with per-step sensory noise.
    fn observation(&mut self) -> Observation {
        let pitch = self.state.pose.root_pitch;
        let mut obs = Observation {
            q: self.state.pose.q.clone(),
            dq: self.state.joint_vel().to_vec(),
            root_vel: self.state.root_vel(),
            root_ang_vel: self.state.pitch_rate(),
            last_action: self.last_action.clone(),
            projected_gravity: [pitch.sin(), -pitch.cos()],
        };
        let p = &self.params;
        if p.noise_joint_pos > 0.0 {
            for q in &mut obs.q {
                *q += self.rng.random_range(-p.noise_joint_pos..=p.noise_joint_pos);
            }
        }
        if p.noise_joint_vel > 0.0 {
            for dq in &mut obs.dq {
                *dq += self.rng.random_range(-p.noise_joint_vel..=p.noise_joint_vel);
            }
        }
        if p.noise_ang_vel > 0.0 {
            obs.root_ang_vel += self.rng.random_range(-p.noise_ang_vel..=p.noise_ang_vel);
        }
        obs
    }

    /// Goal: the reference frame at the next control tick.
    fn goal(&self) -> Goal {
        let duration = self.motion.duration();
        let t = (self.ref_time + self.config.control_dt).min(duration);
        Goal::from_frame(&self.motion.sample(t).expect("goal time clamped"))
    }

    fn privileged(&self, reference: &Frame) -> PrivilegedExtras {
        let fk = self.model.forward_kinematics(&self.state.pose);
        let foot_vels = sim::foot_velocities(&self.model, &self.state);
        let root = [self.state.pose.root_x, self.state.pose.root_z];
        let rv = self.state.root_vel();
        PrivilegedExtras {
            root_pose: [root[0], root[1], self.state.pose.root_pitch],
            ref_root_pose: [
                reference.root_pos[0],
                reference.root_pos[1],
                reference.root_pitch,
            ],
            feet_local_pos: fk
                .foot_world
                .iter()
                .map(|p| [p[0] - root[0], p[1] - root[1]])
                .collect(),
            feet_local_vel: foot_vels
                .iter()
                .map(|v| [v[0] - rv[0], v[1] - rv[1]])
                .collect(),
            sim_contacts: self.state.foot_contact.clone(),
            ref_contacts: reference.contact.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RobotModel;
    use crate::motion::{generate_gait, GaitKind, GaitParams};


    fn setup(kind: GaitKind) -> (Arc<RobotModel>, Arc<ReferenceMotion>) {
        let model = Arc::new(RobotModel::bundled_biped7());
        let motion = Arc::new(generate_gait(kind, &GaitParams::default(), &model).unwrap());
        (model, motion)
    }

    #[test]
    fn apply_action_identity_and_group_bounds() {
        let model = RobotModel::bundled_biped7();
        let q_ref = vec![0.5, -0.3, 0.2, -0.1, 0.0, 0.1];
        // Zero action returns the reference (interior).
        let q = apply_action(&[0.0; 6], &q_ref, &model, DELTA_ARMS, DELTA_LEGS_TORSO);
        assert_eq!(q, q_ref);
        // Leg joint saturates at +30 degrees.
        let mut a = vec![0.0; 6];
        a[0] = 0.8;
        let q = apply_action(&a, &q_ref, &model, DELTA_ARMS, DELTA_LEGS_TORSO);
        assert!((q[0] - (0.5 + 0.5235987755982988)).abs() < 1e-12, "{}", q[0]);
        // Arm joint saturates at -10 degrees.
        let mut a = vec![0.0; 6];
        a[4] = -0.3;
        let q_ref0 = vec![0.5, -0.3, 0.2, -0.1, 0.0, 0.1];
        let q = apply_action(&a, &q_ref0, &model, DELTA_ARMS, DELTA_LEGS_TORSO);
        assert!((q[4] - (-0.17453292519943295)).abs() < 1e-12, "{}", q[4]);
    }

    #[test]
    fn bounded_residual_invariant_random_actions() {
        let model = RobotModel::bundled_biped7();
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..10_000 {
            let q_ref: Vec<f64> = model
                .joints
                .iter()
                .map(|j| rng.random_range(j.limit_lo..=j.limit_hi))
                .collect();
            let a: Vec<f64> = (0..6).map(|_| rng.random_range(-3.0..3.0)).collect();
            let q = apply_action(&a, &q_ref, &model, DELTA_ARMS, DELTA_LEGS_TORSO);
            for (j, joint) in model.joints.iter().enumerate() {
                let delta = match joint.delta_group {
                    DeltaGroup::Arms => DELTA_ARMS,
                    DeltaGroup::LegsTorso => DELTA_LEGS_TORSO,
                };
                assert!(
                    (q[j] - q_ref[j]).abs() <= delta + 1e-12,
                    "joint {j}: target {} ref {} delta {delta}",
                    q[j],
                    q_ref[j]
                );
                assert!(q[j] >= joint.limit_lo && q[j] <= joint.limit_hi);
            }
        }
    }

    #[test]
    fn reset_copies_reference_exactly() {
        let (model, motion) = setup(GaitKind::Stand);
        let mut env = Env::new(model.clone(), motion.clone(), EnvConfig::default(), 0);
        let params = EpisodeParams::nominal(model.links.len());
        let (obs, goal) = env.reset(motion.clone(), 0, params).unwrap();
        assert_eq!(obs.q, motion.frames[0].q);
        assert_eq!(obs.dq, motion.frames[0].dq);
        assert_eq!(goal.q_ref, motion.frames[1].q);
        // Out-of-range start index is rejected.
        let params = EpisodeParams::nominal(model.links.len());
        assert!(env.reset(motion.clone(), motion.len(), params).is_err());
    }

    #[test]
    fn reset_mid_walk_matches_reference_root() {
        let (model, motion) = setup(GaitKind::Walk);
        let mut env = Env::new(model.clone(), motion.clone(), EnvConfig::default(), 0);
        let params = EpisodeParams::nominal(model.links.len());
        let (_, _) = env.reset(motion.clone(), 120, params).unwrap();
        assert_eq!(env.sim_state().pose.root_x, motion.frames[120].root_pos[0]);
    }

    #[test]
    fn stand_runs_to_motion_end_with_zero_actions() {
        let (model, motion) = setup(GaitKind::Stand);
        let mut env = Env::new(model.clone(), motion.clone(), EnvConfig::default(), 0);
        let params = EpisodeParams::nominal(model.links.len());
        env.reset(motion.clone(), 0, params).unwrap();
        let zero = vec![0.0; model.dof()];
        let mut cause = None;
        for _ in 0..motion.len() + 10 {
            let r = env.step(&zero).unwrap();
            if let Some(c) = r.done {
                cause = Some(c);
                break;
            }
        }
        assert_eq!(cause, Some(TerminationCause::MotionEnd));
    }

    #[test]
    fn fall_detected_and_penalized() {
        let (model, motion) = setup(GaitKind::Stand);
        let mut env = Env::new(model.clone(), motion.clone(), EnvConfig::default(), 0);
        let params = EpisodeParams::nominal(model.links.len());
        env.reset(motion.clone(), 0, params).unwrap();
        // Tip the torso beyond the pitch threshold directly.
        env.state.pose.root_pitch = 1.2;
        let r = env.step(&vec![0.0; model.dof()]).unwrap();
        assert_eq!(r.done, Some(TerminationCause::Fall));
        assert_eq!(r.reward.terminate, -20.0);
        // Stepping after done is an error.
        assert!(env.step(&vec![0.0; model.dof()]).is_err());
    }

    #[test]
    fn runaway_reference_triggers_deviation() {
        let model = Arc::new(RobotModel::bundled_biped7());
        // A reference whose root sprints away faster than the robot can.
        let p = GaitParams {
            stride: 2.4,
            duration: 6.0,
            ..GaitParams::default()
        };
        let motion = Arc::new(generate_gait(GaitKind::Walk, &p, &model).unwrap());
        let mut env = Env::new(model.clone(), motion.clone(), EnvConfig::default(), 0);
        let params = EpisodeParams::nominal(model.links.len());
        env.reset(motion.clone(), 0, params).unwrap();
        let zero = vec![0.0; model.dof()];
        let mut cause = None;
        for _ in 0..motion.len() {
            match env.step(&zero) {
                Ok(r) => {
                    if let Some(c) = r.done {
                        cause = Some(c);
                        break;
                    }
                }
                Err(_) => break,
            }
        }
        // Threshold is 0.5 * 0.8 = 0.4 m; the reference runs 2.4 m/s.
        assert_eq!(cause, Some(TerminationCause::Deviation));
    }

    #[test]
    fn domain_randomization_ranges_and_stats() {
        let config = DrConfig {
            enabled: true,
            ..DrConfig::default()
        };
        let mut rng = StdRng::seed_from_u64(0);
        let n = 100_000;
        let mut sum = 0.0;
        let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
        for _ in 0..n {
            let p = randomize_domain(&mut rng, &config, 7);
            sum += p.pd_factor;
            min = min.min(p.pd_factor);
            max = max.max(p.pd_factor);
            assert!((0.5..=2.0).contains(&p.friction_factor));
            assert!(p.mass_factors.iter().all(|m| (0.7..=1.3).contains(m)));
        }
        assert!(min >= 0.75 && max <= 1.25);
        let mean = sum / n as f64;
        assert!((mean - 1.0).abs() < 0.005, "pd factor mean {mean}");
        // Disabled: identity.
        let off = DrConfig::default();
        let p = randomize_domain(&mut rng, &off, 7);
        assert_eq!(p.pd_factor, 1.0);
        assert!(matches!(p.terrain, Terrain::Flat));
        assert_eq!(p.noise_joint_pos, 0.0);
    }

    #[test]
    fn sensory_noise_only_touches_observation() {
        let (model, motion) = setup(GaitKind::Stand);
        let run = |noise: f64| {
            let mut env = Env::new(model.clone(), motion.clone(), EnvConfig::default(), 9);
            let mut params = EpisodeParams::nominal(model.links.len());
            params.noise_joint_pos = noise;
            params.noise_joint_vel = noise;
            params.noise_ang_vel = noise;
            env.reset(motion.clone(), 0, params).unwrap();
            let mut rewards = Vec::new();
            let mut obs = Vec::new();
            for _ in 0..30 {
                let r = env.step(&vec![0.0; model.dof()]).unwrap();
                rewards.push(r.reward.total);
                obs.push(r.obs.to_vec());
                let _ = r.privileged;
            }
            (rewards, obs, env.state.pose.clone())
        };
        let (clean_r, clean_o, clean_pose) = run(0.0);
        let (noisy_r, noisy_o, noisy_pose) = run(0.1);
        // Same dynamics and rewards, different observations.
        assert_eq!(clean_r, noisy_r);
        assert_eq!(clean_pose, noisy_pose);
        assert_ne!(clean_o, noisy_o);
    }

    #[test]
    fn env_bit_reproducible_with_fixed_seed() {
        let (model, motion) = setup(GaitKind::Walk);
        let run = || {
            let mut env = Env::new(model.clone(), motion.clone(), EnvConfig::default(), 4);
            let params = EpisodeParams::nominal(model.links.len());
            env.reset(motion.clone(), 60, params).unwrap();
            let mut rng = StdRng::seed_from_u64(10);
            let mut trace = Vec::new();
            for _ in 0..60 {
                let a: Vec<f64> = (0..model.dof()).map(|_| rng.random_range(-0.2..0.2)).collect();
                match env.step(&a) {
                    Ok(r) => trace.push((r.obs.to_vec(), r.reward.total, r.done.is_some())),
                    Err(_) => break,
                }
            }
            trace
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn observation_goal_privileged_dims() {
        let (model, motion) = setup(GaitKind::Stand);
        let mut env = Env::new(model.clone(), motion.clone(), EnvConfig::default(), 0);
        let params = EpisodeParams::nominal(model.links.len());
        let (obs, goal) = env.reset(motion.clone(), 0, params).unwrap();
        assert_eq!(obs.to_vec().len(), Observation::dim(6));
        assert_eq!(goal.to_vec().len(), Goal::dim(6));
        let r = env.step(&vec![0.0; 6]).unwrap();
        assert_eq!(r.privileged.to_vec().len(), PrivilegedExtras::dim(4));
        // Projected gravity at zero pitch points straight down.
        assert!((r.obs.projected_gravity[1] + 1.0).abs() < 0.01);
    }
}
