//! Reward terms for tracking a reference frame.
//!
//! Six exponential terms `w * exp(-lambda * D)` over tracking distances
//! (torso position/rotation, joints, feet, energy, smoothness) plus two
//! penalty terms (wrong foot contact, fall). Foot and style distances are
//! root-relative so they do not double-count root tracking.

use serde::{Deserialize, Serialize};

use crate::model::RobotModel;
use crate::motion::Frame;
use crate::sim::SimState;

/// Per-term weight/decay pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    pub torso_pos: (f64, f64),
    pub torso_rot: (f64, f64),
    pub joint: (f64, f64),
    pub foot: (f64, f64),
    pub energy: (f64, f64),
    pub smooth: (f64, f64),
    /// Penalty applied when any foot's contact flag disagrees with the
    /// reference.
    pub contact_penalty: f64,
    /// Penalty applied on a fall.
    pub terminate_penalty: f64,
    /// Replace the exponential energy term with `-w * ||tau . dq||`.
    pub energy_as_penalty: bool,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            torso_pos: (0.5, 10.0),
            torso_rot: (0.5, 10.0),
            joint: (1.0, 5.0),
            foot: (0.5, 10.0),
            energy: (1e-6, 1.0),
            smooth: (0.3, 0.1),
            contact_penalty: 1.0,
            terminate_penalty: 20.0,
            energy_as_penalty: false,
        }
    }
}

/// Value of every term plus the total.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub torso_pos: f64,
    pub torso_rot: f64,
    pub joint: f64,
    pub foot: f64,
    pub energy: f64,
    pub smooth: f64,
    pub contact: f64,
    pub terminate: f64,
    pub total: f64,
}

impl RewardBreakdown {
    pub const TERM_NAMES: [&'static str; 8] = [
        "torso_pos",
        "torso_rot",
        "joint",
        "foot",
        "energy",
        "smooth",
        "contact",
        "terminate",
    ];

    pub fn terms(&self) -> [f64; 8] {
        [
            self.torso_pos,
            self.torso_rot,
            self.joint,
            self.foot,
            self.energy,
            self.smooth,
            self.contact,
            self.terminate,
        ]
    }
}

/// `w * exp(-lambda * D)` for a non-negative distance.
pub fn exp_reward(distance: f64, w: f64, lambda: f64) -> f64 {
    assert!(
        distance >= 0.0,
        "exponential reward needs a non-negative distance, got {distance}"
    );
    w * (-lambda * distance).exp()
}

/// Everything a reward evaluation needs from one control tick.
pub struct RewardInputs<'a> {
    pub model: &'a RobotModel,
    pub state: &'a SimState,
    pub reference: &'a Frame,
    /// Joint velocities at the previous control tick, for the jerk estimate.
    pub prev_joint_vel: &'a [f64],
    /// Control period used to finite-difference joint accelerations.
    pub control_dt: f64,
    pub sim_contacts: &'a [bool],
    pub ref_contacts: &'a [bool],
    pub fell: bool,
}

/// Evaluate all reward terms against a reference frame.
pub fn compute_rewards(inp: &RewardInputs, w: &RewardWeights) -> RewardBreakdown {
    let state = inp.state;
    let frame = inp.reference;

    let dx = state.pose.root_x - frame.root_pos[0];
    let dz = state.pose.root_z - frame.root_pos[1];
    let d_torso_pos = (dx * dx + dz * dz).sqrt();
    let d_torso_rot = (state.pose.root_pitch - frame.root_pitch).abs();
    let d_joint = l2(&state.pose.q, &frame.q);

    // Feet compared in the root frame on both sides.
    let sim_fk = inp.model.forward_kinematics(&state.pose);
    let ref_fk = inp.model.forward_kinematics(&frame.pose());
    let mut foot_sq = 0.0;
    for i in 0..inp.model.feet.len() {
        let sx = sim_fk.foot_world[i][0] - state.pose.root_x;
        let sz = sim_fk.foot_world[i][1] - state.pose.root_z;
        let rx = ref_fk.foot_world[i][0] - frame.root_pos[0];
        let rz = ref_fk.foot_world[i][1] - frame.root_pos[1];
        foot_sq += (sx - rx).powi(2) + (sz - rz).powi(2);
    }
    let d_foot = foot_sq.sqrt();

    let d_energy: f64 = state
        .torques
        .iter()
        .zip(state.joint_vel())
        .map(|(t, v)| (t * v).abs())
        .sum();

    let mut accel_sq = 0.0;
    for (now, prev) in state.joint_vel().iter().zip(inp.prev_joint_vel) {
        accel_sq += ((now - prev) / inp.control_dt).powi(2);
    }
    let d_smooth = accel_sq.sqrt();

    let mismatch = inp
        .sim_contacts
        .iter()
        .zip(inp.ref_contacts)
        .any(|(s, r)| s != r);

    let energy = if w.energy_as_penalty {
        -w.energy.0 * d_energy
    } else {
        exp_reward(d_energy, w.energy.0, w.energy.1)
    };
    let mut out = RewardBreakdown {
        torso_pos: exp_reward(d_torso_pos, w.torso_pos.0, w.torso_pos.1),
        torso_rot: exp_reward(d_torso_rot, w.torso_rot.0, w.torso_rot.1),
        joint: exp_reward(d_joint, w.joint.0, w.joint.1),
        foot: exp_reward(d_foot, w.foot.0, w.foot.1),
        energy,
        smooth: exp_reward(d_smooth, w.smooth.0, w.smooth.1),
        contact: if mismatch { -w.contact_penalty } else { 0.0 },
        terminate: if inp.fell { -w.terminate_penalty } else { 0.0 },
        total: 0.0,
    };
    out.total = out.terms().iter().sum();
    out
}

fn l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}
