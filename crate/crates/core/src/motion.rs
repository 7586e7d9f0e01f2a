//! Reference motions: time-indexed kinematic targets for the policy to track.
//!
//! Motions come from `.motion` CSV files or from procedural generators
//! (stand, squat, walk, wave_arms). References are kinematically smooth but
//! deliberately unchecked against dynamics; making them physically executable
//! is the policy's job. Missing velocities are filled by central finite
//! differences and missing contact flags are derived from foot kinematics:
//! a foot is in reference contact when its height above flat ground is below
//! 2 cm and its vertical speed is below 0.1 m/s.

use std::fs;
use std::path::Path;

use rand::rngs::StdRng;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::model::{GeneralizedPose, RobotModel};

/// Height below which a reference foot counts as touching flat ground.
pub const CONTACT_HEIGHT: f64 = 0.02;
/// Vertical-speed bound for a reference foot to count as touching.
pub const CONTACT_SPEED: f64 = 0.1;

/// One reference frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    /// Root position (x, z) in m.
    pub root_pos: [f64; 2],
    pub root_pitch: f64,
    /// Root linear velocity (m/s).
    pub root_vel: [f64; 2],
    /// Root pitch rate (rad/s).
    pub root_ang_vel: f64,
    pub q: Vec<f64>,
    pub dq: Vec<f64>,
    /// Reference contact flag per foot.
    pub contact: Vec<bool>,
    /// Torso height goal, m.
    pub torso_height: f64,
}

impl Frame {
    pub fn pose(&self) -> GeneralizedPose {
        GeneralizedPose {
            root_x: self.root_pos[0],
            root_z: self.root_pos[1],
            root_pitch: self.root_pitch,
            q: self.q.clone(),
        }
    }
}

/// A validated, immutable reference motion at a constant frame rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceMotion {
    pub name: String,
    pub id: usize,
    pub frame_rate: f64,
    pub frames: Vec<Frame>,
}

#[derive(Debug, thiserror::Error)]
pub enum MotionError {
    #[error("cannot read motion file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("motion parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("motion has {got} joint columns, model has {expected} joints")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("invalid gait parameters: {0}")]
    InvalidParams(String),
    #[error("time {t} outside motion range [0, {duration}]")]
    TimeOutOfRange { t: f64, duration: f64 },
    #[error("generated gait violates joint `{joint}` limits at frame {frame} (q = {value})")]
    JointLimit {
        joint: String,
        frame: usize,
        value: f64,
    },
    #[error("model has no joint named `{0}` (required by the gait generator)")]
    MissingJoint(String),
}

impl ReferenceMotion {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Duration in seconds: time of the last frame.
    pub fn duration(&self) -> f64 {
        (self.frames.len() - 1) as f64 / self.frame_rate
    }

    pub fn dof(&self) -> usize {
        self.frames.first().map_or(0, |f| f.q.len())
    }

    /// Linear interpolation between the bracketing frames; contact flags come
    /// from the earlier frame.
    pub fn sample(&self, t: f64) -> Result<Frame, MotionError> {
        let duration = self.duration();
        if !((-1e-9..=duration + 1e-9).contains(&t)) {
            return Err(MotionError::TimeOutOfRange { t, duration });
        }
        let ft = (t.max(0.0) * self.frame_rate).min((self.frames.len() - 1) as f64);
        let i0 = (ft.floor() as usize).min(self.frames.len() - 1);
        if i0 + 1 >= self.frames.len() {
            return Ok(self.frames[i0].clone());
        }
        let u = ft - i0 as f64;
        let (a, b) = (&self.frames[i0], &self.frames[i0 + 1]);
        let lerp = |x: f64, y: f64| x + u * (y - x);
        Ok(Frame {
            root_pos: [
                lerp(a.root_pos[0], b.root_pos[0]),
                lerp(a.root_pos[1], b.root_pos[1]),
            ],
            root_pitch: lerp(a.root_pitch, b.root_pitch),
            root_vel: [
                lerp(a.root_vel[0], b.root_vel[0]),
                lerp(a.root_vel[1], b.root_vel[1]),
            ],
            root_ang_vel: lerp(a.root_ang_vel, b.root_ang_vel),
            q: a.q.iter().zip(&b.q).map(|(&x, &y)| lerp(x, y)).collect(),
            dq: a.dq.iter().zip(&b.dq).map(|(&x, &y)| lerp(x, y)).collect(),
            contact: a.contact.clone(),
            torso_height: lerp(a.torso_height, b.torso_height),
        })
    }

    /// Multiply root positions and linear velocities by `ratio`, leaving
    /// joint angles, pitch, and angular velocity untouched. Used to map
    /// trajectories recorded at a different body scale onto this robot.
    pub fn scale_root(&self, ratio: f64) -> Result<ReferenceMotion, MotionError> {
        if !(ratio > 0.0 && ratio <= 1.0) {
            return Err(MotionError::InvalidParams(format!(
                "scale ratio must be in (0, 1], got {ratio}"
            )));
        }
        let mut out = self.clone();
        for f in &mut out.frames {
            f.root_pos[0] *= ratio;
            f.root_pos[1] *= ratio;
            f.root_vel[0] *= ratio;
            f.root_vel[1] *= ratio;
            f.torso_height *= ratio;
        }
        Ok(out)
    }

    /// Add i.i.d. zero-mean Gaussian noise to every joint angle of every
    /// frame. The root trajectory and contact flags are untouched; joint
    /// velocities are recomputed by finite differences. `sigma = 0` returns
    /// the motion bit-identically.
    pub fn inject_noise(&self, sigma: f64, seed: u64) -> ReferenceMotion {
        assert!(sigma >= 0.0, "noise sigma must be non-negative");
        if sigma == 0.0 {
            return self.clone();
        }
        let mut rng = StdRng::seed_from_u64(seed);
        let normal = Normal::new(0.0, sigma).expect("sigma checked non-negative");
        let mut out = self.clone();
        for f in &mut out.frames {
            for q in &mut f.q {
                *q += normal.sample(&mut rng);
            }
        }
        let dq = finite_differences(&out.frames, self.frame_rate, |f| f.q.clone());
        for (f, d) in out.frames.iter_mut().zip(dq) {
            f.dq = d;
        }
        out
    }

    fn validate(self, model: &RobotModel) -> Result<Self, MotionError> {
        if self.frames.len() < 2 {
            return Err(MotionError::Parse {
                line: 0,
                msg: "motion needs at least 2 frames".into(),
            });
        }
        let dof = self.dof();
        if dof != model.dof() {
            return Err(MotionError::DimensionMismatch {
                got: dof,
                expected: model.dof(),
            });
        }
        Ok(self)
    }
}

/// Central finite differences of a per-frame vector quantity, one-sided at
/// the endpoints.
fn finite_differences<F>(frames: &[Frame], frame_rate: f64, get: F) -> Vec<Vec<f64>>
where
    F: Fn(&Frame) -> Vec<f64>,
{
    let n = frames.len();
    let dt = 1.0 / frame_rate;
    (0..n)
        .map(|k| {
            let (a, b, span) = if k == 0 {
                (0, 1.min(n - 1), dt)
            } else if k == n - 1 {
                (n - 2, n - 1, dt)
            } else {
                (k - 1, k + 1, 2.0 * dt)
            };
            let va = get(&frames[a]);
            let vb = get(&frames[b]);
            va.iter().zip(&vb).map(|(&x, &y)| (y - x) / span).collect()
        })
        .collect()
}

/// Derive per-foot reference contact flags from foot kinematics over flat
/// ground: low (below [`CONTACT_HEIGHT`]) and slow ([`CONTACT_SPEED`]).
fn derive_contacts(frames: &mut [Frame], frame_rate: f64, model: &RobotModel) {
    let heights: Vec<Vec<f64>> = frames
        .iter()
        .map(|f| {
            let fk = model.forward_kinematics(&f.pose());
            fk.foot_world.iter().map(|p| p[1]).collect()
        })
        .collect();
    let n = frames.len();
    let dt = 1.0 / frame_rate;
    for k in 0..n {
        let (a, b, span) = if k == 0 {
            (0, 1.min(n - 1), dt)
        } else if k == n - 1 {
            (n - 2, n - 1, dt)
        } else {
            (k - 1, k + 1, 2.0 * dt)
        };
        frames[k].contact = (0..model.feet.len())
            .map(|fi| {
                let vz = (heights[b][fi] - heights[a][fi]) / span;
                heights[k][fi] < CONTACT_HEIGHT && vz.abs() < CONTACT_SPEED
            })
            .collect();
    }
}

// ---------------------------------------------------------------------------
// File I/O
// ---------------------------------------------------------------------------

/// Load a `.motion` CSV file (schema in `docs/formats.md`), filling missing
/// velocity columns by finite differences and missing contact flags from
/// foot kinematics.
pub fn load_motion(
    path: impl AsRef<Path>,
    model: &RobotModel,
) -> Result<ReferenceMotion, MotionError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| MotionError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "motion".to_string());
    parse_motion(&text, &name, model)
}

/// Parse motion CSV text.
pub fn parse_motion(
    text: &str,
    name: &str,
    model: &RobotModel,
) -> Result<ReferenceMotion, MotionError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(MotionError::Parse {
        line: 1,
        msg: "empty motion file".into(),
    })?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let find = |name: &str| cols.iter().position(|c| *c == name);
    let need = |col: &str| {
        find(col).ok_or(MotionError::Parse {
            line: 1,
            msg: format!("missing required column `{col}`"),
        })
    };
    let c_time = need("time")?;
    let c_rx = need("root_x")?;
    let c_rz = need("root_z")?;
    let c_rp = need("root_pitch")?;
    let q_cols: Vec<usize> = (0..).map_while(|j| find(&format!("q{j}"))).collect();
    if q_cols.is_empty() {
        return Err(MotionError::Parse {
            line: 1,
            msg: "missing joint angle columns `q0..`".into(),
        });
    }
    if q_cols.len() != model.dof() {
        return Err(MotionError::DimensionMismatch {
            got: q_cols.len(),
            expected: model.dof(),
        });
    }
    let dq_cols: Vec<usize> = (0..).map_while(|j| find(&format!("dq{j}"))).collect();
    if !dq_cols.is_empty() && dq_cols.len() != q_cols.len() {
        return Err(MotionError::Parse {
            line: 1,
            msg: format!(
                "found {} dq columns for {} joints",
                dq_cols.len(),
                q_cols.len()
            ),
        });
    }
    let c_vx = find("root_vx");
    let c_vz = find("root_vz");
    let c_w = find("root_w");
    let contact_cols: Vec<usize> = (0..)
        .map_while(|j| find(&format!("contact_{j}")))
        .collect();
    let c_th = find("torso_height");

    let mut times = Vec::new();
    let mut frames = Vec::new();
    for (lineno, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let vals: Vec<&str> = line.split(',').map(str::trim).collect();
        if vals.len() != cols.len() {
            return Err(MotionError::Parse {
                line: lineno + 1,
                msg: format!("expected {} fields, got {}", cols.len(), vals.len()),
            });
        }
        let num = |i: usize| -> Result<f64, MotionError> {
            vals[i].parse::<f64>().map_err(|_| MotionError::Parse {
                line: lineno + 1,
                msg: format!("`{}` is not a number", vals[i]),
            })
        };
        times.push(num(c_time)?);
        let q: Vec<f64> = q_cols.iter().map(|&i| num(i)).collect::<Result<_, _>>()?;
        let dq: Vec<f64> = dq_cols.iter().map(|&i| num(i)).collect::<Result<_, _>>()?;
        let contact: Vec<bool> = contact_cols
            .iter()
            .map(|&i| num(i).map(|v| v != 0.0))
            .collect::<Result<_, _>>()?;
        let root_z = num(c_rz)?;
        frames.push(Frame {
            root_pos: [num(c_rx)?, root_z],
            root_pitch: num(c_rp)?,
            root_vel: [
                c_vx.map(num).transpose()?.unwrap_or(0.0),
                c_vz.map(num).transpose()?.unwrap_or(0.0),
            ],
            root_ang_vel: c_w.map(num).transpose()?.unwrap_or(0.0),
            q,
            dq,
            contact,
            torso_height: c_th.map(num).transpose()?.unwrap_or(root_z),
        });
    }
    if frames.len() < 2 {
        return Err(MotionError::Parse {
            line: 0,
            msg: "motion needs at least 2 frames".into(),
        });
    }

    // Constant frame rate from the time column.
    let dt = times[1] - times[0];
    if !(dt > 0.0) {
        return Err(MotionError::Parse {
            line: 3,
            msg: format!("non-increasing time column (dt = {dt})"),
        });
    }
    let frame_rate = 1.0 / dt;
    for (k, &t) in times.iter().enumerate() {
        if (t - k as f64 * dt).abs() > 1e-6 {
            return Err(MotionError::Parse {
                line: k + 2,
                msg: format!("time column is not uniform at t = {t}"),
            });
        }
    }

    // Fill what the file left out.
    if dq_cols.is_empty() {
        let dq = finite_differences(&frames, frame_rate, |f| f.q.clone());
        for (f, d) in frames.iter_mut().zip(dq) {
            f.dq = d;
        }
    }
    if c_vx.is_none() || c_vz.is_none() || c_w.is_none() {
        let v = finite_differences(&frames, frame_rate, |f| {
            vec![f.root_pos[0], f.root_pos[1], f.root_pitch]
        });
        for (f, d) in frames.iter_mut().zip(v) {
            if c_vx.is_none() {
                f.root_vel[0] = d[0];
            }
            if c_vz.is_none() {
                f.root_vel[1] = d[1];
            }
            if c_w.is_none() {
                f.root_ang_vel = d[2];
            }
        }
    }
    if contact_cols.is_empty() {
        derive_contacts(&mut frames, frame_rate, model);
    } else if contact_cols.len() != model.feet.len() {
        return Err(MotionError::Parse {
            line: 1,
            msg: format!(
                "found {} contact columns for {} feet",
                contact_cols.len(),
                model.feet.len()
            ),
        });
    }

    ReferenceMotion {
        name: name.to_string(),
        id: 0,
        frame_rate,
        frames,
    }
    .validate(model)
}

/// Write a motion as canonical CSV with all columns.
pub fn write_motion(motion: &ReferenceMotion, path: impl AsRef<Path>) -> std::io::Result<()> {
    fs::write(path, motion_to_csv(motion))
}

pub fn motion_to_csv(motion: &ReferenceMotion) -> String {
    let dof = motion.dof();
    let n_feet = motion.frames.first().map_or(0, |f| f.contact.len());
    let mut s = String::from("time,root_x,root_z,root_pitch");
    for j in 0..dof {
        s.push_str(&format!(",q{j}"));
    }
    s.push_str(",root_vx,root_vz,root_w");
    for j in 0..dof {
        s.push_str(&format!(",dq{j}"));
    }
    for f in 0..n_feet {
        s.push_str(&format!(",contact_{f}"));
    }
    s.push_str(",torso_height\n");
    for (k, f) in motion.frames.iter().enumerate() {
        s.push_str(&format!("{}", k as f64 / motion.frame_rate));
        s.push_str(&format!(
            ",{},{},{}",
            f.root_pos[0], f.root_pos[1], f.root_pitch
        ));
        for q in &f.q {
            s.push_str(&format!(",{q}"));
        }
        s.push_str(&format!(
            ",{},{},{}",
            f.root_vel[0], f.root_vel[1], f.root_ang_vel
        ));
        for dq in &f.dq {
            s.push_str(&format!(",{dq}"));
        }
        for &c in &f.contact {
            s.push_str(if c { ",1" } else { ",0" });
        }
        s.push_str(&format!(",{}\n", f.torso_height));
    }
    s
}

// ---------------------------------------------------------------------------
// Procedural gaits
// ---------------------------------------------------------------------------

/// Which procedural reference to generate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaitKind {
    Stand,
    Squat,
    Walk,
    WaveArms,
}

impl GaitKind {
    pub fn name(&self) -> &'static str {
        match self {
            GaitKind::Stand => "stand",
            GaitKind::Squat => "squat",
            GaitKind::Walk => "walk",
            GaitKind::WaveArms => "wave_arms",
        }
    }
}

/// Generator parameters. Angles in rad, lengths in m, times in s.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaitParams {
    pub duration: f64,
    pub frame_rate: f64,
    /// Cycle period for the periodic gaits.
    pub period: f64,
    /// Squat depth or arm swing amplitude.
    pub amplitude: f64,
    /// Walk root advance per period.
    pub stride: f64,
    /// Stance flexion: hips bend forward and knees back by this angle so the
    /// shanks (and foot plates) stay vertical while the knees sit away from
    /// their extension stop.
    pub stance_flex: f64,
    /// Root height drop below the kinematic stance height during walk.
    pub clearance: f64,
    /// Swing-phase knee bend during walk.
    pub knee_swing: f64,
    /// Backward hip bias during walk: feet plant behind the hips so the body
    /// keeps falling into the next step.
    pub walk_lean: f64,
}

impl Default for GaitParams {
    fn default() -> Self {
        Self {
            duration: 4.0,
            frame_rate: 60.0,
            period: 1.2,
            amplitude: 0.25,
            stride: 0.3,
            stance_flex: 0.0,
            clearance: 0.01,
            knee_swing: 0.8,
            walk_lean: 0.012,
        }
    }
}

/// Named joints the leg-gait generators require.
struct BipedJoints {
    left_hip: usize,
    left_knee: usize,
    right_hip: usize,
    right_knee: usize,
}

fn biped_joints(model: &RobotModel) -> Result<BipedJoints, MotionError> {
    let idx = |name: &str| {
        model
            .joints
            .iter()
            .position(|j| j.name == name)
            .ok_or_else(|| MotionError::MissingJoint(name.to_string()))
    };
    Ok(BipedJoints {
        left_hip: idx("left_hip")?,
        left_knee: idx("left_knee")?,
        right_hip: idx("right_hip")?,
        right_knee: idx("right_knee")?,
    })
}

/// Generate a procedural reference motion for a biped-shaped model.
///
/// The output is C¹-smooth and satisfies the model's joint limits, but has
/// no physical-feasibility guarantee by design.
pub fn generate_gait(
    kind: GaitKind,
    params: &GaitParams,
    model: &RobotModel,
) -> Result<ReferenceMotion, MotionError> {
    let p = params;
    if !(p.duration > 0.0 && p.frame_rate > 0.0) {
        return Err(MotionError::InvalidParams(format!(
            "duration {} and frame_rate {} must be positive",
            p.duration, p.frame_rate
        )));
    }
    if !(p.period > 0.0) {
        return Err(MotionError::InvalidParams(format!(
            "period must be positive, got {}",
            p.period
        )));
    }
    if p.stride < 0.0 || p.amplitude < 0.0 || p.knee_swing < 0.0 {
        return Err(MotionError::InvalidParams(
            "stride, amplitude, and knee_swing must be non-negative".into(),
        ));
    }

    let joints = biped_joints(model)?;
    let arm_joints: Vec<usize> = model
        .joints
        .iter()
        .enumerate()
        .filter(|(_, j)| j.delta_group == crate::model::DeltaGroup::Arms)
        .map(|(i, _)| i)
        .collect();
    let standing = model.standing_height();

    // Root height with feet kinematically on the ground for a given pose.
    let ground_root_z = |q: &[f64]| -> f64 {
        let fk = model.forward_kinematics(&GeneralizedPose {
            root_x: 0.0,
            root_z: 0.0,
            root_pitch: 0.0,
            q: q.to_vec(),
        });
        -fk.foot_world
            .iter()
            .map(|p| p[1])
            .fold(f64::INFINITY, f64::min)
    };

    let n_frames = (p.duration * p.frame_rate).round().max(2.0) as usize;
    let dof = model.dof();
    let stance_height = {
        let mut q = vec![0.0; dof];
        q[joints.left_hip] = p.stance_flex;
        q[joints.right_hip] = p.stance_flex;
        q[joints.left_knee] = -p.stance_flex;
        q[joints.right_knee] = -p.stance_flex;
        ground_root_z(&q)
    };
    let mut frames = Vec::with_capacity(n_frames);
    // Hip swing amplitude matched to the commanded stride.
    let hip_swing = (p.stride / (4.0 * standing)).clamp(0.0, 0.9).asin();

    for k in 0..n_frames {
        let t = k as f64 / p.frame_rate;
        let phase = 2.0 * std::f64::consts::PI * t / p.period;
        let mut q = vec![0.0; dof];
        let base_hip = p.stance_flex;
        let root_x;
        let root_z;
        match kind {
            GaitKind::Stand => {
                q[joints.left_hip] = base_hip;
                q[joints.right_hip] = base_hip;
                q[joints.left_knee] = -base_hip;
                q[joints.right_knee] = -base_hip;
                root_x = 0.0;
                root_z = ground_root_z(&q);
            }
            GaitKind::Squat => {
                // Hips and knees deepen together so the shanks stay vertical
                // and the feet keep their ground placement.
                let depth = p.amplitude * (1.0 - phase.cos()) / 2.0;
                q[joints.left_hip] = base_hip + depth;
                q[joints.right_hip] = base_hip + depth;
                q[joints.left_knee] = -(base_hip + depth);
                q[joints.right_knee] = -(base_hip + depth);
                root_x = 0.0;
                root_z = ground_root_z(&q);
            }
            GaitKind::Walk => {
                // Swing windows cover a fraction of the cycle per leg, so the
                // gait keeps double-support phases in between; knees lift only
                // inside their window (sin² bump, C¹ at the edges).
                let s = (t / p.period).fract();
                let duty = 0.35;
                let bump = |u: f64| {
                    if (0.0..1.0).contains(&u) {
                        (std::f64::consts::PI * u).sin().powi(2)
                    } else {
                        0.0
                    }
                };
                // Hip phase shifted so the forward sweep happens inside the
                // swing window: lift at the back, touch down at the front.
                let two_pi = 2.0 * std::f64::consts::PI;
                let swing = |sh: f64| hip_swing * (two_pi * (s - sh - duty / 2.0)).sin();
                q[joints.left_hip] = base_hip + swing(0.0) - p.walk_lean;
                q[joints.right_hip] = base_hip + swing(0.5) - p.walk_lean;
                q[joints.left_knee] = -base_hip - p.knee_swing * bump(s / duty);
                q[joints.right_knee] = -base_hip - p.knee_swing * bump((s - 0.5) / duty);
                for (i, &a) in arm_joints.iter().enumerate() {
                    let sign = if i % 2 == 0 { -1.0 } else { 1.0 };
                    q[a] = 0.15 * sign * swing(0.0);
                }
                root_x = p.stride * (t / p.period);
                root_z = stance_height - p.clearance;
            }
            GaitKind::WaveArms => {
                q[joints.left_hip] = base_hip;
                q[joints.right_hip] = base_hip;
                q[joints.left_knee] = -base_hip;
                q[joints.right_knee] = -base_hip;
                for (i, &a) in arm_joints.iter().enumerate() {
                    let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                    q[a] = p.amplitude * sign * phase.sin();
                }
                root_x = 0.0;
                root_z = ground_root_z(&q);
            }
        }
        for (j, joint) in model.joints.iter().enumerate() {
            if q[j] < joint.limit_lo - 1e-12 || q[j] > joint.limit_hi + 1e-12 {
                return Err(MotionError::JointLimit {
                    joint: joint.name.clone(),
                    frame: k,
                    value: q[j],
                });
            }
        }
        frames.push(Frame {
            root_pos: [root_x, root_z],
            root_pitch: 0.0,
            root_vel: [0.0, 0.0],
            root_ang_vel: 0.0,
            q,
            dq: vec![0.0; dof],
            contact: Vec::new(),
            torso_height: root_z,
        });
    }

    // Velocities by the same finite-difference rule used when loading files,
    // so generated and loaded motions are consistent by construction.
    let dq = finite_differences(&frames, p.frame_rate, |f| f.q.clone());
    let v = finite_differences(&frames, p.frame_rate, |f| {
        vec![f.root_pos[0], f.root_pos[1], f.root_pitch]
    });
    for ((f, d), rv) in frames.iter_mut().zip(dq).zip(v) {
        f.dq = d;
        f.root_vel = [rv[0], rv[1]];
        f.root_ang_vel = rv[2];
    }
    derive_contacts(&mut frames, p.frame_rate, model);

    Ok(ReferenceMotion {
        name: kind.name().to_string(),
        id: 0,
        frame_rate: p.frame_rate,
        frames,
    })
}
