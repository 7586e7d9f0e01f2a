//! Rigid-body simulation of the planar floating-base biped.
//!
//! Dynamics are formulated in generalized coordinates `[x, z, pitch, q..]`
//! with the mass matrix and bias forces assembled from per-link COM Jacobians,
//! penalty ground contacts (spring-damper normal, Coulomb-cone tangent with
//! stiction anchors), PD joint torques, and semi-implicit Euler integration.

use serde::{Deserialize, Serialize};

use crate::model::{perp, rot, GeneralizedPose, RobotModel};

/// Ground geometry. The rough variant is smooth deterministic value noise.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Terrain {
    Flat,
    Rough {
        amplitude: f64,
        correlation_length: f64,
        seed: u64,
    },
}

impl Terrain {
    /// Ground height at world x.
    pub fn height(&self, x: f64) -> f64 {
        match *self {
            Terrain::Flat => 0.0,
            Terrain::Rough {
                amplitude,
                correlation_length,
                seed,
            } => {
                if amplitude == 0.0 {
                    return 0.0;
                }
                let t = x / correlation_length;
                let i = t.floor();
                let u = t - i;
                let s = u * u * (3.0 - 2.0 * u);
                let a = lattice_value(seed, i as i64);
                let b = lattice_value(seed, i as i64 + 1);
                amplitude * (a + (b - a) * s)
            }
        }
    }
}

/// Deterministic pseudo-random lattice value in [-1, 1].
fn lattice_value(seed: u64, i: i64) -> f64 {
    let mut z = seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    (z >> 11) as f64 / ((1u64 << 53) as f64) * 2.0 - 1.0
}

/// Penalty contact constants.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContactParams {
    /// Normal spring stiffness, N/m.
    pub kn: f64,
    /// Normal damping, N·s/m.
    pub cn: f64,
    /// Tangential stiction stiffness, N/m.
    pub kt: f64,
    /// Tangential damping, N·s/m.
    pub ct: f64,
    /// Friction coefficient.
    pub mu: f64,
}

impl Default for ContactParams {
    fn default() -> Self {
        Self {
            kn: 3.0e4,
            cn: 300.0,
            kt: 6.0e3,
            ct: 30.0,
            mu: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimOptions {
    pub gravity: f64,
    pub contact: ContactParams,
    /// Hard-stop stiffness at joint limits, N·m/rad.
    pub limit_stiffness: f64,
    /// Hard-stop damping while moving into a limit, N·m·s/rad.
    pub limit_damping: f64,
    /// Pin the floating base (test harness for sub-models like pendulums).
    pub fixed_base: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            gravity: 9.81,
            contact: ContactParams::default(),
            limit_stiffness: 500.0,
            limit_damping: 5.0,
            fixed_base: false,
        }
    }
}

/// Full dynamic state of the simulated robot.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimState {
    pub pose: GeneralizedPose,
    /// Generalized velocity `[ẋ, ż, ω, q̇..]`.
    pub vel: Vec<f64>,
    /// Generalized acceleration from the last step.
    pub accel: Vec<f64>,
    /// Joint torques applied on the last step.
    pub torques: Vec<f64>,
    pub foot_contact: Vec<bool>,
    /// World contact force per foot `[fx, fz]`.
    pub foot_force: Vec<[f64; 2]>,
    /// Stiction anchor (world x) per foot while in contact.
    anchors: Vec<Option<f64>>,
    pub time: f64,
    pub steps: u64,
}

impl SimState {
    pub fn new(pose: GeneralizedPose, root_vel: [f64; 3], dq: &[f64], n_feet: usize) -> Self {
        let mut vel = vec![root_vel[0], root_vel[1], root_vel[2]];
        vel.extend_from_slice(dq);
        let n = vel.len();
        let dof = dq.len();
        Self {
            pose,
            vel,
            accel: vec![0.0; n],
            torques: vec![0.0; dof],
            foot_contact: vec![false; n_feet],
            foot_force: vec![[0.0; 2]; n_feet],
            anchors: vec![None; n_feet],
            time: 0.0,
            steps: 0,
        }
    }

    pub fn joint_vel(&self) -> &[f64] {
        &self.vel[3..]
    }

    pub fn root_vel(&self) -> [f64; 2] {
        [self.vel[0], self.vel[1]]
    }

    pub fn pitch_rate(&self) -> f64 {
        self.vel[2]
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("simulation diverged (non-finite state) at step {step}")]
    Diverged { step: u64 },
    #[error("q_des has {got} entries, model has {expected} joints")]
    DimensionMismatch { got: usize, expected: usize },
}

/// One foot's contact response.
#[derive(Debug, Clone, Copy)]
pub struct ContactResult {
    /// Normal (vertical) force, never negative.
    pub normal: f64,
    /// Tangential (horizontal) force, inside the Coulomb cone.
    pub tangent: f64,
    pub in_contact: bool,
    /// Stiction anchor to carry to the next step.
    pub anchor: Option<f64>,
}

/// Penalty contact force for a single point against the terrain.
///
/// Penetration engages a spring-damper normal force (clamped non-negative)
/// and a stiction spring toward `anchor`, clamped to the Coulomb cone
/// `|F_t| <= mu * N`; the anchor slides when the cone saturates.
pub fn contact_force(
    point: [f64; 2],
    vel: [f64; 2],
    anchor: Option<f64>,
    terrain: &Terrain,
    params: &ContactParams,
) -> ContactResult {
    let depth = terrain.height(point[0]) - point[1];
    if depth <= 0.0 {
        return ContactResult {
            normal: 0.0,
            tangent: 0.0,
            in_contact: false,
            anchor: None,
        };
    }
    // Damping is capped by the spring term so the force ramps from zero at
    // touchdown instead of spiking with the approach speed.
    let spring = params.kn * depth;
    let normal = spring + (params.cn * (-vel[1]).max(0.0)).min(spring);
    let anchor_x = anchor.unwrap_or(point[0]);
    let raw = -params.kt * (point[0] - anchor_x) - params.ct * vel[0];
    let cone = params.mu * normal;
    let (tangent, new_anchor) = if raw.abs() <= cone {
        (raw, anchor_x)
    } else {
        let t = cone.copysign(raw);
        // Slide the anchor so the spring alone reproduces the cone force.
        (t, point[0] + t / params.kt)
    };
    ContactResult {
        normal,
        tangent,
        in_contact: true,
        anchor: Some(new_anchor),
    }
}

/// PD torque for one joint: `clamp(kp (q_des - q) - kd q̇, ±limit)`.
#[inline]
pub fn pd_torque_scalar(q: f64, dq: f64, q_des: f64, kp: f64, kd: f64, limit: f64) -> f64 {
    (kp * (q_des - q) - kd * dq).clamp(-limit, limit)
}

/// PD torques for all joints using the model's gains and torque limits.
pub fn pd_torque(model: &RobotModel, q: &[f64], dq: &[f64], q_des: &[f64]) -> Vec<f64> {
    assert_eq!(q.len(), model.dof());
    assert_eq!(q_des.len(), model.dof());
    model
        .joints
        .iter()
        .enumerate()
        .map(|(i, j)| pd_torque_scalar(q[i], dq[i], q_des[i], j.kp, j.kd, j.torque_limit))
        .collect()
}

/// COM/point Jacobian columns for the planar tree.
///
/// The velocity of a point `p` rigidly attached to link `l` is
/// `ẋ·(1,0) + ż·(0,1) + ω·perp(p - root) + Σ q̇_j·perp(p - joint_j)` over
/// ancestor joints `j` of `l`.
fn point_jacobian(
    model: &RobotModel,
    fk: &crate::model::FkResult,
    link: usize,
    point: [f64; 2],
    jac: &mut [[f64; 2]],
) {
    for col in jac.iter_mut() {
        *col = [0.0; 2];
    }
    jac[0] = [1.0, 0.0];
    jac[1] = [0.0, 1.0];
    let root = fk.link_origin[model.torso];
    jac[2] = perp([point[0] - root[0], point[1] - root[1]]);
    let mut l = link;
    while let Some(j) = model.parent_joint_of(l) {
        let jw = fk.joint_world[j];
        jac[3 + j] = perp([point[0] - jw[0], point[1] - jw[1]]);
        l = model.joints[j].parent;
    }
}

/// Ancestor joints of a link, innermost last.
fn ancestors(model: &RobotModel, link: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut l = link;
    while let Some(j) = model.parent_joint_of(l) {
        out.push(j);
        l = model.joints[j].parent;
    }
    out.reverse();
    out
}

/// Advance the state by one `dt` under PD control toward `q_des`.
///
/// Assembles the generalized mass matrix and bias forces, adds PD torques and
/// contact forces, solves for accelerations, and integrates semi-implicitly
/// (velocity first, then position).
pub fn step(
    state: &mut SimState,
    q_des: &[f64],
    model: &RobotModel,
    terrain: &Terrain,
    opts: &SimOptions,
    dt: f64,
) -> Result<(), SimError> {
    let dof = model.dof();
    if q_des.len() != dof {
        return Err(SimError::DimensionMismatch {
            got: q_des.len(),
            expected: dof,
        });
    }
    let n = model.gen_dof();
    let fk = model.forward_kinematics(&state.pose);

    // Absolute angular rate per link.
    let nl = model.links.len();
    let mut omega = vec![state.vel[2]; nl];
    for &l in model.link_order() {
        if let Some(j) = model.parent_joint_of(l) {
            omega[l] = omega[model.joints[j].parent] + state.vel[3 + j];
        }
    }

    // Bias (centripetal) acceleration of each link origin and COM with all
    // generalized accelerations frozen at zero.
    let mut origin_bias = vec![[0.0f64; 2]; nl];
    let mut com_bias = vec![[0.0f64; 2]; nl];
    for &l in model.link_order() {
        if let Some(j) = model.parent_joint_of(l) {
            let p = model.joints[j].parent;
            let arm = rot(fk.link_angle[p], model.joints[j].attach);
            origin_bias[l] = [
                origin_bias[p][0] - omega[p] * omega[p] * arm[0],
                origin_bias[p][1] - omega[p] * omega[p] * arm[1],
            ];
        }
        let link = &model.links[l];
        let c = rot(fk.link_angle[l], [
            link.dir[0] * link.com_offset,
            link.dir[1] * link.com_offset,
        ]);
        com_bias[l] = [
            origin_bias[l][0] - omega[l] * omega[l] * c[0],
            origin_bias[l][1] - omega[l] * omega[l] * c[1],
        ];
    }

    // Mass matrix and generalized force vector.
    let mut mass = vec![0.0f64; n * n];
    let mut rhs = vec![0.0f64; n];
    let mut jac = vec![[0.0f64; 2]; n];
    for l in 0..nl {
        let link = &model.links[l];
        point_jacobian(model, &fk, l, fk.link_com[l], &mut jac);
        let mut active: Vec<usize> = vec![0, 1, 2];
        for &a in &ancestors(model, l) {
            active.push(3 + a);
        }
        for &r in &active {
            for &c in &active {
                mass[r * n + c] +=
                    link.mass * (jac[r][0] * jac[c][0] + jac[r][1] * jac[c][1]);
            }
        }
        // Rotational inertia couples pitch and ancestor joint rates.
        let rot_cols: Vec<usize> = active.iter().copied().filter(|&c| c >= 2).collect();
        for &r in &rot_cols {
            for &c in &rot_cols {
                mass[r * n + c] += link.inertia;
            }
        }
        // Gravity minus inertial bias, projected through the COM Jacobian.
        let fx = -link.mass * com_bias[l][0];
        let fz = link.mass * (-opts.gravity - com_bias[l][1]);
        for &r in &active {
            rhs[r] += jac[r][0] * fx + jac[r][1] * fz;
        }
    }

    // Factor the mass matrix once; all remaining forces only touch the
    // right-hand side.
    let (sub_n, offset) = if opts.fixed_base { (n - 3, 3) } else { (n, 0) };
    let mut factor = vec![0.0f64; sub_n * sub_n];
    for r in 0..sub_n {
        for c in 0..sub_n {
            factor[r * sub_n + c] = mass[(r + offset) * n + (c + offset)];
        }
    }
    if !cholesky_factor(&mut factor, sub_n) {
        return Err(SimError::Diverged { step: state.steps });
    }

    // Every penalty element (PD gains, joint stops, contact springs) is
    // capped by the operational-space inertia it acts on: an explicit spring
    // k needs k·dt²/m_eff <= 1 and a damper c needs c·dt/m_eff <= 1, else the
    // integrator pumps energy instead of dissipating it. Joint effective
    // inertias come from the inverse mass matrix diagonal.
    let mut joint_m_eff = vec![f64::INFINITY; dof];
    for j in 0..dof {
        let col = 3 + j;
        if col < offset {
            continue;
        }
        let mut e = vec![0.0; sub_n];
        e[col - offset] = 1.0;
        let y = cholesky_solve(&factor, &e, sub_n);
        joint_m_eff[j] = 1.0 / y[col - offset].max(1e-12);
    }

    // Proportional PD torque, clamped to the torque limit. The damping part
    // is handled implicitly in the velocity solve below and is therefore not
    // subject to the limit (a passive damper only brakes).
    let mut torques = vec![0.0; dof];
    let mut joint_damping = vec![0.0; dof];
    for (j, joint) in model.joints.iter().enumerate() {
        let kp = joint.kp.min(joint_m_eff[j] / (dt * dt));
        torques[j] =
            (kp * (q_des[j] - state.pose.q[j])).clamp(-joint.torque_limit, joint.torque_limit);
        rhs[3 + j] += torques[j];
        joint_damping[j] += joint.kd;
    }
    // Joint hard stops: penalty spring past a limit, damped on the way in.
    for (j, joint) in model.joints.iter().enumerate() {
        let q = state.pose.q[j];
        let qd = state.vel[3 + j];
        let ks = opts.limit_stiffness.min(joint_m_eff[j] / (dt * dt));
        if q > joint.limit_hi {
            rhs[3 + j] -= ks * (q - joint.limit_hi);
            if qd > 0.0 {
                joint_damping[j] += opts.limit_damping;
            }
        } else if q < joint.limit_lo {
            rhs[3 + j] += ks * (joint.limit_lo - q);
            if qd < 0.0 {
                joint_damping[j] += opts.limit_damping;
            }
        }
    }

    // Ground contacts. Normal force is explicit (spring capped by the
    // operational-space inertia, damping capped by the spring). The
    // tangential stiction spring is explicit and capped; its damping goes
    // into the implicit matrix. Stick/slide is resolved by an active-set
    // loop: everyone starts sticking, feet whose solved tangential force
    // leaves the Coulomb cone switch to a constant sliding force.
    struct FootSolve {
        jac: Vec<[f64; 2]>,
        vel: [f64; 2],
        point: [f64; 2],
        normal: f64,
        kt: f64,
        spring_t: f64,
        anchor: f64,
        in_contact: bool,
        sliding: bool,
        tangent: f64,
    }
    let mut feet_solve: Vec<FootSolve> = (0..model.feet.len())
        .map(|_| FootSolve {
            jac: vec![[0.0; 2]; n],
            vel: [0.0; 2],
            point: [0.0; 2],
            normal: 0.0,
            kt: 0.0,
            spring_t: 0.0,
            anchor: 0.0,
            in_contact: false,
            sliding: false,
            tangent: 0.0,
        })
        .collect();
    for (fi, foot) in model.feet.iter().enumerate() {
        let fs = &mut feet_solve[fi];
        fs.point = fk.foot_world[fi];
        point_jacobian(model, &fk, foot.link, fs.point, &mut fs.jac);
        for (col, &qd) in fs.jac.iter().zip(&state.vel) {
            fs.vel[0] += col[0] * qd;
            fs.vel[1] += col[1] * qd;
        }
        let depth = terrain.height(fs.point[0]) - fs.point[1];
        if depth <= 0.0 {
            state.anchors[fi] = None;
            continue;
        }
        fs.in_contact = true;
        let jz: Vec<f64> = (0..sub_n).map(|r| fs.jac[r + offset][1]).collect();
        let yz = cholesky_solve(&factor, &jz, sub_n);
        let m_eff_z = 1.0 / dot(&jz, &yz).max(1e-9);
        let jx: Vec<f64> = (0..sub_n).map(|r| fs.jac[r + offset][0]).collect();
        let yx = cholesky_solve(&factor, &jx, sub_n);
        let m_eff_x = 1.0 / dot(&jx, &yx).max(1e-9);

        let kn = opts.contact.kn.min(m_eff_z / (dt * dt));
        let cn = opts.contact.cn.min(m_eff_z / dt);
        let spring = kn * depth;
        fs.normal = spring + (cn * (-fs.vel[1]).max(0.0)).min(spring);
        fs.kt = opts.contact.kt.min(m_eff_x / (dt * dt));
        fs.anchor = state.anchors[fi].unwrap_or(fs.point[0]);
        fs.spring_t = -fs.kt * (fs.point[0] - fs.anchor);
        for (r, col) in fs.jac.iter().enumerate() {
            rhs[r] += col[1] * fs.normal;
        }
    }

    // Implicit-damping velocity solve:
    //   (M + dt·D) v' = M v + dt·f
    // with D assembled from joint dampers and sticking tangential dampers.
    // Repeat with updated stick/slide sets until no foot leaves the cone.
    let mut new_vel = state.vel.clone();
    loop {
        let mut a_mat = vec![0.0f64; sub_n * sub_n];
        for r in 0..sub_n {
            for c in 0..sub_n {
                a_mat[r * sub_n + c] = mass[(r + offset) * n + (c + offset)];
            }
        }
        for j in 0..dof {
            let col = 3 + j;
            if col >= offset {
                a_mat[(col - offset) * sub_n + (col - offset)] += dt * joint_damping[j];
            }
        }
        let mut b = vec![0.0f64; sub_n];
        for r in 0..sub_n {
            b[r] = rhs[r + offset];
        }
        for fs in &feet_solve {
            if !fs.in_contact {
                continue;
            }
            if fs.sliding {
                for r in 0..sub_n {
                    b[r] += fs.jac[r + offset][0] * fs.tangent;
                }
            } else {
                for r in 0..sub_n {
                    b[r] += fs.jac[r + offset][0] * fs.spring_t;
                }
                let ct = opts.contact.ct;
                for r in 0..sub_n {
                    for c in 0..sub_n {
                        a_mat[r * sub_n + c] +=
                            dt * ct * fs.jac[r + offset][0] * fs.jac[c + offset][0];
                    }
                }
            }
        }
        // Right-hand side: M v + dt f, expressed via the velocity update form
        // A (v' - v) = dt (f - D v) is equivalent; we solve for v' directly.
        let mut rhs_v = vec![0.0f64; sub_n];
        for r in 0..sub_n {
            let mut mv = 0.0;
            for c in 0..sub_n {
                mv += mass[(r + offset) * n + (c + offset)] * state.vel[c + offset];
            }
            rhs_v[r] = mv + dt * b[r];
        }
        if !cholesky_factor(&mut a_mat, sub_n) {
            return Err(SimError::Diverged { step: state.steps });
        }
        let solved = cholesky_solve(&a_mat, &rhs_v, sub_n);
        for r in 0..sub_n {
            new_vel[r + offset] = solved[r];
        }
        for r in 0..offset {
            new_vel[r] = 0.0;
        }

        // Cone check on sticking feet with the solved velocities.
        let mut changed = false;
        for fs in &mut feet_solve {
            if !fs.in_contact || fs.sliding {
                continue;
            }
            let mut vx = 0.0;
            for (col, &qd) in fs.jac.iter().zip(&new_vel) {
                vx += col[0] * qd;
            }
            let raw = fs.spring_t - opts.contact.ct * vx;
            let cone = opts.contact.mu * fs.normal;
            if raw.abs() > cone {
                fs.sliding = true;
                fs.tangent = cone.copysign(raw);
                changed = true;
            } else {
                fs.tangent = raw;
            }
        }
        if !changed {
            break;
        }
    }

    // Record contact results and updated stiction anchors.
    for (fi, fs) in feet_solve.iter().enumerate() {
        state.foot_contact[fi] = fs.in_contact;
        if fs.in_contact {
            state.foot_force[fi] = [fs.tangent, fs.normal];
            state.anchors[fi] = if fs.sliding {
                Some(fs.point[0] + fs.tangent / fs.kt)
            } else {
                Some(fs.anchor)
            };
        } else {
            state.foot_force[fi] = [0.0, 0.0];
            state.anchors[fi] = None;
        }
    }

    let accel: Vec<f64> = new_vel
        .iter()
        .zip(&state.vel)
        .map(|(nv, ov)| (nv - ov) / dt)
        .collect();
    // Report the applied torque including the implicit damping component.
    for j in 0..dof {
        torques[j] -= model.joints[j].kd * new_vel[3 + j];
    }
    state.vel = new_vel;
    state.pose.root_x += dt * state.vel[0];
    state.pose.root_z += dt * state.vel[1];
    state.pose.root_pitch += dt * state.vel[2];
    for j in 0..dof {
        state.pose.q[j] += dt * state.vel[3 + j];
    }
    state.accel = accel;
    state.torques = torques;
    state.time += dt;
    state.steps += 1;

    let finite = state.vel.iter().all(|v| v.is_finite())
        && state.pose.q.iter().all(|v| v.is_finite())
        && state.pose.root_x.is_finite()
        && state.pose.root_z.is_finite()
        && state.pose.root_pitch.is_finite();
    if !finite {
        return Err(SimError::Diverged { step: state.steps });
    }
    Ok(())
}

/// In-place Cholesky factorization `A = L Lᵀ` of an SPD matrix (row-major,
/// lower triangle). Returns false when the matrix is not positive definite.
fn cholesky_factor(a: &mut [f64], n: usize) -> bool {
    for k in 0..n {
        let mut d = a[k * n + k];
        for p in 0..k {
            d -= a[k * n + p] * a[k * n + p];
        }
        if !(d > 0.0) || !d.is_finite() {
            return false;
        }
        let d = d.sqrt();
        a[k * n + k] = d;
        for r in (k + 1)..n {
            let mut s = a[r * n + k];
            for p in 0..k {
                s -= a[r * n + p] * a[k * n + p];
            }
            a[r * n + k] = s / d;
        }
    }
    true
}

/// Solve `L Lᵀ x = b` given a Cholesky factor.
fn cholesky_solve(l: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut x = b.to_vec();
    for r in 0..n {
        for p in 0..r {
            x[r] -= l[r * n + p] * x[p];
        }
        x[r] /= l[r * n + r];
    }
    for r in (0..n).rev() {
        for p in (r + 1)..n {
            x[r] -= l[p * n + r] * x[p];
        }
        x[r] /= l[r * n + r];
    }
    x
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// World-frame velocity of every foot point for the current state.
pub fn foot_velocities(model: &RobotModel, state: &SimState) -> Vec<[f64; 2]> {
    let fk = model.forward_kinematics(&state.pose);
    let n = model.gen_dof();
    let mut jac = vec![[0.0f64; 2]; n];
    model
        .feet
        .iter()
        .enumerate()
        .map(|(fi, foot)| {
            point_jacobian(model, &fk, foot.link, fk.foot_world[fi], &mut jac);
            let mut v = [0.0f64; 2];
            for (col, &qd) in jac.iter().zip(&state.vel) {
                v[0] += col[0] * qd;
                v[1] += col[1] * qd;
            }
            v
        })
        .collect()
}

/// Kinetic plus gravitational potential energy of the current state.
pub fn mechanical_energy(model: &RobotModel, state: &SimState, gravity: f64) -> f64 {
    let fk = model.forward_kinematics(&state.pose);
    let nl = model.links.len();
    let mut omega = vec![state.vel[2]; nl];
    for &l in model.link_order() {
        if let Some(j) = model.parent_joint_of(l) {
            omega[l] = omega[model.joints[j].parent] + state.vel[3 + j];
        }
    }
    let n = model.gen_dof();
    let mut jac = vec![[0.0f64; 2]; n];
    let mut energy = 0.0;
    for l in 0..nl {
        let link = &model.links[l];
        point_jacobian(model, &fk, l, fk.link_com[l], &mut jac);
        let mut v = [0.0f64; 2];
        for (col, &qd) in jac.iter().zip(&state.vel) {
            v[0] += col[0] * qd;
            v[1] += col[1] * qd;
        }
        energy += 0.5 * link.mass * (v[0] * v[0] + v[1] * v[1]);
        energy += 0.5 * link.inertia * omega[l] * omega[l];
        energy += link.mass * gravity * fk.link_com[l][1];
    }
    energy
}
