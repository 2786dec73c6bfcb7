//! Scene construction and physics stepping for the imagination drops and the
//! bear-placement check.
//!
//! The backend is a deterministic impulse solver over maximal coordinates:
//! sequential velocity impulses for contacts and revolute joints, implicit
//! joint spring/dampers, and a linearized position-projection pass that keeps
//! penetration and joint drift out of the velocity level (so, with zero
//! restitution, the solver does not pump energy into the bodies).

mod agent;
mod body;
mod collide;
mod shapes;
mod solver;

pub use agent::{AgentModel, BodyPart, Configuration, JointSpec, LinkSpec};
pub use body::{Body, BodyKind};
pub use collide::Contact;
pub use shapes::{Capsule, CollisionMesh, ShapeInstance, ShapeKind};

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{Isometry3, Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::geom::{Mesh, Obb, RigidTransform};
use collide::ContactAccumulator;
use solver::RevoluteJoint;

/// Marker for the static ground plane z = 0 in contact bookkeeping.
pub const GROUND: usize = usize::MAX;

/// Energy a position-projection pass may add in one step while pushing
/// penetrating bodies apart (documented solver slop for the energy check).
pub const ENERGY_SLOP_PER_STEP: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    /// Gravity magnitude along -z (m/s^2).
    pub gravity: f64,
    pub timestep: f64,
    /// Restitution is fixed at zero (inelastic contacts); kept as a field so
    /// configs can state it, validated on scene construction.
    pub restitution: f64,
    pub velocity_iterations: usize,
    pub position_iterations: usize,
    /// Settle once kinetic energy stays below this for `settle_window` secs.
    pub settle_ke_threshold: f64,
    pub settle_window: f64,
    pub max_sim_time: f64,
    /// Standing height (m) and total mass (kg) of the default agent.
    pub agent_height: f64,
    pub agent_mass: f64,
    /// Drop plane clearance above the chair bounding box top (m).
    pub drop_clearance: f64,
    /// Stiffness/damping multipliers for agent joints during imagination
    /// drops and for the near-fixed plush joints in the placement check.
    pub imagination_joint_scale: f64,
    pub plush_joint_scale: f64,
    /// Velocity damping per second (linear, angular).
    pub linear_damping: f64,
    pub angular_damping: f64,
    pub ground_friction: f64,
    /// Unused by the deterministic backend; threaded through so stochastic
    /// backends stay reproducible.
    pub seed: u64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            gravity: 9.81,
            timestep: 1.0 / 240.0,
            restitution: 0.0,
            velocity_iterations: 16,
            position_iterations: 8,
            settle_ke_threshold: 1e-4,
            settle_window: 0.25,
            max_sim_time: 10.0,
            agent_height: 0.9,
            agent_mass: 12.0,
            drop_clearance: 0.15,
            imagination_joint_scale: 1.0,
            plush_joint_scale: 15.0,
            linear_damping: 0.04,
            angular_damping: 0.10,
            ground_friction: 0.9,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SimError {
    /// A body left the sanity bounds or went non-finite: engine blow-up.
    Diverged,
    /// Scene parameters violate the backend contract.
    BadParams(&'static str),
    /// The scene has no agent to extract a configuration from.
    NoAgent,
}

impl core::fmt::Display for SimError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SimError::Diverged => write!(f, "simulation diverged"),
            SimError::BadParams(what) => write!(f, "invalid simulation parameters: {what}"),
            SimError::NoAgent => write!(f, "scene has no agent"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SimError {}

/// Handle to an agent instantiated in a scene.
#[derive(Debug, Clone)]
pub struct AgentHandle {
    pub link_bodies: Vec<usize>,
    pub joint_range: (usize, usize),
    model: AgentModel,
}

/// A self-contained simulation scene: ground plane, bodies, shapes, joints.
pub struct Scene {
    pub params: SimParams,
    bodies: Vec<Body>,
    shapes: Vec<ShapeInstance>,
    meshes: Vec<CollisionMesh>,
    joints: Vec<RevoluteJoint>,
    /// Bodies sharing the same non-zero group never collide (used to switch
    /// off agent self-collision).
    groups: Vec<u32>,
    /// For each shape: the agent link index it belongs to, if any.
    shape_link: Vec<Option<usize>>,
    agent: Option<AgentHandle>,
    chair_body: Option<usize>,
    time: f64,
    last_contacts: Vec<Contact>,
}

impl Scene {
    pub fn new(params: SimParams) -> Result<Self, SimError> {
        if params.timestep <= 0.0 {
            return Err(SimError::BadParams("timestep must be positive"));
        }
        if params.restitution != 0.0 {
            return Err(SimError::BadParams("restitution is fixed at zero"));
        }
        Ok(Self {
            params,
            bodies: Vec::new(),
            shapes: Vec::new(),
            meshes: Vec::new(),
            joints: Vec::new(),
            groups: Vec::new(),
            shape_link: Vec::new(),
            agent: None,
            chair_body: None,
            time: 0.0,
            last_contacts: Vec::new(),
        })
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn body_pose(&self, body: usize) -> RigidTransform {
        self.bodies[body].pose
    }

    pub fn body_velocity(&self, body: usize) -> (Vector3<f64>, Vector3<f64>) {
        (self.bodies[body].vel, self.bodies[body].omega)
    }

    pub fn chair_body(&self) -> Option<usize> {
        self.chair_body
    }

    pub fn agent(&self) -> Option<&AgentHandle> {
        self.agent.as_ref()
    }

    pub fn body_count(&self) -> usize {
        self.bodies.len()
    }

    pub fn shapes(&self) -> &[ShapeInstance] {
        &self.shapes
    }

    pub fn collision_mesh(&self, index: usize) -> &CollisionMesh {
        &self.meshes[index]
    }

    /// Add a mesh as a rigid body at the given pose. Dynamic bodies use the
    /// mesh's physical attributes.
    pub fn add_mesh_body(&mut self, mesh: &Mesh, pose: RigidTransform, kind: BodyKind) -> usize {
        let attrs = &mesh.attributes;
        let mut body = Body::new_dynamic(
            pose,
            attrs.mass.max(1e-6),
            attrs.center_of_mass.coords,
            attrs.inertia,
            attrs.friction,
        );
        body.kind = kind;
        if kind != BodyKind::Dynamic {
            body.inv_mass = 0.0;
            body.inv_inertia_local = nalgebra::Matrix3::zeros();
        }
        let id = self.bodies.len();
        self.bodies.push(body);
        self.groups.push(0);
        let mesh_idx = self.meshes.len();
        self.meshes.push(CollisionMesh::from_mesh(mesh));
        self.shapes.push(ShapeInstance {
            body: id,
            local: Isometry3::identity(),
            kind: ShapeKind::Mesh(mesh_idx),
        });
        self.shape_link.push(None);
        id
    }

    pub fn set_chair(&mut self, body: usize) {
        self.chair_body = Some(body);
    }

    /// Instantiate the agent at `base` with joint angles `angles`. Joint
    /// spring/damping are scaled by `joint_scale` (imagination vs plush).
    pub fn add_agent(
        &mut self,
        model: &AgentModel,
        base: &RigidTransform,
        angles: &[f64],
        joint_scale: f64,
    ) -> AgentHandle {
        let poses = model.forward_kinematics(base, angles);
        let group = self.next_group();
        let mut link_bodies = Vec::with_capacity(model.links.len());
        for (link, pose) in model.links.iter().zip(&poses) {
            let capsule = link.capsule();
            let inertia_shape = capsule.inertia(link.mass);
            let rot = link.shape_local.rotation.to_rotation_matrix().into_inner();
            let inertia = rot * inertia_shape * rot.transpose();
            let body = Body::new_dynamic(*pose, link.mass, link.com_local(), inertia, model.friction);
            let id = self.bodies.len();
            self.bodies.push(body);
            self.groups.push(group);
            self.shapes.push(ShapeInstance {
                body: id,
                local: link.shape_local,
                kind: ShapeKind::Capsule(capsule),
            });
            self.shape_link.push(Some(link_bodies.len()));
            link_bodies.push(id);
        }
        let joint_start = self.joints.len();
        for (j, spec) in model.joints.iter().enumerate() {
            self.joints.push(RevoluteJoint::new(
                link_bodies[spec.parent_link],
                link_bodies[spec.child_link],
                spec,
                angles[j],
                joint_scale,
            ));
        }
        let handle = AgentHandle {
            link_bodies,
            joint_range: (joint_start, self.joints.len()),
            model: model.clone(),
        };
        self.agent = Some(handle.clone());
        handle
    }

    fn next_group(&self) -> u32 {
        self.groups.iter().copied().max().unwrap_or(0) + 1
    }

    /// Make every agent link kinematic (held) or dynamic (released).
    pub fn set_agent_kinematic(&mut self, handle: &AgentHandle, kinematic: bool) {
        for (&body, link) in handle.link_bodies.iter().zip(&handle.model.links) {
            let b = &mut self.bodies[body];
            if kinematic {
                b.kind = BodyKind::Kinematic;
                b.inv_mass = 0.0;
                b.inv_inertia_local = nalgebra::Matrix3::zeros();
                b.vel = Vector3::zeros();
                b.omega = Vector3::zeros();
            } else {
                b.kind = BodyKind::Dynamic;
                b.inv_mass = 1.0 / link.mass;
                let capsule = link.capsule();
                let rot = link.shape_local.rotation.to_rotation_matrix().into_inner();
                let inertia = rot * capsule.inertia(link.mass) * rot.transpose();
                b.inertia_local = inertia;
                b.inv_inertia_local = inertia.try_inverse().unwrap_or_else(nalgebra::Matrix3::zeros);
                // Releases are quasi-static: the body starts from rest rather
                // than inheriting kinematic placement velocities.
                b.vel = Vector3::zeros();
                b.omega = Vector3::zeros();
            }
        }
    }

    /// Teleport a (kinematic) agent to a new base pose, setting velocities so
    /// that contacts see the motion over one timestep.
    pub fn place_agent(&mut self, handle: &AgentHandle, base: &RigidTransform, angles: &[f64]) {
        let poses = handle.model.forward_kinematics(base, angles);
        let dt = self.params.timestep;
        for (&body, pose) in handle.link_bodies.iter().zip(&poses) {
            let b = &mut self.bodies[body];
            let old_com = b.com_world();
            b.pose = *pose;
            let new_com = b.com_world();
            if matches!(b.kind, BodyKind::Kinematic) {
                b.vel = (new_com - old_com) / dt;
            }
        }
    }

    pub fn total_kinetic_energy(&self) -> f64 {
        self.bodies.iter().map(|b| b.kinetic_energy()).sum()
    }

    /// Kinetic plus gravitational plus joint-spring potential energy.
    pub fn total_mechanical_energy(&self) -> f64 {
        let mut e = self.total_kinetic_energy();
        for b in &self.bodies {
            if b.is_dynamic() {
                e += b.mass * self.params.gravity * b.com_world().z;
            }
        }
        for j in &self.joints {
            e += j.spring_potential(&self.bodies);
        }
        e
    }

    pub fn last_contacts(&self) -> &[Contact] {
        &self.last_contacts
    }

    /// Advance one fixed timestep.
    pub fn step(&mut self) {
        let dt = self.params.timestep;
        let contacts = self.collect_contacts();

        // External forces and velocity damping.
        let lin_k = 1.0 / (1.0 + dt * self.params.linear_damping);
        let ang_k = 1.0 / (1.0 + dt * self.params.angular_damping);
        for b in &mut self.bodies {
            if b.is_dynamic() {
                b.vel.z -= self.params.gravity * dt;
                b.vel *= lin_k;
                b.omega *= ang_k;
            }
        }

        // Joint spring/dampers are soft: solved once, implicitly.
        for j in &mut self.joints {
            j.refresh(&self.bodies);
            j.apply_spring_damper(&mut self.bodies, dt);
        }

        let mut contact_solver = solver::ContactSolver::prepare(&self.bodies, &contacts, self.params.ground_friction);
        for _ in 0..self.params.velocity_iterations {
            for j in &mut self.joints {
                j.solve_velocity(&mut self.bodies);
            }
            contact_solver.solve_velocity(&mut self.bodies);
        }

        for b in &mut self.bodies {
            b.integrate(dt);
        }

        for _ in 0..self.params.position_iterations {
            for j in &mut self.joints {
                j.solve_position(&mut self.bodies);
            }
            contact_solver.solve_position(&mut self.bodies);
        }

        self.time += dt;
        self.last_contacts = contacts;
    }

    fn collect_contacts(&self) -> Vec<Contact> {
        let mut acc = ContactAccumulator::new(0.008);
        let margin = 1e-3;

        for (si, shape) in self.shapes.iter().enumerate() {
            let body_a = shape.body;
            let pose_a = self.bodies[body_a].pose * shape.local;
            match &shape.kind {
                ShapeKind::Capsule(c) => {
                    // Against the ground plane.
                    if self.bodies[body_a].is_dynamic() || matches!(self.bodies[body_a].kind, BodyKind::Kinematic) {
                        for sign in [-1.0, 1.0] {
                            let end = pose_a * Point3::new(0.0, 0.0, sign * c.half_len);
                            let sep = end.z - c.radius;
                            if sep < margin {
                                acc.push(Contact {
                                    body_a,
                                    body_b: GROUND,
                                    point: Point3::new(end.x, end.y, end.z - c.radius),
                                    normal: Vector3::z(),
                                    depth: -sep,
                                    shape_a: si,
                                });
                            }
                        }
                    }
                    // Against every mesh shape.
                    for (sj, other) in self.shapes.iter().enumerate() {
                        let ShapeKind::Mesh(mi) = other.kind else { continue };
                        if other.body == body_a || self.same_group(body_a, other.body) {
                            continue;
                        }
                        if !self.bodies[body_a].is_dynamic()
                            && !self.bodies[other.body].is_dynamic()
                            && !matches!(self.bodies[body_a].kind, BodyKind::Kinematic)
                        {
                            continue;
                        }
                        let _ = sj;
                        self.capsule_vs_mesh(&mut acc, si, body_a, &pose_a, c, other.body, mi, margin);
                    }
                }
                ShapeKind::Mesh(mi) => {
                    // Mesh against the ground: vertex contacts.
                    if !self.bodies[body_a].is_dynamic() {
                        continue;
                    }
                    let mesh = &self.meshes[*mi];
                    for v in &mesh.vertices {
                        let w = pose_a * v;
                        if w.z < margin {
                            acc.push(Contact {
                                body_a,
                                body_b: GROUND,
                                point: w,
                                normal: Vector3::z(),
                                depth: -w.z,
                                shape_a: si,
                            });
                        }
                    }
                }
            }
        }
        acc.contacts
    }

    #[allow(clippy::too_many_arguments)]
    fn capsule_vs_mesh(
        &self,
        acc: &mut ContactAccumulator,
        shape_a: usize,
        body_a: usize,
        pose_a: &Isometry3<f64>,
        capsule: &Capsule,
        body_b: usize,
        mesh_idx: usize,
        margin: f64,
    ) {
        let mesh_pose = self.bodies[body_b].pose; // mesh shapes sit at identity local
        let to_local = mesh_pose.inverse();
        let p = to_local * (pose_a * Point3::new(0.0, 0.0, -capsule.half_len));
        let q = to_local * (pose_a * Point3::new(0.0, 0.0, capsule.half_len));
        let reach = capsule.radius + margin;
        let (mut lo, mut hi) = (p, p);
        for k in 0..3 {
            lo[k] = lo[k].min(q[k]) - reach;
            hi[k] = hi[k].max(q[k]) + reach;
        }
        let mesh = &self.meshes[mesh_idx];
        let mid = nalgebra::center(&p, &q);
        for (t, (bb_lo, bb_hi)) in mesh.tri_aabbs.iter().enumerate() {
            if bb_lo.x > hi.x || bb_hi.x < lo.x
                || bb_lo.y > hi.y || bb_hi.y < lo.y
                || bb_lo.z > hi.z || bb_hi.z < lo.z
            {
                continue;
            }
            let [a, b, c] = mesh.triangle(t);
            let (on_seg, on_tri) = collide::closest_points_segment_triangle(&p, &q, &a, &b, &c);
            let delta = on_seg - on_tri;
            let dist = delta.norm();
            if dist >= reach {
                continue;
            }
            let (normal_local, depth) = if dist > 1e-9 {
                (delta / dist, capsule.radius - dist)
            } else {
                // Segment touches the triangle plane: fall back to the face
                // normal pointing towards the capsule midline.
                let mut n = (b - a).cross(&(c - a));
                if n.norm_squared() < 1e-18 {
                    continue;
                }
                n.normalize_mut();
                if n.dot(&(mid - on_tri)) < 0.0 {
                    n = -n;
                }
                (n, capsule.radius)
            };
            acc.push(Contact {
                body_a,
                body_b,
                point: mesh_pose * on_tri,
                normal: mesh_pose.rotation * normal_local,
                depth,
                shape_a,
            });
        }
    }

    fn same_group(&self, a: usize, b: usize) -> bool {
        let ga = self.groups[a];
        ga != 0 && ga == self.groups[b]
    }

    fn check_finite(&self) -> Result<(), SimError> {
        for b in &self.bodies {
            let t = b.pose.translation.vector;
            if !t.x.is_finite() || !t.y.is_finite() || !t.z.is_finite() || t.norm() > 50.0 {
                return Err(SimError::Diverged);
            }
            if !b.vel.x.is_finite() || b.vel.norm() > 1e3 {
                return Err(SimError::Diverged);
            }
        }
        Ok(())
    }

    /// Joint angle (twist about the hinge axis) of agent joint `j`.
    pub fn joint_angle(&self, handle: &AgentHandle, j: usize) -> f64 {
        self.joints[handle.joint_range.0 + j].angle(&self.bodies)
    }

    /// Per-link contact-point counts from the most recent step.
    pub fn agent_contacts(&self, handle: &AgentHandle) -> Vec<u32> {
        let mut counts = vec![0u32; handle.link_bodies.len()];
        for c in &self.last_contacts {
            if let Some(link) = self.shape_link.get(c.shape_a).copied().flatten() {
                if handle.link_bodies.get(link).copied() == Some(c.body_a) {
                    counts[link] += 1;
                }
            }
        }
        counts
    }

    /// Extract the agent's configuration from the current scene state.
    pub fn agent_configuration(&self, handle: &AgentHandle) -> Configuration {
        let joint_angles = (0..handle.model.joints.len())
            .map(|j| self.joint_angle(handle, j))
            .collect();
        let base_pose = self.bodies[handle.link_bodies[0]].pose;
        let link_rotations = handle
            .link_bodies
            .iter()
            .map(|&b| self.bodies[b].pose.rotation)
            .collect();
        Configuration {
            joint_angles,
            base_pose,
            link_rotations,
            contacts: self.agent_contacts(handle),
        }
    }
}

/// Scene for one imagination drop: the aligned chair under a free-falling
/// agent in its pre-sitting pose, facing +x, base on the drop plane
/// `drop_clearance` above the chair bounding-box top.
pub fn build_drop_scene(
    chair: &Mesh,
    chair_obb: &Obb,
    chair_yaw: f64,
    agent: &AgentModel,
    drop_xy: (f64, f64),
    params: &SimParams,
) -> Result<Scene, SimError> {
    let mut scene = Scene::new(params.clone())?;

    // Chair spun about the world z-axis (= OBB centre axis after alignment),
    // feet snapped onto the ground plane.
    let spin = crate::geom::yaw_rotation(chair_yaw);
    let lift = -chair.min_z();
    let pose = Isometry3::from_parts(nalgebra::Translation3::new(0.0, 0.0, lift), spin);
    let chair_body = scene.add_mesh_body(chair, pose, BodyKind::Dynamic);
    scene.set_chair(chair_body);

    let base = Isometry3::from_parts(
        nalgebra::Translation3::new(drop_xy.0, drop_xy.1, chair_obb.top_z() + lift + params.drop_clearance),
        nalgebra::UnitQuaternion::identity(),
    );
    scene.add_agent(agent, &base, &agent.pre_sitting, params.imagination_joint_scale);
    Ok(scene)
}

/// Step until the scene settles (sustained low kinetic energy) or the time
/// budget runs out, then extract the agent configuration.
pub fn settle(scene: &mut Scene) -> Result<Configuration, SimError> {
    run_to_rest(scene)?;
    let handle = scene.agent.clone().ok_or(SimError::NoAgent)?;
    Ok(scene.agent_configuration(&handle))
}

/// The settle loop without configuration extraction (usable for chair-only
/// scenes).
pub fn run_to_rest(scene: &mut Scene) -> Result<(), SimError> {
    let dt = scene.params.timestep;
    let window = (scene.params.settle_window / dt).ceil() as usize;
    let max_steps = (scene.params.max_sim_time / dt).ceil() as usize;
    let mut calm = 0usize;
    for step in 0..max_steps {
        scene.step();
        if step % 16 == 0 {
            scene.check_finite()?;
        }
        if scene.total_kinetic_energy() < scene.params.settle_ke_threshold {
            calm += 1;
            if calm >= window {
                break;
            }
        } else {
            calm = 0;
        }
    }
    scene.check_finite()
}
