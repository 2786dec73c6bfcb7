//! Sequential-impulse constraint solver: contacts and revolute joints.
//!
//! Velocity constraints carry no Baumgarte bias; positional drift is removed
//! by a separate linearized projection pass so the velocity level stays
//! energy-clean with zero restitution.

use alloc::vec::Vec;
use nalgebra::{Matrix2, Matrix3, Point3, UnitVector3, Vector2, Vector3};

use super::body::Body;
use super::collide::Contact;
use super::{agent::JointSpec, GROUND};

const POSITION_BETA: f64 = 0.2;
const POSITION_SLOP: f64 = 0.002;
const MAX_CORRECTION: f64 = 0.005;
const LIMIT_BETA: f64 = 0.2;
const MAX_LIMIT_BIAS: f64 = 1.0;

fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Effective-mass matrix of a point constraint between two bodies.
fn point_k(
    im_a: f64,
    inv_ia: &Matrix3<f64>,
    ra: &Vector3<f64>,
    im_b: f64,
    inv_ib: &Matrix3<f64>,
    rb: &Vector3<f64>,
) -> Matrix3<f64> {
    let mut k = Matrix3::identity() * (im_a + im_b);
    let sa = skew(ra);
    let sb = skew(rb);
    k -= sa * inv_ia * sa;
    k -= sb * inv_ib * sb;
    k
}

/// Revolute joint between `parent` and `child` with the hinge axis expressed
/// identically in both local frames and the child frame rooted at the joint.
pub struct RevoluteJoint {
    pub parent: usize,
    pub child: usize,
    anchor_parent: Point3<f64>,
    axis_local: UnitVector3<f64>,
    limits: (f64, f64),
    stiffness: f64,
    damping: f64,
    target: f64,
    // Per-step cached geometry.
    angle: f64,
    axis_world: Vector3<f64>,
    basis_u: Vector3<f64>,
    basis_v: Vector3<f64>,
    limit_impulse_lo: f64,
    limit_impulse_hi: f64,
}

impl RevoluteJoint {
    pub fn new(parent: usize, child: usize, spec: &JointSpec, target: f64, joint_scale: f64) -> Self {
        Self {
            parent,
            child,
            anchor_parent: spec.anchor_in_parent,
            axis_local: spec.axis,
            limits: spec.limits,
            stiffness: spec.stiffness * joint_scale,
            damping: spec.damping * joint_scale,
            target,
            angle: target,
            axis_world: Vector3::y(),
            basis_u: Vector3::x(),
            basis_v: Vector3::z(),
            limit_impulse_lo: 0.0,
            limit_impulse_hi: 0.0,
        }
    }

    /// Current hinge angle: twist of the child-relative rotation about the
    /// joint axis.
    pub fn angle(&self, bodies: &[Body]) -> f64 {
        let qp = bodies[self.parent].pose.rotation;
        let qc = bodies[self.child].pose.rotation;
        let rel = qp.inverse() * qc;
        let v = rel.imag();
        crate::geom::wrap_angle(2.0 * v.dot(&self.axis_local).atan2(rel.w))
    }

    /// Refresh cached per-step geometry; call once after integration forces.
    pub fn refresh(&mut self, bodies: &[Body]) {
        self.angle = self.angle(bodies);
        let rp = bodies[self.parent].pose.rotation;
        self.axis_world = rp * self.axis_local.into_inner();
        // Any orthonormal complement works; derive deterministically.
        let helper = if self.axis_world.x.abs() < 0.9 { Vector3::x() } else { Vector3::z() };
        self.basis_u = self.axis_world.cross(&helper).normalize();
        self.basis_v = self.axis_world.cross(&self.basis_u);
        self.limit_impulse_lo = 0.0;
        self.limit_impulse_hi = 0.0;
    }

    fn axis_inv_mass(&self, bodies: &[Body]) -> f64 {
        let m = bodies[self.parent].inv_inertia_world() + bodies[self.child].inv_inertia_world();
        self.axis_world.dot(&(m * self.axis_world))
    }

    pub fn spring_potential(&self, bodies: &[Body]) -> f64 {
        if self.stiffness == 0.0 {
            return 0.0;
        }
        let d = self.angle(bodies) - self.target;
        0.5 * self.stiffness * d * d
    }

    /// Implicitly integrated spring/damper about the hinge axis (applied once
    /// per step, unconditionally stable for stiff plush joints).
    pub fn apply_spring_damper(&mut self, bodies: &mut [Body], dt: f64) {
        if self.stiffness == 0.0 && self.damping == 0.0 {
            return;
        }
        let w_rel = self.axis_world.dot(&(bodies[self.child].omega - bodies[self.parent].omega));
        let c = self.angle - self.target;
        let m_inv = self.axis_inv_mass(bodies);
        if m_inv <= 1e-12 {
            return;
        }
        // Implicit step: λ = -dt (k C + (dt k + d) ω) / (1 + dt (dt k + d) m_inv).
        let soft = dt * self.stiffness + self.damping;
        let denom = 1.0 + dt * soft * m_inv;
        let lambda = -(dt * (self.stiffness * c + soft * w_rel)) / denom;
        let imp = self.axis_world * lambda;
        bodies[self.child].apply_angular_impulse(&imp);
        bodies[self.parent].apply_angular_impulse(&(-imp));
    }

    /// One pass of the hard velocity constraints: hinge point, axis
    /// alignment, and joint limits.
    pub fn solve_velocity(&mut self, bodies: &mut [Body]) {
        // Limits.
        let m_inv = self.axis_inv_mass(bodies);
        if m_inv > 1e-12 {
            let m_eff = 1.0 / m_inv;
            let (lo, hi) = self.limits;
            if self.angle < lo {
                let w_rel = self.axis_world.dot(&(bodies[self.child].omega - bodies[self.parent].omega));
                let bias = (-(self.angle - lo) * LIMIT_BETA * 240.0).min(MAX_LIMIT_BIAS);
                let lambda = (bias - w_rel) * m_eff;
                let new = (self.limit_impulse_lo + lambda).max(0.0);
                let delta = new - self.limit_impulse_lo;
                self.limit_impulse_lo = new;
                let imp = self.axis_world * delta;
                bodies[self.child].apply_angular_impulse(&imp);
                bodies[self.parent].apply_angular_impulse(&(-imp));
            } else if self.angle > hi {
                let w_rel = self.axis_world.dot(&(bodies[self.child].omega - bodies[self.parent].omega));
                let bias = ((self.angle - hi) * LIMIT_BETA * 240.0).min(MAX_LIMIT_BIAS);
                let lambda = (-bias - w_rel) * m_eff;
                let new = (self.limit_impulse_hi + lambda).min(0.0);
                let delta = new - self.limit_impulse_hi;
                self.limit_impulse_hi = new;
                let imp = self.axis_world * delta;
                bodies[self.child].apply_angular_impulse(&imp);
                bodies[self.parent].apply_angular_impulse(&(-imp));
            }
        }

        // Axis alignment: relative angular velocity off the hinge axis.
        {
            let m = bodies[self.parent].inv_inertia_world() + bodies[self.child].inv_inertia_world();
            let k = Matrix2::new(
                self.basis_u.dot(&(m * self.basis_u)),
                self.basis_u.dot(&(m * self.basis_v)),
                self.basis_v.dot(&(m * self.basis_u)),
                self.basis_v.dot(&(m * self.basis_v)),
            );
            if let Some(k_inv) = k.try_inverse() {
                let w_rel = bodies[self.child].omega - bodies[self.parent].omega;
                let cdot = Vector2::new(self.basis_u.dot(&w_rel), self.basis_v.dot(&w_rel));
                let lambda = -(k_inv * cdot);
                let imp = self.basis_u * lambda.x + self.basis_v * lambda.y;
                bodies[self.child].apply_angular_impulse(&imp);
                bodies[self.parent].apply_angular_impulse(&(-imp));
            }
        }

        // Hinge point.
        {
            let pa = bodies[self.parent].pose * self.anchor_parent;
            let pc = Point3::from(bodies[self.child].pose.translation.vector);
            let anchor = nalgebra::center(&pa, &pc);
            let ra = anchor - bodies[self.parent].com_world();
            let rc = anchor - bodies[self.child].com_world();
            let k = point_k(
                bodies[self.parent].effective_inv_mass(),
                &bodies[self.parent].inv_inertia_world(),
                &ra,
                bodies[self.child].effective_inv_mass(),
                &bodies[self.child].inv_inertia_world(),
                &rc,
            );
            if let Some(k_inv) = k.try_inverse() {
                let rel = bodies[self.child].velocity_at(&anchor) - bodies[self.parent].velocity_at(&anchor);
                let j = k_inv * (-rel);
                bodies[self.child].apply_impulse(&anchor, &j);
                bodies[self.parent].apply_impulse(&anchor, &(-j));
            }
        }
    }

    /// One pass of linearized position projection: pulls the child origin
    /// back onto the parent anchor and re-aligns the hinge axes.
    pub fn solve_position(&mut self, bodies: &mut [Body]) {
        // Anchor coincidence.
        let pa = bodies[self.parent].pose * self.anchor_parent;
        let pc = Point3::from(bodies[self.child].pose.translation.vector);
        let err = pc - pa;
        if err.norm() > 1e-9 {
            let ra = pa - bodies[self.parent].com_world();
            let rc = pc - bodies[self.child].com_world();
            let k = point_k(
                bodies[self.parent].effective_inv_mass(),
                &bodies[self.parent].inv_inertia_world(),
                &ra,
                bodies[self.child].effective_inv_mass(),
                &bodies[self.child].inv_inertia_world(),
                &rc,
            );
            if let Some(k_inv) = k.try_inverse() {
                let j = k_inv * (-err * 0.8);
                let im_c = bodies[self.child].effective_inv_mass();
                let ii_c = bodies[self.child].inv_inertia_world();
                bodies[self.child].displace(&(j * im_c), &(ii_c * rc.cross(&j)));
                let im_p = bodies[self.parent].effective_inv_mass();
                let ii_p = bodies[self.parent].inv_inertia_world();
                bodies[self.parent].displace(&(-j * im_p), &(ii_p * ra.cross(&(-j))));
            }
        }

        // Axis alignment.
        let a_w = bodies[self.parent].pose.rotation * self.axis_local.into_inner();
        let b_w = bodies[self.child].pose.rotation * self.axis_local.into_inner();
        let e = a_w.cross(&b_w);
        if e.norm() > 1e-9 {
            let m = bodies[self.parent].inv_inertia_world() + bodies[self.child].inv_inertia_world();
            let helper = if a_w.x.abs() < 0.9 { Vector3::x() } else { Vector3::z() };
            let u = a_w.cross(&helper).normalize();
            let v = a_w.cross(&u);
            let k = Matrix2::new(
                u.dot(&(m * u)),
                u.dot(&(m * v)),
                v.dot(&(m * u)),
                v.dot(&(m * v)),
            );
            if let Some(k_inv) = k.try_inverse() {
                let c = Vector2::new(u.dot(&e), v.dot(&e)) * 0.8;
                let lambda = -(k_inv * c);
                let imp = u * lambda.x + v * lambda.y;
                let ii_c = bodies[self.child].inv_inertia_world();
                bodies[self.child].displace(&Vector3::zeros(), &(ii_c * imp));
                let ii_p = bodies[self.parent].inv_inertia_world();
                bodies[self.parent].displace(&Vector3::zeros(), &(ii_p * (-imp)));
            }
        }
    }
}

struct ContactData {
    body_a: usize,
    body_b: usize,
    /// Contacts against kinematic bodies resolve at the velocity level only,
    /// where friction applies; frictionless position projection would let a
    /// held body grind dynamic bodies across the floor.
    velocity_only: bool,
    point: Point3<f64>,
    normal: Vector3<f64>,
    tangent1: Vector3<f64>,
    tangent2: Vector3<f64>,
    depth: f64,
    /// Contact point in each body's local frame (position projection).
    local_a: Point3<f64>,
    local_b: Point3<f64>,
    mass_normal: f64,
    mass_t1: f64,
    mass_t2: f64,
    friction: f64,
    acc_normal: f64,
    acc_t1: f64,
    acc_t2: f64,
}

pub struct ContactSolver {
    contacts: Vec<ContactData>,
}

impl ContactSolver {
    pub fn prepare(bodies: &[Body], contacts: &[Contact], ground_friction: f64) -> Self {
        let data = contacts
            .iter()
            .map(|c| {
                let n = c.normal;
                let helper = if n.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
                let t1 = n.cross(&helper).normalize();
                let t2 = n.cross(&t1);

                let a = &bodies[c.body_a];
                let a_kinematic = matches!(a.kind, super::BodyKind::Kinematic);
                let b_kinematic = c.body_b != GROUND
                    && matches!(bodies[c.body_b].kind, super::BodyKind::Kinematic);
                let ra = c.point - a.com_world();
                let ia = a.inv_inertia_world();
                let (im_b, ib, rb, mu_b, local_b) = if c.body_b == GROUND {
                    (0.0, Matrix3::zeros(), Vector3::zeros(), ground_friction, c.point)
                } else {
                    let b = &bodies[c.body_b];
                    (
                        b.effective_inv_mass(),
                        b.inv_inertia_world(),
                        c.point - b.com_world(),
                        b.friction,
                        b.pose.inverse_transform_point(&c.point),
                    )
                };
                let eff = |dir: &Vector3<f64>| -> f64 {
                    let term_a = (ia * ra.cross(dir)).cross(&ra);
                    let term_b = (ib * rb.cross(dir)).cross(&rb);
                    let denom = a.effective_inv_mass() + im_b + dir.dot(&(term_a + term_b));
                    if denom > 1e-12 {
                        1.0 / denom
                    } else {
                        0.0
                    }
                };
                ContactData {
                    body_a: c.body_a,
                    body_b: c.body_b,
                    velocity_only: a_kinematic || b_kinematic,
                    point: c.point,
                    normal: n,
                    tangent1: t1,
                    tangent2: t2,
                    depth: c.depth,
                    local_a: a.pose.inverse_transform_point(&c.point),
                    local_b,
                    mass_normal: eff(&n),
                    mass_t1: eff(&t1),
                    mass_t2: eff(&t2),
                    friction: a.friction * mu_b,
                    acc_normal: 0.0,
                    acc_t1: 0.0,
                    acc_t2: 0.0,
                }
            })
            .collect();
        Self { contacts: data }
    }

    fn relative_velocity(bodies: &[Body], c: &ContactData) -> Vector3<f64> {
        let va = bodies[c.body_a].velocity_at(&c.point);
        let vb = if c.body_b == GROUND {
            Vector3::zeros()
        } else {
            bodies[c.body_b].velocity_at(&c.point)
        };
        va - vb
    }

    fn apply(bodies: &mut [Body], c: &ContactData, j: &Vector3<f64>) {
        bodies[c.body_a].apply_impulse(&c.point, j);
        if c.body_b != GROUND {
            bodies[c.body_b].apply_impulse(&c.point, &(-*j));
        }
    }

    pub fn solve_velocity(&mut self, bodies: &mut [Body]) {
        for c in &mut self.contacts {
            // Normal: drive approach velocity to zero (restitution 0).
            let vn = Self::relative_velocity(bodies, c).dot(&c.normal);
            let lambda = -vn * c.mass_normal;
            let new = (c.acc_normal + lambda).max(0.0);
            let delta = new - c.acc_normal;
            c.acc_normal = new;
            Self::apply(bodies, c, &(c.normal * delta));

            // Coulomb friction on both tangents.
            let max_f = c.friction * c.acc_normal;
            let rel = Self::relative_velocity(bodies, c);
            let vt1 = rel.dot(&c.tangent1);
            let l1 = (c.acc_t1 - vt1 * c.mass_t1).clamp(-max_f, max_f);
            let d1 = l1 - c.acc_t1;
            c.acc_t1 = l1;
            Self::apply(bodies, c, &(c.tangent1 * d1));

            let rel = Self::relative_velocity(bodies, c);
            let vt2 = rel.dot(&c.tangent2);
            let l2 = (c.acc_t2 - vt2 * c.mass_t2).clamp(-max_f, max_f);
            let d2 = l2 - c.acc_t2;
            c.acc_t2 = l2;
            Self::apply(bodies, c, &(c.tangent2 * d2));
        }
    }

    /// Linearized penetration projection using the anchors captured at
    /// contact generation.
    pub fn solve_position(&mut self, bodies: &mut [Body]) {
        for c in &self.contacts {
            if c.velocity_only {
                continue;
            }
            let pa = bodies[c.body_a].pose * c.local_a;
            let pb = if c.body_b == GROUND {
                c.local_b
            } else {
                bodies[c.body_b].pose * c.local_b
            };
            // Both anchors started at the same world point; their drift along
            // the normal measures how much penetration has been recovered.
            let pen = c.depth - c.normal.dot(&(pa - pb));
            if pen <= POSITION_SLOP {
                continue;
            }
            let corr = (POSITION_BETA * (pen - POSITION_SLOP)).min(MAX_CORRECTION);
            let j = c.normal * (corr * c.mass_normal);
            let ra = pa - bodies[c.body_a].com_world();
            let im_a = bodies[c.body_a].effective_inv_mass();
            let ii_a = bodies[c.body_a].inv_inertia_world();
            bodies[c.body_a].displace(&(j * im_a), &(ii_a * ra.cross(&j)));
            if c.body_b != GROUND {
                let rb = pb - bodies[c.body_b].com_world();
                let im_b = bodies[c.body_b].effective_inv_mass();
                let ii_b = bodies[c.body_b].inv_inertia_world();
                bodies[c.body_b].displace(&(-j * im_b), &(ii_b * rb.cross(&(-j))));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn skew_matrix_encodes_cross_product() {
        let a = Vector3::new(1.0, 2.0, 3.0);
        let b = Vector3::new(-0.4, 0.5, 0.9);
        assert!((skew(&a) * b - a.cross(&b)).norm() < 1e-15);
    }
}
