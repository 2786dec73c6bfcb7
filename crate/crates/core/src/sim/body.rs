//! Rigid bodies in maximal coordinates.

use nalgebra::{Isometry3, Matrix3, Point3, UnitQuaternion, Vector3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BodyKind {
    Dynamic,
    /// Infinite mass, velocity prescribed by the caller.
    Kinematic,
    Static,
}

/// Rigid body state. `pose` is the body's reference frame; the center of
/// mass sits at `com_local` within it. Velocities are of the COM.
#[derive(Debug, Clone)]
pub struct Body {
    pub pose: Isometry3<f64>,
    pub com_local: Vector3<f64>,
    pub vel: Vector3<f64>,
    pub omega: Vector3<f64>,
    pub kind: BodyKind,
    pub mass: f64,
    pub inv_mass: f64,
    /// Inverse inertia about the COM in reference-frame axes.
    pub inv_inertia_local: Matrix3<f64>,
    pub inertia_local: Matrix3<f64>,
    pub friction: f64,
}

impl Body {
    pub fn new_dynamic(
        pose: Isometry3<f64>,
        mass: f64,
        com_local: Vector3<f64>,
        inertia_local: Matrix3<f64>,
        friction: f64,
    ) -> Self {
        let inv_inertia_local = inertia_local.try_inverse().unwrap_or_else(Matrix3::zeros);
        Self {
            pose,
            com_local,
            vel: Vector3::zeros(),
            omega: Vector3::zeros(),
            kind: BodyKind::Dynamic,
            mass,
            inv_mass: 1.0 / mass,
            inv_inertia_local,
            inertia_local,
            friction,
        }
    }

    pub fn is_dynamic(&self) -> bool {
        matches!(self.kind, BodyKind::Dynamic)
    }

    pub fn com_world(&self) -> Point3<f64> {
        self.pose * Point3::from(self.com_local)
    }

    /// Inverse inertia in world axes (zero for non-dynamic bodies).
    pub fn inv_inertia_world(&self) -> Matrix3<f64> {
        if !self.is_dynamic() {
            return Matrix3::zeros();
        }
        let r = self.pose.rotation.to_rotation_matrix().into_inner();
        r * self.inv_inertia_local * r.transpose()
    }

    pub fn effective_inv_mass(&self) -> f64 {
        if self.is_dynamic() {
            self.inv_mass
        } else {
            0.0
        }
    }

    /// Velocity of a world-space point rigidly attached to the body.
    pub fn velocity_at(&self, p: &Point3<f64>) -> Vector3<f64> {
        self.vel + self.omega.cross(&(p - self.com_world()))
    }

    pub fn apply_impulse(&mut self, p: &Point3<f64>, j: &Vector3<f64>) {
        if !self.is_dynamic() {
            return;
        }
        self.vel += j * self.inv_mass;
        let r = p - self.com_world();
        self.omega += self.inv_inertia_world() * r.cross(j);
    }

    pub fn apply_angular_impulse(&mut self, j: &Vector3<f64>) {
        if !self.is_dynamic() {
            return;
        }
        self.omega += self.inv_inertia_world() * j;
    }

    /// Semi-implicit Euler position update; the COM translates with `vel`
    /// and the body spins about it.
    pub fn integrate(&mut self, dt: f64) {
        if matches!(self.kind, BodyKind::Static) {
            return;
        }
        let com = self.com_world() + self.vel * dt;
        let dq = quat_from_scaled_axis(self.omega * dt);
        let rot = UnitQuaternion::new_normalize((dq * self.pose.rotation).into_inner());
        self.pose.rotation = rot;
        self.pose.translation.vector = com.coords - rot * self.com_local;
    }

    /// Displace the body during position projection: translate the COM and
    /// rotate about it by the small rotation vector `dtheta`.
    pub fn displace(&mut self, dx: &Vector3<f64>, dtheta: &Vector3<f64>) {
        if !self.is_dynamic() {
            return;
        }
        let com = self.com_world() + dx;
        let dq = quat_from_scaled_axis(*dtheta);
        let rot = UnitQuaternion::new_normalize((dq * self.pose.rotation).into_inner());
        self.pose.rotation = rot;
        self.pose.translation.vector = com.coords - rot * self.com_local;
    }

    pub fn kinetic_energy(&self) -> f64 {
        if !self.is_dynamic() {
            return 0.0;
        }
        let r = self.pose.rotation.to_rotation_matrix().into_inner();
        let inertia_world = r * self.inertia_local * r.transpose();
        0.5 * self.mass * self.vel.norm_squared() + 0.5 * self.omega.dot(&(inertia_world * self.omega))
    }
}

pub fn quat_from_scaled_axis(v: Vector3<f64>) -> UnitQuaternion<f64> {
    let angle = v.norm();
    if angle < 1e-12 {
        UnitQuaternion::identity()
    } else {
        UnitQuaternion::from_axis_angle(&nalgebra::Unit::new_normalize(v), angle)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn impulse_at_com_is_pure_translation() {
        let mut b = Body::new_dynamic(
            Isometry3::identity(),
            2.0,
            Vector3::zeros(),
            Matrix3::identity() * 0.1,
            0.5,
        );
        b.apply_impulse(&Point3::origin(), &Vector3::new(2.0, 0.0, 0.0));
        assert_relative_eq!(b.vel.x, 1.0);
        assert_relative_eq!(b.omega.norm(), 0.0);
    }

    #[test]
    fn offset_impulse_spins_the_body() {
        let mut b = Body::new_dynamic(
            Isometry3::identity(),
            1.0,
            Vector3::zeros(),
            Matrix3::identity() * 0.5,
            0.5,
        );
        b.apply_impulse(&Point3::new(0.0, 1.0, 0.0), &Vector3::new(1.0, 0.0, 0.0));
        // r x j = (0,1,0) x (1,0,0) = (0,0,-1); omega = invI * that.
        assert_relative_eq!(b.omega.z, -2.0, epsilon = 1e-12);
    }

    #[test]
    fn integration_respects_com_offset() {
        let mut b = Body::new_dynamic(
            Isometry3::identity(),
            1.0,
            Vector3::new(0.0, 0.0, 1.0),
            Matrix3::identity() * 0.5,
            0.5,
        );
        // Spin about z through the COM: the reference origin orbits.
        b.omega = Vector3::new(0.0, 0.0, core::f64::consts::FRAC_PI_2);
        b.integrate(1.0);
        assert_relative_eq!(b.com_world().x, 0.0, epsilon = 1e-12);
        assert_relative_eq!(b.com_world().z, 1.0, epsilon = 1e-12);
    }
}
