//! Mesh ingestion, rigid transform algebra and z-aligned minimum-volume
//! bounding boxes.

mod mesh;
mod obb;

pub use mesh::{Mesh, MeshError, PhysicalAttributes};
pub use obb::{compute_obb, obb_alignment_transform, Obb};

use nalgebra::{Isometry3, Point3, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

/// World-frame rigid transform acting as `g ∘ p = R p + t`.
pub type RigidTransform = Isometry3<f64>;

/// Rotation about the world z-axis by `yaw` radians (counterclockwise seen
/// from above).
pub fn yaw_rotation(yaw: f64) -> UnitQuaternion<f64> {
    UnitQuaternion::from_axis_angle(&Vector3::z_axis(), yaw)
}

/// Pure-yaw rigid transform with translation `t`.
pub fn yaw_translation(yaw: f64, t: Vector3<f64>) -> RigidTransform {
    Isometry3::from_parts(Translation3::from(t), yaw_rotation(yaw))
}

/// Yaw angle of a transform's rotation, extracted by projecting the rotated
/// x-axis onto the xy-plane.
pub fn yaw_of(g: &RigidTransform) -> f64 {
    let x = g.rotation * Vector3::x();
    x.y.atan2(x.x)
}

pub fn transform_apply(g: &RigidTransform, p: &Point3<f64>) -> Point3<f64> {
    g.transform_point(p)
}

pub fn inverse_apply(g: &RigidTransform, p: &Point3<f64>) -> Point3<f64> {
    g.inverse_transform_point(p)
}

/// Compose two transforms, renormalizing the rotation so long chains of
/// compositions cannot drift away from SO(3).
pub fn compose(a: &RigidTransform, b: &RigidTransform) -> RigidTransform {
    let mut g = a * b;
    g.rotation = UnitQuaternion::new_normalize(g.rotation.into_inner());
    g
}

/// Wrap an angle to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a % core::f64::consts::TAU;
    if r <= -core::f64::consts::PI {
        r += core::f64::consts::TAU;
    } else if r > core::f64::consts::PI {
        r -= core::f64::consts::TAU;
    }
    r
}

/// Shortest signed arc from `from` to `to`.
pub fn angle_diff(to: f64, from: f64) -> f64 {
    wrap_angle(to - from)
}

/// Pose of a rigid body moving in the plane: position plus heading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarPose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl PlanarPose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self { x, y, heading }
    }

    pub fn position(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, 0.0)
    }

    /// Unit vector the pose is facing.
    pub fn direction(&self) -> (f64, f64) {
        (self.heading.cos(), self.heading.sin())
    }

    /// Interpolate positions linearly and the heading along the shortest arc.
    pub fn interpolate(&self, other: &PlanarPose, t: f64) -> PlanarPose {
        PlanarPose {
            x: self.x + (other.x - self.x) * t,
            y: self.y + (other.y - self.y) * t,
            heading: wrap_angle(self.heading + angle_diff(other.heading, self.heading) * t),
        }
    }

    pub fn xy_distance(&self, other: &PlanarPose) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        (dx * dx + dy * dy).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use core::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn identity_maps_points_to_themselves() {
        let g = RigidTransform::identity();
        let p = Point3::new(1.0, 2.0, 3.0);
        assert_eq!(transform_apply(&g, &p), p);
    }

    #[test]
    fn pure_translation_moves_origin() {
        let g = yaw_translation(0.0, Vector3::new(1.0, 0.0, 0.0));
        let p = transform_apply(&g, &Point3::origin());
        assert_relative_eq!(p.x, 1.0, epsilon = 1e-15);
        assert_relative_eq!(p.y, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn yaw_90_with_translation_hand_computed() {
        // g = (R_z(90°), (1,0,0)) applied to (1,0,0) lands at (1,1,0).
        let g = yaw_translation(FRAC_PI_2, Vector3::new(1.0, 0.0, 0.0));
        let p = transform_apply(&g, &Point3::new(1.0, 0.0, 0.0));
        assert_relative_eq!(p.x, 1.0, epsilon = 1e-12);
        assert_relative_eq!(p.y, 1.0, epsilon = 1e-12);
        assert_relative_eq!(p.z, 0.0, epsilon = 1e-12);
        let back = inverse_apply(&g, &p);
        assert_relative_eq!(back.x, 1.0, epsilon = 1e-12);
        assert_relative_eq!(back.y, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn wrap_angle_covers_branch_cuts() {
        assert_relative_eq!(wrap_angle(3.0 * PI), PI, epsilon = 1e-12);
        assert_relative_eq!(wrap_angle(-3.0 * PI), PI, epsilon = 1e-12);
        assert_relative_eq!(wrap_angle(0.3), 0.3, epsilon = 1e-15);
        assert_relative_eq!(angle_diff(-3.0, 3.0), 0.2831853071795862, epsilon = 1e-12);
    }

    #[test]
    fn rotations_stay_orthonormal_after_many_compositions() {
        // Renormalization policy: `compose` renormalizes the quaternion after
        // every product, so drift stays at machine level.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut g = RigidTransform::identity();
        for _ in 0..10_000 {
            let axis = Vector3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            let axis = nalgebra::Unit::new_normalize(axis);
            let step = Isometry3::from_parts(
                Translation3::new(0.0, 0.0, 0.0),
                UnitQuaternion::from_axis_angle(&axis, rng.gen_range(-1.0..1.0)),
            );
            g = compose(&g, &step);
        }
        let r = g.rotation.to_rotation_matrix();
        let err = (r.transpose() * r).into_inner() - nalgebra::Matrix3::identity();
        assert!(err.norm() < 1e-9, "orthonormality drift {}", err.norm());
        assert_relative_eq!(r.into_inner().determinant(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn planar_interpolation_takes_shortest_arc() {
        let a = PlanarPose::new(0.0, 0.0, 3.0);
        let b = PlanarPose::new(1.0, 0.0, -3.0);
        let mid = a.interpolate(&b, 0.5);
        assert_relative_eq!(mid.heading.abs(), PI, epsilon = 1e-9);
        assert_relative_eq!(mid.x, 0.5, epsilon = 1e-15);
    }
}
