//! Articulated humanoid description, forward kinematics and configurations.

use alloc::string::String;
use alloc::vec::Vec;
use nalgebra::{Isometry3, Point3, Translation3, UnitQuaternion, UnitVector3, Vector3};
use serde::{Deserialize, Serialize};

use crate::geom::RigidTransform;
use crate::sim::shapes::Capsule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BodyPart {
    Lower,
    Upper,
}

/// One rigid link. The link frame origin sits at its proximal joint; the
/// collision capsule is attached at `shape_local`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinkSpec {
    pub name: String,
    pub mass: f64,
    pub capsule_radius: f64,
    pub capsule_half_len: f64,
    pub shape_local: Isometry3<f64>,
    pub part: BodyPart,
}

impl LinkSpec {
    pub fn capsule(&self) -> Capsule {
        Capsule { radius: self.capsule_radius, half_len: self.capsule_half_len }
    }

    /// COM in the link frame (capsule center).
    pub fn com_local(&self) -> Vector3<f64> {
        self.shape_local.translation.vector
    }
}

/// Revolute joint; the hinge axis is `axis` in both frames and the child
/// frame coincides with `anchor` in the parent at angle zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JointSpec {
    pub name: String,
    pub parent_link: usize,
    pub child_link: usize,
    pub anchor_in_parent: Point3<f64>,
    pub axis: UnitVector3<f64>,
    pub limits: (f64, f64),
    pub stiffness: f64,
    pub damping: f64,
}

/// Articulated humanoid used for drop imagination and as the seated plush
/// body. The kinematic tree is rooted at the pelvis; the initial rotation is
/// the identity with the agent facing world +x.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgentModel {
    pub links: Vec<LinkSpec>,
    pub joints: Vec<JointSpec>,
    /// Joint angles the agent holds before being dropped, and the reference
    /// angles a correct sitting is scored against.
    pub pre_sitting: Vec<f64>,
    pub key_angles: Vec<f64>,
    pub friction: f64,
}

/// Resultant state of the agent after a settle: joint angles, base pose,
/// per-link world rotations and per-link contact-point counts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Configuration {
    pub joint_angles: Vec<f64>,
    pub base_pose: RigidTransform,
    pub link_rotations: Vec<UnitQuaternion<f64>>,
    pub contacts: Vec<u32>,
}

impl Configuration {
    pub fn link_z_axis(&self, i: usize) -> Vector3<f64> {
        self.link_rotations[i] * Vector3::z()
    }

    /// Height of the base (pelvis) link origin above the ground plane.
    pub fn pelvis_height(&self) -> f64 {
        self.base_pose.translation.vector.z
    }

    /// Yaw of the facing direction (base-frame x-axis projected to xy).
    /// Falls back to zero when the facing axis is near vertical (toppled).
    pub fn facing_yaw(&self) -> f64 {
        let f = self.base_pose.rotation * Vector3::x();
        if f.x.hypot(f.y) < 1e-6 {
            0.0
        } else {
            f.y.atan2(f.x)
        }
    }
}

impl AgentModel {
    pub fn joint_count(&self) -> usize {
        self.joints.len()
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn link_index(&self, name: &str) -> Option<usize> {
        self.links.iter().position(|l| l.name == name)
    }

    pub fn lower_body_links(&self) -> Vec<usize> {
        (0..self.links.len()).filter(|&i| self.links[i].part == BodyPart::Lower).collect()
    }

    pub fn upper_body_links(&self) -> Vec<usize> {
        (0..self.links.len()).filter(|&i| self.links[i].part == BodyPart::Upper).collect()
    }

    /// World pose of every link for the given base pose and joint angles.
    /// Links are ordered so a child always follows its parent.
    pub fn forward_kinematics(&self, base: &RigidTransform, angles: &[f64]) -> Vec<RigidTransform> {
        assert_eq!(angles.len(), self.joints.len(), "joint vector length");
        let mut poses: Vec<RigidTransform> = Vec::with_capacity(self.links.len());
        poses.push(*base);
        for _ in 1..self.links.len() {
            poses.push(RigidTransform::identity());
        }
        for (j, joint) in self.joints.iter().enumerate() {
            let parent = poses[joint.parent_link];
            let local = Isometry3::from_parts(
                Translation3::from(joint.anchor_in_parent.coords),
                UnitQuaternion::from_axis_angle(&joint.axis, angles[j]),
            );
            poses[joint.child_link] = parent * local;
        }
        poses
    }

    /// The reference correct-sitting configuration: key angles, upright base
    /// at the origin, facing +x, no contacts.
    pub fn key_configuration(&self) -> Configuration {
        let base = RigidTransform::identity();
        let poses = self.forward_kinematics(&base, &self.key_angles);
        Configuration {
            joint_angles: self.key_angles.clone(),
            base_pose: base,
            link_rotations: poses.iter().map(|p| p.rotation).collect(),
            contacts: alloc::vec![0; self.links.len()],
        }
    }

    /// Total standing height (top of head above ground, all angles zero).
    pub fn standing_height(&self) -> f64 {
        let zeros = alloc::vec![0.0; self.joints.len()];
        let poses = self.forward_kinematics(&RigidTransform::identity(), &zeros);
        let mut top = f64::NEG_INFINITY;
        let mut bottom = f64::INFINITY;
        for (link, pose) in self.links.iter().zip(&poses) {
            let shape = pose * link.shape_local;
            for sign in [-1.0, 1.0] {
                let end = shape * Point3::new(0.0, 0.0, sign * link.capsule_half_len);
                top = top.max(end.z + link.capsule_radius);
                bottom = bottom.min(end.z - link.capsule_radius);
            }
        }
        top - bottom
    }

    pub fn total_mass(&self) -> f64 {
        self.links.iter().map(|l| l.mass).sum()
    }

    /// Child-scale humanoid sized for children's chairs: 13 links, 12 pitch
    /// joints, bilaterally symmetric. `height` is the standing height and
    /// `mass` the total mass; both scale the nominal model linearly.
    pub fn child(height: f64, mass: f64) -> AgentModel {
        let nominal = Self::child_nominal();
        let s = height / nominal.standing_height();
        let m = mass / nominal.total_mass();
        let mut model = nominal;
        for link in &mut model.links {
            link.mass *= m;
            link.capsule_radius *= s;
            link.capsule_half_len *= s;
            link.shape_local.translation.vector *= s;
        }
        for joint in &mut model.joints {
            joint.anchor_in_parent = Point3::from(joint.anchor_in_parent.coords * s);
            // Spring torque scales with weight * length.
            joint.stiffness *= m * s;
            joint.damping *= m * s;
        }
        model
    }

    fn child_nominal() -> AgentModel {
        let y = Vector3::y_axis();
        let mut links = Vec::new();
        let mut joints = Vec::new();

        // Pelvis frame origin at the underside of the seatbone so the base
        // height reads as the sitting height directly.
        links.push(LinkSpec {
            name: String::from("pelvis"),
            mass: 2.6,
            capsule_radius: 0.048,
            capsule_half_len: 0.052,
            shape_local: Isometry3::from_parts(
                Translation3::new(0.0, 0.0, 0.048),
                UnitQuaternion::from_axis_angle(&Vector3::x_axis(), core::f64::consts::FRAC_PI_2),
            ),
            part: BodyPart::Lower,
        });

        let add_link = |links: &mut Vec<LinkSpec>,
                            joints: &mut Vec<JointSpec>,
                            name: &str,
                            joint_name: &str,
                            parent: usize,
                            anchor: Point3<f64>,
                            mass: f64,
                            radius: f64,
                            half: f64,
                            down: bool,
                            part: BodyPart,
                            limits: (f64, f64),
                            stiffness: f64,
                            damping: f64|
         -> usize {
            // Capsule extends from the joint origin along +z (up) or -z.
            let dir = if down { -1.0 } else { 1.0 };
            links.push(LinkSpec {
                name: String::from(name),
                mass,
                capsule_radius: radius,
                capsule_half_len: half,
                shape_local: Isometry3::from_parts(
                    Translation3::new(0.0, 0.0, dir * (half + radius * 0.2)),
                    UnitQuaternion::identity(),
                ),
                part,
            });
            let child = links.len() - 1;
            joints.push(JointSpec {
                name: String::from(joint_name),
                parent_link: parent,
                child_link: child,
                anchor_in_parent: anchor,
                axis: y,
                limits,
                stiffness,
                damping,
            });
            child
        };

        // Torso and head.
        let torso = add_link(
            &mut links, &mut joints,
            "torso", "spine",
            0, Point3::new(0.0, 0.0, 0.10),
            3.6, 0.060, 0.105, false, BodyPart::Upper,
            (-0.7, 0.7), 18.0, 5.0,
        );
        add_link(
            &mut links, &mut joints,
            "head", "neck",
            torso, Point3::new(0.0, 0.0, 0.25),
            0.9, 0.062, 0.02, false, BodyPart::Upper,
            (-0.6, 0.6), 6.0, 1.6,
        );

        // Legs.
        for (side, sy) in [("left", 1.0), ("right", -1.0)] {
            let thigh = add_link(
                &mut links, &mut joints,
                &alloc::format!("thigh_{side}"), &alloc::format!("hip_{side}"),
                0, Point3::new(0.0, sy * 0.055, 0.035),
                1.05, 0.036, 0.057, true, BodyPart::Lower,
                (-2.2, 0.4), 15.0, 4.0,
            );
            let shank = add_link(
                &mut links, &mut joints,
                &alloc::format!("shank_{side}"), &alloc::format!("knee_{side}"),
                thigh, Point3::new(0.0, 0.0, -0.15),
                0.65, 0.030, 0.062, true, BodyPart::Lower,
                (-0.1, 2.4), 10.0, 2.5,
            );
            // Foot points forward: capsule axis tilted to +x.
            links.push(LinkSpec {
                name: alloc::format!("foot_{side}"),
                mass: 0.2,
                capsule_radius: 0.024,
                capsule_half_len: 0.035,
                shape_local: Isometry3::from_parts(
                    Translation3::new(0.030, 0.0, -0.012),
                    UnitQuaternion::from_axis_angle(&Vector3::y_axis(), core::f64::consts::FRAC_PI_2),
                ),
                part: BodyPart::Lower,
            });
            joints.push(JointSpec {
                name: alloc::format!("ankle_{side}"),
                parent_link: shank,
                child_link: links.len() - 1,
                anchor_in_parent: Point3::new(0.0, 0.0, -0.148),
                axis: y,
                limits: (-0.9, 0.9),
                stiffness: 4.0,
                damping: 1.2,
            });
        }

        // Arms.
        for (side, sy) in [("left", 1.0), ("right", -1.0)] {
            let upper = add_link(
                &mut links, &mut joints,
                &alloc::format!("upper_arm_{side}"), &alloc::format!("shoulder_{side}"),
                torso, Point3::new(0.0, sy * 0.095, 0.22),
                0.45, 0.025, 0.058, true, BodyPart::Upper,
                (-2.4, 0.6), 6.0, 1.8,
            );
            add_link(
                &mut links, &mut joints,
                &alloc::format!("forearm_{side}"), &alloc::format!("elbow_{side}"),
                upper, Point3::new(0.0, 0.0, -0.13),
                0.35, 0.022, 0.055, true, BodyPart::Upper,
                (-2.4, 0.1), 4.0, 1.2,
            );
        }

        // Joint order: spine, neck, hip_l, knee_l, ankle_l, hip_r, knee_r,
        // ankle_r, shoulder_l, elbow_l, shoulder_r, elbow_r.
        let mut pre = alloc::vec![0.0; joints.len()];
        let set = |joints: &Vec<JointSpec>, pre: &mut Vec<f64>, name: &str, v: f64| {
            let i = joints.iter().position(|j| j.name == name).expect("joint exists");
            pre[i] = v;
        };
        set(&joints, &mut pre, "spine", -0.35);
        for side in ["left", "right"] {
            set(&joints, &mut pre, &alloc::format!("hip_{side}"), -1.62);
            set(&joints, &mut pre, &alloc::format!("knee_{side}"), 1.57);
            set(&joints, &mut pre, &alloc::format!("shoulder_{side}"), -1.05);
            set(&joints, &mut pre, &alloc::format!("elbow_{side}"), -0.55);
        }

        AgentModel {
            links,
            joints,
            key_angles: pre.clone(),
            pre_sitting: pre,
            friction: 0.6,
        }
    }
}
