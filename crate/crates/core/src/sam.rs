//! Sitting affordance scoring: classify a settled configuration against the
//! key configuration.
//!
//! A configuration counts as a correct sitting when all four criteria hold:
//! the weighted joint-angle score stays under `j_max`, the weighted
//! link-rotation score under `l_max`, the sitting height falls inside
//! `(h_min, h_max)`, and the contact test passes (enough total contact
//! points, with both lower-body and upper-body links touching).

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::sim::{AgentModel, Configuration};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SamError {
    /// Joint or link vectors of the two configurations differ in length.
    LengthMismatch { expected: usize, got: usize },
}

impl core::fmt::Display for SamError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SamError::LengthMismatch { expected, got } => {
                write!(f, "length mismatch: expected {expected}, got {got}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SamError {}

/// Weights and thresholds of the sitting classifier.
///
/// The default values are calibration artifacts: they were fitted on the
/// three calibration chairs of [`crate::chairgen::ChairGenParams::calibration_set`]
/// so that straight-on seat drops classify as correct while slid-off,
/// toppled, perched and strongly twisted ones do not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamConfig {
    /// Per-joint weights for the joint-angle score (length n).
    pub joint_weights: Vec<f64>,
    /// Per-link weights for the link-rotation score (length m).
    pub link_weights: Vec<f64>,
    pub j_max: f64,
    pub l_max: f64,
    pub h_min: f64,
    pub h_max: f64,
    /// The total contact-point count must strictly exceed this.
    pub min_total_contacts: u32,
    /// Indices of lower-body and upper-body links.
    pub lower_links: Vec<usize>,
    pub upper_links: Vec<usize>,
}

impl SamConfig {
    /// Calibrated defaults for the given agent (weights are keyed to the
    /// child model's 12-joint / 13-link layout by name).
    pub fn for_agent(agent: &AgentModel) -> SamConfig {
        let joint_weight = |name: &str| -> f64 {
            if name.starts_with("hip") || name.starts_with("knee") || name == "spine" {
                1.0
            } else if name.starts_with("ankle") || name == "neck" {
                0.3
            } else {
                // Shoulders and elbows flail freely without spoiling a sit.
                0.15
            }
        };
        let link_weight = |name: &str| -> f64 {
            match name {
                "pelvis" => 1.5,
                "torso" => 2.0,
                "head" => 0.5,
                n if n.starts_with("thigh") => 1.5,
                n if n.starts_with("shank") => 0.6,
                n if n.starts_with("foot") => 0.4,
                _ => 0.15,
            }
        };
        SamConfig {
            joint_weights: agent.joints.iter().map(|j| joint_weight(&j.name)).collect(),
            link_weights: agent.links.iter().map(|l| link_weight(&l.name)).collect(),
            j_max: 1.9,
            l_max: 1.2,
            h_min: 0.10,
            h_max: 0.36,
            min_total_contacts: 3,
            lower_links: agent.lower_body_links(),
            upper_links: agent.upper_body_links(),
        }
    }
}

/// Scores and verdict for one settled configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamVerdict {
    pub joint_score: f64,
    pub link_score: f64,
    pub sitting_height: f64,
    pub contacts: Vec<u32>,
    pub contact_ok: bool,
    pub correct: bool,
    /// Product of the two scores, used as the aggregation weight quantity.
    pub score_product: f64,
}

/// Weighted sum of absolute joint-angle deviations.
pub fn joint_angle_score(
    result: &Configuration,
    key: &Configuration,
    weights: &[f64],
) -> Result<f64, SamError> {
    let n = key.joint_angles.len();
    if result.joint_angles.len() != n {
        return Err(SamError::LengthMismatch { expected: n, got: result.joint_angles.len() });
    }
    if weights.len() != n {
        return Err(SamError::LengthMismatch { expected: n, got: weights.len() });
    }
    Ok(result
        .joint_angles
        .iter()
        .zip(&key.joint_angles)
        .zip(weights)
        .map(|((a, b), w)| w * (a - b).abs())
        .sum())
}

/// Weighted sum of link z-axis misalignments, `sum w_i (1 - z_res . z_key)`.
pub fn link_rotation_score(
    result: &Configuration,
    key: &Configuration,
    weights: &[f64],
) -> Result<f64, SamError> {
    let m = key.link_rotations.len();
    if result.link_rotations.len() != m {
        return Err(SamError::LengthMismatch { expected: m, got: result.link_rotations.len() });
    }
    if weights.len() != m {
        return Err(SamError::LengthMismatch { expected: m, got: weights.len() });
    }
    Ok((0..m)
        .map(|i| weights[i] * (1.0 - result.link_z_axis(i).dot(&key.link_z_axis(i))))
        .sum())
}

/// The contact test: total contact points above the threshold and at least
/// one contact on both the lower and the upper body.
pub fn contact_ok(
    contacts: &[u32],
    lower_links: &[usize],
    upper_links: &[usize],
    min_total: u32,
) -> bool {
    let total: u32 = contacts.iter().sum();
    let lower: u32 = lower_links.iter().map(|&i| contacts[i]).sum();
    let upper: u32 = upper_links.iter().map(|&i| contacts[i]).sum();
    total > min_total && lower > 0 && upper > 0
}

/// Score a settled configuration against the key configuration.
pub fn classify(
    result: &Configuration,
    key: &Configuration,
    cfg: &SamConfig,
) -> Result<SamVerdict, SamError> {
    let joint_score = joint_angle_score(result, key, &cfg.joint_weights)?;
    let link_score = link_rotation_score(result, key, &cfg.link_weights)?;
    let sitting_height = result.pelvis_height();
    let contact = contact_ok(
        &result.contacts,
        &cfg.lower_links,
        &cfg.upper_links,
        cfg.min_total_contacts,
    );
    let correct = joint_score < cfg.j_max
        && link_score < cfg.l_max
        && sitting_height > cfg.h_min
        && sitting_height < cfg.h_max
        && contact;
    Ok(SamVerdict {
        joint_score,
        link_score,
        sitting_height,
        contacts: result.contacts.clone(),
        contact_ok: contact,
        correct,
        score_product: joint_score * link_score,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::RigidTransform;
    use crate::sim::AgentModel;
    use alloc::vec;
    use approx::assert_relative_eq;
    use nalgebra::{UnitQuaternion, Vector3};

    fn config_with_joints(angles: Vec<f64>, links: usize) -> Configuration {
        Configuration {
            joint_angles: angles,
            base_pose: RigidTransform::identity(),
            link_rotations: vec![UnitQuaternion::identity(); links],
            contacts: vec![0; links],
        }
    }

    #[test]
    fn joint_score_identity_is_zero() {
        let a = config_with_joints(vec![0.3, -0.7], 2);
        assert_relative_eq!(joint_angle_score(&a, &a, &[1.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn joint_score_direct_formula() {
        let key = config_with_joints(vec![0.0, 0.0], 2);
        let res = config_with_joints(vec![0.1, -0.2], 2);
        assert_relative_eq!(
            joint_angle_score(&res, &key, &[1.0, 1.0]).unwrap(),
            0.3,
            epsilon = 1e-12
        );
        // Zero weight masks a wildly wrong joint.
        let res = config_with_joints(vec![0.1, 5.0], 2);
        assert_relative_eq!(
            joint_angle_score(&res, &key, &[2.0, 0.0]).unwrap(),
            0.2,
            epsilon = 1e-12
        );
    }

    #[test]
    fn joint_score_length_mismatch() {
        let key = config_with_joints(vec![0.0, 0.0], 2);
        let res = config_with_joints(vec![0.0], 2);
        assert!(matches!(
            joint_angle_score(&res, &key, &[1.0, 1.0]),
            Err(SamError::LengthMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn link_score_extremes() {
        let key = config_with_joints(vec![], 2);
        // One link flipped upside down: 1 - (-1) = 2 with weight 1.
        let mut res = config_with_joints(vec![], 2);
        res.link_rotations[1] =
            UnitQuaternion::from_axis_angle(&Vector3::x_axis(), core::f64::consts::PI);
        assert_relative_eq!(
            link_rotation_score(&res, &key, &[1.0, 1.0]).unwrap(),
            2.0,
            epsilon = 1e-12
        );
        // One link orthogonal with weight 0.5.
        let mut res = config_with_joints(vec![], 2);
        res.link_rotations[0] =
            UnitQuaternion::from_axis_angle(&Vector3::y_axis(), core::f64::consts::FRAC_PI_2);
        assert_relative_eq!(
            link_rotation_score(&res, &key, &[0.5, 1.0]).unwrap(),
            0.5,
            epsilon = 1e-12
        );
        // Identity: zero.
        assert_relative_eq!(
            link_rotation_score(&key, &key, &[1.0, 1.0]).unwrap(),
            0.0
        );
    }

    #[test]
    fn contact_truth_table_edges() {
        let lower = [0usize];
        let upper = [1usize];
        assert!(!contact_ok(&[0, 0], &lower, &upper, 0)); // all zeros
        assert!(contact_ok(&[4, 3], &lower, &upper, 5)); // 7 > 5, both sides
        assert!(!contact_ok(&[8, 0], &lower, &upper, 5)); // back unsupported
        assert!(!contact_ok(&[3, 3], &lower, &upper, 6)); // total not above 6
    }

    #[test]
    fn classify_conjunction_and_boundaries() {
        let agent = AgentModel::child(0.9, 12.0);
        let cfg = SamConfig::for_agent(&agent);
        let key = agent.key_configuration();

        // A configuration identical to the key, at a plausible height, with
        // contacts on both body halves, is correct.
        let mut good = key.clone();
        good.base_pose = nalgebra::Isometry3::translation(0.0, 0.0, 0.25);
        good.contacts[0] = 3;
        good.contacts[1] = 2;
        let v = classify(&good, &key, &cfg).unwrap();
        assert!(v.correct, "{v:?}");
        assert_relative_eq!(v.joint_score, 0.0);
        assert_relative_eq!(v.score_product, 0.0);

        // J exactly at the threshold is incorrect (strict inequality).
        let mut boundary = good.clone();
        boundary.joint_angles[0] += cfg.j_max / cfg.joint_weights[0];
        let v = classify(&boundary, &key, &cfg).unwrap();
        assert_relative_eq!(v.joint_score, cfg.j_max, epsilon = 1e-12);
        assert!(!v.correct);

        // On the floor: height outside the window.
        let mut floored = good.clone();
        floored.base_pose = nalgebra::Isometry3::translation(0.0, 0.0, 0.0);
        assert!(!classify(&floored, &key, &cfg).unwrap().correct);

        // No upper-body contact.
        let mut no_back = good.clone();
        no_back.contacts[1] = 0;
        assert!(!classify(&no_back, &key, &cfg).unwrap().correct);
    }

    #[test]
    fn weight_scaling_scales_scores_linearly() {
        use proptest::prelude::*;
        proptest!(|(c in 0.1f64..10.0, angles in proptest::collection::vec(-1.0f64..1.0, 12))| {
            let agent = AgentModel::child(0.9, 12.0);
            let cfg = SamConfig::for_agent(&agent);
            let key = agent.key_configuration();
            let mut res = key.clone();
            for (a, d) in res.joint_angles.iter_mut().zip(&angles) {
                *a += d;
            }
            let j1 = joint_angle_score(&res, &key, &cfg.joint_weights).unwrap();
            let scaled: alloc::vec::Vec<f64> = cfg.joint_weights.iter().map(|w| w * c).collect();
            let j2 = joint_angle_score(&res, &key, &scaled).unwrap();
            prop_assert!((j2 - c * j1).abs() < 1e-9 * (1.0 + j2.abs()));
        });
    }
}
