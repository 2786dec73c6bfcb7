//! Simplified whole-body seating motion: a bilaterally symmetric,
//! pitch-joints-only chain in the sagittal plane, with constrained
//! optimization for the goal configuration and the approach trajectory.
//!
//! Plane conventions: x forward, z up, all angles are cumulative pitches
//! with zero meaning straight up. The chain is rooted at the ankle; the
//! bilateral symmetry means one planar joint stands for the left/right pair.

mod execute;
mod solve;

pub use execute::{bear_world_pose, execute_and_release, ExecuteOutcome};
pub use solve::{audit, feasible, goal_config, plan_seating_trajectory, penalty_and_gradient, PenaltyWeights};

use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanarLink {
    pub name: String,
    pub length: f64,
    pub mass: f64,
    /// Capsule radius for collision clearance.
    pub radius: f64,
}

/// Pitch-only chain from the ankle up to the held-bear frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanarChain {
    pub links: Vec<PlanarLink>,
    /// Per-joint angle limits (radians).
    pub joint_limits: Vec<(f64, f64)>,
    /// Per-joint velocity limits (rad/s).
    pub velocity_limits: Vec<f64>,
    /// Ankle position in the sagittal plane.
    pub base: (f64, f64),
    /// Foot support interval [heel, toe] along x.
    pub support: (f64, f64),
    /// Index of the torso link (its pitch is the bending-angle cost).
    pub torso_link: usize,
    /// Mass of the carried bear, applied at the end-effector.
    pub bear_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WholebodyError {
    JointLimit { joint: usize },
    /// Target outside the chain's reachable disc (analytic pre-check), or
    /// no stable collision-free solution found.
    Infeasible(&'static str),
    /// The trajectory optimizer could not produce a feasible path.
    NoTrajectory(&'static str),
}

impl core::fmt::Display for WholebodyError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            WholebodyError::JointLimit { joint } => write!(f, "joint {joint} outside its limits"),
            WholebodyError::Infeasible(why) => write!(f, "goal configuration infeasible: {why}"),
            WholebodyError::NoTrajectory(why) => write!(f, "no feasible trajectory: {why}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for WholebodyError {}

/// Solid rectangle in the sagittal plane (chair under-seat block, backrest).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SagittalRect {
    pub x_min: f64,
    pub x_max: f64,
    pub z_min: f64,
    pub z_max: f64,
}

/// Everything the seating optimizer needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeatingProblem {
    pub chain: PlanarChain,
    pub q_start: Vec<f64>,
    /// Bear base target in the sagittal plane (forward, height).
    pub bear_target: (f64, f64),
    /// Bear pitch at the target (zero keeps the bear upright).
    pub bear_pitch_target: f64,
    pub obstacles: Vec<SagittalRect>,
    /// Goal-configuration cost weights (balance distance, torso bend).
    pub w1: f64,
    pub w2: f64,
    /// Diagonal of the trajectory tracking metric Q.
    pub q_weights: Vec<f64>,
    /// Number of trajectory waypoints, including both endpoints.
    pub horizon: usize,
    /// Time between waypoints (s).
    pub dt: f64,
    /// Links whose clearance to obstacles is enforced; the forearm carrying
    /// the bear is exempt (it must enter the seat region to place the bear).
    pub collision_links: Vec<usize>,
    pub collision_margin: f64,
    /// Strict-interiority margin for the COM inside the support interval.
    pub support_margin: f64,
}

impl SeatingProblem {
    pub fn new(chain: PlanarChain, bear_target: (f64, f64)) -> Self {
        let n = chain.links.len();
        let q_start = standing_hold_pose(n);
        // The bear hangs from the hands at the hold pitch; keeping the same
        // end-effector pitch at the goal sets it down upright.
        let hold_pitch = chain.forward_kinematics(&q_start).ee_pitch;
        Self {
            q_start,
            bear_target,
            bear_pitch_target: hold_pitch,
            obstacles: Vec::new(),
            w1: 1.0,
            w2: 0.5,
            q_weights: alloc::vec![1.0; n],
            horizon: 20,
            dt: 0.4,
            collision_links: (0..n.saturating_sub(1)).collect(),
            collision_margin: 0.01,
            support_margin: 0.005,
            chain,
        }
    }
}

/// Canned standing posture holding the bear in front: legs straight, arms
/// hanging down-forward. Matches the 5-link default chain.
pub fn standing_hold_pose(n: usize) -> Vec<f64> {
    let mut q = alloc::vec![0.0; n];
    if n == 5 {
        q[0] = 0.05; // ankle
        q[1] = -0.10; // knee
        q[2] = 0.08; // hip
        q[3] = 1.82; // shoulder: upper arm horizontal, bear held out front
        q[4] = 0.15; // elbow: forearm forward-down
    }
    q
}

impl PlanarChain {
    /// Small-humanoid default: shank, thigh, torso, upper arm, forearm.
    pub fn small_humanoid() -> PlanarChain {
        let link = |name: &str, length: f64, mass: f64, radius: f64| PlanarLink {
            name: String::from(name),
            length,
            mass,
            radius,
        };
        PlanarChain {
            links: alloc::vec![
                link("shank", 0.105, 0.6, 0.025),
                link("thigh", 0.105, 0.7, 0.028),
                link("torso", 0.215, 2.2, 0.05),
                link("upper_arm", 0.11, 0.4, 0.02),
                link("forearm", 0.13, 0.4, 0.02),
            ],
            joint_limits: alloc::vec![
                (-0.7, 0.9),  // ankle
                (-1.7, 0.2),  // knee
                (-0.4, 1.7),  // hip
                (0.3, 3.4),   // shoulder
                (-2.2, 0.6),  // elbow
            ],
            velocity_limits: alloc::vec![1.5; 5],
            base: (0.0, 0.045),
            support: (-0.055, 0.135),
            torso_link: 2,
            bear_mass: 0.5,
        }
    }

    pub fn joint_count(&self) -> usize {
        self.links.len()
    }

    pub fn total_length(&self) -> f64 {
        self.links.iter().map(|l| l.length).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.links.iter().map(|l| l.mass).sum::<f64>() + self.bear_mass
    }

    pub fn within_limits(&self, q: &[f64]) -> Result<(), WholebodyError> {
        for (j, (&angle, &(lo, hi))) in q.iter().zip(&self.joint_limits).enumerate() {
            if angle < lo - 1e-9 || angle > hi + 1e-9 {
                return Err(WholebodyError::JointLimit { joint: j });
            }
        }
        Ok(())
    }

    /// Forward kinematics: joint positions, cumulative pitches, end-effector
    /// pose and the COM x-projection (bear mass at the end-effector).
    pub fn forward_kinematics(&self, q: &[f64]) -> Fk {
        assert_eq!(q.len(), self.links.len(), "joint vector length");
        let n = self.links.len();
        let mut joints = Vec::with_capacity(n + 1);
        let mut pitches = Vec::with_capacity(n);
        joints.push(self.base);
        let mut psi = 0.0;
        for (link, &angle) in self.links.iter().zip(q) {
            psi += angle;
            pitches.push(psi);
            let (x, z) = *joints.last().expect("non-empty");
            joints.push((x + link.length * psi.sin(), z + link.length * psi.cos()));
        }
        let ee = *joints.last().expect("non-empty");
        let mut weighted_x = self.bear_mass * ee.0;
        for (link, pair) in self.links.iter().zip(joints.windows(2)) {
            weighted_x += link.mass * (pair[0].0 + pair[1].0) / 2.0;
        }
        let com_x = weighted_x / self.total_mass();
        Fk { joints, pitches, ee, ee_pitch: psi, com_x }
    }

    /// Gradient of the end-effector position w.r.t. each joint angle:
    /// rows (d ee_x / d q_j, d ee_z / d q_j).
    pub fn ee_jacobian(&self, fk: &Fk) -> Vec<(f64, f64)> {
        let n = self.links.len();
        let mut jac = alloc::vec![(0.0, 0.0); n];
        // d p_k / d q_j accumulates l_k (cos psi_k, -sin psi_k) for k >= j.
        for j in 0..n {
            let mut dx = 0.0;
            let mut dz = 0.0;
            for k in j..n {
                let psi = fk.pitches[k];
                dx += self.links[k].length * psi.cos();
                dz -= self.links[k].length * psi.sin();
            }
            jac[j] = (dx, dz);
        }
        jac
    }

    /// Gradient of the COM x-projection w.r.t. each joint angle.
    pub fn com_x_gradient(&self, fk: &Fk) -> Vec<f64> {
        let n = self.links.len();
        let total = self.total_mass();
        // Mass hanging strictly above joint k's link start, with the link's
        // own mass split to its midpoint.
        let mut grad = alloc::vec![0.0; n];
        for j in 0..n {
            let mut g = 0.0;
            for k in j..n {
                // Moving q_j rotates link k's direction when k >= j; the
                // x-velocity of any point on link k from d q_j is
                // (arc contribution) l_k cos psi_k for the full link.
                // Link k's own mass sits at its midpoint (half contribution);
                // everything above it (links > k and the bear) gets the full
                // contribution.
                let above: f64 = self.links[k + 1..].iter().map(|l| l.mass).sum::<f64>() + self.bear_mass;
                let c = self.links[k].length * fk.pitches[k].cos();
                g += c * (self.links[k].mass * 0.5 + above);
            }
            grad[j] = g / total;
        }
        grad
    }

    /// Capsule segments of the chain: (start, end, radius) per link.
    pub fn segments(&self, fk: &Fk) -> Vec<((f64, f64), (f64, f64), f64)> {
        self.links
            .iter()
            .zip(fk.joints.windows(2))
            .map(|(link, pair)| (pair[0], pair[1], link.radius))
            .collect()
    }
}

/// Forward-kinematics snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct Fk {
    /// Joint positions, ankle first, end-effector last (n + 1 points).
    pub joints: Vec<(f64, f64)>,
    /// Cumulative pitch of each link.
    pub pitches: Vec<f64>,
    pub ee: (f64, f64),
    pub ee_pitch: f64,
    pub com_x: f64,
}

/// Distance from a 2D segment to a solid rectangle (zero when intersecting).
pub fn segment_rect_distance(a: (f64, f64), b: (f64, f64), rect: &SagittalRect) -> f64 {
    // Sample-free: if either endpoint is inside, or the segment crosses the
    // boundary, the distance is zero; otherwise it is the minimum of the
    // endpoint-to-rect and segment-to-edge distances.
    let inside = |p: (f64, f64)| {
        p.0 >= rect.x_min && p.0 <= rect.x_max && p.1 >= rect.z_min && p.1 <= rect.z_max
    };
    if inside(a) || inside(b) {
        return 0.0;
    }
    let corners = [
        (rect.x_min, rect.z_min),
        (rect.x_max, rect.z_min),
        (rect.x_max, rect.z_max),
        (rect.x_min, rect.z_max),
    ];
    let mut best = f64::INFINITY;
    for i in 0..4 {
        let c0 = corners[i];
        let c1 = corners[(i + 1) % 4];
        let d = segment_segment_distance(a, b, c0, c1);
        if d == 0.0 {
            return 0.0;
        }
        best = best.min(d);
    }
    best
}

fn segment_segment_distance(p1: (f64, f64), q1: (f64, f64), p2: (f64, f64), q2: (f64, f64)) -> f64 {
    fn orient(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
        (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
    }
    let d1 = orient(p2, q2, p1);
    let d2 = orient(p2, q2, q1);
    let d3 = orient(p1, q1, p2);
    let d4 = orient(p1, q1, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return 0.0;
    }
    fn point_segment(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
        let (ex, ez) = (b.0 - a.0, b.1 - a.1);
        let len2 = ex * ex + ez * ez;
        let t = if len2 > 1e-18 {
            (((p.0 - a.0) * ex + (p.1 - a.1) * ez) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let (qx, qz) = (a.0 + t * ex, a.1 + t * ez);
        ((p.0 - qx).powi(2) + (p.1 - qz).powi(2)).sqrt()
    }
    point_segment(p1, p2, q2)
        .min(point_segment(q1, p2, q2))
        .min(point_segment(p2, p1, q1))
        .min(point_segment(q2, p1, q1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn vertical_stack_at_zero_angles() {
        let chain = PlanarChain::small_humanoid();
        let q = alloc::vec![0.0; 5];
        let fk = chain.forward_kinematics(&q);
        assert_relative_eq!(fk.ee.0, 0.0, epsilon = 1e-12);
        assert_relative_eq!(fk.ee.1, chain.base.1 + chain.total_length(), epsilon = 1e-12);
        assert_relative_eq!(fk.com_x, 0.0, epsilon = 1e-12);
        assert_relative_eq!(fk.ee_pitch, 0.0);
    }

    #[test]
    fn two_link_hand_computed() {
        let link = |l: f64| PlanarLink { name: String::from("l"), length: l, mass: 1.0, radius: 0.02 };
        let chain = PlanarChain {
            links: alloc::vec![link(1.0), link(1.0)],
            joint_limits: alloc::vec![(-3.2, 3.2); 2],
            velocity_limits: alloc::vec![1.0; 2],
            base: (0.0, 0.0),
            support: (-0.1, 0.1),
            torso_link: 1,
            bear_mass: 0.0,
        };
        // q = (90 deg, 0): both links point along +x.
        let fk = chain.forward_kinematics(&[core::f64::consts::FRAC_PI_2, 0.0]);
        assert_relative_eq!(fk.ee.0, 2.0, epsilon = 1e-12);
        assert_relative_eq!(fk.ee.1, 0.0, epsilon = 1e-9);
        // q = (90, -90): second link points back up.
        let fk = chain.forward_kinematics(&[core::f64::consts::FRAC_PI_2, -core::f64::consts::FRAC_PI_2]);
        assert_relative_eq!(fk.ee.0, 1.0, epsilon = 1e-12);
        assert_relative_eq!(fk.ee.1, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn com_matches_sampling_oracle() {
        use rand::{Rng, SeedableRng};
        let chain = PlanarChain::small_humanoid();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let q: Vec<f64> = chain
                .joint_limits
                .iter()
                .map(|&(lo, hi)| rng.gen_range(lo..hi))
                .collect();
            let fk = chain.forward_kinematics(&q);
            // Uniform-density sampling of every link, 1000 points per link.
            let mut weighted = chain.bear_mass * fk.ee.0;
            for (link, pair) in chain.links.iter().zip(fk.joints.windows(2)) {
                let mut acc = 0.0;
                let samples = 1000;
                for i in 0..samples {
                    let t = (i as f64 + 0.5) / samples as f64;
                    acc += pair[0].0 + t * (pair[1].0 - pair[0].0);
                }
                weighted += link.mass * acc / samples as f64;
            }
            let oracle = weighted / chain.total_mass();
            assert!((oracle - fk.com_x).abs() < 1e-6, "oracle {oracle} vs {}", fk.com_x);
        }
    }

    #[test]
    fn ee_jacobian_matches_finite_differences() {
        use rand::{Rng, SeedableRng};
        let chain = PlanarChain::small_humanoid();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        for _ in 0..50 {
            let q: Vec<f64> = chain
                .joint_limits
                .iter()
                .map(|&(lo, hi)| rng.gen_range(lo..hi))
                .collect();
            let fk = chain.forward_kinematics(&q);
            let jac = chain.ee_jacobian(&fk);
            let com_grad = chain.com_x_gradient(&fk);
            let h = 1e-6;
            for j in 0..5 {
                let mut qp = q.clone();
                qp[j] += h;
                let mut qm = q.clone();
                qm[j] -= h;
                let fp = chain.forward_kinematics(&qp);
                let fm = chain.forward_kinematics(&qm);
                let fd_x = (fp.ee.0 - fm.ee.0) / (2.0 * h);
                let fd_z = (fp.ee.1 - fm.ee.1) / (2.0 * h);
                let fd_c = (fp.com_x - fm.com_x) / (2.0 * h);
                assert!((fd_x - jac[j].0).abs() < 1e-6, "joint {j}: {fd_x} vs {}", jac[j].0);
                assert!((fd_z - jac[j].1).abs() < 1e-6, "joint {j}: {fd_z} vs {}", jac[j].1);
                assert!((fd_c - com_grad[j]).abs() < 1e-6, "joint {j}: {fd_c} vs {}", com_grad[j]);
            }
        }
    }

    #[test]
    fn segment_rect_distance_cases() {
        let rect = SagittalRect { x_min: 0.0, x_max: 1.0, z_min: 0.0, z_max: 1.0 };
        // Disjoint, parallel to an edge.
        assert_relative_eq!(
            segment_rect_distance((-0.5, 0.5), (-0.2, 0.5), &rect),
            0.2,
            epsilon = 1e-12
        );
        // Endpoint inside.
        assert_relative_eq!(segment_rect_distance((0.5, 0.5), (2.0, 0.5), &rect), 0.0);
        // Crossing straight through.
        assert_relative_eq!(segment_rect_distance((-0.5, 0.5), (1.5, 0.5), &rect), 0.0);
        // Diagonal near a corner.
        let d = segment_rect_distance((1.2, 1.4), (1.4, 1.2), &rect);
        assert_relative_eq!(d, ((0.3f64).powi(2) * 2.0).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn joint_limits_are_enforced() {
        let chain = PlanarChain::small_humanoid();
        assert!(chain.within_limits(&[0.0, 0.0, 0.0, 1.0, 0.0]).is_ok());
        assert!(matches!(
            chain.within_limits(&[-2.0, 0.0, 0.0, 1.0, 0.0]),
            Err(WholebodyError::JointLimit { joint: 0 })
        ));
    }
}
