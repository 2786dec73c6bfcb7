//! Accessibility reasoning and the closed-loop human-assistance protocol:
//! instruct a (simulated) human to rotate the chair, apply the possibly
//! wrong rotation, map all poses through it, and retry planning, up to three
//! rotations.
//!
//! Sign convention: counterclockwise seen from above is positive yaw,
//! everywhere.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use nalgebra::{Point3, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geom::{wrap_angle, yaw_translation, PlanarPose, RigidTransform};
use crate::imagine::SittingPose;
use crate::nav::{
    compute_goal, footprint_collides, plan_se2, Arena, Footprint, GoalParams, NavError,
    PlannerParams, Se2Trajectory,
};
use crate::rng::seeded_rng;

pub const INSTRUCTION_TEMPLATE_PREFIX: &str = "Please rotate the chair about the vertical axis ";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Clockwise,
    Counterclockwise,
}

impl Direction {
    pub fn as_str(&self) -> &'static str {
        match self {
            Direction::Clockwise => "clockwise",
            Direction::Counterclockwise => "counterclockwise",
        }
    }

    /// Sign of the yaw this direction represents (counterclockwise = +1).
    pub fn sign(&self) -> f64 {
        match self {
            Direction::Clockwise => -1.0,
            Direction::Counterclockwise => 1.0,
        }
    }
}

/// A chair-rotation instruction: direction plus a multiple of 30 degrees.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instruction {
    pub direction: Direction,
    pub rotation_angle_degrees: u32,
}

impl Instruction {
    /// Quantize a precise signed rotation (radians, counterclockwise
    /// positive) to the nearest multiple of 30 degrees in [0, 180].
    /// Ties exactly between two multiples round towards the smaller
    /// magnitude; zero renders as clockwise by convention.
    pub fn from_precise(angle: f64) -> Instruction {
        let degrees = wrap_angle(angle).to_degrees();
        let magnitude = degrees.abs();
        let lower = (magnitude / 30.0).floor() * 30.0;
        let rounded = if magnitude - lower > 15.0 { lower + 30.0 } else { lower };
        let rounded = rounded.min(180.0) as u32;
        let direction = if rounded == 0 || degrees >= 0.0 {
            if rounded == 0 {
                Direction::Clockwise
            } else {
                Direction::Counterclockwise
            }
        } else {
            Direction::Clockwise
        };
        Instruction { direction, rotation_angle_degrees: rounded }
    }

    /// Signed rotation in radians (counterclockwise positive).
    pub fn signed_radians(&self) -> f64 {
        self.direction.sign() * (self.rotation_angle_degrees as f64).to_radians()
    }

    /// Exact instruction text given to the human.
    pub fn text(&self) -> String {
        format!(
            "Please rotate the chair about the vertical axis {} for {} degrees!",
            self.direction.as_str(),
            self.rotation_angle_degrees
        )
    }

    /// Parse the rendered template back into direction and angle.
    pub fn parse(text: &str) -> Option<Instruction> {
        let rest = text.strip_prefix(INSTRUCTION_TEMPLATE_PREFIX)?;
        let rest = rest.strip_suffix(" degrees!")?;
        let (dir_str, angle_str) = rest.split_once(" for ")?;
        let direction = match dir_str {
            "clockwise" => Direction::Clockwise,
            "counterclockwise" => Direction::Counterclockwise,
            _ => return None,
        };
        let rotation_angle_degrees: u32 = angle_str.parse().ok()?;
        if rotation_angle_degrees % 30 != 0 || rotation_angle_degrees > 180 {
            return None;
        }
        Some(Instruction { direction, rotation_angle_degrees })
    }
}

/// How the simulated human responds to instructions, per assistance round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HumanPolicy {
    /// Apply the commanded rotation exactly.
    Obey,
    /// Disobey the first instruction (flip the direction or add at least 60
    /// degrees of error, chosen by the seed), then obey.
    DisobeyFirst,
    /// Stubbornly rotate the chair back towards its original (inaccessible)
    /// orientation every round.
    AlwaysDisobey,
}

/// What the human actually did in one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppliedRotation {
    /// Signed yaw actually applied (radians, counterclockwise positive).
    pub angle: f64,
    /// Rotation center: the chair bounding-box center's vertical axis.
    pub center_xy: (f64, f64),
}

impl AppliedRotation {
    /// The rigid transform this rotation applies to everything chair-bound.
    pub fn transform(&self) -> RigidTransform {
        let c = Point3::new(self.center_xy.0, self.center_xy.1, 0.0);
        let spin = yaw_translation(self.angle, Vector3::zeros());
        // Rotate about the vertical axis through the center: T(c) R T(-c).
        yaw_translation(0.0, c.coords)
            * spin
            * yaw_translation(0.0, -c.coords)
    }
}

/// Decide the rotation a human applies for the given instruction, policy,
/// and round. Deterministic in the seed.
pub fn apply_human_rotation(
    instruction: &Instruction,
    policy: HumanPolicy,
    round: usize,
    chair_center_xy: (f64, f64),
    original_yaw_offset: f64,
    seed: u64,
) -> AppliedRotation {
    let commanded = instruction.signed_radians();
    let mut rng = seeded_rng(seed, 0x4855_4D41 ^ round as u64); // human stream
    let angle = match policy {
        HumanPolicy::Obey => commanded,
        HumanPolicy::DisobeyFirst if round > 0 => commanded,
        HumanPolicy::DisobeyFirst => {
            // Equal chance: flip the direction, or inject a >= 60 deg error.
            if rng.gen_bool(0.5) {
                -commanded
            } else {
                let err = 60f64.to_radians() * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                wrap_angle(commanded + err)
            }
        }
        HumanPolicy::AlwaysDisobey => {
            // Undo all accumulated rotation, with a small careless error.
            let jitter = rng.gen_range(-0.12..0.12);
            wrap_angle(-original_yaw_offset + jitter)
        }
    };
    AppliedRotation { angle, center_xy: chair_center_xy }
}

/// Choose the instruction that would make the sitting direction point from
/// the chair towards the robot along an obstacle-free bearing. When the
/// direct bearing to the robot is blocked, the nearest clear bearing (in 5
/// degree sweeps) is used instead.
pub fn required_rotation(
    g: &SittingPose,
    robot_pos: (f64, f64),
    arena: &Arena,
    footprint: &Footprint,
    chair_center_xy: (f64, f64),
) -> Instruction {
    let to_robot =
        (robot_pos.1 - chair_center_xy.1).atan2(robot_pos.0 - chair_center_xy.0);
    let dist =
        ((robot_pos.0 - chair_center_xy.0).powi(2) + (robot_pos.1 - chair_center_xy.1).powi(2)).sqrt();

    let clear = |bearing: f64| -> bool {
        segment_clear(arena, footprint, chair_center_xy, bearing, dist)
    };

    let mut target = to_robot;
    if !clear(to_robot) {
        let step = 5f64.to_radians();
        for k in 1..=36 {
            let delta = k as f64 * step;
            if clear(to_robot + delta) {
                target = to_robot + delta;
                break;
            }
            if clear(to_robot - delta) {
                target = to_robot - delta;
                break;
            }
        }
    }
    Instruction::from_precise(wrap_angle(target - g.yaw))
}

/// The chair-to-robot segment, inflated by the footprint's minor semi-axis,
/// avoids every obstacle (the chair's own footprint is ignored).
fn segment_clear(
    arena: &Arena,
    footprint: &Footprint,
    from: (f64, f64),
    bearing: f64,
    length: f64,
) -> bool {
    let r = footprint.semi_minor;
    let (s, c) = bearing.sin_cos();
    // March the segment, skipping the chair-adjacent first stretch.
    let mut t = 0.10_f64;
    while t < length {
        let x = from.0 + t * c;
        let y = from.1 + t * s;
        if !arena.contains_point(x, y) {
            return false;
        }
        for poly in &arena.obstacles {
            let mut local: Vec<(f64, f64)> = Vec::with_capacity(poly.len());
            for &(px, py) in poly {
                local.push((px - x, py - y));
            }
            if crate::nav::origin_hits_polygon(&local, r) {
                return false;
            }
        }
        t += 0.02;
    }
    true
}

/// One round of the assistance loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssistanceRound {
    pub instruction: Instruction,
    pub instruction_text: String,
    pub applied: AppliedRotation,
    pub plan_found: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AssistanceStatus {
    Accessible,
    Failed,
}

/// Outcome of the closed-loop protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssistanceOutcome {
    pub rounds: Vec<AssistanceRound>,
    pub status: AssistanceStatus,
    /// Sitting pose after all applied rotations.
    pub final_pose: SittingPose,
    /// Accumulated rigid transform of the chair.
    pub total_rotation: RigidTransform,
    pub final_goal: Option<PlanarPose>,
    pub final_adjusted_position: Option<Point3<f64>>,
    pub final_trajectory: Option<Se2Trajectory>,
}

/// Mutable view of the chair state the loop updates each round.
pub struct ChairState {
    /// Sitting pose in the world frame.
    pub pose: SittingPose,
    /// Chair bounding-box footprint corners in the world frame.
    pub footprint_corners: [(f64, f64); 4],
    /// Chair bounding-box center (rotation pivot).
    pub center_xy: (f64, f64),
}

impl ChairState {
    fn apply(&mut self, g: &RigidTransform) {
        self.pose = self.pose.transformed(g);
        for corner in &mut self.footprint_corners {
            let p = g.transform_point(&Point3::new(corner.0, corner.1, 0.0));
            *corner = (p.x, p.y);
        }
        let c = g.transform_point(&Point3::new(self.center_xy.0, self.center_xy.1, 0.0));
        self.center_xy = (c.x, c.y);
    }
}

/// Run the assistance protocol: instruct, rotate, update poses, re-plan.
/// Precondition: the initial plan attempt failed. Stops at the first valid
/// plan or after `max_rounds` rotations.
#[allow(clippy::too_many_arguments)]
pub fn assistance_loop(
    chair: &mut ChairState,
    robot_pose: &PlanarPose,
    arena: &mut Arena,
    footprint: &Footprint,
    goal_params: &GoalParams,
    planner_params: &PlannerParams,
    policy: HumanPolicy,
    max_rounds: usize,
    seed: u64,
) -> AssistanceOutcome {
    let mut rounds = Vec::new();
    let mut total_rotation = RigidTransform::identity();
    let mut accumulated_yaw = 0.0_f64;
    let mut final_goal = None;
    let mut final_adjusted = None;
    let mut final_traj = None;
    let mut status = AssistanceStatus::Failed;

    for round in 0..max_rounds {
        let instruction =
            required_rotation(&chair.pose, (robot_pose.x, robot_pose.y), arena, footprint, chair.center_xy);
        let applied = apply_human_rotation(
            &instruction,
            policy,
            round,
            chair.center_xy,
            accumulated_yaw,
            seed,
        );
        let g_rot = applied.transform();
        chair.apply(&g_rot);
        accumulated_yaw = wrap_angle(accumulated_yaw + applied.angle);
        total_rotation = crate::geom::compose(&g_rot, &total_rotation);
        arena.set_chair_footprint(Some(chair.footprint_corners));

        let plan = compute_goal(&chair.pose, arena, footprint, goal_params).and_then(
            |(goal, adjusted)| {
                plan_se2(robot_pose, &goal, arena, footprint, seed ^ (round as u64 + 1), planner_params)
                    .map(|traj| (goal, adjusted, traj))
            },
        );
        let plan_found = plan.is_ok();
        rounds.push(AssistanceRound {
            instruction_text: instruction.text(),
            instruction,
            applied,
            plan_found,
        });
        if let Ok((goal, adjusted, traj)) = plan {
            final_goal = Some(goal);
            final_adjusted = Some(adjusted);
            final_traj = Some(traj);
            status = AssistanceStatus::Accessible;
            break;
        }
    }

    AssistanceOutcome {
        rounds,
        status,
        final_pose: chair.pose,
        total_rotation,
        final_goal,
        final_adjusted_position: final_adjusted,
        final_trajectory: final_traj,
    }
}

/// Convenience used by tests and the trial runner: attempt goal + plan once.
pub fn try_plan(
    pose: &SittingPose,
    robot_pose: &PlanarPose,
    arena: &Arena,
    footprint: &Footprint,
    goal_params: &GoalParams,
    planner_params: &PlannerParams,
    seed: u64,
) -> Result<(PlanarPose, Point3<f64>, Se2Trajectory), NavError> {
    let (goal, adjusted) = compute_goal(pose, arena, footprint, goal_params)?;
    let traj = plan_se2(robot_pose, &goal, arena, footprint, seed, planner_params)?;
    let _ = footprint_collides(&goal, arena, footprint);
    Ok((goal, adjusted, traj))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn quantization_hits_nearest_multiple_of_30() {
        let i = Instruction::from_precise(85f64.to_radians());
        assert_eq!(i.direction, Direction::Counterclockwise);
        assert_eq!(i.rotation_angle_degrees, 90);

        let i = Instruction::from_precise(-50f64.to_radians());
        assert_eq!(i.direction, Direction::Clockwise);
        assert_eq!(i.rotation_angle_degrees, 60);

        // Identity case.
        let i = Instruction::from_precise(0.0);
        assert_eq!(i.rotation_angle_degrees, 0);

        // Antipodal case maps to 180.
        let i = Instruction::from_precise(core::f64::consts::PI);
        assert_eq!(i.rotation_angle_degrees, 180);

        // Exact 15-degree tie rounds towards the smaller magnitude.
        let i = Instruction::from_precise(45f64.to_radians());
        assert_eq!(i.rotation_angle_degrees, 30);
        let i = Instruction::from_precise(-15f64.to_radians());
        assert_eq!(i.rotation_angle_degrees, 0);
    }

    #[test]
    fn instruction_text_matches_template_and_parses_back() {
        let i = Instruction { direction: Direction::Counterclockwise, rotation_angle_degrees: 90 };
        assert_eq!(
            i.text(),
            "Please rotate the chair about the vertical axis counterclockwise for 90 degrees!"
        );
        assert_eq!(Instruction::parse(&i.text()), Some(i.clone()));
        for angle in [0u32, 30, 60, 90, 120, 150, 180] {
            for direction in [Direction::Clockwise, Direction::Counterclockwise] {
                let i = Instruction { direction, rotation_angle_degrees: angle };
                assert_eq!(Instruction::parse(&i.text()).unwrap(), i);
            }
        }
        assert_eq!(Instruction::parse("Please do something else"), None);
    }

    #[test]
    fn obey_rotation_is_exact_about_the_obb_center() {
        let i = Instruction { direction: Direction::Counterclockwise, rotation_angle_degrees: 90 };
        let applied = apply_human_rotation(&i, HumanPolicy::Obey, 0, (0.5, 0.0), 0.0, 1);
        assert_relative_eq!(applied.angle, core::f64::consts::FRAC_PI_2, epsilon = 1e-12);
        let g = applied.transform();
        // The pivot stays fixed; a point 0.2 ahead of it orbits 90 degrees.
        let pivot = g.transform_point(&Point3::new(0.5, 0.0, 0.0));
        assert!((pivot - Point3::new(0.5, 0.0, 0.0)).norm() < 1e-12);
        let p = g.transform_point(&Point3::new(0.7, 0.0, 0.1));
        assert_relative_eq!(p.x, 0.5, epsilon = 1e-12);
        assert_relative_eq!(p.y, 0.2, epsilon = 1e-12);
        assert_relative_eq!(p.z, 0.1, epsilon = 1e-12);
    }

    #[test]
    fn obey_zero_is_identity() {
        let i = Instruction { direction: Direction::Clockwise, rotation_angle_degrees: 0 };
        let applied = apply_human_rotation(&i, HumanPolicy::Obey, 0, (0.3, -0.2), 0.0, 9);
        let g = applied.transform();
        assert!(g.translation.vector.norm() < 1e-12);
        assert!(g.rotation.angle() < 1e-12);
    }

    #[test]
    fn disobey_first_round_is_off_by_sixty_or_flipped() {
        let i = Instruction { direction: Direction::Counterclockwise, rotation_angle_degrees: 90 };
        for seed in 0..32u64 {
            let applied = apply_human_rotation(&i, HumanPolicy::DisobeyFirst, 0, (0.0, 0.0), 0.0, seed);
            let commanded = i.signed_radians();
            let err = wrap_angle(applied.angle - commanded).abs();
            let flipped = (applied.angle + commanded).abs() < 1e-9;
            assert!(
                flipped || err >= 60f64.to_radians() - 1e-9,
                "seed {seed}: angle {} not a valid disobedience",
                applied.angle
            );
            // Reproducible.
            let again = apply_human_rotation(&i, HumanPolicy::DisobeyFirst, 0, (0.0, 0.0), 0.0, seed);
            assert_eq!(applied, again);
            // Round 1 obeys.
            let obeyed = apply_human_rotation(&i, HumanPolicy::DisobeyFirst, 1, (0.0, 0.0), 0.0, seed);
            assert_relative_eq!(obeyed.angle, commanded, epsilon = 1e-12);
        }
    }

    #[test]
    fn required_rotation_identity_when_facing_the_robot() {
        let arena = Arena::new(-1.25, -1.25, 1.25, 1.25);
        let fp = Footprint::default();
        let g = SittingPose { position: Point3::new(0.0, 0.0, 0.25), yaw: 0.0 };
        let i = required_rotation(&g, (1.0, 0.0), &arena, &fp, (0.0, 0.0));
        assert_eq!(i.rotation_angle_degrees, 0);
    }

    #[test]
    fn required_rotation_antipodal_gives_180() {
        let arena = Arena::new(-1.25, -1.25, 1.25, 1.25);
        let fp = Footprint::default();
        let g = SittingPose { position: Point3::new(0.0, 0.0, 0.25), yaw: core::f64::consts::PI };
        let i = required_rotation(&g, (1.0, 0.0), &arena, &fp, (0.0, 0.0));
        assert_eq!(i.rotation_angle_degrees, 180);
    }

    #[test]
    fn required_rotation_prefers_clear_bearings() {
        let mut arena = Arena::new(-1.25, -1.25, 1.25, 1.25);
        // Wall between chair and robot.
        arena.add_polygon(alloc::vec![(0.4, -0.3), (0.5, -0.3), (0.5, 0.3), (0.4, 0.3)]);
        let fp = Footprint::default();
        let g = SittingPose { position: Point3::new(0.0, 0.0, 0.25), yaw: 0.0 };
        let i = required_rotation(&g, (1.0, 0.0), &arena, &fp, (0.0, 0.0));
        // The direct bearing is blocked; a rotation is required.
        assert!(i.rotation_angle_degrees > 0, "{i:?}");
    }
}
