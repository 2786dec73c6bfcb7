//! SE(2) goal computation, ellipse-footprint collision checking and
//! RRT-Connect planning for the walk to the chair.

mod rrt;

pub use rrt::{follow_waypoints, plan_se2, PlannerParams, Se2Trajectory};

use alloc::vec::Vec;
use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use crate::geom::{wrap_angle, PlanarPose};
use crate::imagine::SittingPose;

/// Planning arena: rectangular bounds, static convex obstacles, and the
/// chair footprint (updated when the chair is rotated).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arena {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    /// Convex polygons, counterclockwise. Discs are polygonized on insertion.
    pub obstacles: Vec<Vec<(f64, f64)>>,
    /// Corners of the chair's bounding-box footprint, if a chair is present.
    pub chair_footprint: Option<[(f64, f64); 4]>,
}

impl Arena {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Self {
        Self { x_min, x_max, y_min, y_max, obstacles: Vec::new(), chair_footprint: None }
    }

    pub fn add_polygon(&mut self, corners: Vec<(f64, f64)>) {
        self.obstacles.push(corners);
    }

    /// Discs become circumscribed 32-gons so the polygon fully covers the
    /// disc (collision stays conservative).
    pub fn add_disc(&mut self, center: (f64, f64), radius: f64) {
        let n = 32;
        let r = radius / (core::f64::consts::PI / n as f64).cos();
        let poly = (0..n)
            .map(|i| {
                let a = i as f64 / n as f64 * core::f64::consts::TAU;
                (center.0 + r * a.cos(), center.1 + r * a.sin())
            })
            .collect();
        self.obstacles.push(poly);
    }

    pub fn set_chair_footprint(&mut self, corners: Option<[(f64, f64); 4]>) {
        self.chair_footprint = corners;
    }

    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }

    fn polygons(&self) -> impl Iterator<Item = &[(f64, f64)]> {
        self.obstacles
            .iter()
            .map(|p| p.as_slice())
            .chain(self.chair_footprint.as_ref().map(|c| c.as_slice()))
    }
}

/// Ellipse approximating the walking robot's horizontal extent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Footprint {
    /// Semi-axis along the robot's heading (m).
    pub semi_major: f64,
    /// Lateral semi-axis (m).
    pub semi_minor: f64,
}

impl Default for Footprint {
    fn default() -> Self {
        Self { semi_major: 0.12, semi_minor: 0.10 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NavError {
    /// No collision-free trajectory within the sampling budget, or the goal
    /// itself is in collision. Triggers the assistance protocol.
    NoPlan,
    /// The advanced goal left the arena bounds. Triggers assistance.
    GoalOutsideArena,
}

impl core::fmt::Display for NavError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            NavError::NoPlan => write!(f, "no SE(2) plan found"),
            NavError::GoalOutsideArena => write!(f, "goal left the arena bounds"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for NavError {}

/// True when the ellipse footprint at `pose` leaves the bounds or touches
/// any obstacle polygon.
pub fn footprint_collides(pose: &PlanarPose, arena: &Arena, footprint: &Footprint) -> bool {
    let (a, b) = (footprint.semi_major, footprint.semi_minor);
    let (s, c) = pose.heading.sin_cos();

    // Extent of the rotated ellipse along the world axes.
    let half_x = ((a * c) * (a * c) + (b * s) * (b * s)).sqrt();
    let half_y = ((a * s) * (a * s) + (b * c) * (b * c)).sqrt();
    if pose.x - half_x < arena.x_min
        || pose.x + half_x > arena.x_max
        || pose.y - half_y < arena.y_min
        || pose.y + half_y > arena.y_max
    {
        return true;
    }

    // Map each polygon into the ellipse's unit-circle frame.
    for poly in arena.polygons() {
        let mut scaled: Vec<(f64, f64)> = Vec::with_capacity(poly.len());
        for &(px, py) in poly {
            let dx = px - pose.x;
            let dy = py - pose.y;
            let lx = (c * dx + s * dy) / a;
            let ly = (-s * dx + c * dy) / b;
            scaled.push((lx, ly));
        }
        if origin_hits_polygon(&scaled, 1.0) {
            return true;
        }
    }
    false
}

/// Distance from the origin to a convex polygon is at most `r`, counting
/// containment as zero distance.
pub(crate) fn origin_hits_polygon(poly: &[(f64, f64)], r: f64) -> bool {
    if poly.len() < 2 {
        if let Some(&(x, y)) = poly.first() {
            return x * x + y * y <= r * r;
        }
        return false;
    }
    let mut inside = true;
    let mut sign = 0.0f64;
    let mut min_d2 = f64::INFINITY;
    for i in 0..poly.len() {
        let (x0, y0) = poly[i];
        let (x1, y1) = poly[(i + 1) % poly.len()];
        let cross = (x1 - x0) * (0.0 - y0) - (y1 - y0) * (0.0 - x0);
        if sign == 0.0 {
            sign = cross.signum();
        } else if cross.signum() != sign && cross != 0.0 {
            inside = false;
        }
        // Point-segment distance from the origin.
        let (ex, ey) = (x1 - x0, y1 - y0);
        let len2 = ex * ex + ey * ey;
        let t = if len2 > 1e-18 { ((-x0) * ex + (-y0) * ey) / len2 } else { 0.0 };
        let t = t.clamp(0.0, 1.0);
        let (qx, qy) = (x0 + t * ex, y0 + t * ey);
        min_d2 = min_d2.min(qx * qx + qy * qy);
    }
    inside || min_d2 <= r * r
}

/// Parameters for placing the SE(2) goal in front of the sitting pose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoalParams {
    /// Initial stand-off distance from the sitting position (m).
    pub l_init: f64,
    /// Maximum reach from the robot to the sitting position (m); the sitting
    /// position is pulled towards the robot when exceeded.
    pub d_max_reach: f64,
    /// Ray-advance step while searching for a collision-free stand point.
    pub step: f64,
}

impl Default for GoalParams {
    fn default() -> Self {
        Self { l_init: 0.25, d_max_reach: 0.35, step: 0.01 }
    }
}

/// Compute the SE(2) goal pose for placing the bear: on the ray from the
/// sitting position along the sitting direction, facing back at the chair,
/// advanced until the footprint is collision-free. When the stand point ends
/// up farther than `d_max_reach`, the sitting position itself is moved along
/// the ray towards the robot and returned as the adjusted position.
pub fn compute_goal(
    g: &SittingPose,
    arena: &Arena,
    footprint: &Footprint,
    params: &GoalParams,
) -> Result<(PlanarPose, Point3<f64>), NavError> {
    let (dx, dy) = g.direction();
    let heading = wrap_angle(g.yaw + core::f64::consts::PI);
    let mut t = params.l_init;
    let t_limit = {
        // The ray cannot stay inside the bounds longer than the diagonal.
        let w = arena.x_max - arena.x_min;
        let h = arena.y_max - arena.y_min;
        (w * w + h * h).sqrt() + params.l_init
    };
    loop {
        let pose = PlanarPose::new(g.position.x + t * dx, g.position.y + t * dy, heading);
        if !arena.contains_point(pose.x, pose.y) || t > t_limit {
            return Err(NavError::GoalOutsideArena);
        }
        if !footprint_collides(&pose, arena, footprint) {
            let mut adjusted = g.position;
            if t > params.d_max_reach {
                let pull = t - params.d_max_reach;
                adjusted.x += pull * dx;
                adjusted.y += pull * dy;
            }
            return Ok((pose, adjusted));
        }
        t += params.step;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn open_arena() -> Arena {
        Arena::new(-1.25, -1.25, 1.25, 1.25)
    }

    #[test]
    fn free_pose_does_not_collide() {
        let arena = open_arena();
        let fp = Footprint::default();
        assert!(!footprint_collides(&PlanarPose::new(0.0, 0.0, 0.3), &arena, &fp));
        // Out of bounds collides.
        assert!(footprint_collides(&PlanarPose::new(1.2, 0.0, 0.0), &arena, &fp));
    }

    #[test]
    fn pose_inside_obstacle_collides() {
        let mut arena = open_arena();
        arena.add_polygon(alloc::vec![(-0.2, -0.2), (0.2, -0.2), (0.2, 0.2), (-0.2, 0.2)]);
        let fp = Footprint::default();
        assert!(footprint_collides(&PlanarPose::new(0.0, 0.0, 0.0), &arena, &fp));
        assert!(!footprint_collides(&PlanarPose::new(0.8, 0.8, 0.0), &arena, &fp));
    }

    #[test]
    fn tangency_matches_point_sampling_oracle() {
        // Ellipse near a box edge: compare against dense boundary sampling
        // at offsets within a millimetre of tangency.
        let mut arena = open_arena();
        let poly = alloc::vec![(0.3, -0.5), (0.9, -0.5), (0.9, 0.5), (0.3, 0.5)];
        arena.add_polygon(poly.clone());
        let fp = Footprint { semi_major: 0.12, semi_minor: 0.08 };
        for heading in [0.0, 0.4, core::f64::consts::FRAC_PI_2, 2.2] {
            for offset in [-0.004, -0.002, -0.001, 0.0005, 0.001, 0.002, 0.004] {
                // Distance from ellipse center to the x=0.3 edge equals the
                // ellipse's extent along x plus the offset.
                let (s, c) = heading.sin_cos();
                let a = fp.semi_major;
                let b = fp.semi_minor;
                let half_x = ((a * c) * (a * c) + (b * s) * (b * s)).sqrt();
                let pose = PlanarPose::new(0.3 - half_x - offset, 0.0, heading);
                let fast = footprint_collides(&pose, &arena, &fp);
                // Oracle: sample 10^4 boundary points, any inside the box or
                // box corner inside the ellipse.
                let mut oracle = false;
                for i in 0..10_000 {
                    let t = i as f64 / 10_000.0 * core::f64::consts::TAU;
                    let ex = a * t.cos();
                    let ey = b * t.sin();
                    let x = pose.x + c * ex - s * ey;
                    let y = pose.y + s * ex + c * ey;
                    if (0.3..=0.9).contains(&x) && (-0.5..=0.5).contains(&y) {
                        oracle = true;
                        break;
                    }
                }
                assert_eq!(fast, oracle, "heading {heading} offset {offset}");
            }
        }
    }

    #[test]
    fn tiny_obstacle_inside_ellipse_is_detected() {
        let mut arena = open_arena();
        arena.add_polygon(alloc::vec![(-0.01, -0.01), (0.01, -0.01), (0.01, 0.01), (-0.01, 0.01)]);
        let fp = Footprint::default();
        assert!(footprint_collides(&PlanarPose::new(0.0, 0.0, 0.0), &arena, &fp));
    }

    #[test]
    fn goal_straight_ahead_in_empty_arena() {
        let arena = open_arena();
        let fp = Footprint::default();
        let g = SittingPose { position: Point3::new(0.5, 0.0, 0.3), yaw: 0.0 };
        let params = GoalParams { l_init: 0.3, d_max_reach: 10.0, step: 0.01 };
        let (goal, adjusted) = compute_goal(&g, &arena, &fp, &params).unwrap();
        assert_relative_eq!(goal.x, 0.8, epsilon = 1e-12);
        assert_relative_eq!(goal.y, 0.0, epsilon = 1e-12);
        assert_relative_eq!(goal.heading.abs(), core::f64::consts::PI, epsilon = 1e-12);
        assert_relative_eq!(adjusted.x, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn goal_advances_past_chair_footprint() {
        let mut arena = open_arena();
        // Chair footprint extends 0.35 m past the sitting position along +x.
        arena.set_chair_footprint(Some([(-0.35, -0.2), (0.35, -0.2), (0.35, 0.2), (-0.35, 0.2)]));
        let fp = Footprint::default();
        let g = SittingPose { position: Point3::new(0.0, 0.0, 0.3), yaw: 0.0 };
        let params = GoalParams { l_init: 0.25, d_max_reach: 10.0, step: 0.01 };
        let (goal, _) = compute_goal(&g, &arena, &fp, &params).unwrap();
        assert!(goal.x > 0.35, "goal {goal:?} should clear the chair");
        assert!(!footprint_collides(&goal, &arena, &fp));
    }

    #[test]
    fn far_goal_pulls_the_sitting_position_closer() {
        let mut arena = open_arena();
        // Obstacles force the stand point out to 0.6 m.
        arena.set_chair_footprint(Some([(-0.5, -0.2), (0.47, -0.2), (0.47, 0.2), (-0.5, 0.2)]));
        let fp = Footprint::default();
        let g = SittingPose { position: Point3::new(0.0, 0.0, 0.3), yaw: 0.0 };
        let params = GoalParams { l_init: 0.25, d_max_reach: 0.4, step: 0.01 };
        let (goal, adjusted) = compute_goal(&g, &arena, &fp, &params).unwrap();
        let dist = goal.x; // goal on the +x ray
        assert!(dist > 0.4, "expected reach overflow, goal at {dist}");
        assert_relative_eq!(adjusted.x, dist - 0.4, epsilon = 1e-12);
        assert_relative_eq!(adjusted.z, 0.3, epsilon = 1e-12);
    }

    #[test]
    fn goal_outside_arena_is_an_error() {
        let arena = Arena::new(-0.6, -0.6, 0.6, 0.6);
        let fp = Footprint::default();
        // Sitting direction points at the nearby wall.
        let g = SittingPose { position: Point3::new(0.45, 0.0, 0.3), yaw: 0.0 };
        let params = GoalParams::default();
        assert_eq!(compute_goal(&g, &arena, &fp, &params), Err(NavError::GoalOutsideArena));
    }
}
