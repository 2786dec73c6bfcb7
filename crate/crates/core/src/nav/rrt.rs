//! Bidirectional RRT-Connect over SE(2) with shortcutting.

use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{footprint_collides, Arena, Footprint, NavError};
use crate::geom::{angle_diff, PlanarPose};
use crate::rng::seeded_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerParams {
    /// Sampling budget.
    pub max_iterations: usize,
    /// Extension step in the weighted metric (m).
    pub step: f64,
    /// Heading weight: metres of cost per radian of turn.
    pub heading_weight: f64,
    /// Edge-validation resolution.
    pub resolution_xy: f64,
    pub resolution_heading: f64,
    pub shortcut_attempts: usize,
}

impl Default for PlannerParams {
    fn default() -> Self {
        Self {
            max_iterations: 20_000,
            step: 0.10,
            heading_weight: 0.3,
            resolution_xy: 0.01,
            resolution_heading: 2f64.to_radians(),
            shortcut_attempts: 200,
        }
    }
}

/// Waypoint list plus the validation resolution its edges were checked at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Se2Trajectory {
    pub waypoints: Vec<PlanarPose>,
    pub resolution_xy: f64,
    pub resolution_heading: f64,
}

impl Se2Trajectory {
    /// Weighted path length (xy metres plus weighted heading arc).
    pub fn length(&self, heading_weight: f64) -> f64 {
        self.waypoints
            .windows(2)
            .map(|w| weighted_distance(&w[0], &w[1], heading_weight))
            .sum()
    }

    pub fn xy_length(&self) -> f64 {
        self.waypoints.windows(2).map(|w| w[0].xy_distance(&w[1])).sum()
    }

    pub fn end(&self) -> PlanarPose {
        *self.waypoints.last().expect("trajectory never empty")
    }
}

pub fn weighted_distance(a: &PlanarPose, b: &PlanarPose, heading_weight: f64) -> f64 {
    a.xy_distance(b) + heading_weight * angle_diff(b.heading, a.heading).abs()
}

/// Densified collision check of the straight (shortest-arc) segment.
pub fn edge_valid(
    a: &PlanarPose,
    b: &PlanarPose,
    arena: &Arena,
    footprint: &Footprint,
    params: &PlannerParams,
) -> bool {
    let steps = segment_steps(a, b, params.resolution_xy, params.resolution_heading);
    for i in 0..=steps {
        let t = i as f64 / steps as f64;
        if footprint_collides(&a.interpolate(b, t), arena, footprint) {
            return false;
        }
    }
    true
}

fn segment_steps(a: &PlanarPose, b: &PlanarPose, res_xy: f64, res_heading: f64) -> usize {
    let n_xy = (a.xy_distance(b) / res_xy).ceil() as usize;
    let n_h = (angle_diff(b.heading, a.heading).abs() / res_heading).ceil() as usize;
    n_xy.max(n_h).max(1)
}

struct Tree {
    nodes: Vec<PlanarPose>,
    parents: Vec<usize>,
}

impl Tree {
    fn new(root: PlanarPose) -> Self {
        Self { nodes: alloc::vec![root], parents: alloc::vec![usize::MAX] }
    }

    fn nearest(&self, q: &PlanarPose, w: f64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, n) in self.nodes.iter().enumerate() {
            let d = weighted_distance(n, q, w);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    fn path_from_root(&self, mut i: usize) -> Vec<PlanarPose> {
        let mut path = Vec::new();
        while i != usize::MAX {
            path.push(self.nodes[i]);
            i = self.parents[i];
        }
        path.reverse();
        path
    }
}

enum Extend {
    Reached(usize),
    Advanced(usize),
    Trapped,
}

fn extend(
    tree: &mut Tree,
    target: &PlanarPose,
    arena: &Arena,
    footprint: &Footprint,
    params: &PlannerParams,
) -> Extend {
    let near = tree.nearest(target, params.heading_weight);
    let from = tree.nodes[near];
    let d = weighted_distance(&from, target, params.heading_weight);
    let (q_new, reached) = if d <= params.step {
        (*target, true)
    } else {
        (from.interpolate(target, params.step / d), false)
    };
    if !edge_valid(&from, &q_new, arena, footprint, params) {
        return Extend::Trapped;
    }
    tree.nodes.push(q_new);
    tree.parents.push(near);
    let idx = tree.nodes.len() - 1;
    if reached {
        Extend::Reached(idx)
    } else {
        Extend::Advanced(idx)
    }
}

/// Plan a collision-free SE(2) trajectory with bidirectional RRT-Connect.
/// Deterministic in the seed.
pub fn plan_se2(
    start: &PlanarPose,
    goal: &PlanarPose,
    arena: &Arena,
    footprint: &Footprint,
    seed: u64,
    params: &PlannerParams,
) -> Result<Se2Trajectory, NavError> {
    if footprint_collides(goal, arena, footprint) || footprint_collides(start, arena, footprint) {
        return Err(NavError::NoPlan);
    }
    if edge_valid(start, goal, arena, footprint, params) {
        let path = alloc::vec![*start, *goal];
        return Ok(finish_path(path, arena, footprint, seed, params));
    }

    let mut rng = seeded_rng(seed, 0x5252_5443); // planner stream
    let mut tree_a = Tree::new(*start);
    let mut tree_b = Tree::new(*goal);
    let mut a_is_start = true;

    for _ in 0..params.max_iterations {
        let q_rand = PlanarPose::new(
            rng.gen_range(arena.x_min..arena.x_max),
            rng.gen_range(arena.y_min..arena.y_max),
            rng.gen_range(-core::f64::consts::PI..core::f64::consts::PI),
        );
        let extended = match extend(&mut tree_a, &q_rand, arena, footprint, params) {
            Extend::Trapped => None,
            Extend::Reached(i) | Extend::Advanced(i) => Some(i),
        };
        if let Some(new_idx) = extended {
            let q_new = tree_a.nodes[new_idx];
            // Greedily connect the other tree to the new node.
            let met = loop {
                match extend(&mut tree_b, &q_new, arena, footprint, params) {
                    Extend::Reached(j) => break Some(j),
                    Extend::Advanced(_) => continue,
                    Extend::Trapped => break None,
                }
            };
            if let Some(met_idx) = met {
                let mut path_a = tree_a.path_from_root(new_idx);
                let path_b = tree_b.path_from_root(met_idx);
                // One tree grows from the goal; orient start -> goal.
                if a_is_start {
                    path_a.extend(path_b.into_iter().rev());
                } else {
                    let mut p = path_b;
                    p.extend(path_a.into_iter().rev());
                    path_a = p;
                }
                return Ok(finish_path(path_a, arena, footprint, seed, params));
            }
        }
        core::mem::swap(&mut tree_a, &mut tree_b);
        a_is_start = !a_is_start;
    }
    Err(NavError::NoPlan)
}

/// Shortcut pass plus final densified validation.
fn finish_path(
    mut path: Vec<PlanarPose>,
    arena: &Arena,
    footprint: &Footprint,
    seed: u64,
    params: &PlannerParams,
) -> Se2Trajectory {
    let mut rng = seeded_rng(seed, 0x5348_4354); // shortcut stream
    for _ in 0..params.shortcut_attempts {
        if path.len() < 3 {
            break;
        }
        let i = rng.gen_range(0..path.len() - 2);
        let j = rng.gen_range(i + 2..path.len());
        let direct = weighted_distance(&path[i], &path[j], params.heading_weight);
        let via: f64 = path[i..=j]
            .windows(2)
            .map(|w| weighted_distance(&w[0], &w[1], params.heading_weight))
            .sum();
        if direct < via && edge_valid(&path[i], &path[j], arena, footprint, params) {
            path.drain(i + 1..j);
        }
    }
    debug_assert!(trajectory_collision_free(&path, arena, footprint, params));
    Se2Trajectory {
        waypoints: path,
        resolution_xy: params.resolution_xy,
        resolution_heading: params.resolution_heading,
    }
}

pub fn trajectory_collision_free(
    path: &[PlanarPose],
    arena: &Arena,
    footprint: &Footprint,
    params: &PlannerParams,
) -> bool {
    path.windows(2).all(|w| edge_valid(&w[0], &w[1], arena, footprint, params))
        && path.first().map(|p| !footprint_collides(p, arena, footprint)).unwrap_or(true)
}

/// Kinematically walk the trajectory: densify each segment, optionally
/// perturb every emitted pose within the given bounds (walking drift),
/// always ending at the final waypoint perturbed at most by the same bounds.
pub fn follow_waypoints(
    traj: &Se2Trajectory,
    noise: Option<(f64, f64)>,
    seed: u64,
) -> Vec<PlanarPose> {
    let mut rng = seeded_rng(seed, 0x464F_4C57); // follower stream
    let mut out = Vec::new();
    if traj.waypoints.len() == 1 {
        out.push(traj.waypoints[0]);
    } else {
        for w in traj.waypoints.windows(2) {
            let steps = segment_steps(&w[0], &w[1], 0.02, 5f64.to_radians());
            for i in 0..steps {
                let t = i as f64 / steps as f64;
                out.push(w[0].interpolate(&w[1], t));
            }
        }
        out.push(*traj.waypoints.last().expect("non-empty"));
    }
    if let Some((pos_bound, heading_bound)) = noise {
        for pose in &mut out {
            pose.x += rng.gen_range(-pos_bound..=pos_bound);
            pose.y += rng.gen_range(-pos_bound..=pos_bound);
            pose.heading =
                crate::geom::wrap_angle(pose.heading + rng.gen_range(-heading_bound..=heading_bound));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn open_arena() -> Arena {
        Arena::new(-1.25, -1.25, 1.25, 1.25)
    }

    #[test]
    fn straight_line_plan_in_empty_arena() {
        let arena = open_arena();
        let fp = Footprint::default();
        let params = PlannerParams::default();
        let start = PlanarPose::new(0.0, 0.0, 0.0);
        let goal = PlanarPose::new(1.0, 0.0, core::f64::consts::PI);
        let traj = plan_se2(&start, &goal, &arena, &fp, 7, &params).unwrap();
        assert!(traj.xy_length() >= 1.0 - 1e-9);
        assert!(traj.xy_length() <= 1.5, "length {}", traj.xy_length());
        assert_eq!(traj.end(), goal);
    }

    #[test]
    fn goal_in_collision_is_no_plan() {
        let mut arena = open_arena();
        arena.set_chair_footprint(Some([(0.8, -0.2), (1.2, -0.2), (1.2, 0.2), (0.8, 0.2)]));
        let fp = Footprint::default();
        let params = PlannerParams::default();
        let start = PlanarPose::new(-0.5, 0.0, 0.0);
        let goal = PlanarPose::new(1.0, 0.0, 0.0);
        assert_eq!(plan_se2(&start, &goal, &arena, &fp, 7, &params), Err(NavError::NoPlan));
    }

    #[test]
    fn wall_split_arena_is_no_plan() {
        let mut arena = open_arena();
        // Full-height wall through the middle.
        arena.add_polygon(alloc::vec![(-0.05, -1.25), (0.05, -1.25), (0.05, 1.25), (-0.05, 1.25)]);
        let fp = Footprint::default();
        let mut params = PlannerParams::default();
        params.max_iterations = 3000;
        let start = PlanarPose::new(-0.8, 0.0, 0.0);
        let goal = PlanarPose::new(0.8, 0.0, 0.0);
        assert_eq!(plan_se2(&start, &goal, &arena, &fp, 7, &params), Err(NavError::NoPlan));
    }

    #[test]
    fn plan_around_an_obstacle_is_collision_free() {
        let mut arena = open_arena();
        arena.add_polygon(alloc::vec![(-0.2, -0.6), (0.2, -0.6), (0.2, 0.6), (-0.2, 0.6)]);
        let fp = Footprint::default();
        let params = PlannerParams::default();
        let start = PlanarPose::new(-0.8, 0.0, 0.0);
        let goal = PlanarPose::new(0.8, 0.0, 0.0);
        let traj = plan_se2(&start, &goal, &arena, &fp, 11, &params).unwrap();
        // Re-validate at half resolution.
        let strict = PlannerParams {
            resolution_xy: params.resolution_xy / 2.0,
            resolution_heading: params.resolution_heading / 2.0,
            ..params
        };
        assert!(trajectory_collision_free(&traj.waypoints, &arena, &fp, &strict));
        assert_eq!(traj.end(), goal);
    }

    #[test]
    fn planner_is_deterministic_in_the_seed() {
        let mut arena = open_arena();
        arena.add_polygon(alloc::vec![(-0.2, -0.6), (0.2, -0.6), (0.2, 0.6), (-0.2, 0.6)]);
        let fp = Footprint::default();
        let params = PlannerParams::default();
        let start = PlanarPose::new(-0.8, 0.0, 0.0);
        let goal = PlanarPose::new(0.8, 0.2, 1.0);
        let a = plan_se2(&start, &goal, &arena, &fp, 5, &params).unwrap();
        let b = plan_se2(&start, &goal, &arena, &fp, 5, &params).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn follower_zero_noise_ends_exactly_at_goal() {
        let traj = Se2Trajectory {
            waypoints: alloc::vec![
                PlanarPose::new(0.0, 0.0, 0.0),
                PlanarPose::new(0.5, 0.2, 1.0),
                PlanarPose::new(1.0, 0.0, 3.0),
            ],
            resolution_xy: 0.01,
            resolution_heading: 0.03,
        };
        let path = follow_waypoints(&traj, None, 1);
        assert_eq!(*path.last().unwrap(), PlanarPose::new(1.0, 0.0, 3.0));
        // Densified: strictly more poses than waypoints.
        assert!(path.len() > 3);
    }

    #[test]
    fn follower_noise_stays_within_bounds() {
        let traj = Se2Trajectory {
            waypoints: alloc::vec![PlanarPose::new(0.0, 0.0, 0.0), PlanarPose::new(1.0, 0.0, 0.0)],
            resolution_xy: 0.01,
            resolution_heading: 0.03,
        };
        let path = follow_waypoints(&traj, Some((0.01, 2f64.to_radians())), 3);
        let end = path.last().unwrap();
        assert!((end.x - 1.0).abs() <= 0.01 + 1e-12);
        assert!(end.y.abs() <= 0.01 + 1e-12);
        assert!(end.heading.abs() <= 2f64.to_radians() + 1e-12);
    }

    #[test]
    fn follower_single_pose_trajectory() {
        let traj = Se2Trajectory {
            waypoints: alloc::vec![PlanarPose::new(0.3, 0.2, 0.4)],
            resolution_xy: 0.01,
            resolution_heading: 0.03,
        };
        let path = follow_waypoints(&traj, None, 1);
        assert_eq!(path, alloc::vec![PlanarPose::new(0.3, 0.2, 0.4)]);
    }
}
