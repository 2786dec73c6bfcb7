//! Execute the seating motion in the physics scene: carry the bear along
//! the planned waypoints, release it over the seat, and settle.

use alloc::vec::Vec;
use nalgebra::{Translation3, UnitQuaternion, Vector3};

use super::PlanarChain;
use crate::geom::{PlanarPose, RigidTransform};
use crate::sim::{run_to_rest, AgentModel, BodyKind, Configuration, Scene, SimError, SimParams};

#[derive(Debug, Clone)]
pub struct ExecuteOutcome {
    /// Bear configuration after release and settling (or at the hold pose
    /// when no release was requested).
    pub final_configuration: Configuration,
    /// World pose of the bear base at every animated waypoint.
    pub bear_path: Vec<RigidTransform>,
    /// Chair pose after the motion (it may be nudged by contacts).
    pub chair_pose: RigidTransform,
}

/// World pose of the bear base for chain end-effector state `(ee, pitch)`
/// seen from a robot standing at `robot_pose`. The bear faces away from the
/// robot; its pitch is measured relative to the hold pitch so the bear is
/// upright whenever the chain is at a zero-relative-pitch waypoint.
pub fn bear_world_pose(
    robot_pose: &PlanarPose,
    ee: (f64, f64),
    relative_pitch: f64,
) -> RigidTransform {
    let (sin_h, cos_h) = robot_pose.heading.sin_cos();
    let x = robot_pose.x + ee.0 * cos_h;
    let y = robot_pose.y + ee.0 * sin_h;
    let yaw = crate::geom::wrap_angle(robot_pose.heading + core::f64::consts::PI);
    let rotation = crate::geom::yaw_rotation(yaw)
        * UnitQuaternion::from_axis_angle(&Vector3::y_axis(), -relative_pitch);
    RigidTransform::from_parts(Translation3::new(x, y, ee.1), rotation)
}

/// Animate the chain trajectory with the bear held kinematically, then (if
/// `release`) free the bear and settle the scene. The chair mesh is taken in
/// world coordinates. After release the chain retreats along the reversed
/// waypoints; that retreat is contact-free by construction (the planner
/// validated every waypoint), so only the bear and chair are simulated.
pub fn execute_and_release(
    trajectory: &[Vec<f64>],
    chain: &PlanarChain,
    robot_pose: &PlanarPose,
    chair_mesh: &crate::geom::Mesh,
    bear: &AgentModel,
    params: &SimParams,
    release: bool,
) -> Result<ExecuteOutcome, SimError> {
    let mut scene = Scene::new(params.clone())?;
    let chair_body = scene.add_mesh_body(chair_mesh, RigidTransform::identity(), BodyKind::Dynamic);
    scene.set_chair(chair_body);

    let hold_pitch = trajectory
        .first()
        .map(|q| chain.forward_kinematics(q).ee_pitch)
        .unwrap_or(0.0);

    let mut bear_path = Vec::with_capacity(trajectory.len());
    let mut handle_opt = None;
    let substeps = 12usize;
    for (k, q) in trajectory.iter().enumerate() {
        let fk = chain.forward_kinematics(q);
        let pose = bear_world_pose(robot_pose, fk.ee, fk.ee_pitch - hold_pitch);
        bear_path.push(pose);
        if k == 0 {
            let handle = scene.add_agent(bear, &pose, &bear.pre_sitting, params.plush_joint_scale);
            scene.set_agent_kinematic(&handle, true);
            handle_opt = Some(handle);
            for _ in 0..substeps {
                scene.step();
            }
        } else {
            // Quasi-static glide: interpolate the chain between waypoints so
            // each physics step sees only a millimetre-scale kinematic move.
            let handle = handle_opt.as_ref().expect("bear added at first waypoint");
            let prev = &trajectory[k - 1];
            for i in 0..substeps {
                let t = (i + 1) as f64 / substeps as f64;
                let q_t: alloc::vec::Vec<f64> =
                    prev.iter().zip(q).map(|(a, b)| a + t * (b - a)).collect();
                let fk_t = chain.forward_kinematics(&q_t);
                let pose_t = bear_world_pose(robot_pose, fk_t.ee, fk_t.ee_pitch - hold_pitch);
                scene.place_agent(handle, &pose_t, &bear.pre_sitting);
                scene.step();
            }
        }
    }

    let Some(handle) = handle_opt else {
        return Err(SimError::NoAgent);
    };

    // Let the scene quiesce at the final hold before letting go.
    if let Some(last) = trajectory.last() {
        let fk = chain.forward_kinematics(last);
        let pose = bear_world_pose(robot_pose, fk.ee, fk.ee_pitch - hold_pitch);
        scene.place_agent(&handle, &pose, &bear.pre_sitting);
        scene.place_agent(&handle, &pose, &bear.pre_sitting); // zero velocity
        for _ in 0..60 {
            scene.step();
        }
    }

    if release {
        scene.set_agent_kinematic(&handle, false);
        run_to_rest(&mut scene)?;
    }

    Ok(ExecuteOutcome {
        final_configuration: scene.agent_configuration(&handle),
        bear_path,
        chair_pose: scene.body_pose(chair_body),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chairgen::{generate_chair, ChairGenParams, ChairVariant};
    use crate::sam::{classify, SamConfig};
    use approx::assert_relative_eq;

    #[test]
    fn bear_pose_faces_away_from_the_robot() {
        let robot = PlanarPose::new(0.5, 0.0, core::f64::consts::PI); // facing -x
        let pose = bear_world_pose(&robot, (0.3, 0.25), 0.0);
        // 0.3 ahead of the robot along -x.
        assert_relative_eq!(pose.translation.vector.x, 0.2, epsilon = 1e-12);
        assert_relative_eq!(pose.translation.vector.z, 0.25, epsilon = 1e-12);
        // The bear faces +x (opposite the robot's heading).
        let facing = pose.rotation * Vector3::x();
        assert_relative_eq!(facing.x, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn held_bear_without_release_leaves_the_scene_unchanged() {
        let chair = generate_chair(&ChairGenParams::new(ChairVariant::Standard, 40)).unwrap();
        let chain = PlanarChain::small_humanoid();
        let bear = AgentModel::child(0.9, 12.0);
        let params = SimParams::default();
        // Robot stands clear of the chair; single-waypoint trajectory.
        let robot = PlanarPose::new(1.0, 0.0, core::f64::consts::PI);
        let hold = super::super::standing_hold_pose(5);
        let out = execute_and_release(
            &[hold.clone()],
            &chain,
            &robot,
            &chair.mesh,
            &bear,
            &params,
            false,
        )
        .unwrap();
        // Chair did not move; bear still exactly at the held pose.
        assert!(out.chair_pose.translation.vector.xy().norm() < 1e-6);
        let fk = chain.forward_kinematics(&hold);
        let expect = bear_world_pose(&robot, fk.ee, 0.0);
        let err = (out.final_configuration.base_pose.translation.vector
            - expect.translation.vector)
            .norm();
        assert!(err < 1e-9, "bear drifted {err}");
    }

    #[test]
    fn release_over_the_seat_counts_as_correct_sitting() {
        let chair = generate_chair(&ChairGenParams::new(ChairVariant::Standard, 41)).unwrap();
        let bear = AgentModel::child(0.9, 12.0);
        let sam = SamConfig::for_agent(&bear);
        let params = SimParams::default();
        let chain = PlanarChain::small_humanoid();

        // Stand the robot in front of the chair (chair faces +x), just far
        // enough that a mid-seat reach is kinematically sane, and hold the
        // bear right above its imagined pose.
        let seat = chair.seat;
        let robot = PlanarPose::new(seat.center.x + 0.42, seat.center.y, core::f64::consts::PI);
        let target_fwd = 0.42 - 0.02; // just shy of the seat centre
        let target = (target_fwd, seat.center.z + 0.015);
        let mut problem = super::super::SeatingProblem::new(chain.clone(), target);
        problem.bear_pitch_target = chain.forward_kinematics(&problem.q_start).ee_pitch;
        let q_goal = super::super::goal_config(&problem).unwrap();
        let traj = super::super::plan_seating_trajectory(&problem, &q_goal).unwrap();

        let out =
            execute_and_release(&traj, &chain, &robot, &chair.mesh, &bear, &params, true).unwrap();
        let verdict = classify(&out.final_configuration, &bear.key_configuration(), &sam).unwrap();
        assert!(
            verdict.correct,
            "verdict {verdict:?}, pelvis at {:?}",
            out.final_configuration.base_pose.translation.vector
        );
        // Settled within 3 cm / 15 degrees of the commanded drop point.
        let commanded = out.bear_path.last().unwrap();
        let dp = (out.final_configuration.base_pose.translation.vector
            - commanded.translation.vector)
            .norm();
        assert!(dp < 0.05, "bear settled {dp} m from the release pose");
    }

    #[test]
    fn release_in_free_space_fails_the_sitting_check() {
        let chair = generate_chair(&ChairGenParams::new(ChairVariant::Standard, 42)).unwrap();
        let bear = AgentModel::child(0.9, 12.0);
        let sam = SamConfig::for_agent(&bear);
        let params = SimParams::default();
        let chain = PlanarChain::small_humanoid();
        // Robot far from the chair: the bear drops onto bare floor.
        let robot = PlanarPose::new(5.0, 5.0, 0.0);
        let hold = super::super::standing_hold_pose(5);
        let out = execute_and_release(
            &[hold.clone(), hold],
            &chain,
            &robot,
            &chair.mesh,
            &bear,
            &params,
            true,
        )
        .unwrap();
        let verdict = classify(&out.final_configuration, &bear.key_configuration(), &sam).unwrap();
        assert!(!verdict.correct);
    }
}
