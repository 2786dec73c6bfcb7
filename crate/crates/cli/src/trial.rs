//! End-to-end trial runner: imagination, navigation, assistance, whole-body
//! seating, release, and the automatic success verdict.

use std::time::Instant;

use anyhow::Result;
use nalgebra::{Point3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use sitkit_core::assist::{
    assistance_loop, try_plan, AssistanceOutcome, AssistanceStatus, ChairState, HumanPolicy,
};
use sitkit_core::chairgen::{generate_chair, ChairGenParams, ChairVariant, SeatFrame};
use sitkit_core::geom::{compute_obb, wrap_angle, yaw_translation, Mesh, PlanarPose};
use sitkit_core::imagine::{imagine_with, run_drop, ImagineError, ImaginationReport, SittingPose};
use sitkit_core::nav::{follow_waypoints, Arena, Footprint, GoalParams, PlannerParams, Se2Trajectory};
use sitkit_core::rng::{mix_seed, seeded_rng};
use sitkit_core::sam::{classify, SamConfig, SamVerdict};
use sitkit_core::sim::{AgentModel, SimParams};
use sitkit_core::wholebody::{
    execute_and_release, goal_config, plan_seating_trajectory, PlanarChain, SagittalRect,
    SeatingProblem,
};

use crate::formats::config::ConfigFile;
use crate::formats::snapshot::SceneSnapshot;

use rand::Rng;

const SEED_PLACEMENT: u64 = 0x504C_4143;
const SEED_PLAN: u64 = 0x504C_414E;
const SEED_POLICY: u64 = 0x504F_4C49;
const SEED_WALK: u64 = 0x57_414C4B;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Protocol {
    Accessible,
    InaccessibleObey,
    InaccessibleDisobey,
}

impl Protocol {
    pub fn parse(name: &str) -> Result<Protocol> {
        Ok(match name {
            "accessible" | "Accessible" => Protocol::Accessible,
            "inaccessible-obey" | "InaccessibleObey" | "obey" => Protocol::InaccessibleObey,
            "inaccessible-disobey" | "InaccessibleDisobey" | "disobey" => {
                Protocol::InaccessibleDisobey
            }
            other => anyhow::bail!("unknown protocol '{other}'"),
        })
    }

    pub fn default_policy(&self) -> HumanPolicy {
        match self {
            Protocol::Accessible | Protocol::InaccessibleObey => HumanPolicy::Obey,
            Protocol::InaccessibleDisobey => HumanPolicy::DisobeyFirst,
        }
    }
}

/// Everything resolved from the config file once, shared across trials.
#[derive(Debug, Clone)]
pub struct TrialContext {
    pub sim: SimParams,
    pub agent: AgentModel,
    pub sam: SamConfig,
    pub arena: Arena,
    pub robot_start: PlanarPose,
    pub chair_area_center: (f64, f64),
    pub chair_area_half: f64,
    pub footprint: Footprint,
    pub goal_params: GoalParams,
    pub planner: PlannerParams,
    pub chain: PlanarChain,
    pub w1: f64,
    pub w2: f64,
    pub horizon: usize,
    pub wholebody_dt: f64,
    pub collision_margin: f64,
    pub support_margin: f64,
    pub walk_noise: Option<(f64, f64)>,
}

impl TrialContext {
    pub fn from_config(cfg: &ConfigFile, base_dir: &std::path::Path) -> Result<Self> {
        let sim = cfg.sim.resolve();
        let agent = cfg.agent.resolve(&sim, base_dir)?;
        let sam = cfg.sam.resolve(&agent);
        Ok(Self {
            sim,
            sam,
            agent,
            arena: cfg.arena.resolve(),
            robot_start: cfg.arena.robot_pose(),
            chair_area_center: (cfg.arena.chair_area_center[0], cfg.arena.chair_area_center[1]),
            chair_area_half: cfg.arena.chair_area_half,
            footprint: cfg.footprint.resolve(),
            goal_params: cfg.goal.resolve(),
            planner: cfg.planner.resolve(),
            chain: cfg.wholebody.chain(),
            w1: cfg.wholebody.w1.unwrap_or(1.0),
            w2: cfg.wholebody.w2.unwrap_or(0.5),
            horizon: cfg.wholebody.horizon.unwrap_or(20),
            wholebody_dt: cfg.wholebody.dt.unwrap_or(0.4),
            collision_margin: cfg.wholebody.collision_margin.unwrap_or(0.01),
            support_margin: cfg.wholebody.support_margin.unwrap_or(0.005),
            walk_noise: cfg.walk.noise(),
        })
    }
}

/// Chair input for one trial.
#[derive(Debug, Clone)]
pub enum ChairSource {
    Generated(ChairGenParams),
    Mesh { mesh: Mesh, label: String },
}

#[derive(Debug, Clone)]
pub struct TrialSpec {
    pub protocol: Protocol,
    pub chair: ChairSource,
    /// Explicit chair pose; otherwise the protocol places it.
    pub chair_pose: Option<PlanarPose>,
    pub policy_override: Option<HumanPolicy>,
    pub seed: u64,
    pub record_timings: bool,
    pub snapshot: bool,
    pub parallel_drops: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub imagination_s: f64,
    pub navigation_s: f64,
    pub assistance_s: f64,
    pub wholebody_s: f64,
    pub execution_s: f64,
    pub total_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialResult {
    pub seed: u64,
    pub protocol: Protocol,
    pub chair_label: String,
    pub chair_initial_pose: PlanarPose,
    pub imagination: Option<ImaginationReport>,
    pub imagination_succeeded: bool,
    /// Imagined pose in the world frame (after any assisted rotations).
    pub imagined_pose: Option<SittingPose>,
    pub goal_pose: Option<PlanarPose>,
    pub adjusted_position: Option<[f64; 3]>,
    pub assistance: Option<AssistanceOutcome>,
    pub instructions: Vec<String>,
    pub rotations_applied: usize,
    pub walk_trajectory: Option<Se2Trajectory>,
    pub executed_path: Vec<PlanarPose>,
    pub seating_goal: Option<Vec<f64>>,
    pub seating_trajectory: Option<Vec<Vec<f64>>>,
    /// Reversed seating waypoints: retrieve the hands and upright the body.
    pub retreat_trajectory: Option<Vec<Vec<f64>>>,
    pub final_verdict: Option<SamVerdict>,
    /// World pose of the bear base at the release waypoint.
    pub release_position: Option<[f64; 3]>,
    /// Bear base position after settling.
    pub settled_position: Option<[f64; 3]>,
    pub chair_final_yaw: Option<f64>,
    pub failure: Option<String>,
    pub success: bool,
    pub timings: StageTimings,
    pub snapshot: Option<SceneSnapshot>,
}

struct StageClock {
    enabled: bool,
    start: Instant,
}

impl StageClock {
    fn new(enabled: bool) -> Self {
        Self { enabled, start: Instant::now() }
    }

    fn lap(&mut self) -> f64 {
        if !self.enabled {
            return 0.0;
        }
        let now = Instant::now();
        let dt = now.duration_since(self.start).as_secs_f64();
        self.start = now;
        dt
    }
}

/// Place the chair according to the protocol: uniform position inside the
/// placement square; sitting direction towards the robot (within +-30 deg)
/// for accessible trials, towards the arm base or an arena side edge for
/// inaccessible ones.
fn protocol_placement(
    ctx: &TrialContext,
    protocol: Protocol,
    outward_yaw: f64,
    seed: u64,
) -> PlanarPose {
    let mut rng = seeded_rng(seed, SEED_PLACEMENT);
    let (cx, cy) = ctx.chair_area_center;
    let h = ctx.chair_area_half;
    let x = cx + rng.gen_range(-h..h);
    let y = cy + rng.gen_range(-h..h);
    let desired = match protocol {
        Protocol::Accessible => {
            let toward_robot = (ctx.robot_start.y - y).atan2(ctx.robot_start.x - x);
            toward_robot + rng.gen_range(-0.52..0.52)
        }
        Protocol::InaccessibleObey | Protocol::InaccessibleDisobey => {
            if rng.gen_bool(0.5) {
                // Towards the arm base obstacle.
                let arm = (-0.75, 0.0);
                (arm.1 - y).atan2(arm.0 - x) + rng.gen_range(-0.17..0.17)
            } else {
                // Towards the nearer side edge of the arena.
                let up = if y >= cy { 1.0 } else { -1.0 };
                up * std::f64::consts::FRAC_PI_2 + rng.gen_range(-0.17..0.17)
            }
        }
    };
    PlanarPose::new(x, y, wrap_angle(desired - outward_yaw))
}

pub fn run_trial(ctx: &TrialContext, spec: &TrialSpec) -> TrialResult {
    let mut total_clock = StageClock::new(spec.record_timings);
    let mut clock = StageClock::new(spec.record_timings);
    let mut timings = StageTimings::default();

    // Resolve the chair mesh in its generator frame plus ground truth.
    let (mesh0, seat_truth, label) = match &spec.chair {
        ChairSource::Generated(params) => match generate_chair(params) {
            Ok(c) => (
                c.mesh,
                Some(c.seat),
                format!("gen-{}-{}", crate::formats::config::variant_name(params.variant), params.seed),
            ),
            Err(e) => {
                return failed_early(spec, format!("chair generation failed: {e}"));
            }
        },
        ChairSource::Mesh { mesh, label } => (mesh.clone(), None, label.clone()),
    };

    // Initial world pose.
    let outward = seat_truth.map(|s| s.outward_yaw).unwrap_or(0.0);
    let chair_pose = spec
        .chair_pose
        .unwrap_or_else(|| protocol_placement(ctx, spec.protocol, outward, spec.seed));
    let place = yaw_translation(chair_pose.heading, Vector3::new(chair_pose.x, chair_pose.y, 0.0));
    let mut chair_mesh = mesh0.transformed(&place);
    let _seat_world: Option<SeatFrame> = seat_truth.map(|s| s.transformed(&place));

    let mut result = TrialResult {
        seed: spec.seed,
        protocol: spec.protocol,
        chair_label: label,
        chair_initial_pose: chair_pose,
        imagination: None,
        imagination_succeeded: false,
        imagined_pose: None,
        goal_pose: None,
        adjusted_position: None,
        assistance: None,
        instructions: Vec::new(),
        rotations_applied: 0,
        walk_trajectory: None,
        executed_path: Vec::new(),
        seating_goal: None,
        seating_trajectory: None,
        retreat_trajectory: None,
        final_verdict: None,
        release_position: None,
        settled_position: None,
        chair_final_yaw: None,
        failure: None,
        success: false,
        timings: StageTimings::default(),
        snapshot: None,
    };

    // Sitting imagination (drops fan out across threads when allowed).
    let imagine_outcome = {
        let agent = &ctx.agent;
        let sam = &ctx.sam;
        let params = &ctx.sim;
        imagine_with(&chair_mesh, |aligned, obb, batch| {
            if spec.parallel_drops {
                batch
                    .par_iter()
                    .map(|&(r, rot, off)| run_drop(aligned, obb, r, rot, off, agent, sam, params))
                    .collect()
            } else {
                batch
                    .iter()
                    .map(|&(r, rot, off)| run_drop(aligned, obb, r, rot, off, agent, sam, params))
                    .collect()
            }
        })
    };
    timings.imagination_s = clock.lap();

    let mut pose = match imagine_outcome {
        Ok((pose, mut report)) => {
            report.wall_clock_seconds = timings.imagination_s;
            result.imagination = Some(report);
            result.imagination_succeeded = true;
            pose
        }
        Err(ImagineError::NoSittingFound(mut report)) => {
            report.wall_clock_seconds = timings.imagination_s;
            result.imagination = Some(report);
            result.failure = Some("imagination found no sitting pose".into());
            result.timings = finish_timings(timings, &mut total_clock);
            return result;
        }
        Err(e) => {
            result.failure = Some(format!("imagination failed: {e}"));
            result.timings = finish_timings(timings, &mut total_clock);
            return result;
        }
    };
    result.imagined_pose = Some(pose);

    // Chair footprint obstacle from the world-frame bounding box.
    let obb = compute_obb(&chair_mesh).expect("imagined mesh is non-empty");
    let mut arena = ctx.arena.clone();
    arena.set_chair_footprint(Some(obb.footprint_corners()));

    // First plan attempt, then the assistance protocol if needed.
    let plan_seed = mix_seed(spec.seed, SEED_PLAN);
    let policy = spec.policy_override.unwrap_or_else(|| spec.protocol.default_policy());
    let mut planned = try_plan(
        &pose,
        &ctx.robot_start,
        &arena,
        &ctx.footprint,
        &ctx.goal_params,
        &ctx.planner,
        plan_seed,
    )
    .ok();
    timings.navigation_s = clock.lap();

    if planned.is_none() {
        let mut chair_state = ChairState {
            pose,
            footprint_corners: obb.footprint_corners(),
            center_xy: (obb.center.x, obb.center.y),
        };
        let outcome = assistance_loop(
            &mut chair_state,
            &ctx.robot_start,
            &mut arena,
            &ctx.footprint,
            &ctx.goal_params,
            &ctx.planner,
            policy,
            3,
            mix_seed(spec.seed, SEED_POLICY),
        );
        result.instructions = outcome.rounds.iter().map(|r| r.instruction_text.clone()).collect();
        result.rotations_applied = outcome.rounds.len();
        pose = outcome.final_pose;
        result.imagined_pose = Some(pose);
        chair_mesh = chair_mesh.transformed(&outcome.total_rotation);
        if outcome.status == AssistanceStatus::Accessible {
            planned = outcome.final_goal.and_then(|goal| {
                outcome
                    .final_trajectory
                    .clone()
                    .map(|t| (goal, outcome.final_adjusted_position.unwrap_or(pose.position), t))
            });
        }
        result.assistance = Some(outcome);
    }
    timings.assistance_s = clock.lap();

    let Some((goal, adjusted_p, walk)) = planned else {
        result.failure = Some("no accessible SE(2) plan within three rotations".into());
        result.timings = finish_timings(timings, &mut total_clock);
        return result;
    };
    result.goal_pose = Some(goal);
    result.adjusted_position = Some([adjusted_p.x, adjusted_p.y, adjusted_p.z]);
    result.walk_trajectory = Some(walk.clone());

    // Walk to the goal.
    let executed = follow_waypoints(&walk, ctx.walk_noise, mix_seed(spec.seed, SEED_WALK));
    let robot_pose = *executed.last().expect("executed path non-empty");
    result.executed_path = executed;

    // Whole-body seating from the actual robot pose.
    let dir = robot_pose.direction();
    let to_target = (adjusted_p.x - robot_pose.x, adjusted_p.y - robot_pose.y);
    let forward = to_target.0 * dir.0 + to_target.1 * dir.1;
    let problem = build_seating_problem(ctx, &robot_pose, forward, &adjusted_p, &obb, &pose);
    let seating = goal_config(&problem).and_then(|q_goal| {
        plan_seating_trajectory(&problem, &q_goal).map(|traj| (q_goal, traj))
    });
    timings.wholebody_s = clock.lap();
    let (q_goal, traj) = match seating {
        Ok(x) => x,
        Err(e) => {
            result.failure = Some(format!("whole-body planning failed: {e}"));
            result.timings = finish_timings(timings, &mut total_clock);
            return result;
        }
    };
    result.seating_goal = Some(q_goal.clone());
    result.seating_trajectory = Some(traj.clone());
    result.retreat_trajectory = Some(traj.iter().rev().cloned().collect());

    // Carry, release, settle, classify.
    match execute_and_release(&traj, &ctx.chain, &robot_pose, &chair_mesh, &ctx.agent, &ctx.sim, true)
    {
        Ok(outcome) => {
            if let Some(last) = outcome.bear_path.last() {
                let t = last.translation.vector;
                result.release_position = Some([t.x, t.y, t.z]);
            }
            let settled = outcome.final_configuration.base_pose.translation.vector;
            result.settled_position = Some([settled.x, settled.y, settled.z]);
            result.chair_final_yaw = Some(sitkit_core::geom::yaw_of(&outcome.chair_pose));
            let verdict = classify(
                &outcome.final_configuration,
                &ctx.agent.key_configuration(),
                &ctx.sam,
            )
            .expect("bear configuration matches the agent layout");
            result.success = verdict.correct;
            if !verdict.correct {
                result.failure = Some("released bear failed the sitting check".into());
            }
            result.final_verdict = Some(verdict);
            if spec.snapshot {
                // Rebuild a static scene of the final state for export.
                result.snapshot = Some(final_snapshot(ctx, &chair_mesh, &outcome));
            }
        }
        Err(e) => {
            result.failure = Some(format!("placement simulation failed: {e}"));
        }
    }
    timings.execution_s = clock.lap();
    result.timings = finish_timings(timings, &mut total_clock);
    result
}

fn failed_early(spec: &TrialSpec, failure: String) -> TrialResult {
    TrialResult {
        seed: spec.seed,
        protocol: spec.protocol,
        chair_label: "invalid".into(),
        chair_initial_pose: PlanarPose::new(0.0, 0.0, 0.0),
        imagination: None,
        imagination_succeeded: false,
        imagined_pose: None,
        goal_pose: None,
        adjusted_position: None,
        assistance: None,
        instructions: Vec::new(),
        rotations_applied: 0,
        walk_trajectory: None,
        executed_path: Vec::new(),
        seating_goal: None,
        seating_trajectory: None,
        retreat_trajectory: None,
        final_verdict: None,
        release_position: None,
        settled_position: None,
        chair_final_yaw: None,
        failure: Some(failure),
        success: false,
        timings: StageTimings::default(),
        snapshot: None,
    }
}

fn finish_timings(mut timings: StageTimings, total: &mut StageClock) -> StageTimings {
    timings.total_s = total.lap();
    timings
}

/// Sagittal obstacle model for the seating optimizer: the chair is an
/// under-seat solid up to the seat surface plus a backrest slab behind the
/// sitting position, both cut from the world bounding box.
fn build_seating_problem(
    ctx: &TrialContext,
    robot_pose: &PlanarPose,
    forward: f64,
    adjusted_p: &Point3<f64>,
    obb: &sitkit_core::geom::Obb,
    pose: &SittingPose,
) -> SeatingProblem {
    // Aim a couple of centimetres past the imagined position (towards the
    // backrest) and slightly above the seat: the release settles the bear
    // back into the backrest the same way the imagination drops do.
    let mut problem =
        SeatingProblem::new(ctx.chain.clone(), (forward + 0.025, adjusted_p.z + 0.015));
    problem.w1 = ctx.w1;
    problem.w2 = ctx.w2;
    problem.horizon = ctx.horizon;
    problem.dt = ctx.wholebody_dt;
    problem.collision_margin = ctx.collision_margin;
    problem.support_margin = ctx.support_margin;

    let dir = robot_pose.direction();
    let mut d_min = f64::INFINITY;
    let mut d_max = f64::NEG_INFINITY;
    for (cx, cy) in obb.footprint_corners() {
        let d = (cx - robot_pose.x) * dir.0 + (cy - robot_pose.y) * dir.1;
        d_min = d_min.min(d);
        d_max = d_max.max(d);
    }
    let seat_top = adjusted_p.z;
    if d_max > 0.0 {
        problem.obstacles.push(SagittalRect {
            x_min: d_min.max(0.05),
            x_max: d_max,
            z_min: 0.0,
            z_max: seat_top,
        });
        // Backrest slab behind the sitting position (opposite the sitting
        // direction, which faces the robot).
        let p_d = (pose.position.x - robot_pose.x) * dir.0 + (pose.position.y - robot_pose.y) * dir.1;
        problem.obstacles.push(SagittalRect {
            x_min: p_d + 0.10,
            x_max: d_max,
            z_min: seat_top,
            z_max: obb.top_z(),
        });
    }
    problem
}

fn final_snapshot(
    ctx: &TrialContext,
    chair_mesh: &Mesh,
    outcome: &sitkit_core::wholebody::ExecuteOutcome,
) -> SceneSnapshot {
    use sitkit_core::sim::{BodyKind, Scene};
    let mut scene = Scene::new(ctx.sim.clone()).expect("params already validated");
    scene.add_mesh_body(chair_mesh, outcome.chair_pose, BodyKind::Static);
    let config = &outcome.final_configuration;
    let handle = scene.add_agent(&ctx.agent, &config.base_pose, &config.joint_angles, 1.0);
    let _ = handle;
    SceneSnapshot::capture(&scene)
}

// ---------------------------------------------------------------------------
// Benchmark suites
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchRow {
    pub label: String,
    pub trials: usize,
    pub successes: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchTrialRecord {
    pub chair: String,
    pub protocol: Protocol,
    pub seed: u64,
    pub success: bool,
    pub rotations: usize,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchSummary {
    pub rows: Vec<BenchRow>,
    pub trials: Vec<BenchTrialRecord>,
}

impl BenchSummary {
    pub fn table(&self) -> String {
        let mut out = String::new();
        let width = self
            .rows
            .iter()
            .map(|r| r.label.len())
            .max()
            .unwrap_or(10)
            .max("Protocol".len());
        out.push_str(&format!("{:<width$}  {:>6}  {:>9}  {:>6}\n", "Protocol", "Trials", "Successes", "Rate"));
        for row in &self.rows {
            out.push_str(&format!(
                "{:<width$}  {:>6}  {:>9}  {:>5.1}%\n",
                row.label,
                row.trials,
                row.successes,
                row.rate * 100.0
            ));
        }
        out
    }
}

/// Build the held-out trial suite: `chairs` seeded chairs, each run under
/// the three protocols with the configured trial counts.
pub fn build_suite(cfg: &ConfigFile, master_seed: u64) -> Result<Vec<TrialSpec>> {
    let bench = &cfg.bench;
    let mut specs = Vec::new();
    for chair_idx in 0..bench.chairs {
        let variant = if Some(chair_idx) == bench.improvised_index {
            ChairVariant::ImprovisedStack
        } else if Some(chair_idx) == bench.narrow_stool_index {
            ChairVariant::StepStoolNarrowSeat
        } else {
            ChairVariant::Standard
        };
        let chair_seed = mix_seed(master_seed, 0xC0000 + chair_idx as u64);
        let mut gen = ChairGenParams::new(variant, chair_seed);
        if let Some(f) = cfg.chairgen.friction {
            gen.friction = f;
        }
        let mut trial_idx = 0usize;
        let mut push = |protocol: Protocol, count: usize, specs: &mut Vec<TrialSpec>| {
            for _ in 0..count {
                specs.push(TrialSpec {
                    protocol,
                    chair: ChairSource::Generated(gen.clone()),
                    chair_pose: None,
                    policy_override: None,
                    seed: mix_seed(master_seed, (chair_idx as u64) << 8 | trial_idx as u64),
                    record_timings: true,
                    snapshot: false,
                    parallel_drops: false,
                });
                trial_idx += 1;
            }
        };
        push(Protocol::Accessible, bench.accessible_per_chair, &mut specs);
        push(Protocol::InaccessibleObey, bench.obey_per_chair, &mut specs);
        push(Protocol::InaccessibleDisobey, bench.disobey_per_chair, &mut specs);
    }
    Ok(specs)
}

/// Run a suite (trials in parallel) and aggregate per-protocol rates.
pub fn run_bench(ctx: &TrialContext, suite: &[TrialSpec]) -> (BenchSummary, Vec<TrialResult>) {
    let results: Vec<TrialResult> = suite.par_iter().map(|spec| run_trial(ctx, spec)).collect();

    let mut rows = Vec::new();
    for (label, protocol) in [
        ("Accessible", Protocol::Accessible),
        ("Inaccessible + Obey", Protocol::InaccessibleObey),
        ("Inaccessible + Disobey", Protocol::InaccessibleDisobey),
    ] {
        let trials: Vec<&TrialResult> = results.iter().filter(|r| r.protocol == protocol).collect();
        if trials.is_empty() {
            continue;
        }
        let successes = trials.iter().filter(|r| r.success).count();
        rows.push(BenchRow {
            label: label.into(),
            trials: trials.len(),
            successes,
            rate: successes as f64 / trials.len() as f64,
        });
    }
    let successes = results.iter().filter(|r| r.success).count();
    rows.push(BenchRow {
        label: "Total".into(),
        trials: results.len(),
        successes,
        rate: if results.is_empty() { 0.0 } else { successes as f64 / results.len() as f64 },
    });

    let trials = results
        .iter()
        .map(|r| BenchTrialRecord {
            chair: r.chair_label.clone(),
            protocol: r.protocol,
            seed: r.seed,
            success: r.success,
            rotations: r.rotations_applied,
            failure: r.failure.clone(),
        })
        .collect();
    (BenchSummary { rows, trials }, results)
}
