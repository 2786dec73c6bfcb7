//! Sitting imagination: orchestrate the drop schedule over eight chair
//! rotations, score every settled configuration, select the best rotation and
//! aggregate the correct sittings into one imagined sitting pose.

use alloc::vec::Vec;
use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::geom::{
    compute_obb, obb_alignment_transform, wrap_angle, yaw_of, yaw_translation, Mesh, MeshError,
    Obb, RigidTransform,
};
use crate::sam::{classify, SamConfig, SamVerdict};
use crate::sim::{build_drop_scene, settle, AgentModel, SimParams};

/// Width of one drop-offset step as a fraction of the full OBB x size.
pub const L_SIT_SCALE: f64 = 0.15;

/// Guard for the reciprocal score-product weight when a sitting scores an
/// exact zero.
pub const SCORE_PRODUCT_EPSILON: f64 = 1e-9;

/// The (rotation, x-offset) grid of drops: eight rotations by three base
/// offsets, extended with four outer offsets when too few sittings are found.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropSchedule {
    pub rotations: Vec<f64>,
    pub offsets: Vec<f64>,
    pub l_sit: f64,
    pub extended: bool,
}

impl DropSchedule {
    pub fn len(&self) -> usize {
        self.rotations.len() * self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All (rotation index, offset index) pairs in execution order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.len());
        for r in 0..self.rotations.len() {
            for o in 0..self.offsets.len() {
                out.push((r, o));
            }
        }
        out
    }
}

/// Base schedule: 24 drops (8 rotations x offsets {0, +L, -L}); extended adds
/// {+-2L, +-3L} for 56 total.
pub fn make_schedule(obb: &Obb, extended: bool) -> DropSchedule {
    let l_sit = L_SIT_SCALE * 2.0 * obb.half_extents.x;
    let rotations = (0..8).map(|i| i as f64 * core::f64::consts::FRAC_PI_4).collect();
    let mut offsets = alloc::vec![0.0, l_sit, -l_sit];
    if extended {
        offsets.extend([2.0 * l_sit, -2.0 * l_sit, 3.0 * l_sit, -3.0 * l_sit]);
    }
    DropSchedule { rotations, offsets, l_sit, extended }
}

/// The imagined sitting pose: pelvis position and yaw of the facing
/// direction, in the frame the chair mesh was given in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SittingPose {
    pub position: Point3<f64>,
    pub yaw: f64,
}

impl SittingPose {
    /// Unit facing direction in the xy-plane.
    pub fn direction(&self) -> (f64, f64) {
        (self.yaw.cos(), self.yaw.sin())
    }

    pub fn transformed(&self, g: &RigidTransform) -> SittingPose {
        SittingPose {
            position: g.transform_point(&self.position),
            yaw: wrap_angle(self.yaw + yaw_of(g)),
        }
    }
}

/// Everything recorded about one drop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropRecord {
    pub rotation_index: usize,
    pub rotation: f64,
    pub offset: f64,
    pub verdict: SamVerdict,
    /// Settled pelvis position in the chair body frame.
    pub position_in_chair: Point3<f64>,
    /// Settled facing yaw relative to the chair body frame.
    pub yaw_in_chair: f64,
    /// Set when the drop simulation blew up; such drops are not correct.
    pub diverged: bool,
}

/// Full diagnostics of one imagination run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImaginationReport {
    pub drops: Vec<DropRecord>,
    pub correct_per_rotation: Vec<u32>,
    pub chosen_rotation: Option<usize>,
    pub extended: bool,
    pub schedule: DropSchedule,
    /// Yaw applied to the input mesh by the canonical alignment.
    pub alignment_yaw: f64,
    /// Wall-clock seconds, filled in by callers that have a clock.
    pub wall_clock_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ImagineError {
    Mesh(MeshError),
    /// No correct sitting was found even after the extended schedule.
    NoSittingFound(ImaginationReport),
    /// The aggregation input list was empty.
    EmptyList,
}

impl core::fmt::Display for ImagineError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ImagineError::Mesh(e) => write!(f, "mesh error: {e}"),
            ImagineError::NoSittingFound(_) => write!(f, "no sitting pose found"),
            ImagineError::EmptyList => write!(f, "empty sitting list"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ImagineError {}

impl From<MeshError> for ImagineError {
    fn from(e: MeshError) -> Self {
        ImagineError::Mesh(e)
    }
}

/// Alignment transform used by the imagination: the OBB alignment composed
/// with the quarter-turn that puts the mesh's center of mass on the most
/// negative x side.
///
/// The OBB yaw is only canonical modulo a quarter turn, so the plain
/// alignment may label the box axes differently for rotated copies of the
/// same mesh. Chairs carry their mass towards the backrest; picking the
/// quarter-turn by the center of mass makes the aligned frame (and with it
/// the drop schedule) a function of the shape alone.
pub fn canonical_alignment(mesh: &Mesh) -> Result<(RigidTransform, Obb), MeshError> {
    let obb = compute_obb(mesh)?;
    let base = obb_alignment_transform(&obb);
    let com = mesh.attributes.center_of_mass;
    let mut best: Option<(f64, RigidTransform)> = None;
    for k in 0..4 {
        let quarter = yaw_translation(k as f64 * core::f64::consts::FRAC_PI_2, Vector3::zeros());
        let g = crate::geom::compose(&quarter, &base);
        let c = g.transform_point(&com);
        // Most negative COM x; COM y breaks remaining ties.
        let score = (c.x * 1e6).round() + c.y;
        let better = match &best {
            None => true,
            Some((s, _)) => score < *s,
        };
        if better {
            best = Some((score, g));
        }
    }
    let g = best.expect("four candidates").1;
    let aligned_obb = Obb {
        center: Point3::new(0.0, 0.0, obb.center.z),
        yaw: 0.0,
        half_extents: match ((yaw_of(&g) - (-obb.yaw)).abs() % core::f64::consts::PI
            / core::f64::consts::FRAC_PI_2)
            .round() as i64
            % 2
        {
            // Odd quarter-turns swap the footprint extents.
            1 | -1 => Vector3::new(obb.half_extents.y, obb.half_extents.x, obb.half_extents.z),
            _ => obb.half_extents,
        },
    };
    Ok((g, aligned_obb))
}

/// One drop of the schedule against the aligned chair. Returns the record
/// used for counting and aggregation.
pub fn run_drop(
    aligned: &Mesh,
    aligned_obb: &Obb,
    rotation_index: usize,
    rotation: f64,
    offset: f64,
    agent: &AgentModel,
    sam_cfg: &SamConfig,
    params: &SimParams,
) -> DropRecord {
    let key = agent.key_configuration();
    let mut scene = match build_drop_scene(aligned, aligned_obb, rotation, agent, (offset, 0.0), params) {
        Ok(s) => s,
        Err(_) => {
            return DropRecord {
                rotation_index,
                rotation,
                offset,
                verdict: failed_verdict(),
                position_in_chair: Point3::origin(),
                yaw_in_chair: 0.0,
                diverged: true,
            }
        }
    };
    let config = match settle(&mut scene) {
        Ok(c) => c,
        Err(_) => {
            return DropRecord {
                rotation_index,
                rotation,
                offset,
                verdict: failed_verdict(),
                position_in_chair: Point3::origin(),
                yaw_in_chair: 0.0,
                diverged: true,
            }
        }
    };
    let verdict = classify(&config, &key, sam_cfg).expect("agent-config shapes match");

    // Express the settled pose in the chair body frame so the aggregation
    // untwists both the schedule rotation and any slide the chair picked up.
    let chair_pose = scene.body_pose(scene.chair_body().expect("drop scene has a chair"));
    let rel = chair_pose.inverse() * config.base_pose;
    let facing = rel.rotation * Vector3::x();
    let yaw_in_chair = if facing.x.hypot(facing.y) < 1e-6 {
        0.0
    } else {
        facing.y.atan2(facing.x)
    };
    DropRecord {
        rotation_index,
        rotation,
        offset,
        verdict,
        position_in_chair: Point3::from(rel.translation.vector),
        yaw_in_chair,
        diverged: false,
    }
}

fn failed_verdict() -> SamVerdict {
    SamVerdict {
        joint_score: f64::INFINITY,
        link_score: f64::INFINITY,
        sitting_height: 0.0,
        contacts: Vec::new(),
        contact_ok: false,
        correct: false,
        score_product: f64::INFINITY,
    }
}

/// Aggregate correct sittings (pose in chair frame, score product) into one
/// pose and map it back through the alignment transform. Positions use the
/// reciprocal score product as weight; yaw uses the weighted circular mean.
pub fn aggregate_pose(
    sittings: &[(Point3<f64>, f64, f64)],
    alignment: &RigidTransform,
) -> Result<SittingPose, ImagineError> {
    if sittings.is_empty() {
        return Err(ImagineError::EmptyList);
    }
    let mut w_sum = 0.0;
    let mut p_sum = Vector3::zeros();
    let (mut sin_sum, mut cos_sum) = (0.0, 0.0);
    for (p, yaw, score_product) in sittings {
        let w = 1.0 / score_product.max(SCORE_PRODUCT_EPSILON);
        w_sum += w;
        p_sum += p.coords * w;
        sin_sum += w * yaw.sin();
        cos_sum += w * yaw.cos();
    }
    let mean_p = Point3::from(p_sum / w_sum);
    let mean_yaw = sin_sum.atan2(cos_sum);
    let inv = alignment.inverse();
    Ok(SittingPose {
        position: inv.transform_point(&mean_p),
        yaw: wrap_angle(mean_yaw - yaw_of(alignment)),
    })
}

/// One drop task of a schedule batch: (rotation index, rotation, offset).
pub type DropSpec = (usize, f64, f64);

/// Imagine how the agent sits on the chair. The chair mesh is taken as-is
/// (world frame); the returned pose is expressed in that same frame.
///
/// Runs the 24-drop base schedule, extends to 56 drops when no more than one
/// correct sitting is found, picks the rotation with the most correct
/// sittings (ties broken by the smaller mean score product) and aggregates
/// that rotation's correct sittings.
pub fn imagine(
    chair: &Mesh,
    agent: &AgentModel,
    sam_cfg: &SamConfig,
    params: &SimParams,
) -> Result<(SittingPose, ImaginationReport), ImagineError> {
    imagine_with(chair, |aligned, obb, batch| {
        batch
            .iter()
            .map(|&(r, rot, off)| run_drop(aligned, obb, r, rot, off, agent, sam_cfg, params))
            .collect()
    })
}

/// `imagine` with a caller-supplied batch runner, so callers with threads can
/// fan the independent drops out. The runner must preserve batch order; the
/// reduction is order-independent regardless.
pub fn imagine_with<F>(
    chair: &Mesh,
    run_batch: F,
) -> Result<(SittingPose, ImaginationReport), ImagineError>
where
    F: Fn(&Mesh, &Obb, &[DropSpec]) -> Vec<DropRecord>,
{
    let (alignment, aligned_obb) = canonical_alignment(chair)?;
    let aligned = chair.transformed(&alignment);

    let mut schedule = make_schedule(&aligned_obb, false);
    let base_batch: Vec<DropSpec> = schedule
        .pairs()
        .into_iter()
        .map(|(r, o)| (r, schedule.rotations[r], schedule.offsets[o]))
        .collect();
    let mut drops = run_batch(&aligned, &aligned_obb, &base_batch);

    let correct_total = drops.iter().filter(|d| d.verdict.correct).count();
    let mut extended = false;
    if correct_total <= 1 {
        // Four extra positions per rotation; earlier results are kept.
        extended = true;
        let full = make_schedule(&aligned_obb, true);
        let extra_batch: Vec<DropSpec> = full
            .pairs()
            .into_iter()
            .filter(|&(_, o)| o >= 3)
            .map(|(r, o)| (r, full.rotations[r], full.offsets[o]))
            .collect();
        drops.extend(run_batch(&aligned, &aligned_obb, &extra_batch));
        schedule = full;
    }

    let mut report = summarize(drops, schedule, extended, yaw_of(&alignment));
    let Some(best) = report.chosen_rotation else {
        return Err(ImagineError::NoSittingFound(report));
    };
    let sittings: Vec<(Point3<f64>, f64, f64)> = report
        .drops
        .iter()
        .filter(|d| d.verdict.correct && d.rotation_index == best)
        .map(|d| (d.position_in_chair, d.yaw_in_chair, d.verdict.score_product))
        .collect();
    let pose = aggregate_pose(&sittings, &alignment)?;
    report.wall_clock_seconds = 0.0;
    Ok((pose, report))
}

/// Count correct sittings per rotation and pick the best rotation:
/// largest count, ties broken by the smallest mean score product.
fn summarize(
    drops: Vec<DropRecord>,
    schedule: DropSchedule,
    extended: bool,
    alignment_yaw: f64,
) -> ImaginationReport {
    let n_rot = schedule.rotations.len();
    let mut counts = alloc::vec![0u32; n_rot];
    for d in &drops {
        if d.verdict.correct {
            counts[d.rotation_index] += 1;
        }
    }
    let mut chosen: Option<usize> = None;
    for r in 0..n_rot {
        if counts[r] == 0 {
            continue;
        }
        let better = match chosen {
            None => true,
            Some(c) => {
                counts[r] > counts[c]
                    || (counts[r] == counts[c]
                        && mean_score_product(&drops, r) < mean_score_product(&drops, c))
            }
        };
        if better {
            chosen = Some(r);
        }
    }
    ImaginationReport {
        drops,
        correct_per_rotation: counts,
        chosen_rotation: chosen,
        extended,
        schedule,
        alignment_yaw,
        wall_clock_seconds: 0.0,
    }
}

fn mean_score_product(drops: &[DropRecord], rotation: usize) -> f64 {
    let vals: Vec<f64> = drops
        .iter()
        .filter(|d| d.verdict.correct && d.rotation_index == rotation)
        .map(|d| d.verdict.score_product)
        .collect();
    if vals.is_empty() {
        f64::INFINITY
    } else {
        vals.iter().sum::<f64>() / vals.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chairgen::box_mesh;
    use approx::assert_relative_eq;

    #[test]
    fn base_schedule_has_24_drops() {
        let mesh = box_mesh(Point3::new(0.0, 0.0, 0.2), Vector3::new(0.2, 0.15, 0.2), 0.0);
        let obb = compute_obb(&mesh).unwrap();
        let schedule = make_schedule(&obb, false);
        assert_eq!(schedule.len(), 24);
        assert_eq!(schedule.rotations.len(), 8);
        for (i, r) in schedule.rotations.iter().enumerate() {
            assert_relative_eq!(*r, i as f64 * core::f64::consts::FRAC_PI_4, epsilon = 1e-15);
        }
    }

    #[test]
    fn extended_schedule_has_56_drops() {
        let mesh = box_mesh(Point3::new(0.0, 0.0, 0.2), Vector3::new(0.2, 0.15, 0.2), 0.0);
        let obb = compute_obb(&mesh).unwrap();
        let schedule = make_schedule(&obb, true);
        assert_eq!(schedule.len(), 56);
    }

    #[test]
    fn l_sit_scales_linearly_with_obb() {
        let mesh = box_mesh(Point3::new(0.0, 0.0, 0.2), Vector3::new(0.2, 0.15, 0.2), 0.0);
        let obb = compute_obb(&mesh).unwrap();
        let mut double = obb;
        double.half_extents.x *= 2.0;
        assert_relative_eq!(
            make_schedule(&double, false).l_sit,
            2.0 * make_schedule(&obb, false).l_sit,
            epsilon = 1e-12
        );
        assert_relative_eq!(make_schedule(&obb, false).l_sit, L_SIT_SCALE * 0.4, epsilon = 1e-12);
    }

    #[test]
    fn aggregate_single_sitting_maps_through_alignment() {
        let g = yaw_translation(0.4, Vector3::new(0.1, -0.2, 0.0));
        let p = Point3::new(0.1, 0.0, 0.3);
        let pose = aggregate_pose(&[(p, 0.25, 0.5)], &g).unwrap();
        let expect = g.inverse_transform_point(&p);
        assert_relative_eq!(pose.position.x, expect.x, epsilon = 1e-12);
        assert_relative_eq!(pose.position.y, expect.y, epsilon = 1e-12);
        assert_relative_eq!(pose.yaw, 0.25 - 0.4, epsilon = 1e-12);
    }

    #[test]
    fn aggregate_equal_weights_is_plain_mean() {
        let id = RigidTransform::identity();
        let a = (Point3::new(0.1, 0.0, 0.3), 0.0, 0.2);
        let b = (Point3::new(0.3, 0.0, 0.3), 0.0, 0.2);
        let pose = aggregate_pose(&[a, b], &id).unwrap();
        assert_relative_eq!(pose.position.x, 0.2, epsilon = 1e-12);
        assert_relative_eq!(pose.yaw, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn aggregate_reciprocal_weighting_hand_computed() {
        // Weights 1/0.1 = 10 and 1/0.3 = 3.333...: weighted mean of x over
        // {0.1, 0.3} = (10*0.1 + 3.3333*0.3)/13.3333 = 0.15.
        let id = RigidTransform::identity();
        let a = (Point3::new(0.1, 0.0, 0.3), 0.1, 0.1);
        let b = (Point3::new(0.3, 0.0, 0.3), 0.1, 0.3);
        let pose = aggregate_pose(&[a, b], &id).unwrap();
        assert_relative_eq!(pose.position.x, 0.15, epsilon = 1e-12);
        assert_relative_eq!(pose.yaw, 0.1, epsilon = 1e-12);
    }

    #[test]
    fn aggregate_empty_list_errors() {
        assert!(matches!(
            aggregate_pose(&[], &RigidTransform::identity()),
            Err(ImagineError::EmptyList)
        ));
    }

    #[test]
    fn aggregate_zero_score_product_is_guarded() {
        let id = RigidTransform::identity();
        let a = (Point3::new(0.1, 0.0, 0.3), 0.0, 0.0);
        let b = (Point3::new(0.3, 0.0, 0.3), 0.0, 1.0);
        // Zero product clamps to the epsilon guard: weight 1e9 vs 1.
        let pose = aggregate_pose(&[a, b], &id).unwrap();
        assert!(pose.position.x < 0.1 + 1e-6);
    }

    #[test]
    fn circular_mean_handles_wraparound() {
        let id = RigidTransform::identity();
        let a = (Point3::origin(), core::f64::consts::PI - 0.1, 1.0);
        let b = (Point3::origin(), -core::f64::consts::PI + 0.1, 1.0);
        let pose = aggregate_pose(&[a, b], &id).unwrap();
        assert_relative_eq!(pose.yaw.abs(), core::f64::consts::PI, epsilon = 1e-9);
    }

    #[test]
    fn canonical_alignment_is_pose_invariant() {
        let chair = crate::chairgen::generate_chair(&crate::chairgen::ChairGenParams::new(
            crate::chairgen::ChairVariant::Standard,
            21,
        ))
        .unwrap();
        let (g0, obb0) = canonical_alignment(&chair.mesh).unwrap();
        let aligned0 = chair.mesh.transformed(&g0);
        for k in 1..8 {
            let turn = yaw_translation(
                k as f64 * core::f64::consts::FRAC_PI_4,
                Vector3::new(0.3 * k as f64, -0.2, 0.0),
            );
            let moved = chair.mesh.transformed(&turn);
            let (g1, obb1) = canonical_alignment(&moved).unwrap();
            let aligned1 = moved.transformed(&g1);
            for (a, b) in aligned0.vertices.iter().zip(aligned1.vertices.iter()) {
                assert!((a - b).norm() < 1e-9, "aligned frames differ at turn {k}");
            }
            assert_relative_eq!(obb0.half_extents.x, obb1.half_extents.x, epsilon = 1e-9);
        }
    }
}
