//! TOML configuration covering every pipeline stage, the agent description
//! format, and mesh physical-attribute sidecars.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use nalgebra::{Isometry3, Matrix3, Point3, Translation3, UnitQuaternion, UnitVector3, Vector3};
use serde::{Deserialize, Serialize};

use sitkit_core::chairgen::{ChairGenParams, ChairVariant, Range};
use sitkit_core::geom::PlanarPose;
use sitkit_core::nav::{Arena, Footprint, GoalParams, PlannerParams};
use sitkit_core::sam::SamConfig;
use sitkit_core::sim::{AgentModel, BodyPart, JointSpec, LinkSpec, SimParams};
use sitkit_core::wholebody::PlanarChain;

/// Top-level configuration file. Every section is optional; omitted values
/// fall back to the built-in defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub sim: SimSection,
    pub sam: SamSection,
    pub agent: AgentSection,
    pub arena: ArenaSection,
    pub footprint: FootprintSection,
    pub goal: GoalSection,
    pub planner: PlannerSection,
    pub wholebody: WholebodySection,
    pub walk: WalkSection,
    pub chairgen: ChairGenSection,
    pub trial: TrialSection,
    pub bench: BenchSection,
    /// Optional sitting pose for the `plan` subcommand.
    pub sitting_pose: Option<SittingPoseSection>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Self::load(p),
            None => Ok(Self::default()),
        }
    }
}

macro_rules! opt_fields {
    ($name:ident { $($field:ident: $ty:ty),* $(,)? }) => {
        #[derive(Debug, Clone, Default, Serialize, Deserialize)]
        #[serde(default, deny_unknown_fields)]
        pub struct $name {
            $(pub $field: Option<$ty>,)*
        }
    };
}

opt_fields!(SimSection {
    gravity: f64,
    timestep: f64,
    restitution: f64,
    velocity_iterations: usize,
    position_iterations: usize,
    settle_ke_threshold: f64,
    settle_window: f64,
    max_sim_time: f64,
    agent_height: f64,
    agent_mass: f64,
    drop_clearance: f64,
    imagination_joint_scale: f64,
    plush_joint_scale: f64,
    linear_damping: f64,
    angular_damping: f64,
    ground_friction: f64,
});

impl SimSection {
    pub fn resolve(&self) -> SimParams {
        let mut p = SimParams::default();
        macro_rules! take {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { p.$f = v; })* };
        }
        take!(
            gravity, timestep, restitution, velocity_iterations, position_iterations,
            settle_ke_threshold, settle_window, max_sim_time, agent_height, agent_mass,
            drop_clearance, imagination_joint_scale, plush_joint_scale, linear_damping,
            angular_damping, ground_friction
        );
        p
    }
}

opt_fields!(SamSection {
    j_max: f64,
    l_max: f64,
    h_min: f64,
    h_max: f64,
    min_total_contacts: u32,
});

impl SamSection {
    pub fn resolve(&self, agent: &AgentModel) -> SamConfig {
        let mut cfg = SamConfig::for_agent(agent);
        if let Some(v) = self.j_max {
            cfg.j_max = v;
        }
        if let Some(v) = self.l_max {
            cfg.l_max = v;
        }
        if let Some(v) = self.h_min {
            cfg.h_min = v;
        }
        if let Some(v) = self.h_max {
            cfg.h_max = v;
        }
        if let Some(v) = self.min_total_contacts {
            cfg.min_total_contacts = v;
        }
        cfg
    }
}

/// The agent is either the built-in child model (scaled by the sim section)
/// or loaded from a description file.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentSection {
    pub file: Option<PathBuf>,
}

impl AgentSection {
    pub fn resolve(&self, sim: &SimParams, base_dir: &Path) -> Result<AgentModel> {
        match &self.file {
            Some(file) => {
                let path = if file.is_absolute() { file.clone() } else { base_dir.join(file) };
                load_agent_file(&path)
            }
            None => Ok(AgentModel::child(sim.agent_height, sim.agent_mass)),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArenaSection {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
    pub discs: Vec<DiscSection>,
    pub polygons: Vec<PolygonSection>,
    /// Where the walking robot waits (and walks from).
    pub robot_start: [f64; 3],
    /// Center of the square area chairs are placed in, and its half size.
    pub chair_area_center: [f64; 2],
    pub chair_area_half: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscSection {
    pub center: [f64; 2],
    pub radius: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolygonSection {
    pub corners: Vec<[f64; 2]>,
}

impl Default for ArenaSection {
    fn default() -> Self {
        // Compact planning arena with the stationary arm base protruding on
        // the -x side and the chair placement square in front of it.
        Self {
            x_min: -0.75,
            y_min: -0.55,
            x_max: 0.95,
            y_max: 0.55,
            discs: vec![DiscSection { center: [-0.75, 0.0], radius: 0.20 }],
            polygons: Vec::new(),
            robot_start: [0.78, 0.0, std::f64::consts::PI],
            chair_area_center: [-0.28, 0.0],
            chair_area_half: 0.18,
        }
    }
}

impl ArenaSection {
    pub fn resolve(&self) -> Arena {
        let mut arena = Arena::new(self.x_min, self.y_min, self.x_max, self.y_max);
        for disc in &self.discs {
            arena.add_disc((disc.center[0], disc.center[1]), disc.radius);
        }
        for poly in &self.polygons {
            arena.add_polygon(poly.corners.iter().map(|c| (c[0], c[1])).collect());
        }
        arena
    }

    pub fn robot_pose(&self) -> PlanarPose {
        PlanarPose::new(self.robot_start[0], self.robot_start[1], self.robot_start[2])
    }
}

opt_fields!(FootprintSection { semi_major: f64, semi_minor: f64 });

impl FootprintSection {
    pub fn resolve(&self) -> Footprint {
        let mut f = Footprint::default();
        if let Some(v) = self.semi_major {
            f.semi_major = v;
        }
        if let Some(v) = self.semi_minor {
            f.semi_minor = v;
        }
        f
    }
}

opt_fields!(GoalSection { l_init: f64, d_max_reach: f64, step: f64 });

impl GoalSection {
    pub fn resolve(&self) -> GoalParams {
        let mut g = GoalParams::default();
        if let Some(v) = self.l_init {
            g.l_init = v;
        }
        if let Some(v) = self.d_max_reach {
            g.d_max_reach = v;
        }
        if let Some(v) = self.step {
            g.step = v;
        }
        g
    }
}

opt_fields!(PlannerSection {
    max_iterations: usize,
    step: f64,
    heading_weight: f64,
    resolution_xy: f64,
    resolution_heading_degrees: f64,
    shortcut_attempts: usize,
});

impl PlannerSection {
    pub fn resolve(&self) -> PlannerParams {
        let mut p = PlannerParams::default();
        if let Some(v) = self.max_iterations {
            p.max_iterations = v;
        }
        if let Some(v) = self.step {
            p.step = v;
        }
        if let Some(v) = self.heading_weight {
            p.heading_weight = v;
        }
        if let Some(v) = self.resolution_xy {
            p.resolution_xy = v;
        }
        if let Some(v) = self.resolution_heading_degrees {
            p.resolution_heading = v.to_radians();
        }
        if let Some(v) = self.shortcut_attempts {
            p.shortcut_attempts = v;
        }
        p
    }
}

opt_fields!(WholebodySection {
    w1: f64,
    w2: f64,
    horizon: usize,
    dt: f64,
    collision_margin: f64,
    support_margin: f64,
    bear_mass: f64,
});

impl WholebodySection {
    pub fn chain(&self) -> PlanarChain {
        let mut chain = PlanarChain::small_humanoid();
        if let Some(m) = self.bear_mass {
            chain.bear_mass = m;
        }
        chain
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkSection {
    /// Per-pose walking drift bounds; omit for an exact follower.
    pub noise_xy: Option<f64>,
    pub noise_heading_degrees: Option<f64>,
}

impl WalkSection {
    pub fn noise(&self) -> Option<(f64, f64)> {
        match (self.noise_xy, self.noise_heading_degrees) {
            (None, None) => None,
            (xy, heading) => Some((xy.unwrap_or(0.0), heading.unwrap_or(0.0).to_radians())),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChairGenSection {
    pub variant: Option<String>,
    pub seat_width: Option<[f64; 2]>,
    pub seat_depth: Option<[f64; 2]>,
    pub seat_height: Option<[f64; 2]>,
    pub backrest_height: Option<[f64; 2]>,
    pub backrest_angle: Option<[f64; 2]>,
    pub mass: Option<[f64; 2]>,
    pub friction: Option<f64>,
}

pub fn parse_variant(name: &str) -> Result<ChairVariant> {
    Ok(match name {
        "standard" => ChairVariant::Standard,
        "stool-no-back" => ChairVariant::StoolNoBack,
        "step-stool-narrow-seat" => ChairVariant::StepStoolNarrowSeat,
        "improvised-stack" => ChairVariant::ImprovisedStack,
        other => bail!("unknown chair variant '{other}'"),
    })
}

pub fn variant_name(variant: ChairVariant) -> &'static str {
    match variant {
        ChairVariant::Standard => "standard",
        ChairVariant::StoolNoBack => "stool-no-back",
        ChairVariant::StepStoolNarrowSeat => "step-stool-narrow-seat",
        ChairVariant::ImprovisedStack => "improvised-stack",
    }
}

impl ChairGenSection {
    pub fn resolve(&self, seed: u64) -> Result<ChairGenParams> {
        let variant = match &self.variant {
            Some(name) => parse_variant(name)?,
            None => ChairVariant::Standard,
        };
        let mut params = ChairGenParams::new(variant, seed);
        let range = |v: &Option<[f64; 2]>, def: Range| v.map(|[lo, hi]| Range::new(lo, hi)).unwrap_or(def);
        params.seat_width = range(&self.seat_width, params.seat_width);
        params.seat_depth = range(&self.seat_depth, params.seat_depth);
        params.seat_height = range(&self.seat_height, params.seat_height);
        params.backrest_height = range(&self.backrest_height, params.backrest_height);
        params.backrest_angle = range(&self.backrest_angle, params.backrest_angle);
        params.mass = range(&self.mass, params.mass);
        if let Some(f) = self.friction {
            params.friction = f;
        }
        Ok(params)
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrialSection {
    pub protocol: Option<String>,
    pub record_timings: Option<bool>,
    /// Embed a final-scene snapshot into the result JSON.
    pub snapshot: Option<bool>,
    /// Override the simulated human's policy (defaults follow the protocol).
    pub human_policy: Option<String>,
    /// Explicit chair pose [x, y, yaw]; omitted => protocol placement.
    pub chair_pose: Option<[f64; 3]>,
    /// Chair mesh file; omitted => procedural chair from [chairgen].
    pub mesh: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSection {
    /// Held-out chair count; chairs derive per-index seeds from the master.
    pub chairs: usize,
    pub accessible_per_chair: usize,
    pub obey_per_chair: usize,
    pub disobey_per_chair: usize,
    /// Variant mix: indices into the held-out set that become the improvised
    /// stack and the narrow step stool.
    pub improvised_index: Option<usize>,
    pub narrow_stool_index: Option<usize>,
}

impl Default for BenchSection {
    fn default() -> Self {
        Self {
            chairs: 12,
            accessible_per_chair: 3,
            obey_per_chair: 2,
            disobey_per_chair: 1,
            improvised_index: Some(10),
            narrow_stool_index: Some(11),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SittingPoseSection {
    pub position: [f64; 3],
    pub yaw: f64,
}

/// Physical attributes sidecar for mesh files.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributesFile {
    pub mass: f64,
    pub center_of_mass: Option<[f64; 3]>,
    pub inertia_diagonal: Option<[f64; 3]>,
    /// Products of inertia (ixy, iyz, izx).
    pub inertia_products: Option<[f64; 3]>,
    pub friction: Option<f64>,
}

impl AttributesFile {
    pub fn inertia(&self) -> Option<Matrix3<f64>> {
        let d = self.inertia_diagonal?;
        let p = self.inertia_products.unwrap_or([0.0; 3]);
        Some(Matrix3::new(
            d[0], p[0], p[2],
            p[0], d[1], p[1],
            p[2], p[1], d[2],
        ))
    }
}

// ---------------------------------------------------------------------------
// Agent description files
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentFile {
    pub friction: f64,
    pub links: Vec<AgentLinkEntry>,
    pub joints: Vec<AgentJointEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentLinkEntry {
    pub name: String,
    pub mass: f64,
    pub capsule_radius: f64,
    pub capsule_half_len: f64,
    pub shape_translation: [f64; 3],
    /// Axis-angle rotation (unit axis xyz, angle radians) of the capsule.
    pub shape_rotation: Option<[f64; 4]>,
    /// "lower" or "upper" body tag.
    pub part: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentJointEntry {
    pub name: String,
    pub parent: String,
    pub child: String,
    pub anchor: [f64; 3],
    pub axis: [f64; 3],
    pub limits: [f64; 2],
    pub stiffness: f64,
    pub damping: f64,
    pub pre_sitting: f64,
    pub key_angle: Option<f64>,
}

pub fn load_agent_file(path: &Path) -> Result<AgentModel> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading agent file {}", path.display()))?;
    let file: AgentFile =
        toml::from_str(&text).with_context(|| format!("parsing agent file {}", path.display()))?;
    agent_from_file(&file)
}

pub fn agent_from_file(file: &AgentFile) -> Result<AgentModel> {
    let mut links = Vec::with_capacity(file.links.len());
    for entry in &file.links {
        let rotation = match entry.shape_rotation {
            Some([x, y, z, angle]) => {
                let axis = UnitVector3::new_normalize(Vector3::new(x, y, z));
                UnitQuaternion::from_axis_angle(&axis, angle)
            }
            None => UnitQuaternion::identity(),
        };
        let part = match entry.part.as_str() {
            "lower" => BodyPart::Lower,
            "upper" => BodyPart::Upper,
            other => bail!("link {}: unknown body part '{other}'", entry.name),
        };
        links.push(LinkSpec {
            name: entry.name.clone(),
            mass: entry.mass,
            capsule_radius: entry.capsule_radius,
            capsule_half_len: entry.capsule_half_len,
            shape_local: Isometry3::from_parts(
                Translation3::new(
                    entry.shape_translation[0],
                    entry.shape_translation[1],
                    entry.shape_translation[2],
                ),
                rotation,
            ),
            part,
        });
    }
    let link_index = |name: &str| -> Result<usize> {
        file.links
            .iter()
            .position(|l| l.name == name)
            .with_context(|| format!("unknown link '{name}'"))
    };
    let mut joints = Vec::with_capacity(file.joints.len());
    let mut pre = Vec::with_capacity(file.joints.len());
    let mut key = Vec::with_capacity(file.joints.len());
    for entry in &file.joints {
        let parent_link = link_index(&entry.parent)?;
        let child_link = link_index(&entry.child)?;
        if child_link == 0 {
            bail!("joint {}: the base link cannot be a child", entry.name);
        }
        joints.push(JointSpec {
            name: entry.name.clone(),
            parent_link,
            child_link,
            anchor_in_parent: Point3::new(entry.anchor[0], entry.anchor[1], entry.anchor[2]),
            axis: UnitVector3::new_normalize(Vector3::new(
                entry.axis[0],
                entry.axis[1],
                entry.axis[2],
            )),
            limits: (entry.limits[0], entry.limits[1]),
            stiffness: entry.stiffness,
            damping: entry.damping,
        });
        pre.push(entry.pre_sitting);
        key.push(entry.key_angle.unwrap_or(entry.pre_sitting));
    }
    Ok(AgentModel { links, joints, pre_sitting: pre, key_angles: key, friction: file.friction })
}

pub fn agent_to_file(agent: &AgentModel) -> AgentFile {
    let links = agent
        .links
        .iter()
        .map(|l| {
            let rot = l.shape_local.rotation;
            let shape_rotation = if rot.angle() > 1e-12 {
                let axis = rot.axis().map(|a| a.into_inner()).unwrap_or_else(Vector3::x);
                Some([axis.x, axis.y, axis.z, rot.angle()])
            } else {
                None
            };
            AgentLinkEntry {
                name: l.name.clone(),
                mass: l.mass,
                capsule_radius: l.capsule_radius,
                capsule_half_len: l.capsule_half_len,
                shape_translation: [
                    l.shape_local.translation.vector.x,
                    l.shape_local.translation.vector.y,
                    l.shape_local.translation.vector.z,
                ],
                shape_rotation,
                part: match l.part {
                    BodyPart::Lower => "lower".into(),
                    BodyPart::Upper => "upper".into(),
                },
            }
        })
        .collect();
    let joints = agent
        .joints
        .iter()
        .enumerate()
        .map(|(i, j)| AgentJointEntry {
            name: j.name.clone(),
            parent: agent.links[j.parent_link].name.clone(),
            child: agent.links[j.child_link].name.clone(),
            anchor: [j.anchor_in_parent.x, j.anchor_in_parent.y, j.anchor_in_parent.z],
            axis: [j.axis.x, j.axis.y, j.axis.z],
            limits: [j.limits.0, j.limits.1],
            stiffness: j.stiffness,
            damping: j.damping,
            pre_sitting: agent.pre_sitting[i],
            key_angle: Some(agent.key_angles[i]),
        })
        .collect();
    AgentFile { friction: agent.friction, links, joints }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_parses_from_empty_toml() {
        let cfg: ConfigFile = toml::from_str("").unwrap();
        assert_eq!(cfg.sim.resolve(), SimParams::default());
        let arena = cfg.arena.resolve();
        assert!(arena.obstacles.len() == 1);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<ConfigFile>("[sim]\nbogus = 1\n").is_err());
    }

    #[test]
    fn agent_file_roundtrip_preserves_the_model() {
        let agent = AgentModel::child(0.9, 12.0);
        let file = agent_to_file(&agent);
        let text = toml::to_string_pretty(&file).unwrap();
        let parsed: AgentFile = toml::from_str(&text).unwrap();
        let rebuilt = agent_from_file(&parsed).unwrap();
        assert_eq!(rebuilt.links.len(), agent.links.len());
        assert_eq!(rebuilt.joints.len(), agent.joints.len());
        assert_eq!(rebuilt.pre_sitting, agent.pre_sitting);
        for (a, b) in agent.links.iter().zip(&rebuilt.links) {
            assert_eq!(a.name, b.name);
            assert!((a.mass - b.mass).abs() < 1e-12);
            assert!((a.shape_local.translation.vector - b.shape_local.translation.vector).norm() < 1e-12);
        }
        // FK agrees.
        let p1 = agent.forward_kinematics(&nalgebra::Isometry3::identity(), &agent.pre_sitting);
        let p2 = rebuilt.forward_kinematics(&nalgebra::Isometry3::identity(), &rebuilt.pre_sitting);
        for (a, b) in p1.iter().zip(&p2) {
            assert!((a.translation.vector - b.translation.vector).norm() < 1e-12);
        }
    }

    #[test]
    fn sim_overrides_apply() {
        let cfg: ConfigFile = toml::from_str("[sim]\ngravity = 3.7\nagent_mass = 10.0\n").unwrap();
        let params = cfg.sim.resolve();
        assert_eq!(params.gravity, 3.7);
        assert_eq!(params.agent_mass, 10.0);
        assert_eq!(params.timestep, SimParams::default().timestep);
    }

    #[test]
    fn variant_names_roundtrip() {
        for v in [
            ChairVariant::Standard,
            ChairVariant::StoolNoBack,
            ChairVariant::StepStoolNarrowSeat,
            ChairVariant::ImprovisedStack,
        ] {
            assert_eq!(parse_variant(variant_name(v)).unwrap(), v);
        }
        assert!(parse_variant("recliner").is_err());
    }
}
