//! Scene snapshot export: meshes and poses serialized for offline rendering.

use serde::{Deserialize, Serialize};

use sitkit_core::geom::RigidTransform;
use sitkit_core::sim::{Scene, ShapeKind};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SnapshotBody {
    pub body: usize,
    pub pose: PoseRecord,
    pub shape: SnapshotShape,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum SnapshotShape {
    Mesh { vertices: Vec<[f64; 3]>, faces: Vec<[u32; 3]> },
    Capsule { radius: f64, half_len: f64, local_pose: PoseRecord },
}

/// Translation plus unit quaternion (w, x, y, z).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoseRecord {
    pub translation: [f64; 3],
    pub quaternion: [f64; 4],
}

impl PoseRecord {
    pub fn from_transform(g: &RigidTransform) -> Self {
        let t = g.translation.vector;
        let q = g.rotation.quaternion();
        Self { translation: [t.x, t.y, t.z], quaternion: [q.w, q.i, q.j, q.k] }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneSnapshot {
    pub time: f64,
    pub bodies: Vec<SnapshotBody>,
}

impl SceneSnapshot {
    pub fn capture(scene: &Scene) -> Self {
        let bodies = scene
            .shapes()
            .iter()
            .map(|shape| {
                let pose = scene.body_pose(shape.body);
                let snapshot_shape = match &shape.kind {
                    ShapeKind::Mesh(idx) => {
                        let mesh = scene.collision_mesh(*idx);
                        SnapshotShape::Mesh {
                            vertices: mesh.vertices.iter().map(|v| [v.x, v.y, v.z]).collect(),
                            faces: mesh.triangles.clone(),
                        }
                    }
                    ShapeKind::Capsule(c) => SnapshotShape::Capsule {
                        radius: c.radius,
                        half_len: c.half_len,
                        local_pose: PoseRecord::from_transform(&shape.local),
                    },
                };
                SnapshotBody {
                    body: shape.body,
                    pose: PoseRecord::from_transform(&pose),
                    shape: snapshot_shape,
                }
            })
            .collect();
        Self { time: scene.time(), bodies }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use sitkit_core::chairgen::{generate_chair, ChairGenParams, ChairVariant};
    use sitkit_core::sim::{BodyKind, SimParams};

    #[test]
    fn snapshot_captures_every_shape() {
        let chair = generate_chair(&ChairGenParams::new(ChairVariant::Standard, 80)).unwrap();
        let mut scene = Scene::new(SimParams::default()).unwrap();
        scene.add_mesh_body(&chair.mesh, nalgebra::Isometry3::identity(), BodyKind::Dynamic);
        let agent = sitkit_core::sim::AgentModel::child(0.9, 12.0);
        scene.add_agent(
            &agent,
            &nalgebra::Isometry3::translation(0.0, 0.0, 0.6),
            &agent.pre_sitting,
            1.0,
        );
        let snap = SceneSnapshot::capture(&scene);
        assert_eq!(snap.bodies.len(), 1 + agent.link_count());
        let json = serde_json::to_string(&snap).unwrap();
        let parsed: SceneSnapshot = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed.bodies.len(), snap.bodies.len());
    }
}
