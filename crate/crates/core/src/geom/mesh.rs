//! Triangle meshes with the physical attributes a dynamic body needs.

use alloc::vec::Vec;
use nalgebra::{Matrix3, Point3, Vector3};
use serde::{Deserialize, Serialize};

use super::RigidTransform;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MeshError {
    EmptyMesh,
    /// A face references a vertex index outside the vertex list.
    InvalidFaceIndex { face: usize, index: u32 },
}

impl core::fmt::Display for MeshError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            MeshError::EmptyMesh => write!(f, "mesh has no vertices"),
            MeshError::InvalidFaceIndex { face, index } => {
                write!(f, "face {face} references out-of-range vertex {index}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for MeshError {}

/// Mass, center of mass, inertia about the COM, and friction of a body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalAttributes {
    pub mass: f64,
    pub center_of_mass: Point3<f64>,
    /// Inertia tensor about the center of mass, world-aligned body axes.
    pub inertia: Matrix3<f64>,
    pub friction: f64,
}

impl PhysicalAttributes {
    pub fn new(mass: f64, center_of_mass: Point3<f64>, inertia: Matrix3<f64>, friction: f64) -> Self {
        Self { mass, center_of_mass, inertia, friction }
    }
}

/// Triangle surface geometry plus the attributes needed to simulate it as a
/// dynamic rigid body. Accepts closed-per-component triangle soup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub vertices: Vec<Point3<f64>>,
    pub faces: Vec<[u32; 3]>,
    pub attributes: PhysicalAttributes,
}

impl Mesh {
    /// Build a mesh, dropping degenerate (zero-area) triangles. Returns the
    /// number of dropped faces so callers can warn about them.
    pub fn new(
        vertices: Vec<Point3<f64>>,
        faces: Vec<[u32; 3]>,
        attributes: PhysicalAttributes,
    ) -> Result<(Self, usize), MeshError> {
        if vertices.is_empty() {
            return Err(MeshError::EmptyMesh);
        }
        let n = vertices.len() as u32;
        for (i, face) in faces.iter().enumerate() {
            for &idx in face {
                if idx >= n {
                    return Err(MeshError::InvalidFaceIndex { face: i, index: idx });
                }
            }
        }
        let mut kept = Vec::with_capacity(faces.len());
        let mut dropped = 0usize;
        for face in faces {
            let a = vertices[face[0] as usize];
            let b = vertices[face[1] as usize];
            let c = vertices[face[2] as usize];
            let area2 = (b - a).cross(&(c - a)).norm();
            if area2 > 1e-14 {
                kept.push(face);
            } else {
                dropped += 1;
            }
        }
        Ok((Self { vertices, faces: kept, attributes }, dropped))
    }

    pub fn transformed(&self, g: &RigidTransform) -> Mesh {
        let vertices = self.vertices.iter().map(|v| g.transform_point(v)).collect();
        let mut attributes = self.attributes.clone();
        attributes.center_of_mass = g.transform_point(&self.attributes.center_of_mass);
        let r = g.rotation.to_rotation_matrix().into_inner();
        attributes.inertia = r * self.attributes.inertia * r.transpose();
        Mesh { vertices, faces: self.faces.clone(), attributes }
    }

    pub fn min_z(&self) -> f64 {
        self.vertices.iter().fold(f64::INFINITY, |m, v| m.min(v.z))
    }

    pub fn triangle(&self, i: usize) -> [Point3<f64>; 3] {
        let f = self.faces[i];
        [
            self.vertices[f[0] as usize],
            self.vertices[f[1] as usize],
            self.vertices[f[2] as usize],
        ]
    }

    /// Estimate mass properties for a closed mesh of uniform density so that
    /// the total mass equals `mass`. Falls back to a box approximation for
    /// meshes whose signed volume is degenerate (open or flat soup).
    pub fn estimate_attributes(&mut self, mass: f64, friction: f64) {
        if let Some((com, unit_inertia)) = polyhedron_mass_properties(self) {
            self.attributes = PhysicalAttributes::new(mass, com, unit_inertia * mass, friction);
        } else {
            let (min, max) = self.aabb();
            let c = Point3::from((min.coords + max.coords) * 0.5);
            let d = max - min;
            let ix = mass / 12.0 * (d.y * d.y + d.z * d.z);
            let iy = mass / 12.0 * (d.x * d.x + d.z * d.z);
            let iz = mass / 12.0 * (d.x * d.x + d.y * d.y);
            self.attributes =
                PhysicalAttributes::new(mass, c, Matrix3::from_diagonal(&Vector3::new(ix, iy, iz)), friction);
        }
    }

    pub fn aabb(&self) -> (Point3<f64>, Point3<f64>) {
        let mut min = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut max = Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            for k in 0..3 {
                min[k] = min[k].min(v[k]);
                max[k] = max[k].max(v[k]);
            }
        }
        (min, max)
    }
}

/// Center of mass and inertia-per-unit-mass of a closed triangle mesh via
/// signed tetrahedron integrals. Returns `None` when the enclosed volume is
/// too small to be meaningful.
fn polyhedron_mass_properties(mesh: &Mesh) -> Option<(Point3<f64>, Matrix3<f64>)> {
    let mut volume = 0.0;
    let mut com = Vector3::zeros();
    // Accumulators for the inertia integrals about the origin.
    let (mut ixx, mut iyy, mut izz, mut ixy, mut iyz, mut izx) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);

    for i in 0..mesh.faces.len() {
        let [a, b, c] = mesh.triangle(i);
        let (a, b, c) = (a.coords, b.coords, c.coords);
        let det = a.dot(&b.cross(&c));
        volume += det / 6.0;
        com += det / 24.0 * (a + b + c);

        // Second moment of an origin-apex tetrahedron:
        // integral of x_u * x_v over its volume, det/120 * (doubled diagonal
        // vertex pairs plus cross terms).
        let s = |u: usize, v: usize| -> f64 {
            det / 120.0
                * (2.0 * (a[u] * a[v] + b[u] * b[v] + c[u] * c[v])
                    + a[u] * b[v] + a[v] * b[u]
                    + a[u] * c[v] + a[v] * c[u]
                    + b[u] * c[v] + b[v] * c[u])
        };
        ixx += s(0, 0);
        iyy += s(1, 1);
        izz += s(2, 2);
        ixy += s(0, 1);
        iyz += s(1, 2);
        izx += s(2, 0);
    }

    if volume.abs() < 1e-12 {
        return None;
    }
    let com = com / volume;
    // Inertia per unit mass about the origin, then shift to the COM.
    let density = 1.0 / volume;
    let jxx = density * (iyy + izz);
    let jyy = density * (ixx + izz);
    let jzz = density * (ixx + iyy);
    let jxy = -density * ixy;
    let jyz = -density * iyz;
    let jzx = -density * izx;
    let mut inertia = Matrix3::new(jxx, jxy, jzx, jxy, jyy, jyz, jzx, jyz, jzz);
    // Parallel axis: translate from origin to COM (per unit mass).
    let r2 = com.norm_squared();
    let shift = Matrix3::identity() * r2 - com * com.transpose();
    inertia -= shift;
    Some((Point3::from(com), inertia))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_relative_eq;

    pub(crate) fn unit_box_mesh(half: Vector3<f64>, center: Point3<f64>) -> Mesh {
        crate::chairgen::box_mesh(center, half, 0.0)
    }

    #[test]
    fn empty_mesh_rejected() {
        let attrs = PhysicalAttributes::new(1.0, Point3::origin(), Matrix3::identity(), 0.5);
        assert!(matches!(Mesh::new(vec![], vec![], attrs), Err(MeshError::EmptyMesh)));
    }

    #[test]
    fn invalid_face_index_rejected() {
        let attrs = PhysicalAttributes::new(1.0, Point3::origin(), Matrix3::identity(), 0.5);
        let verts = vec![Point3::origin(), Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 1.0, 0.0)];
        let err = Mesh::new(verts, vec![[0, 1, 7]], attrs).unwrap_err();
        assert!(matches!(err, MeshError::InvalidFaceIndex { face: 0, index: 7 }));
    }

    #[test]
    fn degenerate_faces_dropped() {
        let attrs = PhysicalAttributes::new(1.0, Point3::origin(), Matrix3::identity(), 0.5);
        let verts = vec![Point3::origin(), Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 1.0, 0.0)];
        let (mesh, dropped) = Mesh::new(verts, vec![[0, 1, 2], [0, 1, 1]], attrs).unwrap();
        assert_eq!(dropped, 1);
        assert_eq!(mesh.faces.len(), 1);
    }

    #[test]
    fn box_mass_properties_match_analytic() {
        let mut mesh = unit_box_mesh(Vector3::new(0.5, 0.4, 0.3), Point3::new(0.2, -0.1, 0.7));
        mesh.estimate_attributes(2.0, 0.5);
        let a = &mesh.attributes;
        assert_relative_eq!(a.center_of_mass.x, 0.2, epsilon = 1e-9);
        assert_relative_eq!(a.center_of_mass.y, -0.1, epsilon = 1e-9);
        assert_relative_eq!(a.center_of_mass.z, 0.7, epsilon = 1e-9);
        // Solid box inertia: m/12 * (dy^2 + dz^2) etc., with d = 2*half.
        let m = 2.0;
        assert_relative_eq!(a.inertia[(0, 0)], m / 12.0 * (0.8f64.powi(2) + 0.6f64.powi(2)), epsilon = 1e-9);
        assert_relative_eq!(a.inertia[(1, 1)], m / 12.0 * (1.0f64.powi(2) + 0.6f64.powi(2)), epsilon = 1e-9);
        assert_relative_eq!(a.inertia[(2, 2)], m / 12.0 * (1.0f64.powi(2) + 0.8f64.powi(2)), epsilon = 1e-9);
        assert!(a.inertia[(0, 1)].abs() < 1e-9);
    }

    #[test]
    fn transform_roundtrip_restores_vertices() {
        let mesh = unit_box_mesh(Vector3::new(0.5, 0.5, 0.5), Point3::origin());
        let g = super::super::yaw_translation(0.7, Vector3::new(1.0, -2.0, 0.3));
        let back = mesh.transformed(&g).transformed(&g.inverse());
        for (a, b) in mesh.vertices.iter().zip(back.vertices.iter()) {
            assert!((a - b).norm() < 1e-9);
        }
    }
}
