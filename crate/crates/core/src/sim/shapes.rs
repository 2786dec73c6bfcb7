//! Collision shapes and their inertia.

use alloc::vec::Vec;
use nalgebra::{Isometry3, Matrix3, Point3, Vector3};

use crate::geom::Mesh;

/// Capsule aligned with the local z-axis: segment endpoints at `±half_len z`,
/// inflated by `radius`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Capsule {
    pub radius: f64,
    pub half_len: f64,
}

impl Capsule {
    /// Inertia tensor about the capsule COM (local axes) for the given mass:
    /// cylinder plus two hemispherical caps.
    pub fn inertia(&self, mass: f64) -> Matrix3<f64> {
        let r = self.radius;
        let h = 2.0 * self.half_len;
        let v_cyl = core::f64::consts::PI * r * r * h;
        let v_sph = 4.0 / 3.0 * core::f64::consts::PI * r * r * r;
        let density = mass / (v_cyl + v_sph).max(1e-12);
        let m_cyl = density * v_cyl;
        let m_sph = density * v_sph;

        let i_axis = m_cyl * r * r / 2.0 + m_sph * 2.0 * r * r / 5.0;
        let mut i_perp = m_cyl * (3.0 * r * r + h * h) / 12.0;
        // Hemispheres offset from the COM by half_len (+ 3r/8 cap centroid).
        let d = self.half_len;
        i_perp += m_sph * (2.0 * r * r / 5.0 + d * d + 3.0 * d * r / 4.0);
        Matrix3::from_diagonal(&Vector3::new(i_perp, i_perp, i_axis))
    }

    pub fn volume(&self) -> f64 {
        let r = self.radius;
        core::f64::consts::PI * r * r * (2.0 * self.half_len) + 4.0 / 3.0 * core::f64::consts::PI * r * r * r
    }
}

/// Triangle mesh prepared for collision queries in its own local frame.
#[derive(Debug, Clone)]
pub struct CollisionMesh {
    pub vertices: Vec<Point3<f64>>,
    pub triangles: Vec<[u32; 3]>,
    /// Per-triangle AABB (min, max) in mesh-local coordinates.
    pub tri_aabbs: Vec<(Point3<f64>, Point3<f64>)>,
}

impl CollisionMesh {
    pub fn from_mesh(mesh: &Mesh) -> Self {
        let tri_aabbs = mesh
            .faces
            .iter()
            .map(|f| {
                let mut min = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
                let mut max = Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
                for &i in f {
                    let v = mesh.vertices[i as usize];
                    for k in 0..3 {
                        min[k] = min[k].min(v[k]);
                        max[k] = max[k].max(v[k]);
                    }
                }
                (min, max)
            })
            .collect();
        Self {
            vertices: mesh.vertices.clone(),
            triangles: mesh.faces.clone(),
            tri_aabbs,
        }
    }

    pub fn triangle(&self, i: usize) -> [Point3<f64>; 3] {
        let f = self.triangles[i];
        [
            self.vertices[f[0] as usize],
            self.vertices[f[1] as usize],
            self.vertices[f[2] as usize],
        ]
    }
}

/// A collision shape instance attached to a body at a local pose.
#[derive(Debug, Clone)]
pub enum ShapeKind {
    Capsule(Capsule),
    /// Index into the scene's collision-mesh table.
    Mesh(usize),
}

#[derive(Debug, Clone)]
pub struct ShapeInstance {
    pub body: usize,
    pub local: Isometry3<f64>,
    pub kind: ShapeKind,
}
