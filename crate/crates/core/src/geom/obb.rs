//! Z-aligned minimum-volume oriented bounding boxes.
//!
//! Chairs are assumed upright, so the search is restricted to boxes rotated
//! about the world z-axis: rotating calipers over the convex hull of the xy
//! projection, with the z extent taken directly from the vertices.

use alloc::vec::Vec;
use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use super::{yaw_translation, Mesh, MeshError, RigidTransform};

/// Z-aligned oriented bounding box.
///
/// `yaw` is canonical in `[0, pi/2)` (smallest non-negative representative;
/// a box is invariant under quarter-turns with swapped extents).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obb {
    pub center: Point3<f64>,
    pub yaw: f64,
    pub half_extents: Vector3<f64>,
}

impl Obb {
    pub fn top_z(&self) -> f64 {
        self.center.z + self.half_extents.z
    }

    /// Box corners projected to the xy-plane, counterclockwise.
    pub fn footprint_corners(&self) -> [(f64, f64); 4] {
        let (c, s) = (self.yaw.cos(), self.yaw.sin());
        let (ex, ey) = (self.half_extents.x, self.half_extents.y);
        let mut out = [(0.0, 0.0); 4];
        for (k, (sx, sy)) in [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)]
            .into_iter()
            .enumerate()
        {
            let lx = sx * ex;
            let ly = sy * ey;
            out[k] = (self.center.x + c * lx - s * ly, self.center.y + s * lx + c * ly);
        }
        out
    }

    /// True when `p` lies inside the box inflated by `tol`.
    pub fn contains(&self, p: &Point3<f64>, tol: f64) -> bool {
        let d = p - self.center;
        let (c, s) = (self.yaw.cos(), self.yaw.sin());
        let lx = c * d.x + s * d.y;
        let ly = -s * d.x + c * d.y;
        lx.abs() <= self.half_extents.x + tol
            && ly.abs() <= self.half_extents.y + tol
            && d.z.abs() <= self.half_extents.z + tol
    }

    pub fn footprint_area(&self) -> f64 {
        4.0 * self.half_extents.x * self.half_extents.y
    }
}

/// Minimum-footprint z-aligned bounding box of a mesh.
pub fn compute_obb(mesh: &Mesh) -> Result<Obb, MeshError> {
    if mesh.vertices.is_empty() {
        return Err(MeshError::EmptyMesh);
    }
    let pts: Vec<(f64, f64)> = mesh.vertices.iter().map(|v| (v.x, v.y)).collect();
    let hull = convex_hull_xy(&pts);

    let (mut z_min, mut z_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in &mesh.vertices {
        z_min = z_min.min(v.z);
        z_max = z_max.max(v.z);
    }

    let mut best: Option<(f64, f64, f64, f64, f64, f64)> = None; // area, yaw, cx, cy, ex, ey
    let mut consider = |yaw: f64| {
        let yaw = canonical_yaw(yaw);
        let (c, s) = (yaw.cos(), yaw.sin());
        let (mut lo_u, mut hi_u) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut lo_v, mut hi_v) = (f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in &hull {
            let u = c * x + s * y;
            let v = -s * x + c * y;
            lo_u = lo_u.min(u);
            hi_u = hi_u.max(u);
            lo_v = lo_v.min(v);
            hi_v = hi_v.max(v);
        }
        let ex = ((hi_u - lo_u) * 0.5).max(1e-12);
        let ey = ((hi_v - lo_v) * 0.5).max(1e-12);
        let area = 4.0 * ex * ey;
        let mu = (lo_u + hi_u) * 0.5;
        let mv = (lo_v + hi_v) * 0.5;
        let cx = c * mu - s * mv;
        let cy = s * mu + c * mv;
        let better = match best {
            None => true,
            Some((a, y, ..)) => {
                area < a - 1e-15 || (area <= a + 1e-15 && yaw < y - 1e-12)
            }
        };
        if better {
            best = Some((area, yaw, cx, cy, ex, ey));
        }
    };

    if hull.len() < 2 {
        consider(0.0);
    } else {
        for i in 0..hull.len() {
            let (x0, y0) = hull[i];
            let (x1, y1) = hull[(i + 1) % hull.len()];
            let (dx, dy) = (x1 - x0, y1 - y0);
            if dx * dx + dy * dy < 1e-24 {
                continue;
            }
            consider(dy.atan2(dx));
        }
        // Collinear hulls produce a single effective edge; cover the
        // axis-aligned candidate too so thin slivers still get a box.
        consider(0.0);
    }

    let (_, yaw, cx, cy, ex, ey) = best.expect("at least one candidate yaw");
    Ok(Obb {
        center: Point3::new(cx, cy, (z_min + z_max) * 0.5),
        yaw,
        half_extents: Vector3::new(ex, ey, ((z_max - z_min) * 0.5).max(1e-12)),
    })
}

/// Yaw-plus-horizontal-translation transform that aligns the OBB axes with
/// the world axes and moves the OBB center to the origin in the xy-plane.
/// The z translation is zero.
pub fn obb_alignment_transform(obb: &Obb) -> RigidTransform {
    // g = T(-R^-1 c_xy) after R_z(-yaw): rotate first, then translate.
    let (c, s) = ((-obb.yaw).cos(), (-obb.yaw).sin());
    let tx = -(c * obb.center.x - s * obb.center.y);
    let ty = -(s * obb.center.x + c * obb.center.y);
    yaw_translation(-obb.yaw, Vector3::new(tx, ty, 0.0))
}

fn canonical_yaw(yaw: f64) -> f64 {
    let q = core::f64::consts::FRAC_PI_2;
    let mut y = yaw % q;
    if y < 0.0 {
        y += q;
    }
    if y >= q {
        y -= q;
    }
    y
}

/// Andrew monotone chain; returns counterclockwise hull without the repeated
/// last point. Collinear points are dropped.
pub(crate) fn convex_hull_xy(pts: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut p: Vec<(f64, f64)> = pts.to_vec();
    p.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
    p.dedup();
    if p.len() <= 2 {
        return p;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| -> f64 {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut lower: Vec<(f64, f64)> = Vec::new();
    for &q in &p {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], q) <= 0.0 {
            lower.pop();
        }
        lower.push(q);
    }
    let mut upper: Vec<(f64, f64)> = Vec::new();
    for &q in p.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], q) <= 0.0 {
            upper.pop();
        }
        upper.push(q);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}
