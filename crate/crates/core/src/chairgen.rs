//! Procedural chair generation with recorded ground truth.
//!
//! Chairs are assembled from solid boxes (seat, backrest, legs, steps,
//! stacked blocks) so that mass properties follow from the box composition
//! and tests can check imagined poses against the generator's own seat frame.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{Isometry3, Matrix3, Point3, Translation3, UnitQuaternion, Vector3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geom::{Mesh, PhysicalAttributes};
use crate::rng::seeded_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChairVariant {
    /// Four legs, flat seat, backrest slab.
    Standard,
    /// Seat and legs only, nothing above the seat.
    StoolNoBack,
    /// Two-tier step stool whose lower (sittable) tread is much shallower
    /// than a thigh.
    StepStoolNarrowSeat,
    /// Seat block with a back improvised from stacked smaller blocks.
    ImprovisedStack,
}

/// Inclusive sampling range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        if (self.hi - self.lo).abs() < 1e-12 {
            self.lo
        } else {
            rng.gen_range(self.lo..self.hi)
        }
    }

    fn valid(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite() && self.lo > 0.0 && self.hi >= self.lo
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChairGenParams {
    pub variant: ChairVariant,
    /// Lateral seat size (m).
    pub seat_width: Range,
    /// Fore-aft seat size (m).
    pub seat_depth: Range,
    /// Seat top height above ground (m).
    pub seat_height: Range,
    /// Backrest rise above the seat (m).
    pub backrest_height: Range,
    /// Backrest tilt away from vertical (radians).
    pub backrest_angle: Range,
    /// Total chair mass (kg).
    pub mass: Range,
    pub friction: f64,
    pub seed: u64,
}

impl ChairGenParams {
    /// Child-scale defaults for the given variant.
    pub fn new(variant: ChairVariant, seed: u64) -> Self {
        Self {
            variant,
            seat_width: Range::new(0.30, 0.40),
            seat_depth: Range::new(0.26, 0.33),
            seat_height: Range::new(0.20, 0.28),
            backrest_height: Range::new(0.16, 0.24),
            backrest_angle: Range::new(0.0, 0.06),
            mass: Range::new(2.5, 4.0),
            friction: 0.7,
            seed,
        }
    }

    /// The three fixed chairs used to calibrate sitting-score thresholds.
    pub fn calibration_set() -> [ChairGenParams; 3] {
        [
            ChairGenParams::new(ChairVariant::Standard, 101),
            ChairGenParams::new(ChairVariant::Standard, 102),
            ChairGenParams::new(ChairVariant::ImprovisedStack, 103),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChairGenError {
    DegenerateParams(&'static str),
}

impl core::fmt::Display for ChairGenError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ChairGenError::DegenerateParams(what) => write!(f, "degenerate parameter: {what}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ChairGenError {}

/// Ground-truth seat surface recorded by the generator, in mesh coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeatFrame {
    /// Center of the seat top surface.
    pub center: Point3<f64>,
    /// Direction a seated agent faces (away from the backrest).
    pub outward_yaw: f64,
    pub half_width: f64,
    pub half_depth: f64,
}

impl SeatFrame {
    /// True when the xy projection of `p` lies over the seat surface,
    /// inflated by `tol`.
    pub fn contains_xy(&self, p: &Point3<f64>, tol: f64) -> bool {
        let (c, s) = (self.outward_yaw.cos(), self.outward_yaw.sin());
        let dx = p.x - self.center.x;
        let dy = p.y - self.center.y;
        let fore = c * dx + s * dy;
        let side = -s * dx + c * dy;
        fore.abs() <= self.half_depth + tol && side.abs() <= self.half_width + tol
    }

    pub fn transformed(&self, g: &crate::geom::RigidTransform) -> SeatFrame {
        SeatFrame {
            center: g.transform_point(&self.center),
            outward_yaw: crate::geom::wrap_angle(self.outward_yaw + crate::geom::yaw_of(g)),
            half_width: self.half_width,
            half_depth: self.half_depth,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedChair {
    pub mesh: Mesh,
    pub seat: SeatFrame,
}

/// One solid box of the composition: full pose, half extents.
struct BoxPart {
    iso: Isometry3<f64>,
    half: Vector3<f64>,
}

/// Generate a chair mesh facing +x (backrest on the -x side), standing on
/// z = 0, centered near the origin, deterministic in the seed.
pub fn generate_chair(params: &ChairGenParams) -> Result<GeneratedChair, ChairGenError> {
    for (range, name) in [
        (params.seat_width, "seat_width"),
        (params.seat_depth, "seat_depth"),
        (params.seat_height, "seat_height"),
        (params.backrest_height, "backrest_height"),
        (params.mass, "mass"),
    ] {
        if !range.valid() {
            return Err(ChairGenError::DegenerateParams(name));
        }
    }
    if params.backrest_angle.lo < 0.0 || params.backrest_angle.hi < params.backrest_angle.lo {
        return Err(ChairGenError::DegenerateParams("backrest_angle"));
    }

    let mut rng = seeded_rng(params.seed, 0x43484147); // chair generator stream
    let width = params.seat_width.sample(&mut rng);
    let depth = params.seat_depth.sample(&mut rng);
    let height = params.seat_height.sample(&mut rng);
    let back_h = params.backrest_height.sample(&mut rng);
    let back_tilt = params.backrest_angle.sample(&mut rng);
    let mass = params.mass.sample(&mut rng);

    let seat_thick = 0.030;
    let mut parts: Vec<BoxPart> = Vec::new();
    let mut seat = SeatFrame {
        center: Point3::new(0.0, 0.0, height),
        outward_yaw: 0.0,
        half_width: width / 2.0,
        half_depth: depth / 2.0,
    };

    match params.variant {
        ChairVariant::Standard | ChairVariant::StoolNoBack => {
            parts.push(BoxPart {
                iso: translation(0.0, 0.0, height - seat_thick / 2.0),
                half: Vector3::new(depth / 2.0, width / 2.0, seat_thick / 2.0),
            });
            let leg = 0.035;
            let leg_h = height - seat_thick;
            for (sx, sy) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                parts.push(BoxPart {
                    iso: translation(
                        sx * (depth / 2.0 - leg / 2.0),
                        sy * (width / 2.0 - leg / 2.0),
                        leg_h / 2.0,
                    ),
                    half: Vector3::new(leg / 2.0, leg / 2.0, leg_h / 2.0),
                });
            }
            if params.variant == ChairVariant::Standard {
                let back_thick = 0.025;
                // Backrest rises from the seat rear edge, tilted backwards.
                let pivot = Vector3::new(-depth / 2.0 + back_thick / 2.0, 0.0, height);
                let tilt = UnitQuaternion::from_axis_angle(&Vector3::y_axis(), back_tilt);
                let local_center = Vector3::new(0.0, 0.0, back_h / 2.0);
                let center = pivot + tilt * local_center;
                parts.push(BoxPart {
                    iso: Isometry3::from_parts(Translation3::from(center), tilt),
                    half: Vector3::new(back_thick / 2.0, width / 2.0, back_h / 2.0),
                });
            }
        }
        ChairVariant::StepStoolNarrowSeat => {
            // Two treads; the lower (sittable) one is far shallower than a
            // thigh, the upper tier doubles as a back support.
            let tread = rng.gen_range(0.075..0.105);
            let top_depth = rng.gen_range(0.12..0.16);
            let lower_h = height.min(0.18);
            let upper_h = lower_h + rng.gen_range(0.12..0.16);
            // Upper block at the rear, lower tread in front of it.
            parts.push(BoxPart {
                iso: translation(-top_depth / 2.0, 0.0, upper_h / 2.0),
                half: Vector3::new(top_depth / 2.0, width / 2.0, upper_h / 2.0),
            });
            parts.push(BoxPart {
                iso: translation(tread / 2.0, 0.0, lower_h / 2.0),
                half: Vector3::new(tread / 2.0, width / 2.0, lower_h / 2.0),
            });
            seat = SeatFrame {
                center: Point3::new(tread / 2.0, 0.0, lower_h),
                outward_yaw: 0.0,
                half_width: width / 2.0,
                half_depth: tread / 2.0,
            };
        }
        ChairVariant::ImprovisedStack => {
            // Solid block as the seat, a stack of book-like blocks as back.
            // The block is deeper than a regular seat so that the books
            // still leave a sittable ledge.
            let block_depth = depth + 0.10;
            parts.push(BoxPart {
                iso: translation(0.0, 0.0, height / 2.0),
                half: Vector3::new(block_depth / 2.0, width / 2.0, height / 2.0),
            });
            let mut z = height;
            let books = rng.gen_range(2..4usize);
            let book_h = back_h / books as f64;
            let book_d_max = 0.11;
            for _ in 0..books {
                let jitter_y = rng.gen_range(-0.015..0.015);
                let book_d = rng.gen_range(0.07..book_d_max);
                parts.push(BoxPart {
                    iso: translation(-block_depth / 2.0 + book_d / 2.0, jitter_y, z + book_h / 2.0),
                    half: Vector3::new(book_d / 2.0, width / 2.0 * 0.9, book_h / 2.0),
                });
                z += book_h;
            }
            // The sittable part of the block stops where the books begin.
            seat = SeatFrame {
                center: Point3::new(book_d_max / 2.0, 0.0, height),
                outward_yaw: 0.0,
                half_width: width / 2.0,
                half_depth: (block_depth - 2.0 * book_d_max) / 2.0,
            };
        }
    }

    let mesh = mesh_from_parts(&parts, mass, params.friction);
    Ok(GeneratedChair { mesh, seat })
}

fn translation(x: f64, y: f64, z: f64) -> Isometry3<f64> {
    Isometry3::from_parts(Translation3::new(x, y, z), UnitQuaternion::identity())
}

fn mesh_from_parts(parts: &[BoxPart], total_mass: f64, friction: f64) -> Mesh {
    let volumes: Vec<f64> = parts.iter().map(|p| 8.0 * p.half.x * p.half.y * p.half.z).collect();
    let total_volume: f64 = volumes.iter().sum();

    let mut com = Vector3::zeros();
    for (part, &v) in parts.iter().zip(&volumes) {
        com += part.iso.translation.vector * (v / total_volume);
    }

    let mut inertia = Matrix3::zeros();
    for (part, &v) in parts.iter().zip(&volumes) {
        let m = total_mass * v / total_volume;
        let d = part.half * 2.0;
        let local = Matrix3::from_diagonal(&Vector3::new(
            m / 12.0 * (d.y * d.y + d.z * d.z),
            m / 12.0 * (d.x * d.x + d.z * d.z),
            m / 12.0 * (d.x * d.x + d.y * d.y),
        ));
        let r = part.iso.rotation.to_rotation_matrix().into_inner();
        let rotated = r * local * r.transpose();
        let offset = part.iso.translation.vector - com;
        let shift = (Matrix3::identity() * offset.norm_squared() - offset * offset.transpose()) * m;
        inertia += rotated + shift;
    }

    let meshes: Vec<Mesh> = parts
        .iter()
        .map(|p| {
            let mut m = box_mesh(Point3::origin(), p.half, 0.0);
            m = m.transformed(&p.iso);
            m
        })
        .collect();
    let mut mesh = merge_meshes(&meshes);
    mesh.attributes = PhysicalAttributes::new(total_mass, Point3::from(com), inertia, friction);
    mesh
}

/// Closed triangle mesh of an axis-aligned box rotated by `yaw`.
pub fn box_mesh(center: Point3<f64>, half: Vector3<f64>, yaw: f64) -> Mesh {
    let rot = crate::geom::yaw_rotation(yaw);
    let mut vertices = Vec::with_capacity(8);
    for sz in [-1.0, 1.0] {
        for sy in [-1.0, 1.0] {
            for sx in [-1.0, 1.0] {
                let local = Vector3::new(sx * half.x, sy * half.y, sz * half.z);
                vertices.push(center + rot * local);
            }
        }
    }
    // Outward-facing winding for each face of the cube; vertex order is
    // (x fastest, then y, then z), i.e. index = x + 2 y + 4 z.
    let faces: Vec<[u32; 3]> = vec![
        // bottom (z-)
        [0, 2, 1],
        [1, 2, 3],
        // top (z+)
        [4, 5, 6],
        [5, 7, 6],
        // front (y-)
        [0, 1, 4],
        [1, 5, 4],
        // back (y+)
        [2, 6, 3],
        [3, 6, 7],
        // left (x-)
        [0, 4, 2],
        [2, 4, 6],
        // right (x+)
        [1, 3, 5],
        [3, 7, 5],
    ];
    let attrs = PhysicalAttributes::new(
        1.0,
        center,
        Matrix3::identity(),
        0.7,
    );
    let (mesh, dropped) = Mesh::new(vertices, faces, attrs).expect("box mesh is valid");
    debug_assert_eq!(dropped, 0);
    mesh
}

/// Concatenate meshes into one triangle soup; attributes are taken from the
/// first mesh and usually overwritten by the caller.
pub fn merge_meshes(meshes: &[Mesh]) -> Mesh {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for mesh in meshes {
        let base = vertices.len() as u32;
        vertices.extend(mesh.vertices.iter().copied());
        faces.extend(mesh.faces.iter().map(|f| [f[0] + base, f[1] + base, f[2] + base]));
    }
    let attrs = meshes.first().map(|m| m.attributes.clone()).unwrap_or(PhysicalAttributes::new(
        1.0,
        Point3::origin(),
        Matrix3::identity(),
        0.7,
    ));
    Mesh { vertices, faces, attributes: attrs }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic_in_the_seed() {
        let params = ChairGenParams::new(ChairVariant::Standard, 42);
        let a = generate_chair(&params).unwrap();
        let b = generate_chair(&params).unwrap();
        assert_eq!(a.mesh.vertices, b.mesh.vertices);
        assert_eq!(a.mesh.faces, b.mesh.faces);
        assert_eq!(a.seat, b.seat);
        let c = generate_chair(&ChairGenParams::new(ChairVariant::Standard, 43)).unwrap();
        assert_ne!(a.mesh.vertices, c.mesh.vertices);
    }

    #[test]
    fn stool_has_no_geometry_above_seat() {
        let params = ChairGenParams::new(ChairVariant::StoolNoBack, 7);
        let chair = generate_chair(&params).unwrap();
        let cap = chair.seat.center.z + 0.05;
        for v in &chair.mesh.vertices {
            assert!(v.z <= cap, "stool vertex {v:?} above seat + 5cm");
        }
    }

    #[test]
    fn chairs_stand_on_the_ground_plane() {
        for variant in [
            ChairVariant::Standard,
            ChairVariant::StoolNoBack,
            ChairVariant::StepStoolNarrowSeat,
            ChairVariant::ImprovisedStack,
        ] {
            let chair = generate_chair(&ChairGenParams::new(variant, 5)).unwrap();
            assert!(chair.mesh.min_z().abs() < 1e-9);
            assert!(chair.mesh.attributes.mass > 0.0);
        }
    }

    #[test]
    fn degenerate_params_rejected() {
        let mut params = ChairGenParams::new(ChairVariant::Standard, 1);
        params.seat_width = Range::new(-0.1, 0.2);
        assert!(matches!(
            generate_chair(&params),
            Err(ChairGenError::DegenerateParams("seat_width"))
        ));
    }

    #[test]
    fn seat_frame_contains_its_own_center() {
        let chair = generate_chair(&ChairGenParams::new(ChairVariant::Standard, 3)).unwrap();
        assert!(chair.seat.contains_xy(&chair.seat.center, 0.0));
        let off = Point3::new(chair.seat.center.x, chair.seat.center.y + 1.0, 0.0);
        assert!(!chair.seat.contains_xy(&off, 0.0));
    }

    #[test]
    fn narrow_step_stool_tread_is_shallow() {
        let chair = generate_chair(&ChairGenParams::new(ChairVariant::StepStoolNarrowSeat, 9)).unwrap();
        assert!(chair.seat.half_depth * 2.0 < 0.12);
    }
}
