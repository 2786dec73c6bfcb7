//! Contact generation between capsules, triangle meshes and the ground plane.

use alloc::vec::Vec;
use nalgebra::{Point3, Vector3};

/// One contact point. The normal points from body B towards body A, i.e.
/// the impulse pushes A along `+normal`.
#[derive(Debug, Clone)]
pub struct Contact {
    pub body_a: usize,
    pub body_b: usize,
    pub point: Point3<f64>,
    pub normal: Vector3<f64>,
    pub depth: f64,
    /// Shape index on body A that produced the contact (for per-link counts).
    pub shape_a: usize,
}

/// Closest point on triangle `abc` to point `p` (Ericson 5.1.5).
pub fn closest_point_on_triangle(p: &Point3<f64>, a: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>) -> Point3<f64> {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;

    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }

    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }

    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }

    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }

    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }

    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }

    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

/// Closest points between segments p1q1 and p2q2 (Ericson 5.1.9).
pub fn closest_points_segment_segment(
    p1: &Point3<f64>,
    q1: &Point3<f64>,
    p2: &Point3<f64>,
    q2: &Point3<f64>,
) -> (Point3<f64>, Point3<f64>) {
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.norm_squared();
    let e = d2.norm_squared();
    let f = d2.dot(&r);

    let (s, t);
    if a <= 1e-18 && e <= 1e-18 {
        return (*p1, *p2);
    }
    if a <= 1e-18 {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(&r);
        if e <= 1e-18 {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s_ = if denom > 1e-18 { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
            let mut t_ = (b * s_ + f) / e;
            if t_ < 0.0 {
                t_ = 0.0;
                s_ = (-c / a).clamp(0.0, 1.0);
            } else if t_ > 1.0 {
                t_ = 1.0;
                s_ = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s_;
            t = t_;
        }
    }
    (p1 + d1 * s, p2 + d2 * t)
}

/// Closest point pair between a segment and a triangle. Returns
/// (point on segment, point on triangle).
pub fn closest_points_segment_triangle(
    p: &Point3<f64>,
    q: &Point3<f64>,
    a: &Point3<f64>,
    b: &Point3<f64>,
    c: &Point3<f64>,
) -> (Point3<f64>, Point3<f64>) {
    // Segment-plane crossing inside the triangle means distance zero.
    let n = (b - a).cross(&(c - a));
    let dp = n.dot(&(p - a));
    let dq = n.dot(&(q - a));
    if dp * dq < 0.0 && n.norm_squared() > 1e-18 {
        let t = dp / (dp - dq);
        let hit = p + (q - p) * t;
        let on_tri = closest_point_on_triangle(&hit, a, b, c);
        if (on_tri - hit).norm_squared() < 1e-18 {
            return (hit, hit);
        }
    }

    let mut best = (f64::INFINITY, *p, *a);
    let mut consider = |ps: Point3<f64>, pt: Point3<f64>| {
        let d = (ps - pt).norm_squared();
        if d < best.0 {
            best = (d, ps, pt);
        }
    };

    for (e0, e1) in [(a, b), (b, c), (c, a)] {
        let (ps, pt) = closest_points_segment_segment(p, q, e0, e1);
        consider(ps, pt);
    }
    consider(*p, closest_point_on_triangle(p, a, b, c));
    consider(*q, closest_point_on_triangle(q, a, b, c));
    (best.1, best.2)
}

/// Keep contacts at least `min_dist` apart per (body pair, shape); later
/// duplicates from adjacent triangles are merged into the deepest one.
pub struct ContactAccumulator {
    pub contacts: Vec<Contact>,
    min_dist2: f64,
}

impl ContactAccumulator {
    pub fn new(min_dist: f64) -> Self {
        Self { contacts: Vec::new(), min_dist2: min_dist * min_dist }
    }

    pub fn push(&mut self, c: Contact) {
        for existing in self.contacts.iter_mut().rev() {
            if existing.body_a == c.body_a
                && existing.body_b == c.body_b
                && existing.shape_a == c.shape_a
                && (existing.point - c.point).norm_squared() < self.min_dist2
            {
                if c.depth > existing.depth {
                    *existing = c;
                }
                return;
            }
        }
        self.contacts.push(c);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dist_segment_triangle_oracle(
        p: &Point3<f64>,
        q: &Point3<f64>,
        a: &Point3<f64>,
        b: &Point3<f64>,
        c: &Point3<f64>,
    ) -> f64 {
        // Dense sampling of the segment against the exact point-triangle query.
        let mut best = f64::INFINITY;
        for i in 0..=2000 {
            let t = i as f64 / 2000.0;
            let s = p + (q - p) * t;
            let on = closest_point_on_triangle(&s, a, b, c);
            best = best.min((s - on).norm());
        }
        best
    }

    #[test]
    fn segment_triangle_distance_matches_sampling_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rand_pt = |rng: &mut ChaCha8Rng| {
            Point3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        };
        for _ in 0..200 {
            let (p, q) = (rand_pt(&mut rng), rand_pt(&mut rng));
            let (a, b, c) = (rand_pt(&mut rng), rand_pt(&mut rng), rand_pt(&mut rng));
            let (ps, pt) = closest_points_segment_triangle(&p, &q, &a, &b, &c);
            let exact = (ps - pt).norm();
            let sampled = dist_segment_triangle_oracle(&p, &q, &a, &b, &c);
            assert!(
                exact <= sampled + 1e-9,
                "exact {exact} should not exceed sampled {sampled}"
            );
            assert!(
                sampled - exact < 2e-3,
                "sampling should approach exact: exact {exact}, sampled {sampled}"
            );
        }
    }

    #[test]
    fn segment_through_triangle_reports_zero() {
        let a = Point3::new(-1.0, -1.0, 0.0);
        let b = Point3::new(1.0, -1.0, 0.0);
        let c = Point3::new(0.0, 1.0, 0.0);
        let p = Point3::new(0.0, 0.0, -1.0);
        let q = Point3::new(0.0, 0.0, 1.0);
        let (ps, pt) = closest_points_segment_triangle(&p, &q, &a, &b, &c);
        assert_relative_eq!((ps - pt).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn accumulator_merges_nearby_contacts() {
        let mut acc = ContactAccumulator::new(0.01);
        let mk = |x: f64, depth: f64| Contact {
            body_a: 0,
            body_b: 1,
            point: Point3::new(x, 0.0, 0.0),
            normal: Vector3::z(),
            depth,
            shape_a: 0,
        };
        acc.push(mk(0.0, 0.001));
        acc.push(mk(0.005, 0.002)); // merged, deeper wins
        acc.push(mk(0.1, 0.001)); // separate
        assert_eq!(acc.contacts.len(), 2);
        assert_relative_eq!(acc.contacts[0].depth, 0.002);
    }
}
