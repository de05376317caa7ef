use serde::{Deserialize, Serialize};

use super::{Aabb, RigidTransform, Vec3};

/// Segment `p0–p1` swept by a sphere of `radius`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Capsule {
    pub p0: Vec3,
    pub p1: Vec3,
    pub radius: f64,
}

impl Capsule {
    pub fn transformed(&self, t: &RigidTransform) -> Capsule {
        Capsule {
            p0: t.apply(&self.p0),
            p1: t.apply(&self.p1),
            radius: self.radius,
        }
    }

    /// Distance from `p` to the capsule surface; negative inside.
    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        point_segment_distance(p, &self.p0, &self.p1) - self.radius
    }

    pub fn bounding_box(&self) -> Aabb {
        Aabb::from_points([&self.p0, &self.p1])
            .expect("two points")
            .expanded(self.radius)
    }
}

pub fn closest_on_segment(p: &Vec3, a: &Vec3, b: &Vec3) -> Vec3 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return *a;
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    a + ab * t
}

pub fn point_segment_distance(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    (p - closest_on_segment(p, a, b)).norm()
}

fn segment_hits_box(a: &Vec3, b: &Vec3, bx: &Aabb) -> bool {
    let d = b - a;
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for i in 0..3 {
        if d[i].abs() < 1e-300 {
            if a[i] < bx.min[i] || a[i] > bx.max[i] {
                return false;
            }
        } else {
            let inv = 1.0 / d[i];
            let (mut lo, mut hi) = ((bx.min[i] - a[i]) * inv, (bx.max[i] - a[i]) * inv);
            if lo > hi {
                std::mem::swap(&mut lo, &mut hi);
            }
            t0 = t0.max(lo);
            t1 = t1.min(hi);
            if t0 > t1 {
                return false;
            }
        }
    }
    true
}

/// Euclidean distance between segment `a–b` and an axis-aligned box (0 when they touch).
///
/// The distance along the segment is convex in the segment parameter, so a golden-section
/// search finds the minimum once the slab test has ruled out an intersection.
pub fn segment_aabb_distance(a: &Vec3, b: &Vec3, bx: &Aabb) -> f64 {
    if segment_hits_box(a, b, bx) {
        return 0.0;
    }
    let f = |t: f64| bx.distance(&(a + (b - a) * t));
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
        if hi - lo < 1e-13 {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    f(0.0).min(f(1.0)).min(f1).min(f2).min(f(0.5 * (lo + hi)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    fn v(x: f64, y: f64, z: f64) -> Vec3 {
        Vector3::new(x, y, z)
    }

    #[test]
    fn point_segment_cases() {
        let (a, b) = (v(0.0, 0.0, 0.0), v(1.0, 0.0, 0.0));
        assert_eq!(point_segment_distance(&v(0.5, 2.0, 0.0), &a, &b), 2.0);
        assert_eq!(point_segment_distance(&v(-3.0, 0.0, 4.0), &a, &b), 5.0);
        assert_eq!(point_segment_distance(&v(0.0, 1.0, 0.0), &a, &a), 1.0);
    }

    #[test]
    fn segment_box_distance_matches_dense_sampling() {
        let bx = Aabb::new(v(0.0, 0.0, 0.0), v(0.1, 0.2, 0.3)).unwrap();
        let cases = [
            (v(-1.0, -1.0, 0.5), v(1.0, 1.5, 0.7)),
            (v(0.5, 0.5, 0.5), v(0.6, -0.3, 0.9)),
            (v(-0.2, 0.1, 0.1), v(-0.1, 0.1, 0.1)),
            (v(0.05, 0.1, -0.5), v(0.05, 0.1, 0.5)),
        ];
        for (a, b) in cases {
            let brute = (0..=200_000)
                .map(|i| bx.distance(&(a + (b - a) * (i as f64 / 200_000.0))))
                .fold(f64::INFINITY, f64::min);
            let d = segment_aabb_distance(&a, &b, &bx);
            assert!((d - brute).abs() < 1e-6, "{d} vs {brute}");
            assert!(d <= brute + 1e-12);
        }
    }
}
