use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{PointCloud, Vec3};
use crate::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TriangleMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
}

/// Ray hit on a mesh: parameter `t`, triangle index and barycentric weights of its vertices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    pub t: f64,
    pub point: Vec3,
    pub triangle: usize,
    pub barycentric: [f64; 3],
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let mesh = Self {
            vertices,
            triangles,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len();
        for (i, t) in self.triangles.iter().enumerate() {
            if t.iter().any(|&v| v >= n) {
                return Err(Error::invalid(format!("triangle {i} references a missing vertex")));
            }
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(Error::invalid(format!("triangle {i} repeats a vertex")));
            }
        }
        Ok(())
    }

    pub fn corners(&self, triangle: usize) -> [Vec3; 3] {
        let t = self.triangles[triangle];
        [self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]]
    }

    pub fn triangle_area(&self, triangle: usize) -> f64 {
        let [a, b, c] = self.corners(triangle);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    /// Unit normal following the vertex winding, or zero for degenerate triangles.
    pub fn triangle_normal(&self, triangle: usize) -> Vec3 {
        let [a, b, c] = self.corners(triangle);
        let n = (b - a).cross(&(c - a));
        let len = n.norm();
        if len > 0.0 {
            n / len
        } else {
            n
        }
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|i| self.triangle_area(i)).sum()
    }

    pub fn point_at(&self, triangle: usize, bary: &[f64; 3]) -> Vec3 {
        let [a, b, c] = self.corners(triangle);
        a * bary[0] + b * bary[1] + c * bary[2]
    }

    /// Appends `other`, offsetting its indices.
    pub fn append(&mut self, other: &TriangleMesh) {
        let off = self.vertices.len();
        self.vertices.extend_from_slice(&other.vertices);
        self.triangles
            .extend(other.triangles.iter().map(|t| [t[0] + off, t[1] + off, t[2] + off]));
    }

    /// Nearest intersection with positive `t`; ties keep the lower triangle index.
    pub fn ray_cast(&self, origin: &Vec3, direction: &Vec3) -> Option<RayHit> {
        let mut best: Option<RayHit> = None;
        for i in 0..self.triangles.len() {
            if let Some((t, u, v)) = ray_triangle(origin, direction, &self.corners(i)) {
                if best.is_none_or(|b| t < b.t) {
                    best = Some(RayHit {
                        t,
                        point: origin + direction * t,
                        triangle: i,
                        barycentric: [1.0 - u - v, u, v],
                    });
                }
            }
        }
        best
    }
}

/// Möller–Trumbore intersection; returns `(t, u, v)` for hits with `t > 0`.
pub fn ray_triangle(origin: &Vec3, dir: &Vec3, tri: &[Vec3; 3]) -> Option<(f64, f64, f64)> {
    const EPS: f64 = 1e-12;
    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];
    let p = dir.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() < EPS {
        return None;
    }
    let inv = 1.0 / det;
    let s = origin - tri[0];
    let u = s.dot(&p) * inv;
    if !(-EPS..=1.0 + EPS).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = dir.dot(&q) * inv;
    if v < -EPS || u + v > 1.0 + EPS {
        return None;
    }
    let t = e2.dot(&q) * inv;
    (t > EPS).then_some((t, u, v))
}

/// Distributes `total` samples over `weights` by the largest-remainder method.
/// Remainder ties go to the lower index.
pub fn largest_remainder(weights: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    if total == 0 || !(sum > 0.0) {
        return vec![0; weights.len()];
    }
    let quotas: Vec<f64> = weights.iter().map(|w| w / sum * total as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

/// Samples `round(area · density)` points uniformly on the mesh surface.
///
/// The count is split over triangles by largest remainder on their areas; each point is
/// drawn from uniform barycentric coordinates using a generator seeded with `seed`.
pub fn sample_mesh_surface(mesh: &TriangleMesh, density: f64, seed: u64) -> Result<PointCloud> {
    if !(density > 0.0) {
        return Err(Error::invalid("sampling density must be > 0"));
    }
    let areas: Vec<f64> = (0..mesh.triangles.len()).map(|i| mesh.triangle_area(i)).collect();
    let total_area: f64 = areas.iter().sum();
    let total = (total_area * density).round() as usize;
    let counts = largest_remainder(&areas, total);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(total);
    for (tri, &n) in counts.iter().enumerate() {
        let [a, b, c] = mesh.corners(tri);
        for _ in 0..n {
            let r1: f64 = rng.random::<f64>().sqrt();
            let r2: f64 = rng.random();
            points.push(a * (1.0 - r1) + b * (r1 * (1.0 - r2)) + c * (r1 * r2));
        }
    }
    Ok(PointCloud::new(points))
}
