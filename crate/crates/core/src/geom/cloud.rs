use std::collections::BTreeMap;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::Vec3;
use crate::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>) -> Self {
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn centroid(&self) -> Option<Vec3> {
        if self.points.is_empty() {
            return None;
        }
        let sum: Vec3 = self.points.iter().sum();
        Some(sum / self.points.len() as f64)
    }

    pub fn bounding_box(&self) -> Option<Aabb> {
        Aabb::from_points(&self.points)
    }

    pub fn extend(&mut self, other: &PointCloud) {
        self.points.extend_from_slice(&other.points);
    }
}

impl FromIterator<Vec3> for PointCloud {
    fn from_iter<I: IntoIterator<Item = Vec3>>(iter: I) -> Self {
        PointCloud::new(iter.into_iter().collect())
    }
}

/// Axis-aligned box with inclusive bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Result<Self> {
        if (0..3).any(|i| !(min[i] <= max[i])) {
            return Err(Error::invalid("aabb min must be <= max componentwise"));
        }
        Ok(Self { min, max })
    }

    pub fn from_center(center: Vec3, half_extents: Vec3) -> Self {
        Self {
            min: center - half_extents,
            max: center + half_extents,
        }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Vec3>) -> Option<Self> {
        let mut it = points.into_iter();
        let first = *it.next()?;
        let (mut min, mut max) = (first, first);
        for p in it {
            min = min.inf(p);
            max = max.sup(p);
        }
        Some(Self { min, max })
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|i| self.min[i] <= p[i] && p[i] <= self.max[i])
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn size(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn diagonal(&self) -> f64 {
        self.size().norm()
    }

    pub fn volume(&self) -> f64 {
        let s = self.size();
        s.x * s.y * s.z
    }

    /// Scales the box about its center by `factor` per axis.
    pub fn scaled(&self, factor: f64) -> Aabb {
        Aabb::from_center(self.center(), self.size() * 0.5 * factor)
    }

    /// Grows every side by `margin`.
    pub fn expanded(&self, margin: f64) -> Aabb {
        let m = Vector3::repeat(margin);
        Aabb {
            min: self.min - m,
            max: self.max + m,
        }
    }

    pub fn intersection(&self, other: &Aabb) -> Option<Aabb> {
        let min = self.min.sup(&other.min);
        let max = self.max.inf(&other.max);
        (0..3).all(|i| min[i] <= max[i]).then_some(Aabb { min, max })
    }

    pub fn iou(&self, other: &Aabb) -> f64 {
        let inter = self.intersection(other).map_or(0.0, |b| b.volume());
        let union = self.volume() + other.volume() - inter;
        if union > 0.0 {
            inter / union
        } else {
            0.0
        }
    }

    pub fn corners(&self) -> [Vec3; 8] {
        let (a, b) = (self.min, self.max);
        [
            Vector3::new(a.x, a.y, a.z),
            Vector3::new(b.x, a.y, a.z),
            Vector3::new(a.x, b.y, a.z),
            Vector3::new(b.x, b.y, a.z),
            Vector3::new(a.x, a.y, b.z),
            Vector3::new(b.x, a.y, b.z),
            Vector3::new(a.x, b.y, b.z),
            Vector3::new(b.x, b.y, b.z),
        ]
    }

    /// Euclidean distance from `p` to the box (0 inside).
    pub fn distance(&self, p: &Vec3) -> f64 {
        let d = (self.min - p).sup(&(p - self.max)).sup(&Vector3::zeros());
        d.norm()
    }
}

pub(crate) fn cell_key(p: &Vec3, origin: &Vec3, cell: f64) -> [i64; 3] {
    let r = (p - origin) / cell;
    [r.x.floor() as i64, r.y.floor() as i64, r.z.floor() as i64]
}

/// Replaces the points of each occupied grid cell by their centroid.
///
/// Cells are keyed by `floor(p / cell)`; output is ordered by ascending cell key.
pub fn voxel_downsample(cloud: &PointCloud, cell: f64) -> Result<PointCloud> {
    if !(cell > 0.0) {
        return Err(Error::invalid("voxel cell size must be > 0"));
    }
    let mut cells: BTreeMap<[i64; 3], (Vec3, usize)> = BTreeMap::new();
    for p in &cloud.points {
        let e = cells
            .entry(cell_key(p, &Vector3::zeros(), cell))
            .or_insert((Vector3::zeros(), 0));
        e.0 += p;
        e.1 += 1;
    }
    Ok(cells.into_values().map(|(s, n)| s / n as f64).collect())
}

/// Keeps points inside `bbox` (inclusive) or, with `keep_inside = false`, the complement.
pub fn crop_aabb(cloud: &PointCloud, bbox: &Aabb, keep_inside: bool) -> PointCloud {
    cloud
        .points
        .iter()
        .filter(|p| bbox.contains(p) == keep_inside)
        .copied()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64, z: f64) -> Vec3 {
        Vector3::new(x, y, z)
    }

    #[test]
    fn downsample_merges_one_cell() {
        let c = PointCloud::new(vec![v(0.1, 0.1, 0.1), v(0.3, 0.3, 0.3)]);
        let out = voxel_downsample(&c, 1.0).unwrap();
        assert_eq!(out.points, vec![v(0.2, 0.2, 0.2)]);
    }

    #[test]
    fn downsample_keeps_distinct_cells() {
        let c = PointCloud::new(vec![v(1.5, 0.0, 0.0), v(0.1, 0.0, 0.0)]);
        let out = voxel_downsample(&c, 1.0).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out.points[0], v(0.1, 0.0, 0.0));
    }

    #[test]
    fn downsample_rejects_bad_cell() {
        let c = PointCloud::new(vec![v(0.0, 0.0, 0.0)]);
        assert!(matches!(voxel_downsample(&c, 0.0), Err(Error::InvalidParameter(_))));
        assert!(matches!(voxel_downsample(&c, -1.0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn crop_is_inclusive() {
        let b = Aabb::new(v(0.0, 0.0, 0.0), v(1.0, 1.0, 1.0)).unwrap();
        let c = PointCloud::new(vec![v(0.5, 0.5, 0.5), v(1.0, 1.0, 1.0)]);
        assert_eq!(crop_aabb(&c, &b, true), c);
        assert!(crop_aabb(&c, &b, false).is_empty());
        let outside = PointCloud::new(vec![v(2.0, 0.0, 0.0), v(0.5, 0.5, 0.5)]);
        assert_eq!(crop_aabb(&outside, &b, false).points, vec![v(2.0, 0.0, 0.0)]);
    }

    #[test]
    fn aabb_validation_and_iou() {
        assert!(Aabb::new(v(1.0, 0.0, 0.0), v(0.0, 1.0, 1.0)).is_err());
        let a = Aabb::new(v(0.0, 0.0, 0.0), v(2.0, 1.0, 1.0)).unwrap();
        let b = Aabb::new(v(1.0, 0.0, 0.0), v(3.0, 1.0, 1.0)).unwrap();
        assert!((a.iou(&b) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(a.iou(&a), 1.0);
    }
}
