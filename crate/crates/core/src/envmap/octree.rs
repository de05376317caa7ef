use std::collections::BTreeSet;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::geom::{cell_key, Aabb, PointCloud, RigidTransform, Vec3};
use crate::{Error, Result};

pub type VoxelKey = [i64; 3];

/// Binary occupancy over a regular voxel grid.
///
/// Voxel `k` covers `[origin + k·res, origin + (k+1)·res)`; its center is
/// `origin + (k + 0.5)·res`. Keys are kept sorted lexicographically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyOctree {
    pub origin: Vec3,
    pub resolution: f64,
    #[serde(rename = "keys")]
    pub occupied: BTreeSet<VoxelKey>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EditAction {
    Fill,
    Clear,
}

impl OccupancyOctree {
    pub fn empty(resolution: f64, origin: Vec3) -> Result<Self> {
        if !(resolution > 0.0) {
            return Err(Error::invalid("octree resolution must be > 0"));
        }
        Ok(Self {
            origin,
            resolution,
            occupied: BTreeSet::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.occupied.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupied.is_empty()
    }

    pub fn key_of(&self, p: &Vec3) -> VoxelKey {
        cell_key(p, &self.origin, self.resolution)
    }

    pub fn center(&self, key: &VoxelKey) -> Vec3 {
        self.origin
            + Vector3::new(key[0] as f64 + 0.5, key[1] as f64 + 0.5, key[2] as f64 + 0.5)
                * self.resolution
    }

    pub fn voxel_box(&self, key: &VoxelKey) -> Aabb {
        let min = self.origin
            + Vector3::new(key[0] as f64, key[1] as f64, key[2] as f64) * self.resolution;
        Aabb {
            min,
            max: min + Vector3::repeat(self.resolution),
        }
    }

    pub fn insert_point(&mut self, p: &Vec3) {
        let k = self.key_of(p);
        self.occupied.insert(k);
    }

    /// True iff the voxel containing `p` is occupied (faces resolve upwards by `floor`).
    pub fn query_occupied(&self, p: &Vec3) -> bool {
        self.occupied.contains(&self.key_of(p))
    }

    /// Keys whose voxel centers lie inside `region` (inclusive).
    pub fn keys_with_center_in(&self, region: &Aabb) -> Vec<VoxelKey> {
        let lo = (region.min - self.origin) / self.resolution - Vector3::repeat(0.5);
        let hi = (region.max - self.origin) / self.resolution - Vector3::repeat(0.5);
        let mut out = Vec::new();
        for i in lo.x.ceil() as i64..=hi.x.floor() as i64 {
            for j in lo.y.ceil() as i64..=hi.y.floor() as i64 {
                for k in lo.z.ceil() as i64..=hi.z.floor() as i64 {
                    let key = [i, j, k];
                    if region.contains(&self.center(&key)) {
                        out.push(key);
                    }
                }
            }
        }
        out
    }

    /// Occupied keys whose voxels may intersect `region`.
    pub fn occupied_near(&self, region: &Aabb) -> Vec<VoxelKey> {
        let lo = self.key_of(&region.min);
        let hi = self.key_of(&region.max);
        let span = (0..3).map(|a| (hi[a] - lo[a] + 1).max(0) as u128).product::<u128>();
        let in_range = |k: &VoxelKey| (0..3).all(|a| lo[a] <= k[a] && k[a] <= hi[a]);
        if span <= self.occupied.len() as u128 {
            let mut out = Vec::new();
            for i in lo[0]..=hi[0] {
                for j in lo[1]..=hi[1] {
                    for k in lo[2]..=hi[2] {
                        if self.occupied.contains(&[i, j, k]) {
                            out.push([i, j, k]);
                        }
                    }
                }
            }
            out
        } else {
            self.occupied
                .range([lo[0], i64::MIN, i64::MIN]..=[hi[0], i64::MAX, i64::MAX])
                .filter(|k| in_range(k))
                .copied()
                .collect()
        }
    }

    /// Re-expresses the map through `t` by moving voxel centers and re-voxelizing on the
    /// same grid.
    pub fn transformed(&self, t: &RigidTransform) -> OccupancyOctree {
        let mut out = OccupancyOctree {
            origin: self.origin,
            resolution: self.resolution,
            occupied: BTreeSet::new(),
        };
        for k in &self.occupied {
            out.insert_point(&t.apply(&self.center(k)));
        }
        out
    }

    pub fn centers(&self) -> PointCloud {
        self.occupied.iter().map(|k| self.center(k)).collect()
    }
}

/// Voxelizes every point of `cloud`: `occupied = { floor((p − origin) / resolution) }`.
pub fn build_octree(cloud: &PointCloud, resolution: f64, origin: Vec3) -> Result<OccupancyOctree> {
    let mut tree = OccupancyOctree::empty(resolution, origin)?;
    for p in &cloud.points {
        tree.insert_point(p);
    }
    Ok(tree)
}

/// Fills or clears every voxel whose center lies in `region`.
pub fn edit_region(octree: &OccupancyOctree, region: &Aabb, action: EditAction) -> OccupancyOctree {
    let mut out = octree.clone();
    for key in out.keys_with_center_in(region) {
        match action {
            EditAction::Fill => {
                out.occupied.insert(key);
            }
            EditAction::Clear => {
                out.occupied.remove(&key);
            }
        }
    }
    out
}
