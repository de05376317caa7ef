//! Cell setup: occupancy map, safety zones, robot point removal and collision checks.
//!
//! Everything in a [`PlanningScene`] is expressed in the robot base frame.

mod octree;

use serde::{Deserialize, Serialize};

use crate::geom::{pose_serde, segment_aabb_distance, Aabb, PointCloud, RigidTransform, Vec3};
use crate::kin::{JointState, KinematicChain};
use crate::registration::Referencing;
use crate::{Error, Result};

pub use octree::{build_octree, edit_region, EditAction, OccupancyOctree, VoxelKey};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ZoneMode {
    Forbidden,
    /// Motion inside the zone is slowed to `factor` of nominal speed.
    ReducedSpeed { factor: f64 },
}

/// Oriented box the robot must avoid (or slow down in).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SafetyZone {
    pub id: String,
    /// `base_from_box`, placing the box center.
    #[serde(with = "pose_serde")]
    pub pose: RigidTransform,
    pub half_extents: Vec3,
    pub mode: ZoneMode,
    /// Extra distance kept from the box (m).
    #[serde(default)]
    pub margin: f64,
}

impl SafetyZone {
    pub fn validate(&self) -> Result<()> {
        if (0..3).any(|i| !(self.half_extents[i] > 0.0)) {
            return Err(Error::invalid(format!("zone {}: half extents must be > 0", self.id)));
        }
        if !(self.margin >= 0.0) {
            return Err(Error::invalid(format!("zone {}: margin must be >= 0", self.id)));
        }
        if let ZoneMode::ReducedSpeed { factor } = self.mode {
            if !(factor > 0.0 && factor <= 1.0) {
                return Err(Error::invalid(format!("zone {}: speed factor must be in (0, 1]", self.id)));
            }
        }
        Ok(())
    }

    /// Distance between a segment and the zone box, both in the base frame.
    pub fn segment_distance(&self, a: &Vec3, b: &Vec3) -> f64 {
        let inv = self.pose.inverse();
        let local = Aabb { min: -self.half_extents, max: self.half_extents };
        segment_aabb_distance(&inv.apply(a), &inv.apply(b), &local)
    }

    pub fn transformed(&self, t: &RigidTransform) -> SafetyZone {
        SafetyZone { pose: t.compose(&self.pose), ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanningScene {
    pub octree: OccupancyOctree,
    #[serde(default)]
    pub zones: Vec<SafetyZone>,
    pub referencing: Referencing,
}

impl PlanningScene {
    pub fn validate(&self) -> Result<()> {
        if !(self.octree.resolution > 0.0) {
            return Err(Error::invalid("octree resolution must be > 0"));
        }
        let mut ids = std::collections::BTreeSet::new();
        for z in &self.zones {
            z.validate()?;
            if !ids.insert(&z.id) {
                return Err(Error::invalid(format!("duplicate zone id {}", z.id)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Obstacle {
    Voxel(VoxelKey),
    Zone(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contact {
    pub link: usize,
    pub obstacle: Obstacle,
    /// How far the inflated capsule reaches into the obstacle (m).
    pub penetration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedLimit {
    pub link: usize,
    pub zone: String,
    pub factor: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CollisionReport {
    pub colliding: bool,
    /// Overlaps with occupied voxels and forbidden zones.
    pub contacts: Vec<Contact>,
    /// Overlaps with reduced-speed zones.
    pub reduced_speed: Vec<SpeedLimit>,
}

impl CollisionReport {
    /// Slowest speed factor among overlapped reduced-speed zones, 1 if none.
    pub fn speed_scale(&self) -> f64 {
        self.reduced_speed.iter().map(|s| s.factor).fold(1.0, f64::min)
    }
}

/// Checks every link capsule, inflated by `safety_clearance`, against the occupied voxels
/// (segment-to-cube distance) and the safety zones (segment-to-oriented-box distance, with the
/// zone margin added). A contact is reported when the distance is below the inflated radius.
pub fn collides(
    chain: &KinematicChain,
    q: &JointState,
    scene: &PlanningScene,
    safety_clearance: f64,
) -> Result<CollisionReport> {
    check_inputs(chain, q, safety_clearance)?;
    let mut report = CollisionReport::default();
    scan(chain, q, scene, safety_clearance, |hit| {
        match hit {
            Hit::Contact(c) => report.contacts.push(c),
            Hit::Slow(s) => report.reduced_speed.push(s),
        }
        true
    })?;
    report.colliding = !report.contacts.is_empty();
    Ok(report)
}

/// Boolean form of [`collides`] that stops at the first contact.
pub fn in_collision(chain: &KinematicChain, q: &JointState, scene: &PlanningScene, safety_clearance: f64) -> Result<bool> {
    check_inputs(chain, q, safety_clearance)?;
    let mut hit = false;
    scan(chain, q, scene, safety_clearance, |h| {
        if matches!(h, Hit::Contact(_)) {
            hit = true;
            return false;
        }
        true
    })?;
    Ok(hit)
}

fn check_inputs(chain: &KinematicChain, q: &JointState, clearance: f64) -> Result<()> {
    chain.check_len(q)?;
    chain.check_limits(q)?;
    if !(clearance >= 0.0) {
        return Err(Error::invalid("safety clearance must be >= 0"));
    }
    Ok(())
}

enum Hit {
    Contact(Contact),
    Slow(SpeedLimit),
}

/// Visits overlaps until `visit` returns false.
fn scan(
    chain: &KinematicChain,
    q: &JointState,
    scene: &PlanningScene,
    clearance: f64,
    mut visit: impl FnMut(Hit) -> bool,
) -> Result<()> {
    let tree = &scene.octree;
    let half_diag = 0.5 * 3f64.sqrt() * tree.resolution;
    for (link, cap) in chain.link_capsules(q)? {
        let reach = cap.radius + clearance;
        for key in tree.occupied_near(&cap.bounding_box().expanded(clearance)) {
            let center = tree.center(&key);
            let to_axis = crate::geom::point_segment_distance(&center, &cap.p0, &cap.p1);
            if to_axis - half_diag >= reach {
                continue;
            }
            let d = segment_aabb_distance(&cap.p0, &cap.p1, &tree.voxel_box(&key));
            if d < reach {
                let c = Contact { link, obstacle: Obstacle::Voxel(key), penetration: reach - d };
                if !visit(Hit::Contact(c)) {
                    return Ok(());
                }
            }
        }
        for zone in &scene.zones {
            let d = zone.segment_distance(&cap.p0, &cap.p1);
            let zone_reach = reach + zone.margin;
            if d >= zone_reach {
                continue;
            }
            let hit = match zone.mode {
                ZoneMode::Forbidden => Hit::Contact(Contact {
                    link,
                    obstacle: Obstacle::Zone(zone.id.clone()),
                    penetration: zone_reach - d,
                }),
                ZoneMode::ReducedSpeed { factor } => Hit::Slow(SpeedLimit { link, zone: zone.id.clone(), factor }),
            };
            if !visit(hit) {
                return Ok(());
            }
        }
    }
    Ok(())
}

/// Maps a world-frame cloud into the robot frame and drops every point within `clearance`
/// of a base or link capsule surface at configuration `q`.
pub fn remove_robot_points(
    cloud: &PointCloud,
    chain: &KinematicChain,
    q: &JointState,
    referencing: &Referencing,
    clearance: f64,
) -> Result<PointCloud> {
    if !(clearance >= 0.0) {
        return Err(Error::invalid("clearance must be >= 0"));
    }
    let caps = chain.all_capsules(q)?;
    let boxes: Vec<Aabb> = caps.iter().map(|c| c.bounding_box().expanded(clearance)).collect();
    Ok(cloud
        .points
        .iter()
        .map(|p| referencing.robot_from_world.apply(p))
        .filter(|p| {
            !caps
                .iter()
                .zip(&boxes)
                .any(|(c, b)| b.contains(p) && c.signed_distance(p) <= clearance)
        })
        .collect())
}
