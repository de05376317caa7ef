//! Waypoint programming: surface and free-space waypoints, collision-checked planning and
//! virtual execution.
//!
//! Waypoint targets, meshes and planning scenes are all in the robot base frame.

mod execute;
mod planner;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::geom::{pose_serde, RigidTransform, TriangleMesh, Vec3};
use crate::{Error, Result};

pub use execute::{virtual_execute, ExecutionFrame};
pub use planner::{
    path_length, plan_program, plan_segment, revalidate, JointTrajectory, MotionChecker, PlannerParams,
    TrajectorySample,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaypointKind {
    FreeSpace,
    Surface,
}

/// Location of a surface waypoint on the mesh it was placed on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceAnchor {
    pub triangle: usize,
    pub barycentric: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub id: String,
    pub kind: WaypointKind,
    /// Tool pose to reach.
    #[serde(with = "pose_serde")]
    pub target: RigidTransform,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<SurfaceAnchor>,
    /// Speed of the segment ending at this waypoint (m/s); the program default if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed: Option<f64>,
}

impl Waypoint {
    pub fn free_space(id: impl Into<String>, target: RigidTransform) -> Self {
        Self { id: id.into(), kind: WaypointKind::FreeSpace, target, anchor: None, speed: None }
    }

    /// Point on the anchoring triangle, for surface waypoints.
    pub fn anchor_point(&self, mesh: &TriangleMesh) -> Option<Vec3> {
        let a = self.anchor?;
        (a.triangle < mesh.triangles.len()).then(|| mesh.point_at(a.triangle, &a.barycentric))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaypointProgram {
    pub waypoints: Vec<Waypoint>,
    /// Default segment speed (m/s).
    pub speed: f64,
    /// Return to the first waypoint after the last one.
    #[serde(rename = "loop", default)]
    pub looped: bool,
}

impl Default for WaypointProgram {
    fn default() -> Self {
        Self { waypoints: Vec::new(), speed: 0.25, looped: false }
    }
}

impl WaypointProgram {
    pub fn validate(&self) -> Result<()> {
        if !(self.speed > 0.0) {
            return Err(Error::invalid("program speed must be > 0"));
        }
        let mut ids = std::collections::BTreeSet::new();
        for w in &self.waypoints {
            if !ids.insert(w.id.as_str()) {
                return Err(Error::invalid(format!("duplicate waypoint id {}", w.id)));
            }
            if w.speed.is_some_and(|s| !(s > 0.0)) {
                return Err(Error::invalid(format!("waypoint {}: speed must be > 0", w.id)));
            }
            if w.kind == WaypointKind::Surface && w.anchor.is_none() {
                return Err(Error::invalid(format!("surface waypoint {} has no anchor", w.id)));
            }
        }
        Ok(())
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.waypoints.iter().position(|w| w.id == id)
    }

    /// Appends `wp`, or inserts it at `position` when given.
    pub fn add(&mut self, wp: Waypoint, position: Option<usize>) -> Result<()> {
        if self.index_of(&wp.id).is_some() {
            return Err(Error::invalid(format!("duplicate waypoint id {}", wp.id)));
        }
        let at = position.unwrap_or(self.waypoints.len()).min(self.waypoints.len());
        self.waypoints.insert(at, wp);
        Ok(())
    }

    pub fn remove(&mut self, id: &str) -> Result<Waypoint> {
        let i = self.index_of(id).ok_or_else(|| Error::invalid(format!("unknown waypoint {id}")))?;
        Ok(self.waypoints.remove(i))
    }

    /// Replaces the waypoint with the same id.
    pub fn update(&mut self, wp: Waypoint) -> Result<()> {
        let i = self.index_of(&wp.id).ok_or_else(|| Error::invalid(format!("unknown waypoint {}", wp.id)))?;
        self.waypoints[i] = wp;
        Ok(())
    }

    pub fn segment_speed(&self, index: usize) -> f64 {
        self.waypoints.get(index).and_then(|w| w.speed).unwrap_or(self.speed)
    }
}

/// Tool orientation with tool z pointing into the surface whose outward normal is `normal`.
pub fn surface_orientation(normal: &Vec3) -> Matrix3<f64> {
    let z = -normal.normalize();
    let helper = if z.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let y = z.cross(&helper).normalize();
    let x = y.cross(&z);
    Matrix3::from_columns(&[x, y, z])
}

/// Casts a ray against `mesh` and turns the nearest hit into a surface waypoint.
///
/// Without an explicit orientation the tool z axis is set against the surface normal facing
/// the ray origin.
pub fn place_waypoint_ray(
    id: impl Into<String>,
    origin: &Vec3,
    direction: &Vec3,
    mesh: &TriangleMesh,
    orientation: Option<Matrix3<f64>>,
) -> Result<Waypoint> {
    let n = direction.norm();
    if !(n > 0.0) {
        return Err(Error::invalid("ray direction must be non-zero"));
    }
    let dir = direction / n;
    let hit = mesh.ray_cast(origin, &dir).ok_or(Error::NoSurfaceHit)?;
    let rotation = orientation.unwrap_or_else(|| {
        let mut normal = mesh.triangle_normal(hit.triangle);
        if normal.dot(&dir) > 0.0 {
            normal = -normal;
        }
        surface_orientation(&normal)
    });
    Ok(Waypoint {
        id: id.into(),
        kind: WaypointKind::Surface,
        target: RigidTransform::new(rotation, hit.point),
        anchor: Some(SurfaceAnchor { triangle: hit.triangle, barycentric: hit.barycentric }),
        speed: None,
    })
}

/// Projects a waypoint along `direction` (downwards by default) onto the mesh, returning the
/// hit point and its distance.
pub fn project_waypoint(wp: &Waypoint, mesh: &TriangleMesh, direction: Option<Vec3>) -> Option<(Vec3, f64)> {
    let dir = direction.unwrap_or(-Vector3::z()).try_normalize(0.0)?;
    let hit = mesh.ray_cast(&wp.target.translation, &dir)?;
    Some((hit.point, hit.t))
}
