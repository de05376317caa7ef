//! Rigid registration and semi-automatic referencing.
//!
//! Registration results are always `target_from_source`. For referencing the source is the
//! robot surface model (robot base frame) and the target is the HMD scene (world frame), so
//! the fitted transform is `world_from_robot` and [`Referencing::robot_from_world`] is its
//! inverse.

mod coarse;
mod icp;
mod kabsch;

use serde::{Deserialize, Serialize};

use crate::geom::{crop_aabb, Aabb, PointCloud, RigidTransform};
use crate::{Error, Result};

pub use coarse::{brute_force_support, coarse_align, CoarseParams};
pub use icp::{icp, icp_staged};
pub use kabsch::kabsch_fit;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IcpParams {
    pub max_iterations: usize,
    /// Correspondences farther than this (meters) are rejected.
    pub max_correspondence_distance: f64,
    /// Stop when the RMSE changes by less than this between iterations (meters).
    pub convergence_tolerance: f64,
    pub min_inlier_fraction: f64,
}

impl Default for IcpParams {
    fn default() -> Self {
        Self {
            max_iterations: 300,
            max_correspondence_distance: 0.05,
            convergence_tolerance: 1e-8,
            min_inlier_fraction: 0.85,
        }
    }
}

impl IcpParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(Error::invalid("max_iterations must be >= 1"));
        }
        if !(self.max_correspondence_distance > 0.0) || !(self.convergence_tolerance > 0.0) {
            return Err(Error::invalid("ICP distances and tolerance must be > 0"));
        }
        if !(0.0..=1.0).contains(&self.min_inlier_fraction) {
            return Err(Error::invalid("min_inlier_fraction must be in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistrationResult {
    /// `target_from_source`.
    pub transform: RigidTransform,
    pub rmse: f64,
    pub inlier_fraction: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Inlier RMSE measured at the start of every iteration.
    #[serde(default)]
    pub rmse_history: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReferencingMethod {
    SemiAutomatic,
    Automatic,
}

/// Transform between the HMD world frame and the robot base frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Referencing {
    pub robot_from_world: RigidTransform,
    pub quality: RegistrationResult,
    pub method: ReferencingMethod,
    /// Seconds since the Unix epoch.
    pub created_at: u64,
}

impl Referencing {
    /// Builds a referencing from a `world_from_robot` registration result.
    pub fn from_registration(
        result: RegistrationResult,
        method: ReferencingMethod,
    ) -> Result<Referencing> {
        if !result.converged {
            return Err(Error::ReferencingRejected(Box::new(result)));
        }
        let created_at = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        Ok(Referencing {
            robot_from_world: result.transform.inverse(),
            quality: result,
            method,
            created_at,
        })
    }

    pub fn world_from_robot(&self) -> RigidTransform {
        self.robot_from_world.inverse()
    }
}

/// Box whose diagonal is `factor` times that of `bbox`, grown by the same margin on every side.
pub fn dilate_diagonal(bbox: &Aabb, factor: f64) -> Aabb {
    let h = bbox.size() * 0.5;
    let sum = h.x + h.y + h.z;
    let h2 = h.norm_squared();
    // |h + m·1|² = factor²·|h|², solved for the margin m ≥ 0
    let margin = (-sum + (sum * sum + 3.0 * (factor * factor - 1.0) * h2).sqrt()) / 3.0;
    bbox.expanded(margin.max(0.0))
}

/// Seed-box dilation applied before seeded ICP.
pub const SEED_CROP_DILATION: f64 = 1.5;

/// Refines a user-placed seed hologram pose against the scene.
///
/// `seed` is the hologram pose `world_from_robot`; `robot_surface` is sampled from the robot
/// model in its base frame. The scene is cropped to the seeded robot box dilated to 1.5× its
/// diagonal before running ICP.
pub fn semi_automatic_reference(
    scene: &PointCloud,
    robot_surface: &PointCloud,
    seed: &RigidTransform,
    params: &IcpParams,
) -> Result<Referencing> {
    let local_box = robot_surface
        .bounding_box()
        .ok_or(Error::EmptyInput("robot surface cloud is empty"))?;
    let world_corners: Vec<_> = local_box.corners().iter().map(|c| seed.apply(c)).collect();
    let seeded_box = Aabb::from_points(&world_corners).expect("eight corners");
    let crop = crop_aabb(scene, &dilate_diagonal(&seeded_box, SEED_CROP_DILATION), true);
    if crop.is_empty() {
        return Err(Error::NoCorrespondences);
    }
    let result = icp(robot_surface, &crop, seed, params)?;
    Referencing::from_registration(result, ReferencingMethod::SemiAutomatic)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    #[test]
    fn dilation_scales_diagonal() {
        let b = Aabb::new(Vector3::zeros(), Vector3::new(0.4, 0.4, 1.2)).unwrap();
        let d = dilate_diagonal(&b, 1.5);
        assert!((d.diagonal() - 1.5 * b.diagonal()).abs() < 1e-12);
        let margin = b.min - d.min;
        assert!((margin.x - margin.z).abs() < 1e-12);
    }

    #[test]
    fn rejected_result_is_attached() {
        let r = RegistrationResult {
            transform: RigidTransform::identity(),
            rmse: 0.1,
            inlier_fraction: 0.2,
            iterations: 3,
            converged: false,
            rmse_history: vec![],
        };
        match Referencing::from_registration(r.clone(), ReferencingMethod::SemiAutomatic) {
            Err(Error::ReferencingRejected(b)) => assert_eq!(*b, r),
            other => panic!("unexpected {other:?}"),
        }
    }
}
