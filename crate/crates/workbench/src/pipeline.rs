//! Pipeline steps shared by the CLI and the service.

use arcell_core::autoref::{automatic_reference, SearchParams};
use arcell_core::envmap::{build_octree, edit_region, remove_robot_points, EditAction, PlanningScene, SafetyZone};
use arcell_core::geom::{voxel_downsample, Aabb, PointCloud, RigidTransform, TriangleMesh, Vec3};
use arcell_core::kin::{robot_model, JointState, KinematicChain};
use arcell_core::program::{plan_program, JointTrajectory, PlannerParams, WaypointProgram};
use arcell_core::registration::{semi_automatic_reference, IcpParams, Referencing};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::sim::{mesh_cloud, registration_cloud, robot_surface, GroundTruth, ROBOT_SURFACE_DENSITY};
use crate::Result;

/// Robot model plus its surface template sampled in the base frame.
pub fn robot_template(model: &str, q: &JointState, seed: u64) -> Result<(KinematicChain, PointCloud)> {
    let chain = robot_model(model)?;
    let surface = robot_surface(&chain, q, ROBOT_SURFACE_DENSITY, seed)?;
    Ok((chain, surface))
}

/// Referencing from a seed hologram pose (`world_from_robot`).
pub fn reference_semi(
    mesh: &TriangleMesh,
    model: &str,
    q: &JointState,
    seed_pose: &RigidTransform,
    icp: &IcpParams,
    sample_seed: u64,
) -> Result<Referencing> {
    let (_, surface) = robot_template(model, q, sample_seed)?;
    Ok(semi_automatic_reference(&registration_cloud(mesh, sample_seed)?, &surface, seed_pose, icp)?)
}

pub fn reference_auto(
    mesh: &TriangleMesh,
    model: &str,
    q: &JointState,
    search: &SearchParams,
    icp: &IcpParams,
    sample_seed: u64,
) -> Result<Referencing> {
    let (_, surface) = robot_template(model, q, sample_seed)?;
    Ok(automatic_reference(&mesh_cloud(mesh), &surface, search, icp)?)
}

/// Translation (m) and rotation (rad) error of a referencing against ground truth.
pub fn reference_error(referencing: &Referencing, truth: &GroundTruth) -> (f64, f64) {
    referencing.world_from_robot().error_to(&truth.world_from_robot)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionEdit {
    /// Region in the robot base frame.
    pub region: Aabb,
    pub action: EditAction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MapParams {
    /// Voxel edge of the occupancy map (m).
    pub resolution: f64,
    /// Points this close to the robot surface are treated as robot (m).
    pub clearance: f64,
    /// Voxel filter applied to the mesh cloud before mapping (m); none if absent.
    pub filter_cell: Option<f64>,
    /// Grid origin in the robot base frame.
    pub origin: Vec3,
    pub edits: Vec<RegionEdit>,
}

impl Default for MapParams {
    fn default() -> Self {
        Self { resolution: 0.05, clearance: 0.05, filter_cell: Some(0.01), origin: Vector3::zeros(), edits: Vec::new() }
    }
}

/// Spatial mesh → filtered cloud → robot points removed → occupancy map → planning scene,
/// all in the robot base frame.
pub fn build_scene(
    mesh: &TriangleMesh,
    chain: &KinematicChain,
    q: &JointState,
    referencing: &Referencing,
    zones: Vec<SafetyZone>,
    params: &MapParams,
) -> Result<PlanningScene> {
    let mut cloud = mesh_cloud(mesh);
    if let Some(cell) = params.filter_cell {
        cloud = voxel_downsample(&cloud, cell)?;
    }
    let cloud = remove_robot_points(&cloud, chain, q, referencing, params.clearance)?;
    let mut octree = build_octree(&cloud, params.resolution, params.origin)?;
    for e in &params.edits {
        octree = edit_region(&octree, &e.region, e.action);
    }
    let scene = PlanningScene { octree, zones, referencing: referencing.clone() };
    scene.validate()?;
    Ok(scene)
}

/// Plans the whole program from the session configuration.
pub fn plan(
    chain: &KinematicChain,
    q0: &JointState,
    program: &WaypointProgram,
    scene: &PlanningScene,
    params: &PlannerParams,
) -> Result<JointTrajectory> {
    program.validate()?;
    Ok(plan_program(chain, q0, program, scene, params)?)
}

/// Spatial mesh expressed in the robot base frame.
pub fn mesh_in_robot_frame(mesh: &TriangleMesh, referencing: &Referencing) -> TriangleMesh {
    TriangleMesh {
        vertices: mesh.vertices.iter().map(|v| referencing.robot_from_world.apply(v)).collect(),
        triangles: mesh.triangles.clone(),
    }
}
