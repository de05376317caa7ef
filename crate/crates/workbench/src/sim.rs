//! Synthetic work cell standing in for the head-mounted display's spatial mesh.
//!
//! Surfaces are tessellated at a fixed vertex spacing; sensor noise is applied per vertex and
//! dropout removes vertices (with the triangles using them).

use std::f64::consts::{FRAC_PI_2, TAU};

use arcell_core::geom::{pose_serde, sample_mesh_surface, Aabb, Capsule, PointCloud, RigidTransform, TriangleMesh, Vec3};
use arcell_core::kin::{robot_model, JointState, KinematicChain};
use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum ObstacleSpec {
    /// Box centered at `pose` with full edge lengths `size`.
    Box {
        #[serde(with = "pose_serde")]
        pose: RigidTransform,
        size: Vec3,
    },
    /// Cylinder centered at `pose` with its axis along the pose z axis.
    Cylinder {
        #[serde(with = "pose_serde")]
        pose: RigidTransform,
        radius: f64,
        height: f64,
    },
}

impl ObstacleSpec {
    pub fn mesh(&self, spacing: f64) -> TriangleMesh {
        match self {
            ObstacleSpec::Box { pose, size } => box_mesh(pose, size, spacing),
            ObstacleSpec::Cylinder { pose, radius, height } => cylinder_mesh(pose, *radius, *height, spacing),
        }
    }
}

fn default_spacing() -> f64 {
    0.015
}

fn default_floor_half_extent() -> f64 {
    1.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub robot_model: String,
    /// `world_from_robot`.
    #[serde(with = "pose_serde")]
    pub true_robot_pose: RigidTransform,
    pub joint_state: JointState,
    #[serde(default)]
    pub obstacles: Vec<ObstacleSpec>,
    #[serde(default)]
    pub floor: bool,
    /// Half edge of the square floor patch centered under the world origin (m).
    #[serde(default = "default_floor_half_extent")]
    pub floor_half_extent: f64,
    /// Per-coordinate Gaussian vertex noise (m).
    #[serde(default)]
    pub noise_std: f64,
    /// Probability of dropping each vertex.
    #[serde(default)]
    pub dropout: f64,
    /// Target vertex spacing of the tessellation (m).
    #[serde(default = "default_spacing")]
    pub mesh_spacing: f64,
    #[serde(default)]
    pub seed: u64,
}

impl SceneSpec {
    /// KR-like arm at a slightly yawed pose with two obstacles and a floor.
    pub fn demo() -> Self {
        SceneSpec {
            robot_model: "kr6_like".into(),
            true_robot_pose: RigidTransform::from_translation(Vector3::new(0.3, -0.2, 0.0))
                .compose(&RigidTransform::rot_z(0.35)),
            joint_state: JointState::new(vec![0.0, 0.4, 0.3, 0.0, 0.6, 0.0]),
            obstacles: vec![
                ObstacleSpec::Box {
                    pose: RigidTransform::from_translation(Vector3::new(1.1, 0.3, 0.2)),
                    size: Vector3::new(0.4, 0.6, 0.4),
                },
                ObstacleSpec::Cylinder {
                    pose: RigidTransform::from_translation(Vector3::new(-0.6, 0.7, 0.35)),
                    radius: 0.15,
                    height: 0.7,
                },
            ],
            floor: true,
            floor_half_extent: 1.5,
            noise_std: 0.002,
            dropout: 0.1,
            mesh_spacing: 0.015,
            seed: 7,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(arcell_core::Error::InvalidParameter(m.to_string()).into());
        if !(self.noise_std >= 0.0) {
            return bad("noise_std must be >= 0");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must be in [0, 1)");
        }
        if !(self.mesh_spacing > 0.0) {
            return bad("mesh_spacing must be > 0");
        }
        if self.floor && !(self.floor_half_extent > 0.0) {
            return bad("floor_half_extent must be > 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceLabel {
    Floor,
    Robot,
    Obstacle(usize),
}

/// Generating poses and per-vertex provenance of a simulated scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub robot_model: String,
    pub world_from_robot: RigidTransform,
    pub joint_state: JointState,
    /// World box of the noise-free robot surface.
    pub robot_box: Aabb,
    pub obstacle_boxes: Vec<Aabb>,
    /// Label of every vertex of the emitted mesh.
    pub labels: Vec<SurfaceLabel>,
}

fn frame_with_z(z: &Vec3) -> Matrix3<f64> {
    let z = z.normalize();
    let helper = if z.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let x = helper.cross(&z).normalize();
    let y = z.cross(&x);
    Matrix3::from_columns(&[x, y, z])
}

/// Grid over the parallelogram `origin + s·u + t·v`, `s, t ∈ [0, 1]`.
fn grid_patch(mesh: &mut TriangleMesh, origin: Vec3, u: Vec3, v: Vec3, spacing: f64) {
    let nu = ((u.norm() / spacing).ceil() as usize).max(1);
    let nv = ((v.norm() / spacing).ceil() as usize).max(1);
    let base = mesh.vertices.len();
    for j in 0..=nv {
        for i in 0..=nu {
            mesh.vertices.push(origin + u * (i as f64 / nu as f64) + v * (j as f64 / nv as f64));
        }
    }
    let at = |i: usize, j: usize| base + j * (nu + 1) + i;
    for j in 0..nv {
        for i in 0..nu {
            mesh.triangles.push([at(i, j), at(i + 1, j), at(i + 1, j + 1)]);
            mesh.triangles.push([at(i, j), at(i + 1, j + 1), at(i, j + 1)]);
        }
    }
}

/// Surface of revolution about the local z axis from a profile of `(z, radius)` pairs;
/// zero-radius entries become single pole vertices.
fn revolve(mesh: &mut TriangleMesh, frame: &RigidTransform, profile: &[(f64, f64)], around: usize) {
    let mut rings: Vec<Vec<usize>> = Vec::with_capacity(profile.len());
    for &(z, r) in profile {
        if r == 0.0 {
            mesh.vertices.push(frame.apply(&Vector3::new(0.0, 0.0, z)));
            rings.push(vec![mesh.vertices.len() - 1]);
        } else {
            let ring = (0..around)
                .map(|k| {
                    let a = k as f64 / around as f64 * TAU;
                    mesh.vertices.push(frame.apply(&Vector3::new(r * a.cos(), r * a.sin(), z)));
                    mesh.vertices.len() - 1
                })
                .collect();
            rings.push(ring);
        }
    }
    for w in rings.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        match (a.len(), b.len()) {
            (1, 1) => {}
            (1, _) => (0..around).for_each(|k| mesh.triangles.push([a[0], b[(k + 1) % around], b[k]])),
            (_, 1) => (0..around).for_each(|k| mesh.triangles.push([a[k], a[(k + 1) % around], b[0]])),
            _ => (0..around).for_each(|k| {
                let k1 = (k + 1) % around;
                mesh.triangles.push([a[k], a[k1], b[k1]]);
                mesh.triangles.push([a[k], b[k1], b[k]]);
            }),
        }
    }
}

fn around_count(radius: f64, spacing: f64) -> usize {
    ((TAU * radius / spacing).ceil() as usize).max(8)
}

pub fn box_mesh(pose: &RigidTransform, size: &Vec3, spacing: f64) -> TriangleMesh {
    let mut m = TriangleMesh::default();
    let h = size * 0.5;
    let (ex, ey, ez) = (Vector3::x() * size.x, Vector3::y() * size.y, Vector3::z() * size.z);
    let lo = -h;
    grid_patch(&mut m, lo, ey, ex, spacing);
    grid_patch(&mut m, lo + ez, ex, ey, spacing);
    grid_patch(&mut m, lo, ex, ez, spacing);
    grid_patch(&mut m, lo + ey, ez, ex, spacing);
    grid_patch(&mut m, lo, ez, ey, spacing);
    grid_patch(&mut m, lo + ex, ey, ez, spacing);
    for v in &mut m.vertices {
        *v = pose.apply(v);
    }
    m
}

pub fn cylinder_mesh(pose: &RigidTransform, radius: f64, height: f64, spacing: f64) -> TriangleMesh {
    let around = around_count(radius, spacing);
    let n_r = ((radius / spacing).ceil() as usize).max(1);
    let n_h = ((height / spacing).ceil() as usize).max(1);
    let (z0, z1) = (-0.5 * height, 0.5 * height);
    let mut profile = vec![(z0, 0.0)];
    profile.extend((1..=n_r).map(|k| (z0, radius * k as f64 / n_r as f64)));
    profile.extend((1..n_h).map(|k| (z0 + height * k as f64 / n_h as f64, radius)));
    profile.extend((0..n_r).map(|k| (z1, radius * (n_r - k) as f64 / n_r as f64)));
    profile.push((z1, 0.0));
    let mut m = TriangleMesh::default();
    revolve(&mut m, pose, &profile, around);
    m
}

pub fn capsule_mesh(c: &Capsule, spacing: f64) -> TriangleMesh {
    let axis = c.p1 - c.p0;
    let len = axis.norm();
    let rot = if len > 0.0 { frame_with_z(&axis) } else { Matrix3::identity() };
    let frame = RigidTransform::new(rot, c.p0);
    let r = c.radius;
    let around = around_count(r, spacing);
    let n_lat = ((FRAC_PI_2 * r / spacing).ceil() as usize).max(2);
    let n_len = (len / spacing).ceil() as usize;
    let mut profile = vec![(-r, 0.0)];
    for k in 1..=n_lat {
        let phi = -FRAC_PI_2 + FRAC_PI_2 * k as f64 / n_lat as f64;
        profile.push((r * phi.sin(), r * phi.cos()));
    }
    for k in 1..n_len {
        profile.push((len * k as f64 / n_len as f64, r));
    }
    for k in 0..n_lat {
        let phi = FRAC_PI_2 * k as f64 / n_lat as f64;
        let z = len + r * phi.sin();
        if k == 0 && n_len == 0 {
            continue;
        }
        profile.push((z, r * phi.cos()));
    }
    profile.push((len + r, 0.0));
    let mut m = TriangleMesh::default();
    revolve(&mut m, &frame, &profile, around);
    m
}

/// Tessellated robot surface (base and link capsules) in the robot base frame.
pub fn robot_mesh(chain: &KinematicChain, q: &JointState, spacing: f64) -> Result<TriangleMesh> {
    let mut m = TriangleMesh::default();
    for c in chain.all_capsules(q)? {
        m.append(&capsule_mesh(&c, spacing));
    }
    Ok(m)
}

/// Points sampled uniformly on the robot surface in its base frame; the model a referencing
/// run registers against the scene.
pub fn robot_surface(chain: &KinematicChain, q: &JointState, density: f64, seed: u64) -> Result<PointCloud> {
    let mesh = robot_mesh(chain, q, 0.01)?;
    Ok(sample_mesh_surface(&mesh, density, seed)?)
}

/// Default sampling density of [`robot_surface`] (points per m²).
pub const ROBOT_SURFACE_DENSITY: f64 = 8000.0;

/// Builds the scene mesh in the world frame and the ground truth behind it.
pub fn generate_scene(spec: &SceneSpec) -> Result<(TriangleMesh, GroundTruth)> {
    spec.validate()?;
    let chain = robot_model(&spec.robot_model)?;
    chain.check_len(&spec.joint_state)?;
    let spacing = spec.mesh_spacing;

    let mut parts: Vec<(TriangleMesh, SurfaceLabel)> = Vec::new();
    if spec.floor {
        let e = spec.floor_half_extent;
        let mut floor = TriangleMesh::default();
        grid_patch(&mut floor, Vector3::new(-e, -e, 0.0), Vector3::x() * 2.0 * e, Vector3::y() * 2.0 * e, spacing);
        parts.push((floor, SurfaceLabel::Floor));
    }
    let robot = robot_mesh(&chain, &spec.joint_state, spacing)?;
    let robot_world = TriangleMesh {
        vertices: robot.vertices.iter().map(|v| spec.true_robot_pose.apply(v)).collect(),
        triangles: robot.triangles,
    };
    let robot_box = Aabb::from_points(&robot_world.vertices).expect("robot mesh has vertices");
    parts.push((robot_world, SurfaceLabel::Robot));
    let mut obstacle_boxes = Vec::new();
    for (i, o) in spec.obstacles.iter().enumerate() {
        let m = o.mesh(spacing);
        obstacle_boxes.push(Aabb::from_points(&m.vertices).expect("obstacle mesh has vertices"));
        parts.push((m, SurfaceLabel::Obstacle(i)));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let normal = Normal::new(0.0, spec.noise_std).map_err(|e| arcell_core::Error::InvalidParameter(e.to_string()))?;
    let mut mesh = TriangleMesh::default();
    let mut labels = Vec::new();
    for (part, label) in parts {
        let mut remap = vec![usize::MAX; part.vertices.len()];
        for (i, v) in part.vertices.iter().enumerate() {
            let noise = Vector3::new(normal.sample(&mut rng), normal.sample(&mut rng), normal.sample(&mut rng));
            let keep = rng.random::<f64>() >= spec.dropout;
            if keep {
                remap[i] = mesh.vertices.len();
                mesh.vertices.push(v + noise);
                labels.push(label);
            }
        }
        for t in &part.triangles {
            let m = t.map(|i| remap[i]);
            if m.iter().all(|&i| i != usize::MAX) {
                mesh.triangles.push(m);
            }
        }
    }
    let truth = GroundTruth {
        robot_model: spec.robot_model.clone(),
        world_from_robot: spec.true_robot_pose,
        joint_state: spec.joint_state.clone(),
        robot_box,
        obstacle_boxes,
        labels,
    };
    Ok((mesh, truth))
}

/// Point cloud of a spatial mesh: its vertices.
pub fn mesh_cloud(mesh: &TriangleMesh) -> PointCloud {
    PointCloud::new(mesh.vertices.clone())
}

/// Samples per square meter drawn from the spatial mesh for registration. Raw vertices are
/// too sparse for point-to-point ICP to settle within millimeters.
pub const SCENE_SAMPLE_DENSITY: f64 = 20000.0;

/// Dense registration target sampled from the spatial mesh surface.
pub fn registration_cloud(mesh: &TriangleMesh, seed: u64) -> Result<PointCloud> {
    Ok(sample_mesh_surface(mesh, SCENE_SAMPLE_DENSITY, seed)?)
}
