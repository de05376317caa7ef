//! Rigid transforms, point clouds, triangle meshes and spatial queries.

mod cloud;
pub mod io;
mod kdtree;
mod mesh;
mod shapes;
mod transform;

pub use cloud::{crop_aabb, voxel_downsample, Aabb, PointCloud};
pub(crate) use cloud::cell_key;
pub use kdtree::{knn_query, KdTree};
pub use mesh::{largest_remainder, ray_triangle, sample_mesh_surface, RayHit, TriangleMesh};
pub use shapes::{point_segment_distance, segment_aabb_distance, Capsule};
pub use transform::{pose_serde, rotation_log, Pose, RigidTransform};

pub type Vec3 = nalgebra::Vector3<f64>;
