//! Core algorithms for an HMD-driven robot work cell.
//!
//! The crate is organized by pipeline stage:
//!
//! - [`geom`]: rigid transforms, point clouds, meshes, spatial queries and file formats.
//! - [`registration`]: Kabsch fitting, point-to-point ICP, a 4PCS-style coarse aligner and
//!   seeded (semi-automatic) referencing.
//! - [`autoref`]: slice descriptors and sliding-window automatic referencing.
//! - [`kin`]: serial-chain kinematics, damped least squares IK and hand guidance.
//! - [`envmap`]: occupancy voxel maps, safety zones and collision checking.
//! - [`program`]: waypoints, planning (straight line, RRT-Connect, shortcutting) and virtual
//!   execution.
//! - [`fusion`]: wrist IMU / HMD hand observation fusion.
//!
//! All frames downstream of referencing are expressed in the robot base frame.

pub mod autoref;
pub mod envmap;
mod error;
pub mod fusion;
pub mod geom;
pub mod kin;
pub mod program;
pub mod registration;

pub use error::{Error, Result};
