//! On-disk artifacts.
//!
//! Clouds are ASCII PLY, meshes OBJ and trajectories CSV. Everything else is a JSON document
//! `{ "version": 1, "kind": ..., <payload fields> }`. Floats are written in their shortest
//! round-trip decimal form, so loading a saved value gives it back exactly.

use std::path::Path;

use arcell_core::envmap::{OccupancyOctree, PlanningScene, SafetyZone};
use arcell_core::geom::io::{read_obj, read_ply, write_obj, write_ply};
use arcell_core::geom::{PointCloud, TriangleMesh};
use arcell_core::program::{JointTrajectory, WaypointProgram};
use arcell_core::registration::Referencing;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::session::SessionState;
use crate::sim::{GroundTruth, SceneSpec};
use crate::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

/// Unit note stored alongside geometric JSON payloads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Units {
    pub length: String,
    pub angle: String,
}

impl Default for Units {
    fn default() -> Self {
        Self { length: "m".into(), angle: "rad".into() }
    }
}

/// A value stored as a versioned JSON document.
pub trait JsonArtifact: Serialize + DeserializeOwned {
    const KIND: &'static str;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneSet {
    #[serde(default)]
    pub units: Units,
    pub zones: Vec<SafetyZone>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgramFile {
    #[serde(default)]
    pub units: Units,
    #[serde(flatten)]
    pub program: WaypointProgram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneFile {
    #[serde(default)]
    pub units: Units,
    #[serde(flatten)]
    pub scene: PlanningScene,
}

/// What the robot controller reports about the cell: model and current configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellInfo {
    pub robot_model: String,
    pub joint_state: arcell_core::kin::JointState,
}

macro_rules! artifact {
    ($t:ty, $kind:literal) => {
        impl JsonArtifact for $t {
            const KIND: &'static str = $kind;
        }
    };
}

artifact!(OccupancyOctree, "octree");
artifact!(ZoneSet, "zones");
artifact!(ProgramFile, "program");
artifact!(SceneFile, "planning_scene");
artifact!(Referencing, "referencing");
artifact!(SessionState, "session");
artifact!(SceneSpec, "scene_spec");
artifact!(GroundTruth, "ground_truth");
artifact!(CellInfo, "cell");

/// Serializes `value` into a versioned document.
pub fn to_json<T: JsonArtifact>(value: &T) -> Result<String> {
    let mut doc = serde_json::Map::new();
    doc.insert("version".into(), FORMAT_VERSION.into());
    doc.insert("kind".into(), T::KIND.into());
    match serde_json::to_value(value)? {
        Value::Object(fields) => doc.extend(fields),
        other => {
            doc.insert("data".into(), other);
        }
    }
    let mut text = serde_json::to_string_pretty(&Value::Object(doc))?;
    text.push('\n');
    Ok(text)
}

fn parse_error(message: impl Into<String>) -> Error {
    arcell_core::Error::Parse { line: 0, column: 0, message: message.into() }.into()
}

/// Parses a versioned document, checking its version and kind.
pub fn from_json<T: JsonArtifact>(text: &str) -> Result<T> {
    let value: Value = serde_json::from_str(text)?;
    let Value::Object(mut doc) = value else {
        return Err(parse_error("expected a JSON object"));
    };
    let version = doc
        .remove("version")
        .ok_or_else(|| parse_error("missing version field"))?
        .as_u64()
        .ok_or_else(|| parse_error("version must be an unsigned integer"))?;
    if version != u64::from(FORMAT_VERSION) {
        return Err(arcell_core::Error::Version { found: version.min(u64::from(u32::MAX)) as u32, expected: FORMAT_VERSION }.into());
    }
    match doc.remove("kind") {
        Some(Value::String(k)) if k == T::KIND => {}
        Some(other) => return Err(parse_error(format!("expected kind {:?}, found {other}", T::KIND))),
        None => return Err(parse_error("missing kind field")),
    }
    let payload = match doc.remove("data") {
        Some(data) if doc.is_empty() => data,
        Some(data) => {
            doc.insert("data".into(), data);
            Value::Object(doc)
        }
        None => Value::Object(doc),
    };
    Ok(serde_json::from_value(payload)?)
}

pub fn save_json<T: JsonArtifact>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, to_json(value)?)?;
    Ok(())
}

pub fn load_json<T: JsonArtifact>(path: impl AsRef<Path>) -> Result<T> {
    from_json(&std::fs::read_to_string(path)?)
}

pub fn save_cloud(cloud: &PointCloud, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, write_ply(cloud))?;
    Ok(())
}

pub fn load_cloud(path: impl AsRef<Path>) -> Result<PointCloud> {
    Ok(read_ply(&std::fs::read_to_string(path)?)?)
}

pub fn save_mesh(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, write_obj(mesh))?;
    Ok(())
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriangleMesh> {
    Ok(read_obj(&std::fs::read_to_string(path)?)?)
}

pub fn save_trajectory(traj: &JointTrajectory, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, traj.to_csv())?;
    Ok(())
}

pub fn load_trajectory(path: impl AsRef<Path>) -> Result<JointTrajectory> {
    Ok(JointTrajectory::from_csv(&std::fs::read_to_string(path)?)?)
}

/// Fields left out of content hashes.
const VOLATILE_FIELDS: [&str; 1] = ["created_at"];

fn strip_volatile(v: &mut Value) {
    match v {
        Value::Object(map) => {
            for f in VOLATILE_FIELDS {
                map.remove(f);
            }
            map.values_mut().for_each(strip_volatile);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_volatile),
        _ => {}
    }
}

/// SHA-256 (hex) of an artifact's content. JSON documents are hashed in canonical form
/// with timestamps removed; other files are hashed byte for byte.
pub fn content_hash(bytes: &[u8]) -> String {
    let canonical = serde_json::from_slice::<Value>(bytes).ok().map(|mut v| {
        strip_volatile(&mut v);
        serde_json::to_vec(&v).expect("value serializes")
    });
    let digest = Sha256::digest(canonical.as_deref().unwrap_or(bytes));
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_hash(path: impl AsRef<Path>) -> Result<String> {
    Ok(content_hash(&std::fs::read(path)?))
}
