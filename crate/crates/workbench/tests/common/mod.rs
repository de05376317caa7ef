//! Helpers shared by the workbench integration tests.
#![allow(dead_code)]

use std::path::Path;

use arcell::persist::{self, ProgramFile};
use arcell::sim::SceneSpec;
use arcell_core::geom::{Pose, RigidTransform};
use arcell_core::kin::{fk, robot_model, JointState};
use arcell_core::program::{Waypoint, WaypointProgram};
use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use nalgebra::Vector3;
use serde_json::Value;
use tower::ServiceExt;

/// Tool poses of two reachable configurations on either side of the demo robot.
pub fn demo_program() -> WaypointProgram {
    let chain = robot_model("kr6_like").unwrap();
    let mut program = WaypointProgram::default();
    for (id, q) in [("left", [-0.8, 0.6, 0.3, 0.0, 0.6, 0.0]), ("right", [0.7, 0.5, 0.4, 0.0, 0.5, 0.0])] {
        let target = *fk(&chain, &JointState::new(q.to_vec())).unwrap().last().unwrap();
        program.add(Waypoint::free_space(id, target), None).unwrap();
    }
    program
}

/// Seed hologram a few centimeters off the demo robot.
pub fn demo_seed() -> RigidTransform {
    RigidTransform::from_translation(Vector3::new(0.05, 0.02, 0.0)).compose(&SceneSpec::demo().true_robot_pose)
}

/// Writes the seed pose and program inputs into `inputs`, returning their paths.
pub fn write_inputs(inputs: &Path) -> (String, String) {
    std::fs::create_dir_all(inputs).unwrap();
    let seed = inputs.join("seed.json");
    std::fs::write(&seed, serde_json::to_string(&Pose::from(&demo_seed())).unwrap()).unwrap();
    let program = inputs.join("program.json");
    persist::save_json(&ProgramFile { units: Default::default(), program: demo_program() }, &program).unwrap();
    (seed.to_str().unwrap().to_string(), program.to_str().unwrap().to_string())
}

/// Runs the binary with `args`, returning exit code, stdout and stderr.
pub fn arcell(args: &[&str]) -> (i32, String, String) {
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_arcell")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

/// simulate → reference → map → plan → execute in `root/cell`; returns the exit codes.
pub fn cli_pipeline(root: &Path) -> Vec<i32> {
    let (seed, program) = write_inputs(root);
    let cell = root.join("cell");
    let d = cell.to_str().unwrap();
    let steps: [Vec<&str>; 5] = [
        vec!["simulate", "--out", d],
        vec!["reference", "--scene", d, "--semi", "--seed-pose", &seed],
        vec!["map", "--scene", d],
        vec!["plan", "--scene", d, "--program", &program],
        vec!["execute", "--scene", d],
    ];
    steps
        .iter()
        .map(|args| {
            let (code, _, err) = arcell(args);
            assert!(code == 0, "arcell {} failed: {err}", args[0]);
            code
        })
        .collect()
}

pub const PIPELINE_ARTIFACTS: [&str; 10] = [
    "spec.json",
    "mesh.obj",
    "truth.json",
    "cell.json",
    "referencing.json",
    "octree.json",
    "scene.json",
    "program.json",
    "trajectory.csv",
    "execution.csv",
];

pub async fn call(app: &Router, method: Method, uri: &str, body: Value) -> (StatusCode, Value) {
    let body = if body.is_null() { Body::empty() } else { Body::from(body.to_string()) };
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json").body(body).unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}
