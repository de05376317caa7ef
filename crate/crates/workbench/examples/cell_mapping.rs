//! Turns the demo cell's mesh into a planning scene and queries it for collisions.

use arcell::pipeline::{build_scene, reference_semi, MapParams};
use arcell::sim::{generate_scene, SceneSpec};
use arcell_core::envmap::{collides, SafetyZone, ZoneMode};
use arcell_core::geom::RigidTransform;
use arcell_core::kin::{robot_model, JointState};
use arcell_core::registration::IcpParams;
use nalgebra::Vector3;

fn main() -> arcell::Result<()> {
    let spec = SceneSpec::demo();
    let (mesh, truth) = generate_scene(&spec)?;
    let chain = robot_model(&spec.robot_model)?;
    let referencing = reference_semi(&mesh, &spec.robot_model, &spec.joint_state, &truth.world_from_robot, &IcpParams::default(), 0)?;

    // keep people out of the space behind the robot, slow down near the front table
    let zones = vec![
        SafetyZone {
            id: "walkway".into(),
            pose: RigidTransform::from_translation(Vector3::new(-0.6, 0.0, 0.5)),
            half_extents: Vector3::new(0.15, 0.6, 0.5),
            mode: ZoneMode::Forbidden,
            margin: 0.02,
        },
        SafetyZone {
            id: "table".into(),
            pose: RigidTransform::from_translation(Vector3::new(0.55, 0.0, 0.3)),
            half_extents: Vector3::new(0.1, 0.3, 0.1),
            mode: ZoneMode::ReducedSpeed { factor: 0.25 },
            margin: 0.0,
        },
    ];
    let scene = build_scene(&mesh, &chain, &spec.joint_state, &referencing, zones, &MapParams::default())?;
    println!("occupied voxels: {} at {} m", scene.octree.len(), scene.octree.resolution);

    let poses = [
        ("current", spec.joint_state.clone()),
        ("reach forward", JointState::new(vec![0.0, 1.1, -0.2, 0.0, 0.5, 0.0])),
        ("turn left", JointState::new(vec![2.8, 0.3, 0.2, 0.0, 0.4, 0.0])),
    ];
    for (name, q) in poses {
        let report = collides(&chain, &q, &scene, 0.01)?;
        println!(
            "{name:>13}: colliding {} ({} contacts), speed scale {}",
            report.colliding,
            report.contacts.len(),
            report.speed_scale()
        );
    }
    Ok(())
}
