//! Seeded referencing of the demo cell from a perturbed hologram pose.

use arcell::pipeline::{reference_error, reference_semi};
use arcell::sim::{generate_scene, SceneSpec};
use arcell_core::geom::RigidTransform;
use arcell_core::registration::IcpParams;
use nalgebra::Vector3;

fn main() -> arcell::Result<()> {
    let spec = SceneSpec::demo();
    let (mesh, truth) = generate_scene(&spec)?;
    println!("scene: {} vertices", mesh.vertices.len());

    // the operator drops the hologram 6 cm and 10 degrees off
    let nudge = RigidTransform::from_translation(Vector3::new(0.04, -0.03, 0.03))
        .compose(&RigidTransform::from_axis_angle(&Vector3::new(0.2, 0.1, 1.0), 10f64.to_radians()));
    let seed = truth.world_from_robot.compose(&nudge);
    let (dt, dr) = seed.error_to(&truth.world_from_robot);
    println!("seed error: {:.1} mm, {:.2} deg", dt * 1e3, dr.to_degrees());

    let start = std::time::Instant::now();
    let r = reference_semi(&mesh, &spec.robot_model, &spec.joint_state, &seed, &IcpParams::default(), 0)?;
    let (dt, dr) = reference_error(&r, &truth);
    println!(
        "refined in {:.2} s: rmse {:.2} mm, {} iterations, error {:.2} mm / {:.3} deg",
        start.elapsed().as_secs_f64(),
        r.quality.rmse * 1e3,
        r.quality.iterations,
        dt * 1e3,
        dr.to_degrees()
    );
    Ok(())
}
