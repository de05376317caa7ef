//! Finds the robot of the demo cell without a seed: descriptor search, then ICP.

use arcell::pipeline::{reference_auto, reference_error, robot_template};
use arcell::sim::{generate_scene, mesh_cloud, SceneSpec};
use arcell_core::autoref::{search_candidates, strip_floor, SearchParams};
use arcell_core::registration::IcpParams;

fn main() -> arcell::Result<()> {
    let spec = SceneSpec::demo();
    let (mesh, truth) = generate_scene(&spec)?;
    let (_, surface) = robot_template(&spec.robot_model, &spec.joint_state, 0)?;
    let params = SearchParams::default();

    let robot_box = surface.bounding_box().expect("robot surface is not empty");
    let candidates = search_candidates(&strip_floor(&mesh_cloud(&mesh)), &surface, &robot_box, &params)?;
    println!("true robot box center {:.3?}", truth.robot_box.center().as_slice());
    for c in &candidates {
        println!("  window center {:.3?} score {:.3}", c.bbox.center().as_slice(), c.score);
    }

    let start = std::time::Instant::now();
    let r = reference_auto(&mesh, &spec.robot_model, &spec.joint_state, &params, &IcpParams::default(), 0)?;
    let (dt, dr) = reference_error(&r, &truth);
    println!(
        "referenced in {:.2} s: rmse {:.2} mm, inliers {:.0}%, error {:.2} mm / {:.3} deg",
        start.elapsed().as_secs_f64(),
        r.quality.rmse * 1e3,
        r.quality.inlier_fraction * 100.0,
        dt * 1e3,
        dr.to_degrees()
    );
    Ok(())
}
