//! Programs two waypoints in the demo cell, plans a collision-free loop and replays it.

use arcell::pipeline::{build_scene, plan, reference_semi, MapParams};
use arcell::sim::{generate_scene, SceneSpec};
use arcell_core::kin::{fk, robot_model, JointState};
use arcell_core::program::{revalidate, virtual_execute, PlannerParams, Waypoint, WaypointProgram};
use arcell_core::registration::IcpParams;

fn main() -> arcell::Result<()> {
    let spec = SceneSpec::demo();
    let (mesh, truth) = generate_scene(&spec)?;
    let chain = robot_model(&spec.robot_model)?;
    let q0 = spec.joint_state.clone();
    let referencing = reference_semi(&mesh, &spec.robot_model, &q0, &truth.world_from_robot, &IcpParams::default(), 0)?;
    let scene = build_scene(&mesh, &chain, &q0, &referencing, Vec::new(), &MapParams::default())?;

    // targets taken from poses the arm can reach on either side
    let mut program = WaypointProgram { looped: true, ..Default::default() };
    for (id, q) in [("pick", [-0.9, 0.7, 0.2, 0.0, 0.6, 0.0]), ("place", [0.9, 0.5, 0.4, 0.0, 0.6, 0.0])] {
        let tool = *fk(&chain, &JointState::new(q.to_vec()))?.last().expect("tool frame");
        program.add(Waypoint::free_space(id, tool), None)?;
    }

    let params = PlannerParams::default();
    let start = std::time::Instant::now();
    let traj = plan(&chain, &q0, &program, &scene, &params)?;
    println!(
        "planned {} samples, {:.2} s of motion, in {:.2} s",
        traj.len(),
        traj.duration(),
        start.elapsed().as_secs_f64()
    );
    let bad = revalidate(&chain, &traj, &scene, params.safety_clearance, params.check_step / 10.0)?;
    println!("10x finer revalidation: {}", if bad.is_none() { "clear" } else { "collision" });

    let frames = virtual_execute(&traj, 0.05)?;
    let last = frames.last().expect("at least one frame");
    println!("executed {} frames at 20 Hz, ending at t = {:.2} s", frames.len(), last.t);
    Ok(())
}
