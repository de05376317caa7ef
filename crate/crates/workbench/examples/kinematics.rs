//! Inverse kinematics on the 6-axis arm and hand guidance on the planar 2R arm.

use arcell_core::geom::RigidTransform;
use arcell_core::kin::{fk, grab_detect, hand_guidance_step, ik_solve, robot_model, Grab, GuidanceParams, IkParams, JointState};
use nalgebra::Vector3;

fn main() -> arcell::Result<()> {
    let arm = robot_model("kr6_like")?;
    let q_true = JointState::new(vec![0.4, 0.5, 0.2, -0.3, 0.7, 0.1]);
    let target: RigidTransform = *fk(&arm, &q_true)?.last().expect("tool frame");
    let sol = ik_solve(&arm, &target, &JointState::zeros(arm.dof()), &IkParams::default())?;
    println!(
        "ik: converged {} in {} iterations, errors {:.2e} m / {:.2e} rad",
        sol.converged, sol.iterations, sol.position_error, sol.orientation_error
    );
    println!("    q = {:.3?}", sol.q.q.as_slice());

    let planar = robot_model("planar_2r")?;
    let mut q = JointState::zeros(2);
    let frames = fk(&planar, &q)?;
    // grab the forearm halfway along and drag it sideways in small steps
    let hand = frames[1].apply(&Vector3::new(0.5, 0.0, 0.0));
    let link = grab_detect(&planar, &q, &hand)?.expect("hand touches the arm");
    println!("guidance: grabbed link {link}");
    let mut point = hand;
    for _ in 0..5 {
        let delta = Vector3::new(0.0, 0.02, 0.0);
        let out = hand_guidance_step(&planar, &q, &Grab { link, point }, &delta, &GuidanceParams::default())?;
        q = out.q;
        point += delta;
        println!("    q = {:.4?}, residual {:.2e} m", q.q.as_slice(), out.residual.norm());
    }
    Ok(())
}
