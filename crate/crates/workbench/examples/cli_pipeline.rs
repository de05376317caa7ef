//! Runs the `arcell` command line end to end in a scratch directory:
//! simulate → reference → map → plan → execute, then prints the artifact hashes.

use arcell::cli::run;
use arcell::persist::{self, ProgramFile};
use arcell::sim::SceneSpec;
use arcell_core::geom::{Pose, RigidTransform};
use arcell_core::kin::{fk, robot_model, JointState};
use arcell_core::program::{Waypoint, WaypointProgram};
use nalgebra::Vector3;

fn arcell(args: &[&str]) {
    println!("$ arcell {}", args.join(" "));
    let code = run(std::iter::once("arcell").chain(args.iter().copied()));
    assert_eq!(code, 0, "arcell {} failed", args[0]);
}

fn main() -> arcell::Result<()> {
    // inputs live next to the cell directory; the cell directory holds only artifacts
    let inputs = std::env::temp_dir().join("arcell-cli-example");
    let dir = inputs.join("cell");
    std::fs::create_dir_all(&dir)?;
    let d = dir.to_str().expect("utf-8 temp path");

    // seed hologram a little off the true robot pose
    let seed = RigidTransform::from_translation(Vector3::new(0.05, 0.02, 0.0)).compose(&SceneSpec::demo().true_robot_pose);
    let seed_path = inputs.join("seed.json");
    std::fs::write(&seed_path, serde_json::to_string(&Pose::from(&seed))?)?;

    let chain = robot_model("kr6_like")?;
    let mut program = WaypointProgram::default();
    for (id, q) in [("left", [-0.8, 0.6, 0.3, 0.0, 0.6, 0.0]), ("right", [0.7, 0.5, 0.4, 0.0, 0.5, 0.0])] {
        program.add(Waypoint::free_space(id, *fk(&chain, &JointState::new(q.to_vec()))?.last().expect("tool")), None)?;
    }
    let program_path = inputs.join("program.json");
    persist::save_json(&ProgramFile { units: Default::default(), program }, &program_path)?;

    arcell(&["simulate", "--out", d]);
    arcell(&["reference", "--scene", d, "--semi", "--seed-pose", seed_path.to_str().expect("utf-8")]);
    arcell(&["map", "--scene", d]);
    arcell(&["plan", "--scene", d, "--program", program_path.to_str().expect("utf-8")]);
    arcell(&["execute", "--scene", d]);

    for name in ["referencing.json", "octree.json", "trajectory.csv", "execution.csv"] {
        println!("{name:>16}  {}", persist::file_hash(dir.join(name))?);
    }
    Ok(())
}
