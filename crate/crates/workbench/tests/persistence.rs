mod common;

use arcell::persist::{self, content_hash, from_json, to_json, CellInfo, ProgramFile, SceneFile, ZoneSet};
use arcell::pipeline::{build_scene, plan, reference_semi, MapParams};
use arcell::service::SessionBundle;
use arcell::session::{Event, SessionState};
use arcell::sim::{generate_scene, SceneSpec};
use arcell_core::envmap::{OccupancyOctree, SafetyZone, ZoneMode};
use arcell_core::geom::{sample_mesh_surface, RigidTransform};
use arcell_core::kin::robot_model;
use arcell_core::program::{JointTrajectory, PlannerParams};
use arcell_core::registration::{IcpParams, Referencing};
use nalgebra::Vector3;

/// Demo cell taken through referencing, mapping and planning.
fn planned_session() -> (SessionBundle, JointTrajectory) {
    let spec = SceneSpec::demo();
    let (mesh, truth) = generate_scene(&spec).unwrap();
    let chain = robot_model(&spec.robot_model).unwrap();
    let r = reference_semi(&mesh, &spec.robot_model, &spec.joint_state, &common::demo_seed(), &IcpParams::default(), 0).unwrap();
    let zones = vec![SafetyZone {
        id: "walkway".into(),
        pose: RigidTransform::from_translation(Vector3::new(-0.2, -0.9, 0.5)),
        half_extents: Vector3::new(0.3, 0.2, 0.5),
        mode: ZoneMode::Forbidden,
        margin: 0.02,
    }];
    let scene = build_scene(&mesh, &chain, &spec.joint_state, &r, zones, &MapParams::default()).unwrap();
    let program = common::demo_program();
    let traj = plan(&chain, &spec.joint_state, &program, &scene, &PlannerParams::default()).unwrap();
    let mut state = SessionState::new(spec.robot_model.clone(), spec.joint_state.clone());
    for e in [Event::Referenced(r), Event::SceneReady(scene), Event::ProgramEdited(program), Event::Planned(traj.clone())] {
        state.apply(e).unwrap();
    }
    (SessionBundle { state, mesh, truth: Some(truth) }, traj)
}

/// Checks the waypoint poses agree to rounding, then copies them over for exact comparison.
fn assert_programs_close(back: &mut SessionState, orig: &SessionState) {
    let (a, b) = (back.program.as_mut().unwrap(), orig.program.as_ref().unwrap());
    for (x, y) in a.waypoints.iter_mut().zip(&b.waypoints) {
        let (dt, dr) = x.target.error_to(&y.target);
        assert!(dt == 0.0 && dr < 1e-14);
        x.target = y.target;
    }
}

#[test]
fn geometry_files_round_trip_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let (mesh, _) = generate_scene(&SceneSpec::demo()).unwrap();
    persist::save_mesh(&mesh, dir.path().join("m.obj")).unwrap();
    assert_eq!(persist::load_mesh(dir.path().join("m.obj")).unwrap(), mesh);

    let cloud = sample_mesh_surface(&mesh, 5000.0, 3).unwrap();
    persist::save_cloud(&cloud, dir.path().join("c.ply")).unwrap();
    assert_eq!(persist::load_cloud(dir.path().join("c.ply")).unwrap().points, cloud.points);
}

#[test]
fn pipeline_artifacts_round_trip_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let (bundle, traj) = planned_session();
    let s = &bundle.state;

    persist::save_trajectory(&traj, dir.path().join("t.csv")).unwrap();
    assert_eq!(persist::load_trajectory(dir.path().join("t.csv")).unwrap(), traj);

    let r = s.referencing.clone().unwrap();
    assert_eq!(from_json::<Referencing>(&to_json(&r).unwrap()).unwrap(), r);
    let scene = s.scene.clone().unwrap();
    assert_eq!(from_json::<OccupancyOctree>(&to_json(&scene.octree).unwrap()).unwrap(), scene.octree);
    let file = SceneFile { units: Default::default(), scene: scene.clone() };
    assert_eq!(from_json::<SceneFile>(&to_json(&file).unwrap()).unwrap(), file);
    let zones = ZoneSet { units: Default::default(), zones: scene.zones.clone() };
    assert_eq!(from_json::<ZoneSet>(&to_json(&zones).unwrap()).unwrap(), zones);
    // waypoint poses are stored as quaternions, exact up to the conversion
    let program = ProgramFile { units: Default::default(), program: s.program.clone().unwrap() };
    let text = to_json(&program).unwrap();
    let back = from_json::<ProgramFile>(&text).unwrap();
    for (a, b) in back.program.waypoints.iter().zip(&program.program.waypoints) {
        let (dt, dr) = a.target.error_to(&b.target);
        assert!(dt == 0.0 && dr < 1e-14);
    }
    assert_eq!(back.program.waypoints.len(), program.program.waypoints.len());
    assert_eq!((back.program.speed, back.program.looped), (program.program.speed, program.program.looped));
    let mut back = from_json::<SessionState>(&to_json(s).unwrap()).unwrap();
    assert_programs_close(&mut back, s);
    assert_eq!(back, *s);
    let cell = CellInfo { robot_model: s.robot_model.clone(), joint_state: s.joint_state.clone() };
    assert_eq!(from_json::<CellInfo>(&to_json(&cell).unwrap()).unwrap(), cell);

    persist::save_json(&bundle, dir.path().join("b.json")).unwrap();
    let mut back = persist::load_json::<SessionBundle>(dir.path().join("b.json")).unwrap();
    assert_programs_close(&mut back.state, &bundle.state);
    assert_eq!(back, bundle);
}

#[test]
fn documents_carry_version_and_kind() {
    let spec = SceneSpec::demo();
    let text = to_json(&spec).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["version"], 1);
    assert_eq!(v["kind"], "scene_spec");
    // poses are stored as quaternions, exact up to the conversion
    let mut back = from_json::<SceneSpec>(&text).unwrap();
    let (dt, dr) = back.true_robot_pose.error_to(&spec.true_robot_pose);
    assert!(dt == 0.0 && dr < 1e-15);
    back.true_robot_pose = spec.true_robot_pose;
    assert_eq!(back, spec);

    let newer = text.replacen("\"version\": 1", "\"version\": 2", 1);
    let err = from_json::<SceneSpec>(&newer).unwrap_err();
    assert!(matches!(err, arcell::Error::Core(arcell_core::Error::Version { found: 2, expected: 1 })), "{err}");

    let other_kind = to_json(&CellInfo { robot_model: "x".into(), joint_state: spec.joint_state.clone() }).unwrap();
    assert!(matches!(from_json::<SceneSpec>(&other_kind), Err(arcell::Error::Core(arcell_core::Error::Parse { .. }))));
    assert!(from_json::<SceneSpec>("[1, 2]").is_err());
    assert!(from_json::<SceneSpec>("{\"kind\": \"scene_spec\"}").is_err());
}

#[test]
fn content_hash_ignores_timestamps_only() {
    let (bundle, _) = planned_session();
    let r = bundle.state.referencing.unwrap();
    let mut later = r.clone();
    later.created_at += 3600;
    let h = content_hash(to_json(&r).unwrap().as_bytes());
    assert_eq!(h, content_hash(to_json(&later).unwrap().as_bytes()));
    // key order and whitespace do not matter either
    let compact = serde_json::to_string(&serde_json::from_str::<serde_json::Value>(&to_json(&r).unwrap()).unwrap()).unwrap();
    assert_eq!(h, content_hash(compact.as_bytes()));
    let mut moved = r.clone();
    moved.robot_from_world.translation.x += 1e-9;
    assert_ne!(h, content_hash(to_json(&moved).unwrap().as_bytes()));
    // non-JSON bytes hash as they are
    assert_ne!(content_hash(b"a,b\n1,2\n"), content_hash(b"a,b\n1,3\n"));
}
