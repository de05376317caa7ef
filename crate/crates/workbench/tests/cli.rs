mod common;

use std::collections::BTreeMap;
use std::path::Path;

use arcell::cli::load_session;
use arcell::persist::{self, content_hash};
use arcell::session::Stage;
use common::{arcell, cli_pipeline, write_inputs, PIPELINE_ARTIFACTS};

fn hashes(dir: &Path) -> BTreeMap<&'static str, String> {
    PIPELINE_ARTIFACTS.iter().map(|n| (*n, persist::file_hash(dir.join(n)).unwrap())).collect()
}

#[test]
fn pipeline_artifacts_are_hash_stable() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert_eq!(cli_pipeline(a.path()), vec![0; 5]);
    assert_eq!(cli_pipeline(b.path()), vec![0; 5]);
    assert_eq!(hashes(&a.path().join("cell")), hashes(&b.path().join("cell")));
    let s = load_session(&a.path().join("cell")).unwrap();
    assert_eq!(s.stage, Stage::Interaction);
}

#[test]
fn a_different_seed_changes_the_scene() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for (dir, seed) in [(&a, "1"), (&b, "2")] {
        let (code, _, _) = arcell(&["simulate", "--out", dir.path().to_str().unwrap(), "--seed", seed]);
        assert_eq!(code, 0);
    }
    assert_ne!(persist::file_hash(a.path().join("mesh.obj")).unwrap(), persist::file_hash(b.path().join("mesh.obj")).unwrap());
}

#[test]
fn steps_out_of_order_fail_with_exit_1() {
    let root = tempfile::tempdir().unwrap();
    let (_, program) = write_inputs(root.path());
    let cell = root.path().join("cell");
    let d = cell.to_str().unwrap();
    assert_eq!(arcell(&["simulate", "--out", d]).0, 0);

    let (code, _, err) = arcell(&["plan", "--scene", d, "--program", &program]);
    assert_eq!(code, 1);
    assert!(err.contains("referencing"), "{err}");

    let (code, _, err) = arcell(&["map", "--scene", d]);
    assert_eq!(code, 1);
    assert!(err.contains("referencing"), "{err}");

    let (code, _, err) = arcell(&["execute", "--scene", d]);
    assert_eq!(code, 1);
    assert!(err.contains("referencing"), "{err}");

    // nothing was written by the failed steps
    assert!(!cell.join("referencing.json").exists());
    assert!(!cell.join("program.json").exists());

    let (code, _, err) = arcell(&["map", "--scene", root.path().join("missing").to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("simulate"), "{err}");
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(arcell(&["frobnicate"]).0, 2);
    assert_eq!(arcell(&["simulate"]).0, 2);
    assert_eq!(arcell(&["map", "--resolution", "fine"]).0, 2);
    assert_eq!(arcell(&[]).0, 2);
}

#[test]
fn every_subcommand_has_help() {
    for sub in ["simulate", "reference", "autoref", "map", "plan", "execute", "fuse", "serve"] {
        let (code, out, _) = arcell(&[sub, "--help"]);
        assert_eq!(code, 0, "{sub}");
        assert!(out.contains("Usage"), "{sub}: {out}");
    }
}

#[test]
fn fuse_writes_a_deterministic_log() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, filter: &str| {
        let out = dir.path().join(name);
        let (code, _, err) = arcell(&["fuse", "--filter", filter, "--seed", "5", "--out", out.to_str().unwrap()]);
        assert_eq!(code, 0, "{err}");
        std::fs::read(out).unwrap()
    };
    let a = run("a.csv", "kalman");
    assert_eq!(a, run("b.csv", "kalman"));
    assert_ne!(content_hash(&a), content_hash(&run("c.csv", "complementary")));
    let text = String::from_utf8(a).unwrap();
    assert!(text.lines().count() > 100);
}

#[test]
fn autoref_registers_the_demo_cell() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(arcell(&["simulate", "--out", d]).0, 0);
    let (code, out, err) = arcell(&["autoref", "--scene", d]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("error vs ground truth"), "{out}");
    let s = load_session(dir.path()).unwrap();
    assert_eq!(s.stage, Stage::Setup);
    let truth: arcell::sim::GroundTruth = persist::load_json(dir.path().join("truth.json")).unwrap();
    let (dt, dr) = arcell::pipeline::reference_error(s.referencing.as_ref().unwrap(), &truth);
    assert!(dt < 0.01 && dr < 2f64.to_radians(), "{dt} {dr}");
}
