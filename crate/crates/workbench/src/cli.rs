//! The `arcell` command line.
//!
//! Every subcommand works on a scene directory holding the artifacts of earlier steps:
//!
//! | file | written by |
//! |------|------------|
//! | `spec.json`, `mesh.obj`, `cell.json`, `truth.json` | `simulate` |
//! | `referencing.json` | `reference`, `autoref` |
//! | `octree.json`, `scene.json` | `map` |
//! | `program.json`, `trajectory.csv` | `plan` |
//! | `execution.csv` | `execute` |
//! | `session.json` | every step after `simulate` |

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use arcell_core::autoref::SearchParams;
use arcell_core::geom::{Pose, RigidTransform};
use arcell_core::kin::robot_model;
use arcell_core::program::{virtual_execute, PlannerParams};
use arcell_core::registration::IcpParams;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::hands::{fusion_log_csv, run_fusion, simulate_hand_session, FilterKind, HandSessionSpec};
use crate::persist::{self, CellInfo, ProgramFile, SceneFile, ZoneSet};
use crate::pipeline::{self, MapParams};
use crate::session::{Event, SessionState};
use crate::sim::{generate_scene, GroundTruth, SceneSpec};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "arcell", version, about = "Robot work-cell referencing, mapping, programming and fusion")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic cell mesh with ground truth.
    Simulate {
        /// Scene spec (JSON); the built-in demo cell if omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the spec seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Register the robot from a seed pose.
    Reference {
        #[arg(long, default_value = ".")]
        scene: PathBuf,
        /// Seeded (semi-automatic) referencing; the only mode of this subcommand.
        #[arg(long)]
        semi: bool,
        /// Seed hologram pose (JSON position + quaternion), `world_from_robot`.
        #[arg(long)]
        seed_pose: PathBuf,
        #[command(flatten)]
        icp: IcpArgs,
        /// Seed of the robot surface sampling.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Find and register the robot without a seed.
    Autoref {
        #[arg(long, default_value = ".")]
        scene: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        icp: IcpArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Build the occupancy map and planning scene.
    Map {
        #[arg(long, default_value = ".")]
        scene: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        resolution: f64,
        #[arg(long, default_value_t = 0.05)]
        clearance: f64,
        /// Voxel filter cell applied before mapping; 0 disables it.
        #[arg(long, default_value_t = 0.01)]
        filter_cell: f64,
        /// Safety zones file.
        #[arg(long)]
        zones: Option<PathBuf>,
    },
    /// Plan a waypoint program.
    Plan {
        #[arg(long, default_value = ".")]
        scene: PathBuf,
        #[arg(long)]
        program: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.01)]
        clearance: f64,
        #[arg(long, default_value_t = 4000)]
        max_nodes: usize,
    },
    /// Replay the planned trajectory on the virtual robot.
    Execute {
        #[arg(long, default_value = ".")]
        scene: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        dt: f64,
    },
    /// Simulate a hand session and run a fusion filter over it.
    Fuse {
        /// Hand session spec (JSON); defaults if omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = FilterArg::Kalman)]
        filter: FilterArg,
        /// Crossover gain of the complementary filter.
        #[arg(long, default_value_t = 0.1)]
        gain: f64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the HTTP/WebSocket service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
        /// Directory for saved sessions.
        #[arg(long, default_value = "sessions")]
        sessions: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FilterArg {
    Kalman,
    Complementary,
}

#[derive(Debug, Args)]
pub struct IcpArgs {
    #[arg(long, default_value_t = IcpParams::default().max_iterations)]
    pub max_iterations: usize,
    #[arg(long, default_value_t = IcpParams::default().max_correspondence_distance)]
    pub max_correspondence_distance: f64,
    #[arg(long, default_value_t = IcpParams::default().convergence_tolerance)]
    pub convergence_tolerance: f64,
    #[arg(long, default_value_t = IcpParams::default().min_inlier_fraction)]
    pub min_inlier_fraction: f64,
}

impl From<&IcpArgs> for IcpParams {
    fn from(a: &IcpArgs) -> Self {
        IcpParams {
            max_iterations: a.max_iterations,
            max_correspondence_distance: a.max_correspondence_distance,
            convergence_tolerance: a.convergence_tolerance,
            min_inlier_fraction: a.min_inlier_fraction,
        }
    }
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long, default_value_t = SearchParams::default().n_slices)]
    pub n_slices: usize,
    /// Window stride (m); a quarter of the smallest horizontal window extent if omitted.
    #[arg(long)]
    pub stride: Option<f64>,
    #[arg(long, default_value_t = SearchParams::default().dilation)]
    pub dilation: f64,
    /// Descriptor weights: centroid, eigenvalues, eigenvectors, slices.
    #[arg(long, value_delimiter = ',', num_args = 4, default_values_t = SearchParams::default().weights)]
    pub weights: Vec<f64>,
    #[arg(long, default_value_t = SearchParams::default().top_k)]
    pub top_k: usize,
}

impl From<&SearchArgs> for SearchParams {
    fn from(a: &SearchArgs) -> Self {
        let mut weights = [0.0; 4];
        weights.copy_from_slice(&a.weights);
        SearchParams { n_slices: a.n_slices, stride: a.stride, dilation: a.dilation, weights, top_k: a.top_k }
    }
}

/// Parses `args` (program name first), runs the command and returns the process exit code:
/// 0 on success, 1 on a domain error, 2 on a usage error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn file(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

fn require_file(dir: &Path, name: &str, produced_by: &str) -> Result<PathBuf> {
    let p = file(dir, name);
    if p.exists() {
        Ok(p)
    } else {
        Err(arcell_core::Error::InvalidParameter(format!("{} not found (run `arcell {produced_by}` first)", p.display())).into())
    }
}

/// Rebuilds the session from the artifacts present in `dir`.
pub fn load_session(dir: &Path) -> Result<SessionState> {
    let cell: CellInfo = persist::load_json(require_file(dir, "cell.json", "simulate")?)?;
    let mut s = SessionState::new(cell.robot_model, cell.joint_state);
    if let Ok(p) = require_file(dir, "referencing.json", "reference") {
        s.apply(Event::Referenced(persist::load_json(p)?))?;
        if let Ok(p) = require_file(dir, "scene.json", "map") {
            s.apply(Event::SceneReady(persist::load_json::<SceneFile>(p)?.scene))?;
            if let Ok(p) = require_file(dir, "program.json", "plan") {
                s.apply(Event::ProgramEdited(persist::load_json::<ProgramFile>(p)?.program))?;
                if let Ok(p) = require_file(dir, "trajectory.csv", "plan") {
                    s.apply(Event::Planned(persist::load_trajectory(p)?))?;
                }
            }
        }
    }
    Ok(s)
}

/// Writes the session's artifacts to `dir` and removes those it no longer has.
fn sync_artifacts(dir: &Path, s: &SessionState) -> Result<()> {
    match &s.referencing {
        Some(r) => persist::save_json(r, file(dir, "referencing.json"))?,
        None => remove_if_present(&file(dir, "referencing.json"))?,
    }
    match &s.scene {
        Some(scene) => {
            persist::save_json(&scene.octree, file(dir, "octree.json"))?;
            persist::save_json(&SceneFile { units: Default::default(), scene: scene.clone() }, file(dir, "scene.json"))?;
        }
        None => {
            remove_if_present(&file(dir, "octree.json"))?;
            remove_if_present(&file(dir, "scene.json"))?;
        }
    }
    match &s.program {
        Some(program) => {
            persist::save_json(&ProgramFile { units: Default::default(), program: program.clone() }, file(dir, "program.json"))?
        }
        None => remove_if_present(&file(dir, "program.json"))?,
    }
    match &s.trajectory {
        Some(t) => persist::save_trajectory(t, file(dir, "trajectory.csv"))?,
        None => remove_if_present(&file(dir, "trajectory.csv"))?,
    }
    // execution output always belongs to an earlier trajectory
    remove_if_present(&file(dir, "execution.csv"))?;
    persist::save_json(s, file(dir, "session.json"))
}

fn truth_of(dir: &Path) -> Option<GroundTruth> {
    persist::load_json(file(dir, "truth.json")).ok()
}

fn report_referencing(dir: &Path, r: &arcell_core::registration::Referencing) {
    println!(
        "referencing: rmse {:.5} m, inlier fraction {:.3}, {} iterations",
        r.quality.rmse, r.quality.inlier_fraction, r.quality.iterations
    );
    if let Some(truth) = truth_of(dir) {
        let (dt, dr) = pipeline::reference_error(r, &truth);
        println!("error vs ground truth: {:.2} mm, {:.3} deg", dt * 1e3, dr.to_degrees());
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Simulate { spec, out, seed } => {
            let mut spec = match spec {
                Some(p) => load_spec(&p)?,
                None => SceneSpec::demo(),
            };
            if let Some(seed) = seed {
                spec.seed = seed;
            }
            let (mesh, truth) = generate_scene(&spec)?;
            std::fs::create_dir_all(&out)?;
            persist::save_json(&spec, file(&out, "spec.json"))?;
            persist::save_mesh(&mesh, file(&out, "mesh.obj"))?;
            persist::save_json(&truth, file(&out, "truth.json"))?;
            let cell = CellInfo { robot_model: spec.robot_model.clone(), joint_state: spec.joint_state.clone() };
            persist::save_json(&cell, file(&out, "cell.json"))?;
            println!("{} vertices, {} triangles -> {}", mesh.vertices.len(), mesh.triangles.len(), out.display());
        }
        Command::Reference { scene, semi: _, seed_pose, icp, seed } => {
            let mut s = load_session(&scene)?;
            let mesh = persist::load_mesh(require_file(&scene, "mesh.obj", "simulate")?)?;
            let pose: Pose = serde_json::from_str(&std::fs::read_to_string(&seed_pose)?)?;
            let seed_pose = RigidTransform::from(&pose);
            let r = pipeline::reference_semi(&mesh, &s.robot_model, &s.joint_state, &seed_pose, &(&icp).into(), seed)?;
            report_referencing(&scene, &r);
            s.apply(Event::Referenced(r))?;
            sync_artifacts(&scene, &s)?;
        }
        Command::Autoref { scene, search, icp, seed } => {
            let mut s = load_session(&scene)?;
            let mesh = persist::load_mesh(require_file(&scene, "mesh.obj", "simulate")?)?;
            let r = pipeline::reference_auto(&mesh, &s.robot_model, &s.joint_state, &(&search).into(), &(&icp).into(), seed)?;
            report_referencing(&scene, &r);
            s.apply(Event::Referenced(r))?;
            sync_artifacts(&scene, &s)?;
        }
        Command::Map { scene, resolution, clearance, filter_cell, zones } => {
            let mut s = load_session(&scene)?;
            s.require("map", crate::session::Stage::Setup)?;
            let mesh = persist::load_mesh(require_file(&scene, "mesh.obj", "simulate")?)?;
            let zones = match zones {
                Some(p) => persist::load_json::<ZoneSet>(p)?.zones,
                None => Vec::new(),
            };
            let params = MapParams {
                resolution,
                clearance,
                filter_cell: (filter_cell > 0.0).then_some(filter_cell),
                ..MapParams::default()
            };
            let chain = robot_model(&s.robot_model)?;
            let referencing = s.referencing.clone().expect("checked by require");
            let planning = pipeline::build_scene(&mesh, &chain, &s.joint_state, &referencing, zones, &params)?;
            println!("{} occupied voxels, {} zones", planning.octree.len(), planning.zones.len());
            s.apply(Event::SceneReady(planning))?;
            sync_artifacts(&scene, &s)?;
        }
        Command::Plan { scene, program, seed, clearance, max_nodes } => {
            let mut s = load_session(&scene)?;
            let program = persist::load_json::<ProgramFile>(&program)?.program;
            s.apply(Event::ProgramEdited(program.clone()))?;
            let chain = robot_model(&s.robot_model)?;
            let params = PlannerParams { seed, safety_clearance: clearance, max_nodes, ..PlannerParams::default() };
            let traj = pipeline::plan(&chain, &s.joint_state, &program, s.scene.as_ref().expect("stage checked"), &params)?;
            println!("{} samples, {:.3} s", traj.len(), traj.duration());
            s.apply(Event::Planned(traj))?;
            sync_artifacts(&scene, &s)?;
        }
        Command::Execute { scene, dt } => {
            let s = load_session(&scene)?;
            s.require("execute", crate::session::Stage::Interaction)?;
            let frames = virtual_execute(s.trajectory.as_ref().expect("stage checked"), dt)?;
            let traj = arcell_core::program::JointTrajectory {
                samples: frames
                    .iter()
                    .map(|f| arcell_core::program::TrajectorySample { t: f.t, q: f.q.clone(), speed_scale: f.speed_scale })
                    .collect(),
            };
            persist::save_trajectory(&traj, file(&scene, "execution.csv"))?;
            println!("{} frames, {:.3} s", frames.len(), frames.last().map_or(0.0, |f| f.t));
        }
        Command::Fuse { spec, filter, gain, seed, out } => {
            let mut spec = match spec {
                Some(p) => serde_json::from_str::<HandSessionSpec>(&std::fs::read_to_string(p)?)?,
                None => HandSessionSpec::default(),
            };
            if let Some(seed) = seed {
                spec.seed = seed;
            }
            let session = simulate_hand_session(&spec)?;
            let kind = match filter {
                FilterArg::Kalman => FilterKind::default(),
                FilterArg::Complementary => FilterKind::Complementary { gain },
            };
            let rows = run_fusion(&session, &kind, (spec.observation_noise_std.max(1e-3), 0.05, 0.1))?;
            std::fs::write(&out, fusion_log_csv(&rows))?;
            let rms = (rows.iter().map(|r| r.error().powi(2)).sum::<f64>() / rows.len().max(1) as f64).sqrt();
            println!("{} steps, {} observations, rms error {:.2} mm", rows.len(), session.observations.len(), rms * 1e3);
        }
        Command::Serve { addr, sessions } => {
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(crate::service::serve(&addr, sessions))?;
        }
    }
    Ok(())
}

fn load_spec(path: &Path) -> Result<SceneSpec> {
    let text = std::fs::read_to_string(path)?;
    // a versioned document or a bare spec
    persist::from_json(&text).or_else(|_| Ok::<_, Error>(serde_json::from_str(&text)?))
}

fn remove_if_present(path: &Path) -> Result<()> {
    match std::fs::remove_file(path) {
        Err(e) if e.kind() != std::io::ErrorKind::NotFound => Err(e.into()),
        _ => Ok(()),
    }
}
