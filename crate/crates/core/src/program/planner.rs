use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::WaypointProgram;
use crate::envmap::{collides, in_collision, PlanningScene};
use crate::geom::RigidTransform;
use crate::kin::{fk, ik_solve, IkParams, JointKind, JointState, KinematicChain};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerParams {
    pub ik: IkParams,
    /// Inflation of every link capsule during collision checks (m).
    pub safety_clearance: f64,
    /// Largest joint change between collision-checked configurations (rad or m).
    pub check_step: f64,
    /// RRT extension length (joint-space L2).
    pub rrt_step: f64,
    /// Node budget shared by both RRT trees.
    pub max_nodes: usize,
    pub shortcut_attempts: usize,
    /// Joint speed cap used for time parameterization (rad/s or m/s).
    pub max_joint_velocity: f64,
    /// Largest joint change between emitted trajectory samples.
    pub sample_step: f64,
    pub seed: u64,
}

impl Default for PlannerParams {
    fn default() -> Self {
        Self {
            ik: IkParams::default(),
            safety_clearance: 0.01,
            check_step: 0.01,
            rrt_step: 0.3,
            max_nodes: 4000,
            shortcut_attempts: 100,
            max_joint_velocity: 1.0,
            sample_step: 0.05,
            seed: 0,
        }
    }
}

impl PlannerParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.check_step, self.rrt_step, self.max_joint_velocity, self.sample_step];
        if positive.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::invalid("planner steps and velocity must be > 0"));
        }
        if !(self.safety_clearance >= 0.0) {
            return Err(Error::invalid("safety clearance must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub q: JointState,
    /// Speed factor from reduced-speed zones overlapped at this sample.
    pub speed_scale: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct JointTrajectory {
    pub samples: Vec<TrajectorySample>,
}

impl JointTrajectory {
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn duration(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    /// `t,q1..qn,speed_scale` with one row per sample.
    pub fn to_csv(&self) -> String {
        let n = self.samples.first().map_or(0, |s| s.q.len());
        let mut out = String::from("t");
        for i in 1..=n {
            out.push_str(&format!(",q{i}"));
        }
        out.push_str(",speed_scale\n");
        for s in &self.samples {
            out.push_str(&format!("{:?}", s.t));
            for v in &s.q.q {
                out.push_str(&format!(",{v:?}"));
            }
            out.push_str(&format!(",{:?}\n", s.speed_scale));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "missing header"))?;
        let cols = header.split(',').count();
        if cols < 3 {
            return Err(Error::parse(1, "expected t, joint columns and speed_scale"));
        }
        let mut samples = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::parse(i + 1, e.to_string()))?;
            if vals.len() != cols {
                return Err(Error::parse(i + 1, format!("expected {cols} columns")));
            }
            samples.push(TrajectorySample {
                t: vals[0],
                q: JointState::new(vals[1..cols - 1].to_vec()),
                speed_scale: vals[cols - 1],
            });
        }
        Ok(Self { samples })
    }
}

fn linf(a: &JointState, b: &JointState) -> f64 {
    a.q.iter().zip(&b.q).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn l2(a: &JointState, b: &JointState) -> f64 {
    a.q.iter().zip(&b.q).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn lerp(a: &JointState, b: &JointState, s: f64) -> JointState {
    JointState::new(a.q.iter().zip(&b.q).map(|(x, y)| x + (y - x) * s).collect())
}

/// Continuous collision checking of straight joint-space motions.
///
/// Between two checked configurations no capsule point moves farther than
/// `Σⱼ |Δqⱼ|·rⱼ / 2` from the nearer one, where `rⱼ` bounds the distance from joint `j` to
/// any capsule axis point it carries (1 for prismatic joints). Checking samples with the
/// clearance inflated by that bound therefore covers the whole motion. Samples failing only
/// the inflated test get their neighbourhood re-checked with finer steps.
pub struct MotionChecker<'a> {
    pub chain: &'a KinematicChain,
    pub scene: &'a PlanningScene,
    pub clearance: f64,
    pub step: f64,
    lever: Vec<f64>,
}

impl<'a> MotionChecker<'a> {
    pub fn new(chain: &'a KinematicChain, scene: &'a PlanningScene, clearance: f64, step: f64) -> Self {
        let n = chain.dof();
        let mut lever = vec![0.0; n];
        for (j, lv) in lever.iter_mut().enumerate() {
            if chain.joints[j].kind == JointKind::Prismatic {
                *lv = 1.0;
                continue;
            }
            // distance along the chain from joint j to the origin of link k, then the capsule extent
            let mut offset = 0.0;
            let mut worst: f64 = 0.0;
            for k in j..n {
                if k > j {
                    offset += chain.joints[k].origin.translation.norm();
                    if chain.joints[k].kind == JointKind::Prismatic {
                        let (lo, hi) = chain.joints[k].limits;
                        offset += lo.abs().max(hi.abs());
                    }
                }
                for c in &chain.joints[k].link.capsules {
                    worst = worst.max(offset + c.p0.norm().max(c.p1.norm()));
                }
            }
            *lv = worst;
        }
        Self { chain, scene, clearance, step, lever }
    }

    pub fn config_free(&self, q: &JointState) -> Result<bool> {
        Ok(!in_collision(self.chain, q, self.scene, self.clearance)?)
    }

    fn margin(&self, a: &JointState, b: &JointState) -> f64 {
        a.q.iter().zip(&b.q).zip(&self.lever).map(|((x, y), r)| (x - y).abs() * r).sum::<f64>() * 0.5
    }

    /// True if every configuration on the segment `a → b` is collision free. Both ends are
    /// assumed to be free at the plain clearance.
    pub fn motion_free(&self, a: &JointState, b: &JointState) -> Result<bool> {
        self.motion_free_at(a, b, self.step, 0)
    }

    fn motion_free_at(&self, a: &JointState, b: &JointState, step: f64, depth: usize) -> Result<bool> {
        let n = ((linf(a, b) / step).ceil() as usize).max(1);
        let m = self.margin(a, &lerp(a, b, 1.0 / n as f64));
        let mut suspect = Vec::new();
        for i in 0..=n {
            let q = lerp(a, b, i as f64 / n as f64);
            if !in_collision(self.chain, &q, self.scene, self.clearance + m)? {
                continue;
            }
            if (0 < i && i < n) && in_collision(self.chain, &q, self.scene, self.clearance)? {
                return Ok(false);
            }
            suspect.push(i);
        }
        for i in suspect {
            if depth >= 6 {
                return Ok(false);
            }
            let at = |k: usize| lerp(a, b, k as f64 / n as f64);
            let lo = i.saturating_sub(1);
            let hi = (i + 1).min(n);
            if lo < i && !self.motion_free_at(&at(lo), &at(i), step / 4.0, depth + 1)? {
                return Ok(false);
            }
            if i < hi && !self.motion_free_at(&at(i), &at(hi), step / 4.0, depth + 1)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

struct Tree {
    nodes: Vec<JointState>,
    parent: Vec<usize>,
}

impl Tree {
    fn new(root: JointState) -> Self {
        Self { nodes: vec![root], parent: vec![usize::MAX] }
    }

    fn nearest(&self, q: &JointState) -> usize {
        let mut best = (0, f64::INFINITY);
        for (i, n) in self.nodes.iter().enumerate() {
            let d = l2(n, q);
            if d < best.1 {
                best = (i, d);
            }
        }
        best.0
    }

    fn push(&mut self, q: JointState, parent: usize) -> usize {
        self.nodes.push(q);
        self.parent.push(parent);
        self.nodes.len() - 1
    }

    fn path_to_root(&self, mut i: usize) -> Vec<JointState> {
        let mut out = Vec::new();
        while i != usize::MAX {
            out.push(self.nodes[i].clone());
            i = self.parent[i];
        }
        out
    }
}

enum Extend {
    Reached(usize),
    Advanced(usize),
    Trapped,
}

fn extend(tree: &mut Tree, q: &JointState, step: f64, checker: &MotionChecker) -> Result<Extend> {
    let near = tree.nearest(q);
    let from = tree.nodes[near].clone();
    let d = l2(&from, q);
    let (to, reached) = if d <= step { (q.clone(), true) } else { (lerp(&from, q, step / d), false) };
    if !checker.config_free(&to)? || !checker.motion_free(&from, &to)? {
        return Ok(Extend::Trapped);
    }
    let id = tree.push(to, near);
    Ok(if reached { Extend::Reached(id) } else { Extend::Advanced(id) })
}

fn rrt_connect(
    start: &JointState,
    goal: &JointState,
    checker: &MotionChecker,
    params: &PlannerParams,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<JointState>> {
    let mut a = Tree::new(start.clone());
    let mut b = Tree::new(goal.clone());
    let mut a_is_start = true;
    let limits: Vec<(f64, f64)> = checker.chain.joints.iter().map(|j| j.limits).collect();
    while a.nodes.len() + b.nodes.len() < params.max_nodes {
        let sample = JointState::new(limits.iter().map(|&(lo, hi)| rng.random_range(lo..=hi)).collect());
        if let Extend::Reached(i) | Extend::Advanced(i) = extend(&mut a, &sample, params.rrt_step, checker)? {
            let target = a.nodes[i].clone();
            loop {
                match extend(&mut b, &target, params.rrt_step, checker)? {
                    Extend::Advanced(_) if a.nodes.len() + b.nodes.len() < params.max_nodes => continue,
                    Extend::Reached(j) => {
                        let mut from_a = a.path_to_root(i);
                        from_a.reverse();
                        let to_b = b.path_to_root(j);
                        let mut path = from_a;
                        path.extend(to_b.into_iter().skip(1));
                        if !a_is_start {
                            path.reverse();
                        }
                        return Ok(path);
                    }
                    _ => break,
                }
            }
        }
        std::mem::swap(&mut a, &mut b);
        a_is_start = !a_is_start;
    }
    Err(Error::PlanningTimeout(params.max_nodes))
}

/// Joint-space L2 length of a polyline.
pub fn path_length(path: &[JointState]) -> f64 {
    path.windows(2).map(|w| l2(&w[0], &w[1])).sum()
}

/// Random shortcutting: replaces the stretch between two path vertices by a straight motion
/// whenever that motion is free.
fn shortcut(path: &mut Vec<JointState>, checker: &MotionChecker, attempts: usize, rng: &mut ChaCha8Rng) -> Result<()> {
    for _ in 0..attempts {
        if path.len() < 3 {
            break;
        }
        let i = rng.random_range(0..path.len() - 2);
        let j = rng.random_range(i + 2..path.len());
        if checker.motion_free(&path[i], &path[j])? {
            path.drain(i + 1..j);
        }
    }
    Ok(())
}

/// Time-stamps a joint-space polyline: each edge takes the longer of the tool travel at
/// `speed` and the largest joint change at `max_joint_velocity`. Edges are subdivided so that
/// no joint moves more than `sample_step` between samples.
fn parameterize(
    chain: &KinematicChain,
    path: &[JointState],
    scene: &PlanningScene,
    speed: f64,
    params: &PlannerParams,
) -> Result<JointTrajectory> {
    let scale = |q: &JointState| -> Result<f64> {
        Ok(collides(chain, q, scene, params.safety_clearance)?.speed_scale())
    };
    let tool = |q: &JointState| -> Result<nalgebra::Vector3<f64>> {
        Ok(fk(chain, q)?.last().expect("tool frame").translation)
    };
    let mut samples = vec![TrajectorySample { t: 0.0, q: path[0].clone(), speed_scale: scale(&path[0])? }];
    let mut t = 0.0;
    for w in path.windows(2) {
        let pieces = ((linf(&w[0], &w[1]) / params.sample_step).ceil() as usize).max(1);
        let mut prev = w[0].clone();
        let mut prev_tool = tool(&prev)?;
        for k in 1..=pieces {
            let q = if k == pieces { w[1].clone() } else { lerp(&w[0], &w[1], k as f64 / pieces as f64) };
            let q_tool = tool(&q)?;
            let dt = ((q_tool - prev_tool).norm() / speed).max(linf(&prev, &q) / params.max_joint_velocity);
            if dt <= 0.0 {
                continue;
            }
            t += dt;
            samples.push(TrajectorySample { t, q: q.clone(), speed_scale: scale(&q)? });
            prev = q;
            prev_tool = q_tool;
        }
    }
    Ok(JointTrajectory { samples })
}

/// Plans a collision-free joint motion from `q_start` to a tool pose.
///
/// The goal configuration comes from IK seeded at `q_start`. A straight joint-space line is
/// tried first; if it collides, RRT-Connect searches with a fixed seed and the result is
/// shortcut-smoothed. The trajectory starts at `t = 0`.
pub fn plan_segment(
    chain: &KinematicChain,
    q_start: &JointState,
    target: &RigidTransform,
    scene: &PlanningScene,
    speed: f64,
    params: &PlannerParams,
) -> Result<JointTrajectory> {
    params.validate()?;
    if !(speed > 0.0) {
        return Err(Error::invalid("segment speed must be > 0"));
    }
    let checker = MotionChecker::new(chain, scene, params.safety_clearance, params.check_step);
    if !checker.config_free(q_start)? {
        return Err(Error::InvalidConfiguration("start configuration is in collision".into()));
    }
    let ik = ik_solve(chain, target, q_start, &params.ik)?;
    if !ik.converged {
        return Err(Error::IkFailed);
    }
    let q_goal = ik.q;
    if !checker.config_free(&q_goal)? {
        return Err(Error::GoalInCollision);
    }
    let path = if checker.motion_free(q_start, &q_goal)? {
        vec![q_start.clone(), q_goal]
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let mut path = rrt_connect(q_start, &q_goal, &checker, params, &mut rng)?;
        shortcut(&mut path, &checker, params.shortcut_attempts, &mut rng)?;
        path
    };
    if path.len() == 2 && path[0] == path[1] {
        return parameterize(chain, &path[..1], scene, speed, params);
    }
    parameterize(chain, &path, scene, speed, params)
}

/// Plans every waypoint in order (and back to the first one when looping), concatenating the
/// segments on one time axis. Segment `i` uses seed `params.seed + i`.
pub fn plan_program(
    chain: &KinematicChain,
    q0: &JointState,
    program: &WaypointProgram,
    scene: &PlanningScene,
    params: &PlannerParams,
) -> Result<JointTrajectory> {
    program.validate()?;
    if program.waypoints.is_empty() {
        return Err(Error::EmptyInput("program has no waypoints"));
    }
    let mut order: Vec<usize> = (0..program.waypoints.len()).collect();
    if program.looped && program.waypoints.len() > 1 {
        order.push(0);
    }
    let mut out = JointTrajectory::default();
    let mut q = q0.clone();
    for (seg, &i) in order.iter().enumerate() {
        let wp = &program.waypoints[i];
        let p = PlannerParams { seed: params.seed.wrapping_add(seg as u64), ..*params };
        let part = plan_segment(chain, &q, &wp.target, scene, program.segment_speed(i), &p)
            .map_err(|e| Error::Waypoint { id: wp.id.clone(), source: Box::new(e) })?;
        let offset = out.duration();
        let skip = usize::from(!out.samples.is_empty());
        for s in part.samples.into_iter().skip(skip) {
            out.samples.push(TrajectorySample { t: s.t + offset, ..s });
        }
        q = out.samples.last().expect("segment has samples").q.clone();
    }
    Ok(out)
}

/// Re-checks the piecewise-linear trajectory at configurations no more than `step` apart
/// (plain clearance, no continuous-motion margin). Returns the first failing configuration.
pub fn revalidate(
    chain: &KinematicChain,
    traj: &JointTrajectory,
    scene: &PlanningScene,
    clearance: f64,
    step: f64,
) -> Result<Option<JointState>> {
    for (k, w) in traj.samples.windows(2).enumerate() {
        let n = ((linf(&w[0].q, &w[1].q) / step).ceil() as usize).max(1);
        for i in usize::from(k > 0)..=n {
            let q = lerp(&w[0].q, &w[1].q, i as f64 / n as f64);
            if in_collision(chain, &q, scene, clearance)? {
                return Ok(Some(q));
            }
        }
    }
    if let [only] = traj.samples.as_slice() {
        if in_collision(chain, &only.q, scene, clearance)? {
            return Ok(Some(only.q.clone()));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envmap::{build_octree, OccupancyOctree, SafetyZone, ZoneMode};
    use crate::geom::PointCloud;
    use crate::kin::robot_model;
    use crate::program::Waypoint;
    use crate::registration::{Referencing, ReferencingMethod, RegistrationResult};
    use nalgebra::Vector3;

    fn referencing() -> Referencing {
        Referencing {
            robot_from_world: RigidTransform::identity(),
            quality: RegistrationResult {
                transform: RigidTransform::identity(),
                rmse: 0.0,
                inlier_fraction: 1.0,
                iterations: 0,
                converged: true,
                rmse_history: vec![],
            },
            method: ReferencingMethod::SemiAutomatic,
            created_at: 0,
        }
    }

    fn scene(octree: OccupancyOctree, zones: Vec<SafetyZone>) -> PlanningScene {
        PlanningScene { octree, zones, referencing: referencing() }
    }

    fn empty() -> PlanningScene {
        scene(OccupancyOctree::empty(0.05, Vector3::zeros()).unwrap(), vec![])
    }

    fn tool_at(chain: &KinematicChain, q: &JointState) -> RigidTransform {
        *fk(chain, q).unwrap().last().unwrap()
    }

    #[test]
    fn empty_scene_gives_straight_line() {
        let m = robot_model("kr6_like").unwrap();
        let q0 = JointState::new(vec![0.0, 0.3, 0.2, 0.0, 0.4, 0.0]);
        let q1 = JointState::new(vec![0.6, 0.1, 0.5, 0.2, 0.2, 0.3]);
        let traj = plan_segment(&m, &q0, &tool_at(&m, &q1), &empty(), 0.25, &PlannerParams::default()).unwrap();
        assert_eq!(traj.samples[0].q, q0);
        assert_eq!(traj.samples[0].t, 0.0);
        let last = &traj.samples.last().unwrap().q;
        let (dt, dr) = tool_at(&m, last).error_to(&tool_at(&m, &q1));
        assert!(dt < 1e-5 && dr < 1e-4);
        for w in traj.samples.windows(2) {
            assert!(w[1].t > w[0].t);
            assert!(linf(&w[0].q, &w[1].q) <= 0.05 + 1e-12);
        }
    }

    #[test]
    fn wall_forces_detour() {
        let m = robot_model("planar_2r").unwrap();
        // wall of voxels across the +x/+y quadrant at radius 1.4..1.5, low in z
        let pts: PointCloud = (0..60)
            .flat_map(|i| {
                let a = 0.3 + i as f64 * 0.01;
                (0..3).map(move |k| Vector3::new(1.45 * a.cos(), 1.45 * a.sin(), -0.05 + k as f64 * 0.05))
            })
            .collect();
        let s = scene(build_octree(&pts, 0.02, Vector3::zeros()).unwrap(), vec![]);
        let q0 = JointState::new(vec![0.0, 0.0]);
        let goal = JointState::new(vec![1.4, 0.0]);
        let p = PlannerParams { safety_clearance: 0.0, ..PlannerParams::default() };
        let traj = plan_segment(&m, &q0, &tool_at(&m, &goal), &s, 0.5, &p).unwrap();
        assert!(revalidate(&m, &traj, &s, 0.0, 0.001).unwrap().is_none());
        // the elbow had to fold to get past the wall
        assert!(traj.samples.iter().any(|x| x.q.q[1].abs() > 0.2));
        let again = plan_segment(&m, &q0, &tool_at(&m, &goal), &s, 0.5, &p).unwrap();
        assert_eq!(traj, again);
    }

    #[test]
    fn forbidden_goal_is_rejected() {
        let m = robot_model("planar_2r").unwrap();
        let goal = JointState::new(vec![1.0, 0.5]);
        let zone = SafetyZone {
            id: "no".into(),
            pose: tool_at(&m, &goal),
            half_extents: Vector3::repeat(0.1),
            mode: ZoneMode::Forbidden,
            margin: 0.0,
        };
        let s = scene(OccupancyOctree::empty(0.05, Vector3::zeros()).unwrap(), vec![zone]);
        let e = plan_segment(&m, &JointState::zeros(2), &tool_at(&m, &goal), &s, 0.5, &PlannerParams::default());
        assert!(matches!(e, Err(Error::GoalInCollision)));
    }

    #[test]
    fn single_waypoint_at_start_is_one_sample() {
        let m = robot_model("kr6_like").unwrap();
        let q0 = JointState::new(vec![0.1; 6]);
        let prog = WaypointProgram {
            waypoints: vec![Waypoint::free_space("home", tool_at(&m, &q0))],
            ..WaypointProgram::default()
        };
        let traj = plan_program(&m, &q0, &prog, &empty(), &PlannerParams::default()).unwrap();
        assert_eq!(traj.len(), 1);
        assert_eq!(traj.samples[0].q, q0);
    }

    #[test]
    fn program_reaches_each_waypoint_and_names_failures() {
        let m = robot_model("kr6_like").unwrap();
        let q0 = JointState::new(vec![0.0, 0.3, 0.2, 0.0, 0.4, 0.0]);
        let a = tool_at(&m, &JointState::new(vec![0.4, 0.2, 0.3, 0.1, 0.3, 0.0]));
        let b = tool_at(&m, &JointState::new(vec![-0.3, 0.4, 0.1, -0.2, 0.5, 0.2]));
        let mut prog = WaypointProgram {
            waypoints: vec![Waypoint::free_space("a", a), Waypoint::free_space("b", b)],
            ..WaypointProgram::default()
        };
        let traj = plan_program(&m, &q0, &prog, &empty(), &PlannerParams::default()).unwrap();
        for w in traj.samples.windows(2) {
            assert!(w[1].t > w[0].t);
        }
        let end = tool_at(&m, &traj.samples.last().unwrap().q);
        assert!(end.error_to(&b).0 < 1e-5);
        assert!(traj.samples.iter().any(|s| tool_at(&m, &s.q).error_to(&a).0 < 1e-5));

        prog.waypoints.insert(1, Waypoint::free_space("far", RigidTransform::from_translation(Vector3::new(5.0, 0.0, 0.0))));
        let p = PlannerParams { ik: IkParams { restarts: 1, max_iterations: 50, ..IkParams::default() }, ..PlannerParams::default() };
        match plan_program(&m, &q0, &prog, &empty(), &p) {
            Err(Error::Waypoint { id, source }) => {
                assert_eq!(id, "far");
                assert!(matches!(*source, Error::IkFailed));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reduced_speed_zone_marks_samples() {
        let m = robot_model("planar_2r").unwrap();
        let zone = SafetyZone {
            id: "slow".into(),
            pose: RigidTransform::identity(),
            half_extents: Vector3::repeat(5.0),
            mode: ZoneMode::ReducedSpeed { factor: 0.5 },
            margin: 0.0,
        };
        let s = scene(OccupancyOctree::empty(0.05, Vector3::zeros()).unwrap(), vec![zone]);
        let goal = JointState::new(vec![0.5, 0.2]);
        let traj = plan_segment(&m, &JointState::zeros(2), &tool_at(&m, &goal), &s, 0.5, &PlannerParams::default()).unwrap();
        assert!(traj.samples.iter().all(|x| x.speed_scale == 0.5));
    }

    #[test]
    fn shortcut_never_lengthens() {
        let m = robot_model("planar_2r").unwrap();
        let s = empty();
        let c = MotionChecker::new(&m, &s, 0.0, 0.01);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut path: Vec<JointState> = (0..12)
            .map(|i| JointState::new(vec![i as f64 * 0.1, if i % 2 == 0 { 0.3 } else { -0.3 }]))
            .collect();
        let before = path_length(&path);
        let (first, last) = (path[0].clone(), path[11].clone());
        shortcut(&mut path, &c, 100, &mut rng).unwrap();
        assert!(path_length(&path) <= before);
        assert_eq!((path[0].clone(), path.last().unwrap().clone()), (first, last));
    }

    #[test]
    fn csv_round_trip() {
        let traj = JointTrajectory {
            samples: vec![
                TrajectorySample { t: 0.0, q: JointState::new(vec![0.1, -0.2]), speed_scale: 1.0 },
                TrajectorySample { t: 0.5, q: JointState::new(vec![0.3, 1.0 / 3.0]), speed_scale: 0.5 },
            ],
        };
        let csv = traj.to_csv();
        assert!(csv.starts_with("t,q1,q2,speed_scale\n"));
        assert_eq!(JointTrajectory::from_csv(&csv).unwrap(), traj);
        assert!(matches!(JointTrajectory::from_csv("t,q1,speed_scale\n0,x,1\n"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn lever_bound_covers_motion() {
        let m = robot_model("kr6_like").unwrap();
        let s = empty();
        let c = MotionChecker::new(&m, &s, 0.0, 0.01);
        let a = JointState::new(vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]);
        let b = JointState::new(vec![0.11, 0.19, 0.31, 0.39, 0.51, 0.59]);
        let bound = 2.0 * c.margin(&a, &b);
        let ca = m.link_capsules(&a).unwrap();
        let cb = m.link_capsules(&b).unwrap();
        for ((_, x), (_, y)) in ca.iter().zip(&cb) {
            assert!((x.p0 - y.p0).norm() <= bound && (x.p1 - y.p1).norm() <= bound);
        }
    }
}
