//! HTTP + WebSocket service driving sessions for a browser client.
//!
//! Mutations of one session are serialized by a per-session writer lock; readers take short
//! snapshots of the state and never wait for a running referencing or plan. Planning runs in
//! the background and its result is applied only if the session did not change meanwhile.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::Duration;

use arcell_core::autoref::SearchParams;
use arcell_core::envmap::SafetyZone;
use arcell_core::geom::{pose_serde, Capsule, Pose, RigidTransform, TriangleMesh, Vec3};
use arcell_core::kin::{fk, hand_guidance_step, robot_model, Grab, GuidanceParams, JointState};
use arcell_core::program::{
    place_waypoint_ray, project_waypoint, virtual_execute, JointTrajectory, PlannerParams, Waypoint,
};
use arcell_core::registration::IcpParams;
use axum::body::Bytes;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use nalgebra::Matrix3;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tokio::sync::broadcast;
use tokio::task::AbortHandle;

use crate::persist::{self, JsonArtifact};
use crate::pipeline::{self, MapParams};
use crate::session::{Event, SessionState, Stage};
use crate::sim::{generate_scene, GroundTruth, SceneSpec};
use crate::{Error, ErrorBody, Result};

/// Everything a session owns besides its stage machine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionBundle {
    pub state: SessionState,
    /// Spatial mesh in the HMD world frame.
    pub mesh: TriangleMesh,
    #[serde(default)]
    pub truth: Option<GroundTruth>,
}

impl JsonArtifact for SessionBundle {
    const KIND: &'static str = "session_bundle";
}

struct SessionData {
    bundle: SessionBundle,
    /// Incremented by every applied mutation.
    revision: u64,
    planning: bool,
    last_error: Option<ErrorBody>,
}

struct Session {
    writer: tokio::sync::Mutex<()>,
    data: RwLock<SessionData>,
    stream: broadcast::Sender<String>,
    plan_job: Mutex<Option<AbortHandle>>,
    exec_job: Mutex<Option<AbortHandle>>,
}

impl Session {
    fn new(bundle: SessionBundle) -> Self {
        Self {
            writer: tokio::sync::Mutex::new(()),
            data: RwLock::new(SessionData { bundle, revision: 0, planning: false, last_error: None }),
            stream: broadcast::channel(1024).0,
            plan_job: Mutex::new(None),
            exec_job: Mutex::new(None),
        }
    }

    fn read<T>(&self, f: impl FnOnce(&SessionData) -> T) -> T {
        f(&self.data.read().expect("session lock poisoned"))
    }

    /// Applies `f` to a copy of the state and commits it only on success. Cancels any
    /// running plan, whose result would be stale.
    fn mutate<T>(&self, f: impl FnOnce(&mut SessionBundle) -> Result<T>) -> Result<T> {
        let mut data = self.data.write().expect("session lock poisoned");
        let mut next = data.bundle.clone();
        let out = f(&mut next)?;
        data.bundle = next;
        data.revision += 1;
        if data.planning {
            data.planning = false;
            if let Some(job) = self.plan_job.lock().expect("job lock poisoned").take() {
                job.abort();
            }
        }
        Ok(out)
    }

    fn broadcast<T: Serialize>(&self, msg: &T) {
        if let Ok(text) = serde_json::to_string(msg) {
            // no subscribers is fine
            let _ = self.stream.send(text);
        }
    }
}

pub struct AppState {
    sessions: RwLock<BTreeMap<u64, Arc<Session>>>,
    next_id: AtomicU64,
    store: PathBuf,
}

impl AppState {
    /// Service state saving sessions under `store`.
    pub fn new(store: impl Into<PathBuf>) -> Arc<Self> {
        Arc::new(Self { sessions: RwLock::new(BTreeMap::new()), next_id: AtomicU64::new(1), store: store.into() })
    }

    fn session(&self, id: u64) -> Result<Arc<Session>> {
        self.sessions.read().expect("registry lock poisoned").get(&id).cloned().ok_or(Error::UnknownSession(id))
    }

    fn insert(&self, bundle: SessionBundle) -> u64 {
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        self.sessions.write().expect("registry lock poisoned").insert(id, Arc::new(Session::new(bundle)));
        id
    }
}

struct ApiError(Error);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError(e)
    }
}

fn status_of(e: &Error) -> StatusCode {
    use arcell_core::Error as C;
    match e {
        Error::UnknownSession(_) => StatusCode::NOT_FOUND,
        Error::StageViolation { .. } | Error::Conflict(_) => StatusCode::CONFLICT,
        Error::Core(C::InvalidParameter(_) | C::Parse { .. } | C::Version { .. } | C::EmptyInput(_)) => {
            StatusCode::BAD_REQUEST
        }
        Error::Core(C::Io(_)) => StatusCode::INTERNAL_SERVER_ERROR,
        Error::Core(_) => StatusCode::UNPROCESSABLE_ENTITY,
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (status_of(&self.0), Json(self.0.body())).into_response()
    }
}

type ApiResult<T> = std::result::Result<Json<T>, ApiError>;

fn body<T: DeserializeOwned + Default>(bytes: &Bytes) -> Result<T> {
    if bytes.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    Ok(serde_json::from_slice(bytes)?)
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T> + Send + 'static) -> Result<T> {
    tokio::task::spawn_blocking(f).await.map_err(|e| Error::Conflict(format!("background task failed: {e}")))?
}

/// Consistent view of a session.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Snapshot {
    pub id: u64,
    pub revision: u64,
    pub stage: Stage,
    pub planning: bool,
    pub last_error: Option<ErrorBody>,
    pub state: SessionState,
}

fn snapshot(id: u64, s: &Session) -> Snapshot {
    s.read(|d| Snapshot {
        id,
        revision: d.revision,
        stage: d.bundle.state.stage,
        planning: d.planning,
        last_error: d.last_error.clone(),
        state: d.bundle.state.clone(),
    })
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct CreateRequest {
    /// Scene to simulate; the demo cell if neither this nor `load` is given.
    spec: Option<SceneSpec>,
    /// Name of a saved session.
    load: Option<String>,
}

fn store_path(app: &AppState, name: &str) -> Result<PathBuf> {
    let ok = !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
    if !ok {
        return Err(arcell_core::Error::InvalidParameter(format!("invalid session name {name:?}")).into());
    }
    Ok(app.store.join(format!("{name}.json")))
}

async fn create_session(State(app): State<Arc<AppState>>, bytes: Bytes) -> ApiResult<Snapshot> {
    let req: CreateRequest = body(&bytes)?;
    let bundle = match req.load {
        Some(name) => {
            let path = store_path(&app, &name)?;
            blocking(move || persist::load_json::<SessionBundle>(path)).await?
        }
        None => {
            let spec = req.spec.unwrap_or_else(SceneSpec::demo);
            blocking(move || {
                let (mesh, truth) = generate_scene(&spec)?;
                let state = SessionState::new(spec.robot_model.clone(), spec.joint_state.clone());
                Ok(SessionBundle { state, mesh, truth: Some(truth) })
            })
            .await?
        }
    };
    let id = app.insert(bundle);
    Ok(Json(snapshot(id, &*app.session(id)?)))
}

async fn get_session(State(app): State<Arc<AppState>>, Path(id): Path<u64>) -> ApiResult<Snapshot> {
    Ok(Json(snapshot(id, &*app.session(id)?)))
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "lowercase")]
enum AutoKeyword {
    Auto,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ReferenceRequest {
    Auto(AutoKeyword),
    Seed {
        #[serde(with = "pose_serde")]
        seed: RigidTransform,
        #[serde(default)]
        icp: Option<IcpParams>,
    },
    AutoWith {
        auto: SearchParams,
        #[serde(default)]
        icp: Option<IcpParams>,
    },
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ReferenceResponse {
    pub snapshot: Snapshot,
    /// Translation (m) and rotation (rad) error against the simulator ground truth.
    pub error_vs_truth: Option<(f64, f64)>,
}

async fn reference(State(app): State<Arc<AppState>>, Path(id): Path<u64>, bytes: Bytes) -> ApiResult<ReferenceResponse> {
    let req: ReferenceRequest = serde_json::from_slice(&bytes).map_err(Error::from)?;
    let session = app.session(id)?;
    let _writer = session.writer.lock().await;
    let (mesh, model, q) = session.read(|d| (d.bundle.mesh.clone(), d.bundle.state.robot_model.clone(), d.bundle.state.joint_state.clone()));
    let referencing = blocking(move || match req {
        ReferenceRequest::Seed { seed, icp } => pipeline::reference_semi(&mesh, &model, &q, &seed, &icp.unwrap_or_default(), 0),
        ReferenceRequest::Auto(AutoKeyword::Auto) => {
            pipeline::reference_auto(&mesh, &model, &q, &SearchParams::default(), &IcpParams::default(), 0)
        }
        ReferenceRequest::AutoWith { auto, icp } => pipeline::reference_auto(&mesh, &model, &q, &auto, &icp.unwrap_or_default(), 0),
    })
    .await?;
    let error_vs_truth = session.mutate(|b| {
        let err = b.truth.as_ref().map(|t| pipeline::reference_error(&referencing, t));
        b.state.apply(Event::Referenced(referencing))?;
        Ok(err)
    })?;
    Ok(Json(ReferenceResponse { snapshot: snapshot(id, &session), error_vs_truth }))
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct MapRequest {
    #[serde(flatten)]
    params: MapParams,
    zones: Option<Vec<SafetyZone>>,
}

async fn map(State(app): State<Arc<AppState>>, Path(id): Path<u64>, bytes: Bytes) -> ApiResult<Snapshot> {
    let req: MapRequest = body(&bytes)?;
    let session = app.session(id)?;
    let _writer = session.writer.lock().await;
    let bundle = session.read(|d| d.bundle.clone());
    bundle.state.require("map", Stage::Setup)?;
    let scene = blocking(move || {
        let s = &bundle.state;
        let chain = robot_model(&s.robot_model)?;
        let zones = req.zones.or_else(|| s.scene.as_ref().map(|sc| sc.zones.clone())).unwrap_or_default();
        let referencing = s.referencing.as_ref().expect("checked above");
        pipeline::build_scene(&bundle.mesh, &chain, &s.joint_state, referencing, zones, &req.params)
    })
    .await?;
    session.mutate(|b| b.state.apply(Event::SceneReady(scene)))?;
    Ok(Json(snapshot(id, &session)))
}

#[derive(Debug, Deserialize)]
struct ZonesRequest {
    zones: Vec<SafetyZone>,
}

async fn zones(State(app): State<Arc<AppState>>, Path(id): Path<u64>, bytes: Bytes) -> ApiResult<Snapshot> {
    let req: ZonesRequest = serde_json::from_slice(&bytes).map_err(Error::from)?;
    let session = app.session(id)?;
    let _writer = session.writer.lock().await;
    session.mutate(|b| {
        b.state.require("zones", Stage::Programming)?;
        let mut scene = b.state.scene.clone().expect("checked above");
        scene.zones = req.zones;
        b.state.apply(Event::SceneReady(scene))
    })?;
    Ok(Json(snapshot(id, &session)))
}

#[derive(Debug, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
enum WaypointRequest {
    Add {
        waypoint: Waypoint,
        #[serde(default)]
        position: Option<usize>,
    },
    /// Surface waypoint where a ray (robot base frame) hits the spatial mesh.
    AddRay {
        id: String,
        origin: Vec3,
        direction: Vec3,
        #[serde(default)]
        orientation: Option<Matrix3<f64>>,
        #[serde(default)]
        position: Option<usize>,
    },
    Update {
        waypoint: Waypoint,
    },
    Delete {
        id: String,
    },
    SetSpeed {
        speed: f64,
        #[serde(default)]
        r#loop: Option<bool>,
    },
}

async fn waypoints(State(app): State<Arc<AppState>>, Path(id): Path<u64>, bytes: Bytes) -> ApiResult<Snapshot> {
    let req: WaypointRequest = serde_json::from_slice(&bytes).map_err(Error::from)?;
    let session = app.session(id)?;
    let _writer = session.writer.lock().await;
    session.mutate(|b| {
        b.state.require("waypoints", Stage::Programming)?;
        let mut program = b.state.program.clone().unwrap_or_default();
        match req {
            WaypointRequest::Add { waypoint, position } => program.add(waypoint, position)?,
            WaypointRequest::AddRay { id, origin, direction, orientation, position } => {
                let referencing = b.state.referencing.as_ref().expect("checked above");
                let mesh = pipeline::mesh_in_robot_frame(&b.mesh, referencing);
                program.add(place_waypoint_ray(id, &origin, &direction, &mesh, orientation)?, position)?
            }
            WaypointRequest::Update { waypoint } => program.update(waypoint)?,
            WaypointRequest::Delete { id } => {
                program.remove(&id)?;
            }
            WaypointRequest::SetSpeed { speed, r#loop } => {
                program.speed = speed;
                if let Some(l) = r#loop {
                    program.looped = l;
                }
            }
        }
        b.state.apply(Event::ProgramEdited(program))
    })?;
    Ok(Json(snapshot(id, &session)))
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct PlanRequest {
    params: Option<PlannerParams>,
    /// Wait for the planner and report its outcome in the response.
    wait: bool,
}

async fn plan(State(app): State<Arc<AppState>>, Path(id): Path<u64>, bytes: Bytes) -> std::result::Result<Response, ApiError> {
    let req: PlanRequest = body(&bytes)?;
    let session = app.session(id)?;
    let job = {
        let _writer = session.writer.lock().await;
        let (state, revision) = session.read(|d| (d.bundle.state.clone(), d.revision));
        state.require("plan", Stage::Programming)?;
        let program = match &state.program {
            Some(p) if !p.waypoints.is_empty() => p.clone(),
            _ => {
                // nothing to plan: an empty program has no trajectory
                session.mutate(|b| {
                    b.state.trajectory = None;
                    b.state.stage = b.state.stage.min(Stage::Programming);
                    Ok(())
                })?;
                return Ok(Json(snapshot(id, &session)).into_response());
            }
        };
        if let Some(old) = session.plan_job.lock().expect("job lock poisoned").take() {
            old.abort();
        }
        session.data.write().expect("session lock poisoned").planning = true;
        let params = req.params.unwrap_or_default();
        let worker = Arc::clone(&session);
        let handle = tokio::spawn(async move {
            let outcome = blocking(move || {
                let chain = robot_model(&state.robot_model)?;
                pipeline::plan(&chain, &state.joint_state, &program, state.scene.as_ref().expect("stage checked"), &params)
            })
            .await;
            let mut data = worker.data.write().expect("session lock poisoned");
            if data.revision != revision {
                return Err(Error::Conflict("session changed while planning".into()));
            }
            data.planning = false;
            match outcome {
                Ok(traj) => {
                    data.bundle.state.apply(Event::Planned(traj))?;
                    data.revision += 1;
                    data.last_error = None;
                    Ok(())
                }
                Err(e) => {
                    data.last_error = Some(e.body());
                    Err(e)
                }
            }
        });
        *session.plan_job.lock().expect("job lock poisoned") = Some(handle.abort_handle());
        handle
    };
    if !req.wait {
        return Ok((StatusCode::ACCEPTED, Json(snapshot(id, &session))).into_response());
    }
    match handle_outcome(job.await) {
        Ok(()) => Ok(Json(snapshot(id, &session)).into_response()),
        Err(e) => Err(e.into()),
    }
}

fn handle_outcome(r: std::result::Result<Result<()>, tokio::task::JoinError>) -> Result<()> {
    r.map_err(|_| Error::Conflict("planning was cancelled".into()))?
}

#[derive(Debug, Deserialize)]
struct GuidanceRequest {
    link: usize,
    delta: Vec3,
    /// Grab point in the base frame; the distal end of the link if absent.
    #[serde(default)]
    point: Option<Vec3>,
    #[serde(default)]
    params: Option<GuidanceParams>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct GuidanceResponse {
    pub q: JointState,
    pub residual: Vec3,
}

#[derive(Serialize)]
struct Echo<'a> {
    q: &'a JointState,
}

async fn guidance(State(app): State<Arc<AppState>>, Path(id): Path<u64>, bytes: Bytes) -> ApiResult<GuidanceResponse> {
    let req: GuidanceRequest = serde_json::from_slice(&bytes).map_err(Error::from)?;
    let session = app.session(id)?;
    let _writer = session.writer.lock().await;
    let response = session.mutate(|b| {
        b.state.require("guidance", Stage::Setup)?;
        let chain = robot_model(&b.state.robot_model)?;
        let q = &b.state.joint_state;
        let point = match req.point {
            Some(p) => p,
            None => chain
                .link_capsules(q)?
                .into_iter()
                .filter(|(l, _)| *l == req.link)
                .last()
                .map(|(_, c)| c.p1)
                .ok_or_else(|| arcell_core::Error::InvalidParameter(format!("link {} has no geometry", req.link)))?,
        };
        let outcome = hand_guidance_step(&chain, q, &Grab { link: req.link, point }, &req.delta, &req.params.unwrap_or_default())?;
        b.state.apply(Event::Moved(outcome.q.clone()))?;
        Ok(GuidanceResponse { q: outcome.q, residual: outcome.residual })
    })?;
    session.broadcast(&Echo { q: &response.q });
    Ok(Json(response))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RobotView {
    pub model: String,
    pub q: JointState,
    /// Link frames followed by the tool frame.
    pub frames: Vec<Pose>,
    pub capsules: Vec<Capsule>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct WaypointView {
    pub waypoint: Waypoint,
    /// Where the waypoint projects straight down onto the mesh.
    pub projection: Option<Vec3>,
}

/// Render payload. With a referencing everything is in the robot base frame, before it the
/// mesh is in the world frame.
#[derive(Debug, Serialize, Deserialize)]
pub struct SceneView {
    pub frame: String,
    pub stage: Stage,
    pub mesh: TriangleMesh,
    pub octree: Option<arcell_core::envmap::OccupancyOctree>,
    pub zones: Vec<SafetyZone>,
    pub robot: RobotView,
    pub waypoints: Vec<WaypointView>,
    pub trajectory: Option<JointTrajectory>,
}

async fn scene(State(app): State<Arc<AppState>>, Path(id): Path<u64>) -> ApiResult<SceneView> {
    let session = app.session(id)?;
    let bundle = session.read(|d| d.bundle.clone());
    let view = blocking(move || {
        let s = bundle.state;
        let chain = robot_model(&s.robot_model)?;
        let (frame, mesh) = match &s.referencing {
            Some(r) => ("robot", pipeline::mesh_in_robot_frame(&bundle.mesh, r)),
            None => ("world", bundle.mesh),
        };
        let waypoints = s
            .program
            .as_ref()
            .map(|p| {
                p.waypoints
                    .iter()
                    .map(|w| WaypointView { waypoint: w.clone(), projection: project_waypoint(w, &mesh, None).map(|h| h.0) })
                    .collect()
            })
            .unwrap_or_default();
        Ok(SceneView {
            frame: frame.into(),
            stage: s.stage,
            robot: RobotView {
                model: s.robot_model.clone(),
                frames: fk(&chain, &s.joint_state)?.iter().map(Pose::from).collect(),
                capsules: chain.all_capsules(&s.joint_state)?,
                q: s.joint_state,
            },
            mesh,
            octree: s.scene.as_ref().map(|sc| sc.octree.clone()),
            zones: s.scene.map(|sc| sc.zones).unwrap_or_default(),
            waypoints,
            trajectory: s.trajectory,
        })
    })
    .await?;
    Ok(Json(view))
}

fn default_dt() -> f64 {
    0.05
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Deserialize)]
struct ExecuteRequest {
    #[serde(default = "default_dt")]
    dt: f64,
    /// Pace frames at wall-clock speed; otherwise send them at once.
    #[serde(default = "default_true")]
    realtime: bool,
}

impl Default for ExecuteRequest {
    fn default() -> Self {
        Self { dt: default_dt(), realtime: true }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ExecuteResponse {
    pub frames: usize,
    pub duration: f64,
}

async fn execute(State(app): State<Arc<AppState>>, Path(id): Path<u64>, bytes: Bytes) -> ApiResult<ExecuteResponse> {
    let req: ExecuteRequest = body(&bytes)?;
    let session = app.session(id)?;
    let state = session.read(|d| d.bundle.state.clone());
    state.require("execute", Stage::Interaction)?;
    let frames = virtual_execute(state.trajectory.as_ref().expect("stage checked"), req.dt).map_err(Error::from)?;
    let response = ExecuteResponse { frames: frames.len(), duration: frames.last().map_or(0.0, |f| f.t) };
    let worker = Arc::clone(&session);
    let dt = req.dt;
    let handle = tokio::spawn(async move {
        let mut tick = tokio::time::interval(Duration::from_secs_f64(dt));
        for f in &frames {
            if req.realtime {
                tick.tick().await;
            }
            worker.broadcast(f);
        }
    });
    if let Some(old) = session.exec_job.lock().expect("job lock poisoned").replace(handle.abort_handle()) {
        old.abort();
    }
    Ok(Json(response))
}

#[derive(Debug, Deserialize)]
struct SaveRequest {
    name: String,
}

async fn save(State(app): State<Arc<AppState>>, Path(id): Path<u64>, bytes: Bytes) -> ApiResult<serde_json::Value> {
    let req: SaveRequest = serde_json::from_slice(&bytes).map_err(Error::from)?;
    let session = app.session(id)?;
    let path = store_path(&app, &req.name)?;
    let bundle = session.read(|d| d.bundle.clone());
    blocking(move || {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        persist::save_json(&bundle, &path)
    })
    .await?;
    Ok(Json(serde_json::json!({ "saved": req.name })))
}

async fn stream(State(app): State<Arc<AppState>>, Path(id): Path<u64>, ws: WebSocketUpgrade) -> std::result::Result<Response, ApiError> {
    let session = app.session(id)?;
    let rx = session.stream.subscribe();
    Ok(ws.on_upgrade(move |socket| forward(socket, rx)))
}

async fn forward(mut socket: WebSocket, mut rx: broadcast::Receiver<String>) {
    loop {
        tokio::select! {
            msg = rx.recv() => match msg {
                Ok(text) => {
                    if socket.send(Message::Text(text.into())).await.is_err() {
                        break;
                    }
                }
                Err(broadcast::error::RecvError::Lagged(_)) => continue,
                Err(broadcast::error::RecvError::Closed) => break,
            },
            incoming = socket.recv() => match incoming {
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                Some(Ok(_)) => {}
            },
        }
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/session", post(create_session))
        .route("/session/{id}", get(get_session))
        .route("/session/{id}/reference", post(reference))
        .route("/session/{id}/map", post(map))
        .route("/session/{id}/zones", post(zones))
        .route("/session/{id}/waypoints", post(waypoints))
        .route("/session/{id}/plan", post(plan))
        .route("/session/{id}/guidance", post(guidance))
        .route("/session/{id}/scene", get(scene))
        .route("/session/{id}/execute", post(execute))
        .route("/session/{id}/save", post(save))
        .route("/session/{id}/stream", get(stream))
        .with_state(state)
}

/// Serves until the process is stopped.
pub async fn serve(addr: &str, store: PathBuf) -> Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(AppState::new(store))).await?;
    Ok(())
}
