//! HTTP API and live event stream.
//!
//! A single thread owns the agent and runs the tick loop. Handlers send it
//! commands over a channel and read the snapshot it publishes after every
//! tick. Events are broadcast before the snapshot that reflects them.

use std::collections::{BTreeMap, VecDeque};
use std::convert::Infallible;
use std::sync::mpsc::{self, RecvTimeoutError};
use std::sync::{Arc, RwLock};
use std::thread;
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::sse::{Event as SseEvent, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream::{self, Stream, StreamExt};
use serde::{Deserialize, Serialize};
use serde_json::json;
use taskbot_core::geometry::Pose;
use taskbot_core::world::{Room, WorldObject};
use taskbot_core::{Agent, EntityName, Event, KbEntry, MetricsSample, RunConfig, TaskResult};
use tokio::sync::{broadcast, oneshot};

const HISTORY_LIMIT: usize = 200_000;

#[derive(Debug, Clone, Serialize)]
pub struct GridView {
    pub cols: usize,
    pub rows: usize,
    pub resolution: f64,
    pub width_m: f64,
    pub height_m: f64,
    /// One string per row, top row first; `#` marks an occupied cell.
    pub occupancy: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct WorldView {
    pub scenario: String,
    pub seed: u64,
    pub t: f64,
    pub grid: GridView,
    pub rooms: Vec<Room>,
    pub robot: Pose,
    pub holding: Option<EntityName>,
    pub objects: Vec<WorldObject>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskState {
    Queued,
    Running,
    Finished,
}

/// A finished task serializes as its `TaskResult` plus `status`.
#[derive(Debug, Clone, Serialize)]
pub struct TaskView {
    pub status: TaskState,
    #[serde(flatten)]
    pub detail: TaskDetail,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum TaskDetail {
    Finished(TaskResult),
    Pending { task_id: u64, prompt: String },
}

#[derive(Debug, Clone)]
struct Snapshot {
    world: WorldView,
    kb: Vec<KbEntry>,
    tasks: BTreeMap<u64, TaskView>,
    metrics: Vec<MetricsSample>,
    busy: bool,
}

enum Command {
    Prompt { text: String, reply: oneshot::Sender<u64> },
    Reset { scenario: Option<String>, seed: Option<u64>, reply: oneshot::Sender<Result<(), ResetError>> },
}

enum ResetError {
    Busy,
    Invalid(String),
}

#[derive(Clone)]
pub struct AppState {
    commands: mpsc::Sender<Command>,
    snapshot: Arc<RwLock<Snapshot>>,
    history: Arc<RwLock<VecDeque<Event>>>,
    live: broadcast::Sender<Event>,
}

/// Tick pacing: `speed` simulated seconds per wall second, or as fast as
/// possible when zero.
#[derive(Debug, Clone, Copy)]
pub struct ServeOptions {
    pub speed: f64,
}

struct Runner {
    cfg: RunConfig,
    agent: Agent,
    prompts: BTreeMap<u64, String>,
    snapshot: Arc<RwLock<Snapshot>>,
    history: Arc<RwLock<VecDeque<Event>>>,
    live: broadcast::Sender<Event>,
}

fn grid_view(agent: &Agent) -> GridView {
    let g = &agent.world().grid;
    let occupancy = (0..g.rows())
        .rev()
        .map(|row| {
            (0..g.cols())
                .map(|col| if g.is_occupied(taskbot_core::world::Cell::new(col, row)) { '#' } else { '.' })
                .collect()
        })
        .collect();
    GridView {
        cols: g.cols(),
        rows: g.rows(),
        resolution: g.resolution(),
        width_m: g.width_m(),
        height_m: g.height_m(),
        occupancy,
    }
}

impl Runner {
    fn build_snapshot(&self) -> Snapshot {
        let w = self.agent.world();
        let grid = self.snapshot.read().unwrap().world.grid.clone();
        let active = self.agent.active_task();
        let tasks = self
            .prompts
            .iter()
            .map(|(id, prompt)| {
                let view = match self.agent.result(*id) {
                    Some(r) => TaskView { status: TaskState::Finished, detail: TaskDetail::Finished(r.clone()) },
                    None => TaskView {
                        status: if active == Some(*id) { TaskState::Running } else { TaskState::Queued },
                        detail: TaskDetail::Pending { task_id: *id, prompt: prompt.clone() },
                    },
                };
                (*id, view)
            })
            .collect();
        Snapshot {
            world: WorldView {
                scenario: self.cfg.scenario.clone(),
                seed: self.cfg.seed,
                t: w.clock_s(),
                grid,
                rooms: w.rooms.clone(),
                robot: w.robot.pose,
                holding: w.robot.holding.clone(),
                objects: w.objects.clone(),
            },
            kb: self.agent.kb().to_document(),
            tasks,
            metrics: self.agent.metrics().samples().to_vec(),
            busy: self.agent.is_busy(),
        }
    }

    fn publish(&mut self) {
        let events = self.agent.take_events();
        if !events.is_empty() {
            let mut history = self.history.write().unwrap();
            for e in events {
                history.push_back(e.clone());
                // no receivers is fine
                let _ = self.live.send(e);
            }
            while history.len() > HISTORY_LIMIT {
                history.pop_front();
            }
        }
        let snap = self.build_snapshot();
        *self.snapshot.write().unwrap() = snap;
    }

    fn handle(&mut self, cmd: Command) {
        match cmd {
            Command::Prompt { text, reply } => {
                let id = self.agent.submit(&text);
                self.prompts.insert(id, text);
                self.publish();
                let _ = reply.send(id);
            }
            Command::Reset { scenario, seed, reply } => {
                if self.agent.is_busy() {
                    let _ = reply.send(Err(ResetError::Busy));
                    return;
                }
                let mut cfg = self.cfg.clone();
                if let Some(s) = scenario {
                    cfg.scenario = s;
                }
                if let Some(s) = seed {
                    cfg.seed = s;
                }
                match cfg.build_agent() {
                    Ok(mut agent) => {
                        let seq = self.history.read().unwrap().back().map_or(0, |e| e.seq + 1);
                        agent.continue_events_from(seq);
                        agent.emit_reset(&cfg.scenario, cfg.seed);
                        self.agent = agent;
                        self.cfg = cfg;
                        self.prompts.clear();
                        let grid = grid_view(&self.agent);
                        self.snapshot.write().unwrap().world.grid = grid;
                        self.publish();
                        let _ = reply.send(Ok(()));
                    }
                    Err(e) => {
                        let _ = reply.send(Err(ResetError::Invalid(e.to_string())));
                    }
                }
            }
        }
    }

    fn run(mut self, rx: mpsc::Receiver<Command>, opts: ServeOptions) {
        let dt = self.agent.config().nav.control_period;
        let pace = (opts.speed > 0.0).then(|| dt.div_f64(opts.speed));
        let mut next_tick = Instant::now();
        loop {
            // realtime runs keep ticking while idle; fast runs sleep until a command arrives
            let wait = match pace {
                Some(_) => next_tick.saturating_duration_since(Instant::now()),
                None if self.agent.is_busy() => Duration::ZERO,
                None => Duration::from_millis(50),
            };
            match rx.recv_timeout(wait) {
                Ok(cmd) => {
                    self.handle(cmd);
                    while let Ok(cmd) = rx.try_recv() {
                        self.handle(cmd);
                    }
                    continue;
                }
                Err(RecvTimeoutError::Disconnected) => return,
                Err(RecvTimeoutError::Timeout) => {}
            }
            if pace.is_none() && !self.agent.is_busy() {
                continue;
            }
            self.agent.tick();
            self.publish();
            if let Some(p) = pace {
                next_tick += p;
            }
        }
    }
}

impl AppState {
    /// Build the agent and start the tick loop on its own thread.
    pub fn start(cfg: RunConfig, opts: ServeOptions) -> Result<Self, taskbot_core::RunError> {
        let mut agent = cfg.build_agent()?;
        agent.emit_reset(&cfg.scenario, cfg.seed);
        let (live, _) = broadcast::channel(4096);
        let (tx, rx) = mpsc::channel();
        let grid = grid_view(&agent);
        let placeholder = Snapshot {
            world: WorldView {
                scenario: cfg.scenario.clone(),
                seed: cfg.seed,
                t: 0.0,
                grid,
                rooms: vec![],
                robot: Pose::default(),
                holding: None,
                objects: vec![],
            },
            kb: vec![],
            tasks: BTreeMap::new(),
            metrics: vec![],
            busy: false,
        };
        let snapshot = Arc::new(RwLock::new(placeholder));
        let history = Arc::new(RwLock::new(VecDeque::new()));
        let mut runner = Runner {
            cfg,
            agent,
            prompts: BTreeMap::new(),
            snapshot: snapshot.clone(),
            history: history.clone(),
            live: live.clone(),
        };
        runner.publish();
        thread::Builder::new()
            .name("tick-loop".into())
            .spawn(move || runner.run(rx, opts))
            .expect("spawn tick loop");
        Ok(AppState { commands: tx, snapshot, history, live })
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/prompt", post(post_prompt))
        .route("/api/tasks/{id}", get(get_task))
        .route("/api/kb", get(get_kb))
        .route("/api/world", get(get_world))
        .route("/api/metrics", get(get_metrics))
        .route("/api/events", get(get_events))
        .route("/api/reset", post(post_reset))
        .with_state(state)
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(json!({ "error": message.into() }))).into_response()
}

#[derive(Deserialize)]
struct PromptBody {
    text: String,
}

async fn post_prompt(State(state): State<AppState>, body: Result<Json<PromptBody>, JsonRejection>) -> Response {
    let Json(body) = match body {
        Ok(b) => b,
        Err(e) => return error(StatusCode::BAD_REQUEST, e.body_text()),
    };
    if body.text.trim().is_empty() {
        return error(StatusCode::BAD_REQUEST, "prompt text is empty");
    }
    let (reply, rx) = oneshot::channel();
    if state.commands.send(Command::Prompt { text: body.text, reply }).is_err() {
        return error(StatusCode::SERVICE_UNAVAILABLE, "simulation stopped");
    }
    match rx.await {
        Ok(task_id) => (StatusCode::ACCEPTED, Json(json!({ "task_id": task_id }))).into_response(),
        Err(_) => error(StatusCode::SERVICE_UNAVAILABLE, "simulation stopped"),
    }
}

async fn get_task(State(state): State<AppState>, Path(id): Path<String>) -> Response {
    let Ok(id) = id.parse::<u64>() else {
        return error(StatusCode::NOT_FOUND, format!("unknown task {id}"));
    };
    match state.snapshot.read().unwrap().tasks.get(&id) {
        Some(task) => Json(task.clone()).into_response(),
        None => error(StatusCode::NOT_FOUND, format!("unknown task {id}")),
    }
}

async fn get_kb(State(state): State<AppState>) -> Response {
    Json(state.snapshot.read().unwrap().kb.clone()).into_response()
}

async fn get_world(State(state): State<AppState>) -> Response {
    let snap = state.snapshot.read().unwrap();
    Json(json!({ "busy": snap.busy, "world": snap.world })).into_response()
}

#[derive(Deserialize)]
struct MetricsQuery {
    since: Option<f64>,
}

async fn get_metrics(State(state): State<AppState>, Query(q): Query<MetricsQuery>) -> Response {
    let since = q.since.unwrap_or(f64::NEG_INFINITY);
    let snap = state.snapshot.read().unwrap();
    let samples: Vec<&MetricsSample> = snap.metrics.iter().filter(|s| s.t >= since).collect();
    Json(samples).into_response()
}

#[derive(Deserialize)]
struct EventsQuery {
    since_seq: Option<u64>,
}

fn sse_event(e: &Event) -> Result<SseEvent, Infallible> {
    let data = serde_json::to_string(e).expect("events serialize");
    Ok(SseEvent::default().id(e.seq.to_string()).event(e.body.type_name()).data(data))
}

/// Replay of the history from `since_seq`, then live events without gaps or
/// repeats. A subscriber that falls behind the broadcast buffer catches up
/// from the history.
pub fn event_stream(state: &AppState, since_seq: u64) -> impl Stream<Item = Event> + Send + 'static {
    struct Cursor {
        rx: broadcast::Receiver<Event>,
        history: Arc<RwLock<VecDeque<Event>>>,
        next: u64,
        pending: VecDeque<Event>,
    }
    impl Cursor {
        fn backfill(&mut self) {
            let next = self.next;
            self.pending = self.history.read().unwrap().iter().filter(|e| e.seq >= next).cloned().collect();
        }
    }
    let mut cursor = Cursor { rx: state.live.subscribe(), history: state.history.clone(), next: since_seq, pending: VecDeque::new() };
    cursor.backfill();
    stream::unfold(cursor, |mut c| async move {
        loop {
            if let Some(e) = c.pending.pop_front() {
                c.next = e.seq + 1;
                return Some((e, c));
            }
            match c.rx.recv().await {
                Ok(e) if e.seq < c.next => {}
                Ok(e) if e.seq == c.next => {
                    c.next += 1;
                    return Some((e, c));
                }
                // history is written before the broadcast, so it holds the gap
                Ok(_) | Err(broadcast::error::RecvError::Lagged(_)) => c.backfill(),
                Err(broadcast::error::RecvError::Closed) => return None,
            }
        }
    })
}

async fn get_events(
    State(state): State<AppState>,
    Query(q): Query<EventsQuery>,
) -> Sse<impl Stream<Item = Result<SseEvent, Infallible>>> {
    let stream = event_stream(&state, q.since_seq.unwrap_or(0)).map(|e| sse_event(&e));
    Sse::new(stream).keep_alive(KeepAlive::default())
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ResetBody {
    scenario: Option<String>,
    seed: Option<u64>,
}

async fn post_reset(State(state): State<AppState>, body: Bytes) -> Response {
    let body: ResetBody = if body.iter().all(u8::is_ascii_whitespace) {
        ResetBody::default()
    } else {
        match serde_json::from_slice(&body) {
            Ok(b) => b,
            Err(e) => return error(StatusCode::BAD_REQUEST, e.to_string()),
        }
    };
    let (reply, rx) = oneshot::channel();
    let cmd = Command::Reset { scenario: body.scenario, seed: body.seed, reply };
    if state.commands.send(cmd).is_err() {
        return error(StatusCode::SERVICE_UNAVAILABLE, "simulation stopped");
    }
    match rx.await {
        Ok(Ok(())) => Json(json!({ "ok": true })).into_response(),
        Ok(Err(ResetError::Busy)) => error(StatusCode::CONFLICT, "a task is active"),
        Ok(Err(ResetError::Invalid(msg))) => error(StatusCode::BAD_REQUEST, msg),
        Err(_) => error(StatusCode::SERVICE_UNAVAILABLE, "simulation stopped"),
    }
}

/// The events that became visible since `seq`, for tests and tools.
pub fn history_since(state: &AppState, seq: u64) -> Vec<Event> {
    state.history.read().unwrap().iter().filter(|e| e.seq >= seq).cloned().collect()
}
