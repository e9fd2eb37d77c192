//! HTTP session service for human-in-the-loop play. Each session owns one
//! episode; a tick advances only when every human agent has a command queued
//! (or the optional turn deadline fills the gaps with noops).

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write as _;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{Duration, Instant};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use brigade_core::dispatcher::{extract_commands_with, PromptToggles, Vocabulary};
use brigade_core::engine::{hash_state, render_state, Command, Dispatch, Event, LocationKind, Verdict};
use brigade_core::planners::{Planner, ReplayPlanner};
use brigade_core::scheduler::{EpisodeRunner, OrderStatus};
use brigade_core::{ContentPack, Engine, EpisodeConfig, EpisodeReport};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::planner::PlannerSpec;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({"error": self.code, "message": self.message}))).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        ApiError::bad_request(r.body_text())
    }
}

fn default_agents() -> usize {
    2
}

fn default_planner() -> String {
    "random".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateSession {
    #[serde(default)]
    pub level: u32,
    #[serde(default = "default_agents")]
    pub agents: usize,
    #[serde(default)]
    pub human_roles: Vec<usize>,
    /// `random`, `greedy` or `llm:<profile>` for the non-human agents.
    #[serde(default = "default_planner")]
    pub planner: String,
    /// Defaults to the level's most relaxed interval.
    #[serde(default)]
    pub tau_int: Option<u32>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub max_steps: Option<u32>,
    #[serde(default)]
    pub ablation: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Human,
    Planner,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum LogLine {
    Create {
        id: String,
        request: CreateSession,
    },
    Step {
        tick: u32,
        human: Vec<String>,
        raw_outputs: Vec<String>,
        state_hash: u64,
    },
}

pub struct Session {
    pub id: String,
    request: CreateSession,
    roles: Vec<Role>,
    runner: EpisodeRunner,
    planner: Box<dyn Planner + Send>,
    pending: BTreeMap<usize, Command>,
    last_events: Vec<Event>,
    last_dispatch: Option<String>,
    last_activity: Instant,
    log: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
pub struct AgentView {
    pub id: usize,
    pub role: Role,
    pub at: String,
    pub holding: Vec<String>,
    pub busy_remaining: u32,
    pub pending: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct LocationView {
    pub id: String,
    pub kind: &'static str,
    pub contents: Vec<String>,
    pub busy_remaining: u32,
}

#[derive(Debug, Serialize)]
pub struct OrderView {
    pub id: u32,
    pub dish: String,
    pub spawned_at: u32,
    pub lifetime: u32,
    pub remaining: u32,
}

#[derive(Debug, Serialize)]
pub struct SessionView {
    pub id: String,
    pub level: u32,
    pub tick: u32,
    pub max_steps: u32,
    pub tau_int: u32,
    pub finished: bool,
    pub awaiting: Vec<usize>,
    pub agents: Vec<AgentView>,
    pub locations: Vec<LocationView>,
    pub orders: Vec<OrderView>,
    pub events: Vec<Event>,
    pub feedback: Vec<String>,
    pub last_dispatch: Option<String>,
    pub spawned: usize,
    pub completed: usize,
    pub failed: usize,
    pub state_text: String,
    pub state_hash: String,
}

impl Session {
    pub fn create(
        id: String,
        request: CreateSession,
        pack: Arc<ContentPack>,
        profiles: Option<&Path>,
    ) -> Result<Self, ApiError> {
        let spec: PlannerSpec = request.planner.parse().map_err(ApiError::bad_request)?;
        if matches!(spec, PlannerSpec::Replay(_)) {
            return Err(ApiError::bad_request("sessions cannot use a replay planner"));
        }
        if request.agents == 0 {
            return Err(ApiError::bad_request("a session needs at least one agent"));
        }
        let mut roles = vec![Role::Planner; request.agents];
        for &a in &request.human_roles {
            match roles.get_mut(a) {
                Some(r @ Role::Planner) => *r = Role::Human,
                Some(Role::Human) => return Err(ApiError::bad_request(format!("agent{a} listed twice"))),
                None => return Err(ApiError::bad_request(format!("agent{a} does not exist"))),
            }
        }
        let level = pack
            .level(request.level)
            .ok_or_else(|| ApiError::bad_request(format!("no level {}", request.level)))?;
        let tau = match request.tau_int {
            Some(t) => t,
            None => level.tau_int_values.iter().copied().max().unwrap_or(1),
        };
        let mut config = EpisodeConfig::for_level(level, tau, request.seed);
        config.num_agents = request.agents;
        config.planner = request.planner.clone();
        if let Some(t) = request.max_steps {
            config.max_steps = t;
        }
        if let Some(name) = &request.ablation {
            config.toggles = PromptToggles::ablation(name)
                .ok_or_else(|| ApiError::bad_request(format!("unknown ablation {name}")))?;
        }
        if spec.owns_transport_retries() {
            config.transport_retries = 0;
        }
        let engine = Engine::new(pack, request.level).map_err(|e| ApiError::bad_request(e.to_string()))?;
        let mut runner = EpisodeRunner::new(config, engine).map_err(|e| ApiError::bad_request(e.to_string()))?;
        runner.begin_tick();
        let planner = spec
            .build(request.seed, profiles)
            .map_err(|e| ApiError::bad_request(e.to_string()))?;
        Ok(Self {
            id,
            request,
            roles,
            runner,
            planner,
            pending: BTreeMap::new(),
            last_events: Vec::new(),
            last_dispatch: None,
            last_activity: Instant::now(),
            log: None,
        })
    }

    /// Rebuilds a session from its log, replaying recorded completions and
    /// human commands, and checks every step's state hash on the way.
    pub fn restore(path: &Path, pack: Arc<ContentPack>, profiles: Option<&Path>) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let first = lines
            .next()
            .ok_or_else(|| anyhow::anyhow!("{} is empty", path.display()))?;
        let LogLine::Create { id, request } = serde_json::from_str(first)? else {
            anyhow::bail!("{} does not start with a create line", path.display());
        };
        let mut session = Session::create(id, request, pack, profiles).map_err(|e| anyhow::anyhow!(e.message))?;
        for line in lines {
            let LogLine::Step {
                tick,
                human,
                raw_outputs,
                state_hash,
            } = serde_json::from_str(line)?
            else {
                anyhow::bail!("unexpected create line in {}", path.display());
            };
            let overrides = human
                .iter()
                .map(|t| session.parse_command(t))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| anyhow::anyhow!(e.message))?;
            let mut replay = ReplayPlanner::new(raw_outputs);
            session.runner.step_with(&mut replay, &overrides)?;
            let got = hash_state(&session.runner.state);
            if got != state_hash {
                anyhow::bail!("tick {tick}: restored state {got:016x} differs from logged {state_hash:016x}");
            }
            if !session.runner.is_finished() {
                session.runner.begin_tick();
            }
        }
        session.log = Some(path.to_path_buf());
        Ok(session)
    }

    fn append(&self, line: &LogLine) -> Result<(), ApiError> {
        let Some(path) = &self.log else {
            return Ok(());
        };
        let write = || -> std::io::Result<()> {
            let mut f = OpenOptions::new().create(true).append(true).open(path)?;
            writeln!(f, "{}", serde_json::to_string(line).expect("log line serializes"))?;
            f.flush()
        };
        write().map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "persist_failed", e.to_string()))
    }

    pub fn is_finished(&self) -> bool {
        self.runner.is_finished()
    }

    pub fn awaiting(&self) -> Vec<usize> {
        (0..self.roles.len())
            .filter(|a| self.roles[*a] == Role::Human && !self.pending.contains_key(a))
            .collect()
    }

    fn parse_command(&self, text: &str) -> Result<Command, ApiError> {
        let vocab = Vocabulary::for_engine(&self.runner.engine);
        let r = extract_commands_with(text, self.roles.len(), &vocab);
        match r.commands.as_slice() {
            [one] if r.duplicate_agents.is_empty() => Ok(one.clone()),
            [] => Err(ApiError::bad_request(format!(
                "no command found in `{text}`: {}",
                r.diagnostics.join("; ")
            ))),
            _ => Err(ApiError::bad_request(format!("`{text}` holds more than one command"))),
        }
        .map_err(|e| ApiError {
            code: "malformed_command",
            ..e
        })
    }

    /// Queues a human command after checking role and validity against the
    /// current state.
    pub fn submit(&mut self, agent: Option<usize>, text: &str) -> Result<Command, ApiError> {
        if self.is_finished() {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                "episode_finished",
                "the episode is over",
            ));
        }
        let cmd = self.parse_command(text)?;
        let a = cmd.agent();
        if agent.is_some_and(|x| x != a) || self.roles.get(a) != Some(&Role::Human) {
            return Err(ApiError::new(
                StatusCode::FORBIDDEN,
                "role_mismatch",
                format!("agent{a} is not controlled by a human in this session"),
            ));
        }
        let verdict = self
            .runner
            .engine
            .validate_dispatch(&self.runner.state, &Dispatch(vec![cmd.clone()]))
            .remove(0);
        if let Verdict::Error { code, message } = verdict {
            return Err(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, code.as_str(), message));
        }
        self.pending.insert(a, cmd.clone());
        self.last_activity = Instant::now();
        Ok(cmd)
    }

    /// Runs one tick. Without `fill_missing`, every human must have a command
    /// queued; with it, missing humans noop.
    pub fn advance(&mut self, fill_missing: bool) -> Result<(), ApiError> {
        if self.is_finished() {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                "episode_finished",
                "the episode is over",
            ));
        }
        let awaiting = self.awaiting();
        if !awaiting.is_empty() && !fill_missing {
            let names: Vec<String> = awaiting.iter().map(|a| format!("agent{a}")).collect();
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                "inputs_incomplete",
                format!("waiting for {}", names.join(", ")),
            ));
        }
        let overrides: Vec<Command> = (0..self.roles.len())
            .filter(|a| self.roles[*a] == Role::Human)
            .map(|a| self.pending.get(&a).cloned().unwrap_or_else(|| Command::noop(a)))
            .collect();
        let record = self
            .runner
            .step_with(self.planner.as_mut(), &overrides)
            .map_err(|e| ApiError::new(StatusCode::BAD_GATEWAY, "planner_failed", format!("{}: {e}", e.code())))?;
        let line = LogLine::Step {
            tick: record.tick,
            human: overrides.iter().map(Command::to_string).collect(),
            raw_outputs: record.raw_outputs.clone(),
            state_hash: record.state_hash,
        };
        self.last_events = record.events.clone();
        self.last_dispatch = Some(record.dispatch.clone());
        self.pending.clear();
        self.last_activity = Instant::now();
        if !self.runner.is_finished() {
            self.runner.begin_tick();
        }
        self.append(&line)
    }

    pub fn view(&self) -> SessionView {
        let state = &self.runner.state;
        let count = |s: OrderStatus| state.orders.iter().filter(|o| o.status == s).count();
        SessionView {
            id: self.id.clone(),
            level: self.request.level,
            tick: state.tick,
            max_steps: self.runner.config.max_steps,
            tau_int: self.runner.config.tau_int,
            finished: self.is_finished(),
            awaiting: if self.is_finished() {
                Vec::new()
            } else {
                self.awaiting()
            },
            agents: state
                .agents
                .iter()
                .map(|a| AgentView {
                    id: a.id,
                    role: self.roles[a.id],
                    at: a.at.clone(),
                    holding: a.holding.expanded().map(str::to_string).collect(),
                    busy_remaining: a.busy_remaining,
                    pending: self.pending.get(&a.id).map(Command::to_string),
                })
                .collect(),
            locations: state
                .locations
                .values()
                .map(|l| LocationView {
                    id: l.id.clone(),
                    kind: match l.kind {
                        LocationKind::Storage => "storage",
                        LocationKind::ServingTable => "serving_table",
                        LocationKind::Tool { .. } => "tool",
                    },
                    contents: l.contents.expanded().map(str::to_string).collect(),
                    busy_remaining: l.busy_remaining,
                })
                .collect(),
            orders: state
                .orders
                .iter()
                .filter(|o| o.is_active())
                .map(|o| OrderView {
                    id: o.id,
                    dish: o.dish.clone(),
                    spawned_at: o.spawned_at,
                    lifetime: o.lifetime,
                    remaining: o.remaining(state.tick),
                })
                .collect(),
            events: self.last_events.clone(),
            feedback: state.feedback.clone(),
            last_dispatch: self.last_dispatch.clone(),
            spawned: state.orders.len(),
            completed: count(OrderStatus::Completed),
            failed: count(OrderStatus::Failed),
            state_text: render_state(state),
            state_hash: format!("{:016x}", hash_state(state)),
        }
    }

    pub fn report(&self) -> serde_json::Value {
        let r = &self.runner;
        let count = |s: OrderStatus| r.state.orders.iter().filter(|o| o.status == s).count() as u32;
        let report = EpisodeReport {
            config: r.config.clone(),
            spawned: r.state.orders.len() as u32,
            completed: count(OrderStatus::Completed),
            failed: count(OrderStatus::Failed),
            active_at_end: count(OrderStatus::Active),
            orders: r.state.orders.clone(),
            steps: r.steps.clone(),
            final_hash: hash_state(&r.state),
            aborted: r.aborted.clone(),
        };
        json!({"summary": report.summary(), "steps": report.steps})
    }

    pub fn steps_jsonl(&self) -> String {
        self.runner
            .steps
            .iter()
            .map(|s| serde_json::to_string(s).expect("step serializes") + "\n")
            .collect()
    }
}

type SessionRef = Arc<Mutex<Session>>;

pub struct AppState {
    pack: Arc<ContentPack>,
    sessions: RwLock<BTreeMap<String, SessionRef>>,
    next_id: AtomicU64,
    data_dir: Option<PathBuf>,
    profiles: Option<PathBuf>,
    turn_deadline: Option<Duration>,
}

impl AppState {
    pub fn new(pack: Arc<ContentPack>) -> Self {
        Self {
            pack,
            sessions: RwLock::default(),
            next_id: AtomicU64::new(1),
            data_dir: None,
            profiles: None,
            turn_deadline: None,
        }
    }

    /// Persist sessions under `dir`, restoring any logs already there.
    pub fn with_data_dir(mut self, dir: impl Into<PathBuf>) -> anyhow::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        let mut paths: Vec<PathBuf> = fs::read_dir(&dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        paths.sort();
        let mut max_id = 0;
        for path in paths {
            let session = Session::restore(&path, self.pack.clone(), self.profiles.as_deref())?;
            if let Some(n) = session.id.strip_prefix('s').and_then(|n| n.parse::<u64>().ok()) {
                max_id = max_id.max(n);
            }
            log::info!("restored session {} at tick {}", session.id, session.runner.state.tick);
            self.sessions
                .write()
                .expect("session map")
                .insert(session.id.clone(), Arc::new(Mutex::new(session)));
        }
        self.next_id = AtomicU64::new(max_id + 1);
        self.data_dir = Some(dir);
        Ok(self)
    }

    pub fn with_profiles(mut self, path: Option<PathBuf>) -> Self {
        self.profiles = path;
        self
    }

    pub fn with_turn_deadline(mut self, deadline: Option<Duration>) -> Self {
        self.turn_deadline = deadline;
        self
    }

    fn session(&self, id: &str) -> Result<SessionRef, ApiError> {
        self.sessions
            .read()
            .expect("session map")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "unknown_session", format!("no session {id}")))
    }

    pub fn create_session(&self, request: CreateSession) -> Result<SessionView, ApiError> {
        let id = format!("s{:04}", self.next_id.fetch_add(1, Ordering::SeqCst));
        let mut session = Session::create(id.clone(), request.clone(), self.pack.clone(), self.profiles.as_deref())?;
        if let Some(dir) = &self.data_dir {
            session.log = Some(dir.join(format!("{id}.jsonl")));
            session.append(&LogLine::Create {
                id: id.clone(),
                request,
            })?;
        }
        let view = session.view();
        self.sessions
            .write()
            .expect("session map")
            .insert(id, Arc::new(Mutex::new(session)));
        Ok(view)
    }

    pub fn session_ids(&self) -> Vec<String> {
        self.sessions.read().expect("session map").keys().cloned().collect()
    }

    /// Steps every session whose humans have been idle past the deadline.
    pub fn auto_step_due(&self) -> Vec<String> {
        let Some(deadline) = self.turn_deadline else {
            return Vec::new();
        };
        let sessions: Vec<SessionRef> = self.sessions.read().expect("session map").values().cloned().collect();
        let mut stepped = Vec::new();
        for s in sessions {
            let mut s = s.lock().expect("session");
            if !s.is_finished() && s.last_activity.elapsed() >= deadline {
                match s.advance(true) {
                    Ok(()) => stepped.push(s.id.clone()),
                    Err(e) => log::warn!("auto-step of {} failed: {}", s.id, e.message),
                }
            }
        }
        stepped
    }
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
}

async fn create(
    State(app): State<Arc<AppState>>,
    body: Result<Json<CreateSession>, JsonRejection>,
) -> Result<(StatusCode, Json<SessionView>), ApiError> {
    let Json(request) = body?;
    let view = blocking(move || app.create_session(request)).await?;
    Ok((StatusCode::CREATED, Json(view)))
}

async fn list(State(app): State<Arc<AppState>>) -> Json<serde_json::Value> {
    Json(json!({"sessions": app.session_ids()}))
}

async fn get_state(
    State(app): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<SessionView>, ApiError> {
    let s = app.session(&id)?;
    let view = s.lock().expect("session").view();
    Ok(Json(view))
}

#[derive(Debug, Deserialize)]
pub struct SubmitCommand {
    #[serde(default)]
    pub agent: Option<usize>,
    pub command: String,
}

async fn command(
    State(app): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<SubmitCommand>, JsonRejection>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let Json(req) = body?;
    let s = app.session(&id)?;
    let mut s = s.lock().expect("session");
    let cmd = s.submit(req.agent, &req.command)?;
    Ok(Json(json!({
        "accepted": true,
        "agent": cmd.agent(),
        "command": cmd.to_string(),
        "awaiting": s.awaiting(),
    })))
}

async fn step(State(app): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> Result<Json<SessionView>, ApiError> {
    let s = app.session(&id)?;
    let view = blocking(move || {
        let mut s = s.lock().expect("session");
        s.advance(false)?;
        Ok(s.view())
    })
    .await?;
    Ok(Json(view))
}

async fn report(
    State(app): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let s = app.session(&id)?;
    let r = s.lock().expect("session").report();
    Ok(Json(r))
}

async fn replay_log(State(app): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> Result<Response, ApiError> {
    let s = app.session(&id)?;
    let body = s.lock().expect("session").steps_jsonl();
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response())
}

pub fn router(app: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create).get(list))
        .route("/sessions/{id}/state", get(get_state))
        .route("/sessions/{id}/command", post(command))
        .route("/sessions/{id}/step", post(step))
        .route("/sessions/{id}/report", get(report))
        .route("/sessions/{id}/replay", get(replay_log))
        .with_state(app)
}

pub async fn serve(addr: SocketAddr, app: Arc<AppState>) -> anyhow::Result<()> {
    if let Some(deadline) = app.turn_deadline {
        let ticker = app.clone();
        tokio::spawn(async move {
            let mut every = tokio::time::interval((deadline / 4).max(Duration::from_millis(50)));
            loop {
                every.tick().await;
                let app = ticker.clone();
                let _ = tokio::task::spawn_blocking(move || app.auto_step_due()).await;
            }
        });
    }
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(app))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
