//! The kitchen state machine: dispatch validation, transitions, rendering.

mod command;
mod render;
mod state;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::content::{ContentPack, ItemKind, LevelSpec};
use crate::multiset::Multiset;

pub use command::{Command, Dispatch};
pub use render::{render_observation, render_state};
pub use state::{AgentState, GameState, Location, LocationKind, SERVING_TABLE, STORAGE};

pub const DUPLICATE_AGENT_MESSAGE: &str = "agent ids cannot be the same";
pub const COLLECT_FINISH_MESSAGE: &str = "collect finish";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    DuplicateAgent,
    UnknownAgent,
    AgentBusy,
    UnknownLocation,
    NotAtLocation,
    ItemAbsent,
    ToolOccupied,
    NotATool,
    InvalidMixture,
    EmptyHands,
    InvalidServe,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::DuplicateAgent => "duplicate_agent",
            ErrorCode::UnknownAgent => "unknown_agent",
            ErrorCode::AgentBusy => "agent_busy",
            ErrorCode::UnknownLocation => "unknown_location",
            ErrorCode::NotAtLocation => "not_at_location",
            ErrorCode::ItemAbsent => "item_absent",
            ErrorCode::ToolOccupied => "tool_occupied",
            ErrorCode::NotATool => "not_a_tool",
            ErrorCode::InvalidMixture => "invalid_mixture",
            ErrorCode::EmptyHands => "empty_hands",
            ErrorCode::InvalidServe => "invalid_serve",
        }
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Ok,
    Error { code: ErrorCode, message: String },
}

impl Verdict {
    pub fn is_ok(&self) -> bool {
        matches!(self, Verdict::Ok)
    }

    pub fn code(&self) -> Option<ErrorCode> {
        match self {
            Verdict::Ok => None,
            Verdict::Error { code, .. } => Some(*code),
        }
    }

    pub fn error(code: ErrorCode, message: impl Into<String>) -> Self {
        Verdict::Error {
            code,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Info,
    Error,
}

pub mod codes {
    pub const COLLECT_FINISH: &str = "collect_finish";
    pub const COOK_FINISH: &str = "cook_finish";
    pub const ORDER_SPAWNED: &str = "order_spawned";
    pub const TASK_COMPLETED: &str = "task_completed";
    pub const TASK_FAILED: &str = "task_failed";
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub tick: u32,
    pub severity: Severity,
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agent: Option<usize>,
}

impl Event {
    pub fn info(tick: u32, code: &str, message: impl Into<String>, agent: Option<usize>) -> Self {
        Event {
            tick,
            severity: Severity::Info,
            code: code.to_string(),
            message: message.into(),
            agent,
        }
    }

    fn rejected(tick: u32, agent: usize, code: ErrorCode, message: String) -> Self {
        Event {
            tick,
            severity: Severity::Error,
            code: code.as_str().to_string(),
            message,
            agent: Some(agent),
        }
    }

    /// Feedback line as shown to the dispatcher.
    pub fn feedback_line(&self) -> String {
        match self.agent {
            Some(a) => format!("agent{a}: {}", self.message),
            None => self.message.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("unknown level {0}")]
    UnknownLevel(u32),
    #[error("an episode needs at least one agent")]
    NoAgents,
}

/// Rules for one kitchen layout. Cheap to clone; the pack is shared.
#[derive(Debug, Clone)]
pub struct Engine {
    pack: Arc<ContentPack>,
    level: LevelSpec,
}

impl Engine {
    pub fn new(pack: Arc<ContentPack>, level_id: u32) -> Result<Self, EngineError> {
        let level = pack
            .level(level_id)
            .cloned()
            .ok_or(EngineError::UnknownLevel(level_id))?;
        Ok(Self { pack, level })
    }

    /// An engine for an ad-hoc kitchen (used for demonstrations and tests).
    pub fn for_level(pack: Arc<ContentPack>, level: LevelSpec) -> Self {
        Self { pack, level }
    }

    pub fn pack(&self) -> &ContentPack {
        &self.pack
    }

    pub fn pack_arc(&self) -> &Arc<ContentPack> {
        &self.pack
    }

    pub fn level(&self) -> &LevelSpec {
        &self.level
    }

    /// Location ids in kitchen order: storage, serving table, then tools.
    pub fn location_ids(&self) -> Vec<String> {
        let mut ids = vec![STORAGE.to_string(), SERVING_TABLE.to_string()];
        ids.extend(self.level.tools.iter().cloned());
        ids
    }

    pub fn is_storage_ingredient(&self, item: &str) -> bool {
        self.level.ingredients.iter().any(|i| i == item)
    }

    /// All agents at storage, every tool empty, no orders yet.
    pub fn initial_state(&self, num_agents: usize, seed: u64) -> Result<GameState, EngineError> {
        if num_agents == 0 {
            return Err(EngineError::NoAgents);
        }
        let mut locations = BTreeMap::new();
        let mut add = |id: &str, kind: LocationKind| {
            locations.insert(
                id.to_string(),
                Location {
                    id: id.to_string(),
                    kind,
                    contents: Multiset::new(),
                    busy_remaining: 0,
                    cooking: None,
                },
            );
        };
        add(STORAGE, LocationKind::Storage);
        add(SERVING_TABLE, LocationKind::ServingTable);
        for tool in &self.level.tools {
            let spec = self.pack.tool(tool);
            add(
                tool,
                LocationKind::Tool {
                    tool: tool.clone(),
                    cook_duration_ticks: spec.map(|t| t.duration).unwrap_or(1),
                    attended: spec.is_some_and(|t| t.attended),
                },
            );
        }
        let agents = (0..num_agents)
            .map(|id| AgentState {
                id,
                at: STORAGE.to_string(),
                holding: Multiset::new(),
                busy_remaining: 0,
            })
            .collect();
        Ok(GameState {
            tick: 0,
            locations,
            agents,
            orders: Vec::new(),
            next_order_id: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            feedback: Vec::new(),
        })
    }

    /// Look-ahead check of every command on a scratch copy, in list order.
    pub fn validate_dispatch(&self, state: &GameState, dispatch: &Dispatch) -> Vec<Verdict> {
        let mut scratch = state.clone();
        let mut seen = vec![false; state.agents.len()];
        let mut sink = Vec::new();
        dispatch
            .commands()
            .iter()
            .map(|c| self.execute(&mut scratch, c, &mut seen, &mut sink))
            .collect()
    }

    /// Executes the dispatch and advances one tick. Commands failing their
    /// check are skipped and reported as error events.
    pub fn apply_dispatch(&self, state: &GameState, dispatch: &Dispatch) -> (GameState, Vec<Event>) {
        let mut next = state.clone();
        let events = self.step(&mut next, dispatch);
        (next, events)
    }

    pub fn step(&self, state: &mut GameState, dispatch: &Dispatch) -> Vec<Event> {
        let mut seen = vec![false; state.agents.len()];
        let mut events = Vec::new();
        for cmd in dispatch.commands() {
            self.execute(state, cmd, &mut seen, &mut events);
        }
        self.advance_clock(state, &mut events);
        state.feedback = events.iter().map(Event::feedback_line).collect();
        events
    }

    /// Runs one command against `state` at its current moment. On success the
    /// state is mutated; on failure an error event is pushed and nothing else
    /// changes.
    pub fn execute(&self, state: &mut GameState, cmd: &Command, seen: &mut [bool], events: &mut Vec<Event>) -> Verdict {
        let verdict = self.check(state, cmd, seen);
        let agent = cmd.agent();
        if agent < seen.len() {
            seen[agent] = true;
        }
        match &verdict {
            Verdict::Ok => self.perform(state, cmd, events),
            Verdict::Error { code, message } => events.push(Event::rejected(state.tick, agent, *code, message.clone())),
        }
        verdict
    }

    fn check(&self, state: &GameState, cmd: &Command, seen: &[bool]) -> Verdict {
        let idx = cmd.agent();
        let Some(agent) = state.agents.get(idx) else {
            return Verdict::error(ErrorCode::UnknownAgent, format!("agent{idx} does not exist"));
        };
        if seen[idx] {
            return Verdict::error(ErrorCode::DuplicateAgent, DUPLICATE_AGENT_MESSAGE);
        }
        if let Command::Noop { .. } = cmd {
            return Verdict::Ok;
        }
        if agent.is_busy() {
            return Verdict::error(
                ErrorCode::AgentBusy,
                format!("agent{idx} is occupied and cannot take commands"),
            );
        }
        let loc_id = cmd.location().unwrap_or_default();
        let Some(loc) = state.locations.get(loc_id) else {
            return Verdict::error(
                ErrorCode::UnknownLocation,
                format!("{loc_id} is not a location in this kitchen"),
            );
        };
        if !matches!(cmd, Command::Goto { .. }) && agent.at != loc.id {
            return Verdict::error(ErrorCode::NotAtLocation, format!("agent{idx} is not at {loc_id}"));
        }
        match cmd {
            Command::Goto { .. } | Command::Noop { .. } => Verdict::Ok,
            Command::Get { item, .. } => {
                if loc.is_busy() {
                    return Verdict::error(ErrorCode::ToolOccupied, format!("{loc_id} is occupied"));
                }
                let available = match loc.kind {
                    LocationKind::Storage => self.is_storage_ingredient(item),
                    _ => loc.contents.contains(item),
                };
                if available {
                    Verdict::Ok
                } else {
                    Verdict::error(ErrorCode::ItemAbsent, format!("{item} is not available at {loc_id}"))
                }
            }
            Command::Put { .. } => {
                if agent.holding.is_empty() {
                    return Verdict::error(ErrorCode::EmptyHands, format!("agent{idx} is not holding anything"));
                }
                match loc.kind {
                    LocationKind::Storage => Verdict::Ok,
                    LocationKind::ServingTable => {
                        let all_dishes = agent
                            .holding
                            .distinct()
                            .all(|i| self.pack.kind_of(i) == Some(ItemKind::Dish));
                        if all_dishes {
                            Verdict::Ok
                        } else {
                            Verdict::error(
                                ErrorCode::InvalidServe,
                                format!("only finished dishes can be put on the {SERVING_TABLE}"),
                            )
                        }
                    }
                    LocationKind::Tool { .. } if loc.is_busy() => {
                        Verdict::error(ErrorCode::ToolOccupied, format!("{loc_id} is occupied"))
                    }
                    LocationKind::Tool { .. } => Verdict::Ok,
                }
            }
            Command::Activate { .. } => {
                let Some(tool) = loc.tool_name() else {
                    return Verdict::error(ErrorCode::NotATool, format!("{loc_id} is not a cooking tool"));
                };
                if loc.is_busy() {
                    return Verdict::error(ErrorCode::ToolOccupied, format!("{loc_id} is occupied"));
                }
                if self.pack.recipe_matching(tool, &loc.contents).is_some() {
                    Verdict::Ok
                } else {
                    Verdict::error(
                        ErrorCode::InvalidMixture,
                        format!("the contents of {loc_id} do not match any recipe"),
                    )
                }
            }
        }
    }

    fn perform(&self, state: &mut GameState, cmd: &Command, events: &mut Vec<Event>) {
        let tick = state.tick;
        match cmd {
            Command::Noop { .. } => {}
            Command::Goto { agent, location } => {
                state.agents[*agent].at = location.clone();
            }
            Command::Get { agent, location, item } => {
                let loc = state.locations.get_mut(location).expect("checked");
                if loc.kind != LocationKind::Storage {
                    loc.contents.remove_one(item);
                }
                state.agents[*agent].holding.insert(item.clone());
                events.push(Event::info(
                    tick,
                    codes::COLLECT_FINISH,
                    COLLECT_FINISH_MESSAGE,
                    Some(*agent),
                ));
            }
            Command::Put { agent, location } => {
                let held = state.agents[*agent].holding.take();
                let loc = state.locations.get_mut(location).expect("checked");
                // storage swallows whatever is put there
                if loc.kind != LocationKind::Storage {
                    loc.contents.extend_from(&held);
                }
            }
            Command::Activate { agent, location } => {
                let loc = state.locations.get_mut(location).expect("checked");
                let LocationKind::Tool { tool, attended, .. } = &loc.kind else {
                    unreachable!("checked")
                };
                let recipe = self.pack.recipe_matching(tool, &loc.contents).expect("checked");
                loc.busy_remaining = recipe.duration;
                loc.cooking = Some(recipe.output.clone());
                if *attended {
                    state.agents[*agent].busy_remaining = recipe.duration;
                }
            }
        }
    }

    fn advance_clock(&self, state: &mut GameState, events: &mut Vec<Event>) {
        let tick = state.tick;
        for agent in &mut state.agents {
            agent.busy_remaining = agent.busy_remaining.saturating_sub(1);
        }
        for loc in state.locations.values_mut() {
            if loc.busy_remaining == 0 {
                continue;
            }
            loc.busy_remaining -= 1;
            if loc.busy_remaining == 0 {
                if let Some(output) = loc.cooking.take() {
                    loc.contents.clear();
                    loc.contents.insert(output.clone());
                    events.push(Event::info(
                        tick,
                        codes::COOK_FINISH,
                        format!("{output} is ready in {}", loc.id),
                        None,
                    ));
                }
            }
        }
        state.tick += 1;
    }
}

/// Canonical serialization: JSON with object keys sorted.
pub fn canonical_json(state: &GameState) -> String {
    // serde_json::Value keeps keys in a BTreeMap, which sorts them.
    let value = serde_json::to_value(state).expect("state serializes");
    value.to_string()
}

/// 64-bit digest of the canonical serialization.
pub fn hash_state(state: &GameState) -> u64 {
    digest64(canonical_json(state).as_bytes())
}

pub(crate) fn digest64(bytes: &[u8]) -> u64 {
    let digest = Sha256::digest(bytes);
    let mut first = [0u8; 8];
    first.copy_from_slice(&digest[..8]);
    u64::from_be_bytes(first)
}
