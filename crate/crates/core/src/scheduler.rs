//! Order lifecycle and the episode loop.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::content::{ContentPack, LevelSpec};
use crate::dispatcher::{degrade, plan_step, DispatcherContext, PromptBundle, PromptToggles, StepOutcome};
use crate::engine::{
    codes, digest64, hash_state, render_observation, Command, Dispatch, Engine, EngineError, Event, GameState, Verdict,
    SERVING_TABLE,
};
use crate::metrics::IntervalCounts;
use crate::planners::Planner;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderStatus {
    Active,
    Completed,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Order {
    pub id: u32,
    pub dish: String,
    pub spawned_at: u32,
    pub lifetime: u32,
    pub status: OrderStatus,
    #[serde(default)]
    pub resolved_at: Option<u32>,
}

impl Order {
    pub fn deadline(&self) -> u32 {
        self.spawned_at + self.lifetime
    }

    pub fn remaining(&self, tick: u32) -> u32 {
        self.deadline().saturating_sub(tick)
    }

    pub fn is_active(&self) -> bool {
        self.status == OrderStatus::Active
    }
}

/// Adds one order drawn uniformly from the level's pool when the current tick
/// is a multiple of `tau_int` (so the first order arrives at tick 0).
pub fn spawn_orders(state: &mut GameState, level: &LevelSpec, tau_int: u32, pack: &ContentPack) -> Vec<Event> {
    if tau_int == 0 || !state.tick.is_multiple_of(tau_int) || level.order_pool.is_empty() {
        return Vec::new();
    }
    // Sampled as u32 so 32-bit targets draw the same stream.
    let pick = state.rng.gen_range(0..level.order_pool.len() as u32) as usize;
    let dish = level.order_pool[pick].clone();
    let lifetime = pack.dish(&dish).map_or(1, |d| d.lifetime);
    let id = state.next_order_id;
    state.next_order_id += 1;
    let event = Event::info(
        state.tick,
        codes::ORDER_SPAWNED,
        format!("new order{id}: {dish}, {lifetime} steps to finish"),
        None,
    );
    state.orders.push(Order {
        id,
        dish,
        spawned_at: state.tick,
        lifetime,
        status: OrderStatus::Active,
        resolved_at: None,
    });
    state.feedback.push(event.feedback_line());
    vec![event]
}

/// Matches served dishes to the oldest active order of the same dish, then
/// fails every active order whose lifetime has run out. Unmatched dishes stay
/// on the table.
pub fn resolve_orders(state: &mut GameState) -> Vec<Event> {
    let tick = state.tick;
    let mut events = Vec::new();
    let served: Vec<String> = state
        .location(SERVING_TABLE)
        .map(|t| t.contents.expanded().map(str::to_string).collect())
        .unwrap_or_default();
    for dish in served {
        let oldest = state
            .orders
            .iter_mut()
            .filter(|o| o.is_active() && o.dish == dish)
            .min_by_key(|o| (o.spawned_at, o.id));
        if let Some(order) = oldest {
            order.status = OrderStatus::Completed;
            order.resolved_at = Some(tick);
            events.push(Event::info(
                tick,
                codes::TASK_COMPLETED,
                format!("order{} ({dish}) completed", order.id),
                None,
            ));
            if let Some(table) = state.locations.get_mut(SERVING_TABLE) {
                table.contents.remove_one(&dish);
            }
        }
    }
    for order in state.orders.iter_mut().filter(|o| o.is_active()) {
        if tick - order.spawned_at >= order.lifetime {
            order.status = OrderStatus::Failed;
            order.resolved_at = Some(tick);
            events.push(Event::info(
                tick,
                codes::TASK_FAILED,
                format!("order{} ({}) failed: lifetime ran out", order.id, order.dish),
                None,
            ));
        }
    }
    state.feedback.extend(events.iter().map(Event::feedback_line));
    events
}

fn default_memory_horizon() -> usize {
    crate::dispatcher::DEFAULT_MEMORY_HORIZON
}

fn default_retries() -> u32 {
    crate::dispatcher::DEFAULT_RETRIES
}

fn default_transport_retries() -> u32 {
    crate::dispatcher::DEFAULT_TRANSPORT_RETRIES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeConfig {
    pub level: u32,
    pub num_agents: usize,
    pub tau_int: u32,
    pub max_steps: u32,
    pub seed: u64,
    #[serde(default)]
    pub toggles: PromptToggles,
    /// Agent count the demonstration was authored for; defaults to `num_agents`.
    #[serde(default)]
    pub demo_agents: Option<usize>,
    #[serde(default = "default_memory_horizon")]
    pub memory_horizon: usize,
    #[serde(default = "default_retries")]
    pub retries: u32,
    #[serde(default = "default_transport_retries")]
    pub transport_retries: u32,
    /// Keep every assembled prompt in the step records.
    #[serde(default)]
    pub log_prompts: bool,
    /// Free-form planner description echoed into the report.
    #[serde(default)]
    pub planner: String,
}

impl EpisodeConfig {
    /// Level defaults: shipped agent count and step budget, the given task
    /// interval.
    pub fn for_level(level: &LevelSpec, tau_int: u32, seed: u64) -> Self {
        Self {
            level: level.id,
            num_agents: level.default_agents as usize,
            tau_int,
            max_steps: level.max_steps,
            seed,
            toggles: PromptToggles::default(),
            demo_agents: None,
            memory_horizon: default_memory_horizon(),
            retries: default_retries(),
            transport_retries: default_transport_retries(),
            log_prompts: false,
            planner: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub tick: u32,
    pub state_text: String,
    /// Every planner completion for this step, retries included.
    pub raw_outputs: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub prompts: Vec<String>,
    /// Canonical text of the dispatch actually executed.
    pub dispatch: String,
    /// Verdicts on the last parsed proposal, before degradation.
    pub verdicts: Vec<Verdict>,
    pub diagnostics: Vec<String>,
    pub events: Vec<Event>,
    pub state_hash: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeReport {
    pub config: EpisodeConfig,
    pub spawned: u32,
    pub completed: u32,
    pub failed: u32,
    pub active_at_end: u32,
    pub orders: Vec<Order>,
    pub steps: Vec<StepRecord>,
    pub final_hash: u64,
    /// Set when the planner failed and the episode stopped early.
    #[serde(default)]
    pub aborted: Option<String>,
}

/// Everything in the report except the step log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub config: EpisodeConfig,
    pub spawned: u32,
    pub completed: u32,
    pub failed: u32,
    pub active_at_end: u32,
    pub orders: Vec<Order>,
    pub steps_run: usize,
    pub final_hash: u64,
    pub report_hash: u64,
    #[serde(default)]
    pub aborted: Option<String>,
}

impl EpisodeReport {
    /// Digest of the whole report, step log included.
    pub fn report_hash(&self) -> u64 {
        let value = serde_json::to_value(self).expect("report serializes");
        digest64(value.to_string().as_bytes())
    }

    pub fn interval_counts(&self) -> IntervalCounts {
        IntervalCounts::new(self.config.tau_int, self.completed, self.failed)
    }

    pub fn summary(&self) -> EpisodeSummary {
        EpisodeSummary {
            config: self.config.clone(),
            spawned: self.spawned,
            completed: self.completed,
            failed: self.failed,
            active_at_end: self.active_at_end,
            orders: self.orders.clone(),
            steps_run: self.steps.len(),
            final_hash: self.final_hash,
            report_hash: self.report_hash(),
            aborted: self.aborted.clone(),
        }
    }

    /// One JSON object per step.
    pub fn steps_jsonl(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            out.push_str(&serde_json::to_string(s).expect("step serializes"));
            out.push('\n');
        }
        out
    }

    /// Rebuilds a report from its summary and step log.
    pub fn from_parts(summary: EpisodeSummary, steps: Vec<StepRecord>) -> Self {
        EpisodeReport {
            config: summary.config,
            spawned: summary.spawned,
            completed: summary.completed,
            failed: summary.failed,
            active_at_end: summary.active_at_end,
            orders: summary.orders,
            steps,
            final_hash: summary.final_hash,
            aborted: summary.aborted,
        }
    }
}

pub fn parse_steps_jsonl(text: &str) -> Result<Vec<StepRecord>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

#[derive(Debug, Error)]
pub enum EpisodeError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("invalid episode config: {0}")]
    Config(String),
    #[error("could not build the prompt: {0}")]
    Prompt(String),
}

/// Runs one episode: spawn, render, plan, apply, resolve, for `max_steps`
/// ticks. A planner failure ends the episode early with `aborted` set.
pub fn run_episode(
    config: &EpisodeConfig,
    pack: Arc<ContentPack>,
    planner: &mut dyn Planner,
) -> Result<EpisodeReport, EpisodeError> {
    let engine = Engine::new(pack, config.level)?;
    let mut runner = EpisodeRunner::new(config.clone(), engine)?;
    while !runner.is_finished() {
        if let Err(e) = runner.step(planner) {
            runner.aborted = Some(e.to_string());
            break;
        }
    }
    Ok(runner.into_report())
}

/// Step-at-a-time episode driver, shared by batch runs and interactive play.
pub struct EpisodeRunner {
    pub config: EpisodeConfig,
    pub engine: Engine,
    pub state: GameState,
    pub ctx: DispatcherContext,
    pub steps: Vec<StepRecord>,
    pub aborted: Option<String>,
}

impl EpisodeRunner {
    pub fn new(config: EpisodeConfig, engine: Engine) -> Result<Self, EpisodeError> {
        if config.tau_int == 0 {
            return Err(EpisodeError::Config("tau_int must be positive".into()));
        }
        if config.max_steps < config.tau_int {
            return Err(EpisodeError::Config(format!(
                "max_steps {} is shorter than tau_int {}",
                config.max_steps, config.tau_int
            )));
        }
        let state = engine.initial_state(config.num_agents, config.seed)?;
        let bundle = PromptBundle::for_level(&engine, config.num_agents, config.demo_agents, config.toggles.clone())
            .map_err(|e| EpisodeError::Prompt(e.to_string()))?;
        let mut ctx = DispatcherContext::new(bundle, config.memory_horizon);
        ctx.retries = config.retries;
        ctx.transport_retries = config.transport_retries;
        ctx.log_prompts = config.log_prompts;
        Ok(Self {
            config,
            engine,
            state,
            ctx,
            steps: Vec::new(),
            aborted: None,
        })
    }

    pub fn is_finished(&self) -> bool {
        self.aborted.is_some() || self.state.tick >= self.config.max_steps
    }

    /// Spawns this tick's order (if due) without planning. Idempotent per tick.
    pub fn begin_tick(&mut self) {
        let already = self
            .state
            .orders
            .last()
            .is_some_and(|o| o.spawned_at == self.state.tick);
        if !already {
            let level = self.engine.level().clone();
            spawn_orders(&mut self.state, &level, self.config.tau_int, self.engine.pack());
        }
    }

    pub fn step(&mut self, planner: &mut dyn Planner) -> Result<&StepRecord, crate::planners::PlannerError> {
        self.step_with(planner, &[])
    }

    /// One tick where `overrides` replace the planner's command for their
    /// agents (human players). The planner is not queried when every agent is
    /// overridden. The merged dispatch is validated and degraded as usual.
    pub fn step_with(
        &mut self,
        planner: &mut dyn Planner,
        overrides: &[Command],
    ) -> Result<&StepRecord, crate::planners::PlannerError> {
        self.begin_tick();
        let tick = self.state.tick;
        let n = self.state.num_agents();
        let state_text = render_observation(&self.state, self.config.toggles.include_feedback);
        let overridden = |a: usize| overrides.iter().any(|c| c.agent() == a);
        let mut outcome = if (0..n).all(overridden) {
            StepOutcome {
                dispatch: Dispatch::noops(n),
                raw_outputs: Vec::new(),
                prompts: Vec::new(),
                verdicts: Vec::new(),
                diagnostics: Vec::new(),
                feedback: Vec::new(),
            }
        } else {
            plan_step(&mut self.ctx, &self.engine, &self.state, planner)?
        };
        if !overrides.is_empty() {
            let merged = Dispatch(
                (0..n)
                    .map(|a| {
                        overrides
                            .iter()
                            .chain(outcome.dispatch.commands())
                            .find(|c| c.agent() == a)
                            .cloned()
                            .unwrap_or_else(|| Command::noop(a))
                    })
                    .collect(),
            );
            let verdicts = self.engine.validate_dispatch(&self.state, &merged);
            outcome.dispatch = degrade(&self.engine, &self.state, &merged, &verdicts);
            outcome.verdicts = verdicts;
            if let Some(last) = self.ctx.memory.last_mut() {
                last.dispatch_text = outcome.dispatch.to_string();
            }
        }
        let mut events = self.engine.step(&mut self.state, &outcome.dispatch);
        events.extend(resolve_orders(&mut self.state));
        self.steps.push(StepRecord {
            tick,
            state_text,
            raw_outputs: outcome.raw_outputs,
            prompts: outcome.prompts,
            dispatch: outcome.dispatch.to_string(),
            verdicts: outcome.verdicts,
            diagnostics: outcome.diagnostics,
            events,
            state_hash: hash_state(&self.state),
        });
        Ok(self.steps.last().expect("just pushed"))
    }

    pub fn into_report(self) -> EpisodeReport {
        let count = |s: OrderStatus| self.state.orders.iter().filter(|o| o.status == s).count() as u32;
        EpisodeReport {
            spawned: self.state.orders.len() as u32,
            completed: count(OrderStatus::Completed),
            failed: count(OrderStatus::Failed),
            active_at_end: count(OrderStatus::Active),
            orders: self.state.orders.clone(),
            final_hash: hash_state(&self.state),
            steps: self.steps,
            aborted: self.aborted,
            config: self.config,
        }
    }
}
