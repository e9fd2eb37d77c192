//! The dispatcher loop: assemble a prompt, query the planner, extract and
//! validate commands, feed errors back, and degrade what still fails.

mod demo;
mod extract;
mod memory;
mod prompt;

use serde::{Deserialize, Serialize};

pub use demo::{demo_kitchen, synthesize_demo, DemoError, DemoStep, MAX_DEMO_STEPS};
pub use extract::{extract_commands, extract_commands_with, ExtractionResult, Vocabulary};
pub use memory::{MemoryEntry, MemoryWindow};
pub use prompt::{
    assemble_prompt, recipes_text, DemoSteps, PromptBundle, PromptError, PromptTemplate, PromptToggles, SECTION_DEMO,
    SECTION_FEEDBACK, SECTION_INSTRUCTIONS, SECTION_KNOWLEDGE, SECTION_MEMORY, SECTION_OUTPUT, SECTION_RECIPES,
    SECTION_STATE,
};

use crate::engine::{
    render_observation, Command, Dispatch, Engine, ErrorCode, GameState, Verdict, DUPLICATE_AGENT_MESSAGE,
};
use crate::planners::{PlanRequest, Planner, PlannerError};

pub const DEFAULT_MEMORY_HORIZON: usize = 3;
/// Feedback re-queries within one step before degrading.
pub const DEFAULT_RETRIES: u32 = 1;
/// Re-queries after a transport failure before giving up.
pub const DEFAULT_TRANSPORT_RETRIES: u32 = 3;

/// Per-episode dispatcher state.
#[derive(Debug, Clone)]
pub struct DispatcherContext {
    pub bundle: PromptBundle,
    pub memory: MemoryWindow,
    pub retries: u32,
    pub transport_retries: u32,
    pub log_prompts: bool,
    /// Validation errors from the previous step, shown in the next prompt.
    pub carried_feedback: Vec<String>,
}

impl DispatcherContext {
    pub fn new(bundle: PromptBundle, memory_horizon: usize) -> Self {
        Self {
            bundle,
            memory: MemoryWindow::new(memory_horizon),
            retries: DEFAULT_RETRIES,
            transport_retries: DEFAULT_TRANSPORT_RETRIES,
            log_prompts: false,
            carried_feedback: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    /// Safe to execute: every command validates.
    pub dispatch: Dispatch,
    pub raw_outputs: Vec<String>,
    pub prompts: Vec<String>,
    /// Verdicts on the last proposal before degradation.
    pub verdicts: Vec<Verdict>,
    pub diagnostics: Vec<String>,
    /// Errors that survived the retries; carried into the next step.
    pub feedback: Vec<String>,
}

fn query(planner: &mut dyn Planner, request: &PlanRequest<'_>, transport_retries: u32) -> Result<String, PlannerError> {
    let mut tries = 0;
    loop {
        match planner.complete(request) {
            Err(e) if e.is_transient() && tries < transport_retries => tries += 1,
            other => return other,
        }
    }
}

/// Validates `proposal` as a whole, treating agents named twice in the final
/// list as duplicate-agent errors.
fn judge(engine: &Engine, state: &GameState, proposal: &Dispatch, duplicates: &[usize]) -> Vec<Verdict> {
    let mut verdicts = engine.validate_dispatch(state, proposal);
    for (cmd, v) in proposal.commands().iter().zip(verdicts.iter_mut()) {
        if v.is_ok() && duplicates.contains(&cmd.agent()) {
            *v = Verdict::error(ErrorCode::DuplicateAgent, DUPLICATE_AGENT_MESSAGE);
        }
    }
    verdicts
}

fn error_lines(proposal: &Dispatch, verdicts: &[Verdict]) -> Vec<String> {
    proposal
        .commands()
        .iter()
        .zip(verdicts)
        .filter_map(|(cmd, v)| match v {
            Verdict::Error { message, .. } => Some(format!("agent{}: {message}", cmd.agent())),
            Verdict::Ok => None,
        })
        .collect()
}

/// Replaces failing commands with noops until the whole dispatch validates.
/// Dropping one command can invalidate a later one that depended on it, so
/// this repeats to a fixed point. A second command for the same agent, or one
/// naming an agent that does not exist, is removed outright since a noop in
/// its place would fail the same way.
pub fn degrade(engine: &Engine, state: &GameState, proposal: &Dispatch, verdicts: &[Verdict]) -> Dispatch {
    let n = state.num_agents();
    let mut cmds = demote(proposal.commands(), verdicts, n);
    loop {
        let again = engine.validate_dispatch(state, &Dispatch(cmds.clone()));
        if again.iter().all(Verdict::is_ok) {
            return Dispatch(cmds);
        }
        cmds = demote(&cmds, &again, n);
    }
}

fn demote(cmds: &[Command], verdicts: &[Verdict], num_agents: usize) -> Vec<Command> {
    let mut seen = vec![false; num_agents];
    cmds.iter()
        .zip(verdicts)
        .filter_map(|(c, v)| {
            let a = c.agent();
            if a >= num_agents || std::mem::replace(&mut seen[a], true) {
                return None;
            }
            Some(if v.is_ok() { c.clone() } else { Command::noop(a) })
        })
        .collect()
}

/// One dispatcher step for `state`. Returns a dispatch that passes validation.
pub fn plan_step(
    ctx: &mut DispatcherContext,
    engine: &Engine,
    state: &GameState,
    planner: &mut dyn Planner,
) -> Result<StepOutcome, PlannerError> {
    let n = state.num_agents();
    let include_feedback = ctx.bundle.toggles.include_feedback;
    let state_text = render_observation(state, false);
    let vocab = Vocabulary::for_engine(engine);
    let mut feedback: Vec<String> = if include_feedback {
        let mut f = std::mem::take(&mut ctx.carried_feedback);
        f.extend(state.feedback.iter().cloned());
        f
    } else {
        ctx.carried_feedback.clear();
        Vec::new()
    };

    let mut raw_outputs = Vec::new();
    let mut prompts = Vec::new();
    let mut diagnostics = Vec::new();
    let mut attempt = 0;
    let (proposal, verdicts) = loop {
        let prompt = assemble_prompt(&ctx.bundle, &state_text, &ctx.memory, &feedback);
        let request = PlanRequest {
            prompt: &prompt,
            engine,
            state,
            attempt,
        };
        let raw = query(planner, &request, ctx.transport_retries)?;
        if ctx.log_prompts {
            prompts.push(prompt);
        }
        let extraction = extract_commands_with(&raw, n, &vocab);
        raw_outputs.push(raw);
        diagnostics.extend(extraction.diagnostics.iter().cloned());
        let proposal = extraction.to_dispatch();
        let verdicts = judge(engine, state, &proposal, &extraction.duplicate_agents);
        let errors = error_lines(&proposal, &verdicts);
        if errors.is_empty() || attempt >= ctx.retries || !include_feedback {
            break (proposal, verdicts);
        }
        feedback.extend(errors);
        attempt += 1;
    };

    let errors = error_lines(&proposal, &verdicts);
    let dispatch = degrade(engine, state, &proposal, &verdicts);
    ctx.memory.push(MemoryEntry {
        state_text,
        dispatch_text: dispatch.to_string(),
        feedback_text: errors.join("\n"),
    });
    if include_feedback {
        ctx.carried_feedback = errors.clone();
    }
    Ok(StepOutcome {
        dispatch,
        raw_outputs,
        prompts,
        verdicts,
        diagnostics,
        feedback: errors,
    })
}
