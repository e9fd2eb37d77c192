//! Per-(agent, sub-task) utility: fixed quality minus a normalized tick cost.

use super::greedy::Subtask;
use crate::engine::{Engine, GameState};

/// Ticks that count as one unit of cost.
pub const COST_SCALE: f64 = 8.0;

const QUALITY: f64 = 1.0;

/// Commands the agent needs to finish `subtask` from where it stands, or
/// `None` if it cannot take it on right now.
pub fn estimate_ticks(engine: &Engine, state: &GameState, agent: usize, subtask: &Subtask) -> Option<u32> {
    let a = state.agent(agent)?;
    if a.is_busy() {
        return None;
    }
    let at = |loc: &str| u32::from(a.at != loc);
    let tool_free = |loc: &str| state.location(loc).is_some_and(|l| !l.is_busy());
    match subtask {
        Subtask::Transfer { item, from, to } => {
            let holds_it = a.holding.contains(item);
            let other_items = a.holding.len() - u32::from(holds_it);
            if other_items > 0 {
                return None;
            }
            if !holds_it {
                if !tool_free(from) && state.location(from).is_some_and(|l| l.is_tool()) {
                    return None;
                }
                if !engine.pack().items.contains_key(item) {
                    return None;
                }
            }
            if state.location(to).is_some_and(|l| l.is_busy()) {
                return None;
            }
            let fetch = if holds_it { 0 } else { at(from) + 1 };
            let carry_from = if holds_it { a.at.as_str() } else { from.as_str() };
            Some(fetch + u32::from(carry_from != to) + 1)
        }
        Subtask::Activate { tool } => {
            if !a.holding.is_empty() || !tool_free(tool) {
                return None;
            }
            Some(at(tool) + 1)
        }
        Subtask::Clear { tool, .. } => {
            if !a.holding.is_empty() || !tool_free(tool) {
                return None;
            }
            Some(at(tool) + 1 + 1 + 1)
        }
    }
}

/// `q - c` for a feasible pair; negative infinity when the agent cannot
/// execute the sub-task or would finish after `deadline`.
pub fn utility_of(engine: &Engine, state: &GameState, agent: usize, subtask: &Subtask, deadline: Option<u32>) -> f64 {
    match estimate_ticks(engine, state, agent, subtask) {
        Some(ticks) if deadline.is_none_or(|d| state.tick + ticks <= d) => QUALITY - f64::from(ticks) / COST_SCALE,
        _ => f64::NEG_INFINITY,
    }
}
