use std::fmt::Write;

use super::state::{GameState, LocationKind};
use crate::scheduler::OrderStatus;

/// Text snapshot of the kitchen in canonical predicate order, followed by the
/// active orders and the previous step's feedback.
pub fn render_state(state: &GameState) -> String {
    render_observation(state, true)
}

/// Like [`render_state`], optionally leaving out the feedback block.
pub fn render_observation(state: &GameState, include_feedback: bool) -> String {
    let mut out = String::new();
    writeln!(out, "time: {}", state.tick).unwrap();
    for loc in state.locations.values() {
        if loc.kind != LocationKind::Storage && !loc.contents.is_empty() {
            writeln!(out, "inside({}, {})", loc.id, loc.contents).unwrap();
        }
        if loc.is_busy() {
            writeln!(out, "occupy({})", loc.id).unwrap();
        }
    }
    for agent in &state.agents {
        writeln!(out, "at({}, agent{})", agent.at, agent.id).unwrap();
        if !agent.holding.is_empty() {
            writeln!(out, "hold(agent{}, {})", agent.id, agent.holding).unwrap();
        }
        if agent.is_busy() {
            writeln!(out, "occupy(agent{})", agent.id).unwrap();
        }
    }
    let active: Vec<_> = state
        .orders
        .iter()
        .filter(|o| o.status == OrderStatus::Active)
        .collect();
    if active.is_empty() {
        out.push_str("active orders: none\n");
    } else {
        out.push_str("active orders:\n");
        for o in active {
            writeln!(
                out,
                "- order{}: {}, {} steps left",
                o.id,
                o.dish,
                o.remaining(state.tick)
            )
            .unwrap();
        }
    }
    if include_feedback && !state.feedback.is_empty() {
        out.push_str("feedback:\n");
        for line in &state.feedback {
            writeln!(out, "- {line}").unwrap();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::content::ContentPack;
    use crate::engine::{Command, Dispatch, Engine, STORAGE};

    #[test]
    fn fresh_level_zero() {
        let engine = Engine::new(Arc::new(ContentPack::shipped()), 0).unwrap();
        let state = engine.initial_state(2, 1).unwrap();
        let text = render_state(&state);
        assert!(text.contains("at(storage, agent0)"));
        assert!(text.contains("at(storage, agent1)"));
        assert!(!text.contains("occupy("));
        assert!(!text.contains("hold("));
        assert_eq!(
            text,
            "time: 0\nat(storage, agent0)\nat(storage, agent1)\nactive orders: none\n"
        );
    }

    #[test]
    fn busy_tool_and_holdings() {
        let engine = Engine::new(Arc::new(ContentPack::shipped()), 0).unwrap();
        let mut state = engine.initial_state(2, 1).unwrap();
        state.agents[1].at = "chopboard".into();
        state.locations.get_mut("chopboard").unwrap().contents.insert("salmon");
        engine.step(
            &mut state,
            &Dispatch(vec![
                Command::get(0, STORAGE, "salmon"),
                Command::activate(1, "chopboard"),
            ]),
        );
        let text = render_state(&state);
        assert!(text.contains("occupy(chopboard)"), "{text}");
        assert!(text.contains("occupy(agent1)"));
        assert!(text.contains("hold(agent0, [salmon])"));
        assert!(text.contains("inside(chopboard, [salmon])"));
        assert!(text.contains("- agent0: collect finish"));
        assert!(!render_observation(&state, false).contains("collect finish"));
    }
}
