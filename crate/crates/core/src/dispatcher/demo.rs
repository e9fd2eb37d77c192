//! Worked demonstrations, synthesized by running the greedy planner on a
//! one-order kitchen built around the demo dish.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::content::{derive_task_graph, ContentPack, GraphError, LevelClass, LevelSpec};
use crate::engine::{render_state, Engine, EngineError};
use crate::planners::greedy_plan;
use crate::scheduler::{resolve_orders, spawn_orders, OrderStatus};

/// Step cap for a demonstration run.
pub const MAX_DEMO_STEPS: u32 = 80;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemoStep {
    pub state_text: String,
    pub dispatch_text: String,
}

#[derive(Debug, Error)]
pub enum DemoError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("the demonstration for {0} did not finish within {MAX_DEMO_STEPS} steps")]
    Unfinished(String),
}

/// The smallest kitchen that can cook `dish`: its task graph's tools and raw
/// ingredients, and a pool holding only that dish.
pub fn demo_kitchen(pack: &ContentPack, dish: &str) -> Result<LevelSpec, GraphError> {
    let graph = derive_task_graph(dish, pack)?;
    let used = graph.tools();
    let tools = pack
        .tools
        .iter()
        .filter(|t| used.contains(t.name.as_str()))
        .map(|t| t.name.clone())
        .collect();
    let ingredients = graph.raw_ingredients(pack).distinct().map(str::to_string).collect();
    Ok(LevelSpec {
        id: u32::MAX,
        class: LevelClass::Entry,
        tools,
        ingredients,
        order_pool: vec![dish.to_string()],
        tau_int_values: vec![MAX_DEMO_STEPS; 5],
        max_steps: MAX_DEMO_STEPS,
        default_agents: 1,
        demo_dish: None,
    })
}

/// One order of `dish` from a fresh kitchen until it is served.
pub fn synthesize_demo(pack: Arc<ContentPack>, dish: &str, num_agents: usize) -> Result<Vec<DemoStep>, DemoError> {
    let level = demo_kitchen(&pack, dish)?;
    let engine = Engine::for_level(pack, level.clone());
    let mut state = engine.initial_state(num_agents, 0)?;
    let mut steps = Vec::new();
    while state.tick < MAX_DEMO_STEPS {
        spawn_orders(&mut state, &level, MAX_DEMO_STEPS, engine.pack());
        let state_text = render_state(&state);
        let dispatch = greedy_plan(&engine, &state).dispatch;
        steps.push(DemoStep {
            state_text,
            dispatch_text: dispatch.to_string(),
        });
        engine.step(&mut state, &dispatch);
        resolve_orders(&mut state);
        if state.orders.iter().any(|o| o.status == OrderStatus::Completed) {
            return Ok(steps);
        }
    }
    Err(DemoError::Unfinished(dish.to_string()))
}
