//! Rule-based baseline: walk each active order's task graph in
//! earliest-deadline-first order, list the sub-tasks that can start now, and
//! hand them to free agents by utility.
//!
//! The planner is stateless. Every step it re-derives which items already in
//! the kitchen (held, sitting in a tool, or cooking) serve which order, so an
//! agent carrying an item simply keeps carrying it to where it is needed.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::utility::{estimate_ticks, utility_of};
use super::{AssignmentInstance, PlanRequest, Planner, PlannerError};
use crate::content::{derive_task_graph_for_level, ItemKind, RecipeRule};
use crate::engine::{Command, Dispatch, Engine, GameState, SERVING_TABLE, STORAGE};
use crate::multiset::Multiset;
use crate::scheduler::Order;

const MAX_DEPTH: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Subtask {
    /// Bring one `item` from `from` to `to`.
    Transfer { item: String, from: String, to: String },
    /// Start the recipe whose inputs are already inside `tool`.
    Activate { tool: String },
    /// Take a stray `item` out of `tool` so the tool can be reused.
    Clear { tool: String, item: String },
}

impl Subtask {
    /// The command an agent issues first when starting this sub-task.
    pub fn first_command(&self, agent: usize, at: &str) -> Command {
        let (loc, then) = match self {
            Subtask::Transfer { item, from, .. } => (from, Command::get(agent, from.clone(), item.clone())),
            Subtask::Activate { tool } => (tool, Command::activate(agent, tool.clone())),
            Subtask::Clear { tool, item } => (tool, Command::get(agent, tool.clone(), item.clone())),
        };
        if at == loc {
            then
        } else {
            Command::goto(agent, loc.clone())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedSubtask {
    pub subtask: Subtask,
    pub order_id: u32,
    /// Position of the order in deadline order (0 = most urgent).
    pub rank: usize,
    pub deadline: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyPlan {
    pub subtasks: Vec<PlannedSubtask>,
    /// `(agent, subtask index)` pairs chosen for agents with empty hands.
    pub assignments: Vec<(usize, usize)>,
    pub dispatch: Dispatch,
}

impl GreedyPlan {
    /// The one-task assignment program this step induces: every listed
    /// sub-task against every agent, one sub-task per agent, no binding
    /// budget.
    pub fn induced_instance(&self, engine: &Engine, state: &GameState) -> AssignmentInstance {
        let n = state.num_agents();
        let mut utility = vec![Vec::with_capacity(self.subtasks.len()); n];
        let mut duration = vec![Vec::with_capacity(self.subtasks.len()); n];
        let mut budget = 0.0;
        for agent in 0..n {
            for s in &self.subtasks {
                let ticks = estimate_ticks(engine, state, agent, &s.subtask).unwrap_or(1);
                let ticks = f64::from(ticks.max(1));
                budget += ticks;
                duration[agent].push(ticks);
                utility[agent].push(if state.agents[agent].holding.is_empty() {
                    utility_of(engine, state, agent, &s.subtask, Some(s.deadline))
                } else {
                    f64::NEG_INFINITY
                });
            }
        }
        AssignmentInstance {
            num_agents: n,
            utility: vec![utility],
            duration: vec![duration],
            budget: budget.max(1.0),
            agent_capacity: Some(1),
        }
    }

    pub fn assignment_choice(&self) -> Vec<((usize, usize), Option<usize>)> {
        self.assignments
            .iter()
            .map(|&(agent, m)| ((0, m), Some(agent)))
            .collect()
    }
}

struct Alloc<'a> {
    engine: &'a Engine,
    state: &'a GameState,
    recipes: BTreeMap<String, RecipeRule>,
    held_free: Vec<Multiset>,
    held_dest: Vec<BTreeSet<String>>,
    tool_free: BTreeMap<String, Multiset>,
    supplying: BTreeSet<String>,
    cooking_claimed: BTreeSet<String>,
    claimed: BTreeSet<String>,
    wanted: Vec<(String, u32, usize, u32)>,
    subtasks: Vec<PlannedSubtask>,
}

impl<'a> Alloc<'a> {
    fn new(engine: &'a Engine, state: &'a GameState, active: &[&Order]) -> Self {
        let mut recipes = BTreeMap::new();
        for order in active {
            if recipes.contains_key(&order.dish) {
                continue;
            }
            if let Ok(graph) = derive_task_graph_for_level(&order.dish, engine.pack(), engine.level()) {
                for node in graph.nodes {
                    recipes.entry(node.recipe.output.clone()).or_insert(node.recipe);
                }
            }
        }
        let tool_free = state
            .locations
            .values()
            .filter(|l| l.is_tool())
            .map(|l| (l.id.clone(), l.contents.clone()))
            .collect();
        Self {
            engine,
            state,
            recipes,
            held_free: state.agents.iter().map(|a| a.holding.clone()).collect(),
            held_dest: vec![BTreeSet::new(); state.num_agents()],
            tool_free,
            supplying: BTreeSet::new(),
            cooking_claimed: BTreeSet::new(),
            claimed: BTreeSet::new(),
            wanted: Vec::new(),
            subtasks: Vec::new(),
        }
    }

    fn push(&mut self, subtask: Subtask, order: &Order, rank: usize) {
        self.subtasks.push(PlannedSubtask {
            subtask,
            order_id: order.id,
            rank,
            deadline: order.deadline(),
        });
    }

    fn is_busy(&self, loc: &str) -> bool {
        self.state.location(loc).is_some_and(|l| l.is_busy())
    }

    /// Arranges for one `item` to end up in `dest`.
    fn need(&mut self, item: &str, dest: &str, order: &Order, rank: usize, depth: usize) {
        if depth > MAX_DEPTH {
            return;
        }
        // already in someone's hands
        for (agent, free) in self.held_free.iter_mut().enumerate() {
            if free.remove_one(item) {
                self.held_dest[agent].insert(dest.to_string());
                return;
            }
        }
        // finished and waiting in an idle tool
        let is_ingredient = self.engine.pack().kind_of(item) == Some(ItemKind::Ingredient);
        if !is_ingredient {
            let state = self.state;
            let source = self
                .tool_free
                .iter_mut()
                .find(|(id, free)| {
                    id.as_str() != dest && free.contains(item) && state.location(id).is_some_and(|l| !l.is_busy())
                })
                .map(|(id, free)| {
                    free.remove_one(item);
                    id.clone()
                });
            if let Some(from) = source {
                self.supplying.insert(from.clone());
                let transfer = Subtask::Transfer {
                    item: item.to_string(),
                    from,
                    to: dest.to_string(),
                };
                self.push(transfer, order, rank);
                return;
            }
        }
        // still cooking
        let cooking = self
            .state
            .locations
            .values()
            .find(|l| l.cooking.as_deref() == Some(item) && !self.cooking_claimed.contains(&l.id));
        if let Some(loc) = cooking {
            self.cooking_claimed.insert(loc.id.clone());
            return;
        }
        if self.engine.is_storage_ingredient(item) {
            let transfer = Subtask::Transfer {
                item: item.to_string(),
                from: STORAGE.to_string(),
                to: dest.to_string(),
            };
            self.push(transfer, order, rank);
            return;
        }
        let Some(recipe) = self.recipes.get(item).cloned() else {
            return;
        };
        let tool = recipe.tool.as_str();
        if self.claimed.contains(tool) || self.is_busy(tool) || self.supplying.contains(tool) {
            return;
        }
        let Some(free) = self.tool_free.get(tool).cloned() else {
            return;
        };
        if free.is_subset_of(&recipe.inputs) {
            self.claimed.insert(tool.to_string());
            self.tool_free.insert(tool.to_string(), Multiset::new());
            let missing = recipe.inputs.difference(&free);
            if missing.is_empty() {
                self.push(Subtask::Activate { tool: tool.to_string() }, order, rank);
            } else {
                for m in missing.expanded() {
                    self.need(m, tool, order, rank, depth + 1);
                }
            }
        } else {
            self.wanted.push((tool.to_string(), order.id, rank, order.deadline()));
        }
    }

    /// Rough ticks until one `item` could be delivered somewhere, ignoring
    /// contention with other orders.
    fn estimate(&self, item: &str, depth: usize) -> u32 {
        const DELIVER: u32 = 3;
        if depth > MAX_DEPTH {
            return u32::MAX / 4;
        }
        if self.state.agents.iter().any(|a| a.holding.contains(item)) {
            return DELIVER - 1;
        }
        let mut best = u32::MAX / 4;
        for loc in self.state.locations.values().filter(|l| l.is_tool()) {
            if loc.cooking.as_deref() == Some(item) {
                best = best.min(loc.busy_remaining + DELIVER);
            } else if !loc.is_busy() && loc.contents.contains(item) {
                best = best.min(DELIVER);
            }
        }
        if self.engine.is_storage_ingredient(item) {
            best = best.min(DELIVER);
        }
        if let Some(recipe) = self.recipes.get(item) {
            let inputs = recipe
                .inputs
                .distinct()
                .map(|i| self.estimate(i, depth + 1))
                .max()
                .unwrap_or(0);
            best = best.min(inputs + recipe.duration + DELIVER);
        }
        best
    }

    /// Clear sub-tasks for tools some order wanted but found cluttered.
    fn clear_wanted(&mut self) {
        let mut seen = BTreeSet::new();
        for (tool, order_id, rank, deadline) in std::mem::take(&mut self.wanted) {
            if !seen.insert(tool.clone()) || self.claimed.contains(&tool) || self.is_busy(&tool) {
                continue;
            }
            let items: Vec<String> = self
                .tool_free
                .get(&tool)
                .map(|m| m.expanded().map(str::to_string).collect())
                .unwrap_or_default();
            for item in items {
                self.subtasks.push(PlannedSubtask {
                    subtask: Subtask::Clear {
                        tool: tool.clone(),
                        item,
                    },
                    order_id,
                    rank,
                    deadline,
                });
            }
        }
    }
}

/// Computes the greedy dispatch for the current state.
pub fn greedy_plan(engine: &Engine, state: &GameState) -> GreedyPlan {
    let n = state.num_agents();
    let mut active: Vec<&Order> = state.orders.iter().filter(|o| o.is_active()).collect();
    if active.is_empty() {
        return GreedyPlan {
            subtasks: Vec::new(),
            assignments: Vec::new(),
            dispatch: Dispatch::noops(n),
        };
    }
    active.sort_by_key(|o| (o.deadline(), o.id));

    let mut alloc = Alloc::new(engine, state, &active);
    // orders that cannot make their deadline any more are left to expire
    active.retain(|o| state.tick + alloc.estimate(&o.dish, 0) <= o.deadline());
    for (rank, order) in active.iter().enumerate() {
        alloc.need(&order.dish, SERVING_TABLE, order, rank, 0);
    }
    alloc.clear_wanted();

    let mut commands: Vec<Option<Command>> = vec![None; n];
    let mut taken = vec![false; alloc.subtasks.len()];
    let mut assignments = Vec::new();

    // agents already carrying something
    for agent in &state.agents {
        if agent.is_busy() || agent.holding.is_empty() {
            continue;
        }
        let i = agent.id;
        let dests = &alloc.held_dest[i];
        let cmd = if !alloc.held_free[i].is_empty() || dests.len() != 1 {
            // nothing here is wanted (or it is wanted in two places): dispose
            if agent.at == STORAGE {
                Command::put(i, STORAGE)
            } else {
                Command::goto(i, STORAGE)
            }
        } else {
            let dest = dests.iter().next().expect("one destination");
            if &agent.at == dest {
                Command::put(i, dest.clone())
            } else {
                let pickup = alloc.subtasks.iter().enumerate().position(|(m, s)| {
                    !taken[m]
                        && matches!(&s.subtask, Subtask::Transfer { from, to, .. }
                            if *from == agent.at && to == dest)
                });
                match pickup {
                    Some(m) => {
                        taken[m] = true;
                        alloc.subtasks[m].subtask.first_command(i, &agent.at)
                    }
                    None => Command::goto(i, dest.clone()),
                }
            }
        };
        commands[i] = Some(cmd);
    }

    // free agents take sub-tasks: most urgent order first, then best utility
    let mut pairs = Vec::new();
    for agent in &state.agents {
        if agent.is_busy() || !agent.holding.is_empty() {
            continue;
        }
        for (m, s) in alloc.subtasks.iter().enumerate() {
            if taken[m] {
                continue;
            }
            let u = utility_of(engine, state, agent.id, &s.subtask, Some(s.deadline));
            if u.is_finite() {
                pairs.push((s.rank, u, agent.id, m));
            }
        }
    }
    pairs.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then(b.1.total_cmp(&a.1))
            .then(a.2.cmp(&b.2))
            .then(a.3.cmp(&b.3))
    });
    for (_, _, agent, m) in pairs {
        if commands[agent].is_some() || taken[m] {
            continue;
        }
        taken[m] = true;
        assignments.push((agent, m));
        let at = &state.agents[agent].at;
        commands[agent] = Some(alloc.subtasks[m].subtask.first_command(agent, at));
    }
    assignments.sort_unstable();

    let dispatch = Dispatch(
        commands
            .into_iter()
            .enumerate()
            .map(|(i, c)| c.unwrap_or(Command::noop(i)))
            .collect(),
    );
    GreedyPlan {
        subtasks: alloc.subtasks,
        assignments,
        dispatch,
    }
}

/// [`greedy_plan`] behind the planner interface; ignores the prompt.
#[derive(Debug, Clone, Copy, Default)]
pub struct GreedyPlanner;

impl Planner for GreedyPlanner {
    fn name(&self) -> String {
        "greedy".into()
    }

    fn complete(&mut self, request: &PlanRequest<'_>) -> Result<String, PlannerError> {
        Ok(greedy_plan(request.engine, request.state).dispatch.to_string())
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::content::ContentPack;
    use crate::scheduler::{resolve_orders, spawn_orders, OrderStatus};

    fn engine(level: u32) -> Engine {
        Engine::new(Arc::new(ContentPack::shipped()), level).unwrap()
    }

    fn add_order(state: &mut GameState, engine: &Engine, dish: &str) {
        let id = state.next_order_id;
        state.next_order_id += 1;
        state.orders.push(Order {
            id,
            dish: dish.into(),
            spawned_at: state.tick,
            lifetime: engine.pack().dish(dish).unwrap().lifetime,
            status: OrderStatus::Active,
            resolved_at: None,
        });
    }

    #[test]
    fn no_orders_all_noop() {
        let e = engine(0);
        let s = e.initial_state(3, 0).unwrap();
        assert_eq!(greedy_plan(&e, &s).dispatch, Dispatch::noops(3));
    }

    #[test]
    fn level_zero_first_move() {
        let e = engine(0);
        let mut s = e.initial_state(2, 0).unwrap();
        add_order(&mut s, &e, "salmonMeatcake");
        let plan = greedy_plan(&e, &s);
        assert_eq!(plan.dispatch.to_string(), "get(agent0, storage, salmon)\nnoop(agent1)");
    }

    #[test]
    fn earliest_deadline_first() {
        let e = engine(1);
        let mut s = e.initial_state(1, 0).unwrap();
        add_order(&mut s, &e, "lambMeatcake");
        s.orders[0].spawned_at = 0;
        s.tick = 3;
        add_order(&mut s, &e, "lobsterMeatcake");
        s.orders[1].spawned_at = 0;
        s.orders[1].lifetime = 13;
        let plan = greedy_plan(&e, &s);
        assert_eq!(plan.dispatch.0[0], Command::get(0, STORAGE, "lobster"));
    }

    #[test]
    fn chosen_pairs_are_feasible() {
        let e = engine(3);
        let mut s = e.initial_state(3, 0).unwrap();
        add_order(&mut s, &e, "salmonSushi");
        let plan = greedy_plan(&e, &s);
        let inst = plan.induced_instance(&e, &s);
        let v = inst.assignment_from(&plan.assignment_choice());
        assert!(v.is_feasible(&inst));
        assert_eq!(plan.assignments.len(), 3);
    }

    fn run(level: u32, agents: usize, tau: u32, steps: u32) -> GameState {
        let e = engine(level);
        let mut s = e.initial_state(agents, 1).unwrap();
        for _ in 0..steps {
            spawn_orders(&mut s, &e.level().clone(), tau, e.pack());
            let d = greedy_plan(&e, &s).dispatch;
            assert!(e.validate_dispatch(&s, &d).iter().all(|v| v.is_ok()), "{d}");
            e.step(&mut s, &d);
            resolve_orders(&mut s);
        }
        s
    }

    #[test]
    fn serves_every_shipped_level() {
        for level in 0..13 {
            let lv = engine(level).level().clone();
            let tau = *lv.tau_int_values.last().unwrap();
            let s = run(level, 2, tau, lv.max_steps);
            let done = s.orders.iter().filter(|o| o.status == OrderStatus::Completed).count();
            assert!(done >= 1, "level {level} completed nothing");
        }
    }
}
