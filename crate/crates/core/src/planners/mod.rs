//! Planner backends and the assignment solvers.

mod assignment;
mod greedy;
mod random;
mod replay;
mod utility;

use thiserror::Error;

use crate::engine::{Engine, GameState};

pub use assignment::{
    solve_assignment_exact, solve_assignment_greedy, Assignment, AssignmentInstance, SolverError, MAX_BINARY_VARS,
};
pub use greedy::{greedy_plan, GreedyPlan, GreedyPlanner, PlannedSubtask, Subtask};
pub use random::RandomPlanner;
pub use replay::ReplayPlanner;
pub use utility::{estimate_ticks, utility_of, COST_SCALE};

/// What a planner sees for one query. Text planners read `prompt`; structured
/// planners read the engine and state directly.
#[derive(Debug, Clone, Copy)]
pub struct PlanRequest<'a> {
    pub prompt: &'a str,
    pub engine: &'a Engine,
    pub state: &'a GameState,
    /// 0 for the first query of a step, then 1.. for feedback retries.
    pub attempt: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlannerError {
    #[error("transport failed: {0}")]
    Transport(String),
    #[error("replay transcript exhausted after {0} completions")]
    ReplayExhausted(usize),
    #[error("{0}")]
    Other(String),
}

impl PlannerError {
    pub fn code(&self) -> &'static str {
        match self {
            PlannerError::Transport(_) => "transport_failed",
            PlannerError::ReplayExhausted(_) => "replay_exhausted",
            PlannerError::Other(_) => "planner_error",
        }
    }

    /// Transport failures are the only ones worth retrying.
    pub fn is_transient(&self) -> bool {
        matches!(self, PlannerError::Transport(_))
    }
}

/// A completion source. Deterministic planners must be pure functions of the
/// request and their own construction parameters.
pub trait Planner {
    fn name(&self) -> String;

    fn complete(&mut self, request: &PlanRequest<'_>) -> Result<String, PlannerError>;
}

impl<P: Planner + ?Sized> Planner for Box<P> {
    fn name(&self) -> String {
        (**self).name()
    }

    fn complete(&mut self, request: &PlanRequest<'_>) -> Result<String, PlannerError> {
        (**self).complete(request)
    }
}
