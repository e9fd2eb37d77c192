use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{PlanRequest, Planner, PlannerError};
use crate::engine::{digest64, hash_state, Command, Dispatch, Engine, GameState, LocationKind};

/// Uniform choice among commands that are valid given the commands already
/// chosen for lower-numbered agents this step.
#[derive(Debug, Clone)]
pub struct RandomPlanner {
    seed: u64,
}

impl RandomPlanner {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn plan(&self, engine: &Engine, state: &GameState, attempt: u32) -> Dispatch {
        let mut key = Vec::with_capacity(20);
        key.extend_from_slice(&self.seed.to_be_bytes());
        key.extend_from_slice(&hash_state(state).to_be_bytes());
        key.extend_from_slice(&attempt.to_be_bytes());
        let mut rng = ChaCha8Rng::seed_from_u64(digest64(&key));

        let mut scratch = state.clone();
        let mut seen = vec![false; state.num_agents()];
        let mut sink = Vec::new();
        let mut chosen = Vec::with_capacity(state.num_agents());
        for agent in 0..state.num_agents() {
            let valid: Vec<Command> = candidates(engine, &scratch, agent)
                .into_iter()
                .filter(|cmd| {
                    let mut probe = scratch.clone();
                    let mut seen_probe = seen.clone();
                    engine
                        .execute(&mut probe, cmd, &mut seen_probe, &mut Vec::new())
                        .is_ok()
                })
                .collect();
            // noop is always valid, so the list is never empty
            let cmd = valid.choose(&mut rng).cloned().unwrap_or(Command::noop(agent));
            engine.execute(&mut scratch, &cmd, &mut seen, &mut sink);
            chosen.push(cmd);
        }
        Dispatch(chosen)
    }
}

/// Every syntactically possible command for `agent` in `state`, valid or not.
pub(crate) fn candidates(engine: &Engine, state: &GameState, agent: usize) -> Vec<Command> {
    let mut out = vec![Command::noop(agent)];
    let Some(a) = state.agent(agent) else {
        return out;
    };
    for loc in state.locations.keys() {
        if *loc != a.at {
            out.push(Command::goto(agent, loc.clone()));
        }
    }
    if let Some(here) = state.location(&a.at) {
        match here.kind {
            LocationKind::Storage => {
                for item in &engine.level().ingredients {
                    out.push(Command::get(agent, here.id.clone(), item.clone()));
                }
            }
            _ => {
                for item in here.contents.distinct() {
                    out.push(Command::get(agent, here.id.clone(), item));
                }
            }
        }
        out.push(Command::put(agent, here.id.clone()));
        out.push(Command::activate(agent, here.id.clone()));
    }
    out
}

impl Planner for RandomPlanner {
    fn name(&self) -> String {
        format!("random(seed={})", self.seed)
    }

    fn complete(&mut self, request: &PlanRequest<'_>) -> Result<String, PlannerError> {
        Ok(self.plan(request.engine, request.state, request.attempt).to_string())
    }
}
