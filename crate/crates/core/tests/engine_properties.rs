use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use brigade_core::engine::{canonical_json, hash_state, render_state, Command, Dispatch, Engine, GameState, STORAGE};
use brigade_core::planners::RandomPlanner;
use brigade_core::scheduler::{resolve_orders, spawn_orders, OrderStatus};
use brigade_core::ContentPack;

fn pack() -> Arc<ContentPack> {
    Arc::new(ContentPack::shipped())
}

/// Mostly valid moves from the random planner, sometimes one arbitrary
/// command appended to exercise rejection paths.
fn next_dispatch(rng: &mut ChaCha8Rng, engine: &Engine, state: &GameState) -> Dispatch {
    let mut d = RandomPlanner::new(rng.gen()).plan(engine, state, 0);
    if rng.gen_bool(0.3) {
        let locs = engine.location_ids();
        let agent = rng.gen_range(0..state.num_agents());
        let loc = locs[rng.gen_range(0..locs.len())].clone();
        d.0.insert(
            rng.gen_range(0..=d.0.len()),
            match rng.gen_range(0..3) {
                0 => Command::put(agent, loc),
                1 => Command::activate(agent, loc),
                _ => Command::get(agent, loc, engine.level().ingredients[0].clone()),
            },
        );
    }
    d
}

struct Run {
    engine: Engine,
    states: Vec<GameState>,
    dispatches: Vec<Dispatch>,
}

fn play(level: u32, agents: usize, seed: u64, steps: usize) -> Run {
    let pack = pack();
    let engine = Engine::new(pack.clone(), level).unwrap();
    let spec = engine.level().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = engine.initial_state(agents, seed).unwrap();
    let mut states = Vec::new();
    let mut dispatches = Vec::new();
    for _ in 0..steps {
        spawn_orders(&mut state, &spec, spec.tau_int_values[0], &pack);
        let d = next_dispatch(&mut rng, &engine, &state);
        states.push(state.clone());
        engine.step(&mut state, &d);
        resolve_orders(&mut state);
        dispatches.push(d);
    }
    states.push(state);
    Run {
        engine,
        states,
        dispatches,
    }
}

fn storage_gets(engine: &Engine, state: &GameState, d: &Dispatch) -> u32 {
    let verdicts = engine.validate_dispatch(state, d);
    d.commands()
        .iter()
        .zip(verdicts)
        .filter(|(c, v)| v.is_ok() && matches!(c, Command::Get { location, .. } if location == STORAGE))
        .count() as u32
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn items_are_never_created_outside_storage(level in 0u32..13, agents in 1usize..=4, seed: u64) {
        let run = play(level, agents, seed, 40);
        let pack = run.engine.pack();
        for (pair, d) in run.states.windows(2).zip(&run.dispatches) {
            let (before, after) = (&pair[0], &pair[1]);
            let gained = storage_gets(&run.engine, before, d);
            prop_assert!(after.item_census().len() <= before.item_census().len() + gained);
            for item in after.item_census().distinct() {
                prop_assert!(pack.items.contains_key(item), "unknown item {}", item);
            }
        }
    }

    #[test]
    fn agents_stay_at_known_locations(level in 0u32..13, agents in 1usize..=4, seed: u64) {
        let run = play(level, agents, seed, 40);
        for s in &run.states {
            prop_assert_eq!(s.agents.len(), agents);
            for a in &s.agents {
                prop_assert!(s.locations.contains_key(&a.at), "agent{} at {}", a.id, a.at);
            }
        }
    }

    #[test]
    fn stepping_is_a_pure_function(level in 0u32..13, agents in 1usize..=4, seed: u64) {
        let run = play(level, agents, seed, 25);
        for (s, d) in run.states.iter().zip(&run.dispatches) {
            let (a, ea) = run.engine.apply_dispatch(s, d);
            let (b, eb) = run.engine.apply_dispatch(s, d);
            prop_assert_eq!(hash_state(&a), hash_state(&b));
            prop_assert_eq!(ea, eb);
        }
        let again = play(level, agents, seed, 25);
        prop_assert_eq!(hash_state(run.states.last().unwrap()), hash_state(again.states.last().unwrap()));
    }

    #[test]
    fn serialized_state_renders_identically(level in 0u32..13, agents in 1usize..=4, seed: u64) {
        let run = play(level, agents, seed, 20);
        for s in &run.states {
            let back: GameState = serde_json::from_str(&serde_json::to_string(s).unwrap()).unwrap();
            prop_assert_eq!(render_state(&back), render_state(s));
            prop_assert_eq!(canonical_json(&back), canonical_json(s));
            prop_assert_eq!(hash_state(&back), hash_state(s));
        }
    }

    #[test]
    fn orders_are_conserved(level in 0u32..13, agents in 1usize..=4, seed: u64) {
        let run = play(level, agents, seed, 60);
        for s in &run.states {
            prop_assert_eq!(s.orders.len() as u32, s.next_order_id);
            for o in &s.orders {
                match o.status {
                    OrderStatus::Active => {
                        prop_assert!(o.resolved_at.is_none());
                        prop_assert!(s.tick < o.spawned_at + o.lifetime);
                    }
                    _ => prop_assert!(o.resolved_at.is_some_and(|t| t <= o.spawned_at + o.lifetime)),
                }
            }
        }
    }
}
