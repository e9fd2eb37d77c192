//! Deterministic multi-agent kitchen simulator with a text dispatcher
//! pipeline, task-assignment solvers and a collaboration-score harness.

pub mod content;
pub mod dispatcher;
pub mod engine;
pub mod metrics;
pub mod multiset;
pub mod planners;
pub mod scheduler;

pub use content::ContentPack;
pub use engine::{Command, Dispatch, Engine, GameState};
pub use scheduler::{run_episode, EpisodeConfig, EpisodeReport};
