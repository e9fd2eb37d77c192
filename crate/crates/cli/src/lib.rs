//! Library side of the `brigade` binary: planner selection, episode logs,
//! evaluation sweeps and the session service.

pub mod eval;
pub mod logs;
pub mod planner;
pub mod server;
