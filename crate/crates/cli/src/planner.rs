//! Planner selection by name: `random`, `greedy`, `replay:<steps.jsonl>`,
//! `llm:<profile>`.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use brigade_core::planners::{GreedyPlanner, Planner, RandomPlanner, ReplayPlanner};
use brigade_core::scheduler::parse_steps_jsonl;
use brigade_llm::{LlmClient, LlmPlanner, ProfileFile};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlannerSpec {
    Random,
    Greedy,
    Replay(PathBuf),
    Llm(String),
}

impl FromStr for PlannerSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            None if s == "random" => Ok(PlannerSpec::Random),
            None if s == "greedy" => Ok(PlannerSpec::Greedy),
            Some(("replay", path)) if !path.is_empty() => Ok(PlannerSpec::Replay(path.into())),
            Some(("llm", profile)) if !profile.is_empty() => Ok(PlannerSpec::Llm(profile.into())),
            _ => Err(format!(
                "unknown planner `{s}`; expected random, greedy, replay:<steps.jsonl> or llm:<profile>"
            )),
        }
    }
}

impl std::fmt::Display for PlannerSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PlannerSpec::Random => f.write_str("random"),
            PlannerSpec::Greedy => f.write_str("greedy"),
            PlannerSpec::Replay(p) => write!(f, "replay:{}", p.display()),
            PlannerSpec::Llm(name) => write!(f, "llm:{name}"),
        }
    }
}

impl PlannerSpec {
    /// Remote planners retry inside the HTTP client, so the dispatcher's
    /// immediate re-queries are switched off for them.
    pub fn owns_transport_retries(&self) -> bool {
        matches!(self, PlannerSpec::Llm(_))
    }

    pub fn build(&self, seed: u64, profiles: Option<&Path>) -> Result<Box<dyn Planner + Send>> {
        Ok(match self {
            PlannerSpec::Random => Box::new(RandomPlanner::new(seed)),
            PlannerSpec::Greedy => Box::new(GreedyPlanner),
            PlannerSpec::Replay(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                let steps = parse_steps_jsonl(&text).with_context(|| format!("parsing {}", path.display()))?;
                Box::new(ReplayPlanner::new(
                    steps.into_iter().flat_map(|s| s.raw_outputs).collect(),
                ))
            }
            PlannerSpec::Llm(name) => {
                let Some(path) = profiles else {
                    bail!("llm planners need a profiles file (--profiles)");
                };
                let file = ProfileFile::load(path)?;
                let client = LlmClient::new(file.get(name)?.clone())?;
                Box::new(LlmPlanner::new(name.clone(), client))
            }
        })
    }
}
