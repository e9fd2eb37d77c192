use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::multiset::Multiset;
use crate::scheduler::Order;

pub const STORAGE: &str = "storage";
pub const SERVING_TABLE: &str = "servingtable";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LocationKind {
    Storage,
    ServingTable,
    Tool {
        tool: String,
        cook_duration_ticks: u32,
        attended: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Location {
    pub id: String,
    pub kind: LocationKind,
    /// Unused for storage, whose ingredient stock is unlimited.
    pub contents: Multiset,
    pub busy_remaining: u32,
    /// Output of the recipe currently running, if any.
    pub cooking: Option<String>,
}

impl Location {
    pub fn is_tool(&self) -> bool {
        matches!(self.kind, LocationKind::Tool { .. })
    }

    pub fn tool_name(&self) -> Option<&str> {
        match &self.kind {
            LocationKind::Tool { tool, .. } => Some(tool),
            _ => None,
        }
    }

    pub fn is_busy(&self) -> bool {
        self.busy_remaining > 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentState {
    pub id: usize,
    pub at: String,
    pub holding: Multiset,
    pub busy_remaining: u32,
}

impl AgentState {
    pub fn is_busy(&self) -> bool {
        self.busy_remaining > 0
    }
}

/// Full kitchen snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameState {
    pub tick: u32,
    pub locations: BTreeMap<String, Location>,
    pub agents: Vec<AgentState>,
    pub orders: Vec<Order>,
    pub next_order_id: u32,
    pub rng: ChaCha8Rng,
    /// Messages from the previous step, shown in the rendered state.
    pub feedback: Vec<String>,
}

impl GameState {
    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn location(&self, id: &str) -> Option<&Location> {
        self.locations.get(id)
    }

    pub fn agent(&self, idx: usize) -> Option<&AgentState> {
        self.agents.get(idx)
    }

    /// Every item physically present: tool and table contents plus what the
    /// agents hold. Storage stock is not counted.
    pub fn item_census(&self) -> Multiset {
        let mut all = Multiset::new();
        for loc in self.locations.values() {
            if loc.kind != LocationKind::Storage {
                all.extend_from(&loc.contents);
            }
        }
        for agent in &self.agents {
            all.extend_from(&agent.holding);
        }
        all
    }
}
