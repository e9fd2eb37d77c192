use std::fmt;

use serde::{Deserialize, Serialize};

/// One dispatching command addressed to one agent.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Command {
    Goto {
        agent: usize,
        location: String,
    },
    Get {
        agent: usize,
        location: String,
        item: String,
    },
    Put {
        agent: usize,
        location: String,
    },
    Activate {
        agent: usize,
        location: String,
    },
    Noop {
        agent: usize,
    },
}

impl Command {
    pub fn agent(&self) -> usize {
        match self {
            Command::Goto { agent, .. }
            | Command::Get { agent, .. }
            | Command::Put { agent, .. }
            | Command::Activate { agent, .. }
            | Command::Noop { agent } => *agent,
        }
    }

    pub fn location(&self) -> Option<&str> {
        match self {
            Command::Goto { location, .. }
            | Command::Get { location, .. }
            | Command::Put { location, .. }
            | Command::Activate { location, .. } => Some(location),
            Command::Noop { .. } => None,
        }
    }

    pub fn verb(&self) -> &'static str {
        match self {
            Command::Goto { .. } => "goto",
            Command::Get { .. } => "get",
            Command::Put { .. } => "put",
            Command::Activate { .. } => "activate",
            Command::Noop { .. } => "noop",
        }
    }

    pub fn goto(agent: usize, location: impl Into<String>) -> Self {
        Command::Goto {
            agent,
            location: location.into(),
        }
    }

    pub fn get(agent: usize, location: impl Into<String>, item: impl Into<String>) -> Self {
        Command::Get {
            agent,
            location: location.into(),
            item: item.into(),
        }
    }

    pub fn put(agent: usize, location: impl Into<String>) -> Self {
        Command::Put {
            agent,
            location: location.into(),
        }
    }

    pub fn activate(agent: usize, location: impl Into<String>) -> Self {
        Command::Activate {
            agent,
            location: location.into(),
        }
    }

    pub fn noop(agent: usize) -> Self {
        Command::Noop { agent }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Command::Goto { agent, location } => write!(f, "goto(agent{agent}, {location})"),
            Command::Get { agent, location, item } => write!(f, "get(agent{agent}, {location}, {item})"),
            Command::Put { agent, location } => write!(f, "put(agent{agent}, {location})"),
            Command::Activate { agent, location } => {
                write!(f, "activate(agent{agent}, {location})")
            }
            Command::Noop { agent } => write!(f, "noop(agent{agent})"),
        }
    }
}

/// One step's commands, executed in list order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Dispatch(pub Vec<Command>);

impl Dispatch {
    pub fn noops(num_agents: usize) -> Self {
        Dispatch((0..num_agents).map(Command::noop).collect())
    }

    pub fn commands(&self) -> &[Command] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<Command>> for Dispatch {
    fn from(v: Vec<Command>) -> Self {
        Dispatch(v)
    }
}

/// Canonical rendering: one command per line.
impl fmt::Display for Dispatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}
