//! Pull canonical commands out of free-form completion text.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::content::ContentPack;
use crate::engine::{Command, Dispatch, Engine, SERVING_TABLE, STORAGE};

fn command_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\b(goto|get|put|activate|noop)\s*\(([^()]*)\)").expect("valid regex"))
}

fn agent_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)^(?:agent[\s_]*)?(\d+)$").expect("valid regex"))
}

fn name_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^[A-Za-z_][A-Za-z0-9_ ]*$").expect("valid regex"))
}

/// Text allowed between two commands of the same list: whitespace,
/// punctuation, list markers and `agentK:` labels.
fn separator_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)^(?:[\s,;\[\]\-*.`'\x22]|\d+[.):]|agent\s*\d+\s*:)*$").expect("valid regex"))
}

/// Maps loosely written names (any case, spaces or underscores) to the
/// kitchen's canonical identifiers.
#[derive(Debug, Clone, Default)]
pub struct Vocabulary {
    names: BTreeMap<String, String>,
}

fn fold(name: &str) -> String {
    name.chars()
        .filter(|c| !c.is_whitespace() && *c != '_')
        .flat_map(char::to_lowercase)
        .collect()
}

impl Vocabulary {
    pub fn new<'a>(names: impl IntoIterator<Item = &'a str>) -> Self {
        Self {
            names: names.into_iter().map(|n| (fold(n), n.to_string())).collect(),
        }
    }

    /// Every location id of the level plus every item in the pack.
    pub fn for_engine(engine: &Engine) -> Self {
        let locations = engine.location_ids();
        Self::new(
            locations
                .iter()
                .map(String::as_str)
                .chain(engine.pack().items.keys().map(String::as_str)),
        )
    }

    /// Every tool, item and fixed location the pack knows about.
    pub fn for_pack(pack: &ContentPack) -> Self {
        Self::new(
            [STORAGE, SERVING_TABLE]
                .into_iter()
                .chain(pack.tools.iter().map(|t| t.name.as_str()))
                .chain(pack.items.keys().map(String::as_str)),
        )
    }

    pub fn canonical(&self, name: &str) -> String {
        self.names
            .get(&fold(name))
            .cloned()
            .unwrap_or_else(|| name.trim().to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionResult {
    /// At most one command per agent, in the order the kept commands appear.
    pub commands: Vec<Command>,
    /// Agents with no command anywhere in the text.
    pub unparsed: Vec<usize>,
    /// Agents named twice within the final command list.
    pub duplicate_agents: Vec<usize>,
    pub diagnostics: Vec<String>,
}

impl ExtractionResult {
    pub fn is_complete(&self) -> bool {
        self.unparsed.is_empty()
    }

    /// The extracted commands followed by a noop for every missing agent.
    pub fn to_dispatch(&self) -> Dispatch {
        let mut cmds = self.commands.clone();
        cmds.extend(self.unparsed.iter().map(|&a| Command::noop(a)));
        Dispatch(cmds)
    }
}

struct Found {
    start: usize,
    end: usize,
    cmd: Command,
}

pub fn extract_commands(text: &str, num_agents: usize) -> ExtractionResult {
    extract_commands_with(text, num_agents, &Vocabulary::default())
}

/// Scans `text` for the command grammar. For each agent the last command in
/// the text wins, so later self-corrections override earlier reasoning.
pub fn extract_commands_with(text: &str, num_agents: usize, vocab: &Vocabulary) -> ExtractionResult {
    let mut diagnostics = Vec::new();
    let mut found = Vec::new();
    for caps in command_re().captures_iter(text) {
        let whole = caps.get(0).expect("match");
        match parse_one(&caps[1], &caps[2], num_agents, vocab) {
            Ok(cmd) => found.push(Found {
                start: whole.start(),
                end: whole.end(),
                cmd,
            }),
            Err(why) => diagnostics.push(format!("ignored `{}`: {why}", whole.as_str())),
        }
    }

    // the final list: trailing run of commands separated only by punctuation
    let mut block_start = found.len();
    for i in (0..found.len()).rev() {
        if i + 1 < found.len() && !separator_re().is_match(&text[found[i].end..found[i + 1].start]) {
            break;
        }
        block_start = i;
    }
    let mut block_count = vec![0usize; num_agents];
    for f in &found[block_start..] {
        block_count[f.cmd.agent()] += 1;
    }
    let duplicate_agents: Vec<usize> = (0..num_agents).filter(|&a| block_count[a] > 1).collect();
    for a in &duplicate_agents {
        diagnostics.push(format!("agent{a} has {} commands in the final list", block_count[*a]));
    }

    let mut last: BTreeMap<usize, usize> = BTreeMap::new();
    for (i, f) in found.iter().enumerate() {
        last.insert(f.cmd.agent(), i);
    }
    let mut kept: Vec<usize> = last.values().copied().collect();
    kept.sort_unstable();
    let commands = kept.into_iter().map(|i| found[i].cmd.clone()).collect();
    let unparsed: Vec<usize> = (0..num_agents).filter(|a| !last.contains_key(a)).collect();
    for a in &unparsed {
        diagnostics.push(format!("no command found for agent{a}"));
    }
    ExtractionResult {
        commands,
        unparsed,
        duplicate_agents,
        diagnostics,
    }
}

fn parse_one(verb: &str, args: &str, num_agents: usize, vocab: &Vocabulary) -> Result<Command, String> {
    let args: Vec<&str> = args
        .split(',')
        .map(|a| a.trim().trim_matches(|c| c == '"' || c == '\'' || c == '`').trim())
        .collect();
    let agent_tok = args.first().copied().unwrap_or_default();
    let agent: usize = agent_re()
        .captures(agent_tok)
        .and_then(|c| c[1].parse().ok())
        .ok_or_else(|| format!("`{agent_tok}` is not an agent"))?;
    if agent >= num_agents {
        return Err(format!("agent{agent} does not exist"));
    }
    let verb = verb.to_ascii_lowercase();
    let want = match verb.as_str() {
        "noop" => 1,
        "goto" | "put" | "activate" => 2,
        _ => 3,
    };
    if args.len() != want {
        return Err(format!("{verb} takes {want} arguments, got {}", args.len()));
    }
    let mut names = Vec::with_capacity(2);
    for a in &args[1..] {
        if !name_re().is_match(a) {
            return Err(format!("`{a}` is not a name"));
        }
        names.push(vocab.canonical(a));
    }
    Ok(match verb.as_str() {
        "noop" => Command::noop(agent),
        "goto" => Command::goto(agent, names.remove(0)),
        "put" => Command::put(agent, names.remove(0)),
        "activate" => Command::activate(agent, names.remove(0)),
        _ => {
            let item = names.pop().expect("two names");
            Command::get(agent, names.remove(0), item)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_grammar() {
        let r = extract_commands("goto(agent0, blender)\nget(agent1, storage, salmon)", 2);
        assert!(r.is_complete());
        assert_eq!(
            r.commands,
            vec![Command::goto(0, "blender"), Command::get(1, "storage", "salmon")]
        );
    }

    #[test]
    fn last_match_wins() {
        let text = "Sorry for the mistake. agent0 should goto(agent0, pot). Final: goto(agent0, pan)";
        let r = extract_commands(text, 1);
        assert_eq!(r.commands, vec![Command::goto(0, "pan")]);
        assert!(r.duplicate_agents.is_empty());
    }

    #[test]
    fn missing_agent_reported() {
        let r = extract_commands("noop(agent0)", 2);
        assert_eq!(r.unparsed, vec![1]);
        assert_eq!(r.to_dispatch(), Dispatch(vec![Command::noop(0), Command::noop(1)]));
    }

    #[test]
    fn duplicate_in_final_list() {
        let r = extract_commands("goto(agent0, blender)\ngoto(agent0, pot)", 2);
        assert_eq!(r.duplicate_agents, vec![0]);
        assert_eq!(r.commands, vec![Command::goto(0, "pot")]);
    }

    #[test]
    fn loose_names_canonicalized() {
        let vocab = Vocabulary::new(["servingtable", "salmonMeatcake", "storage"]);
        let r = extract_commands_with(
            "PUT( Agent 0 , 'Serving Table' ) get(1, STORAGE, SalmonMeatcake)",
            2,
            &vocab,
        );
        assert_eq!(
            r.commands,
            vec![
                Command::put(0, "servingtable"),
                Command::get(1, "storage", "salmonMeatcake")
            ]
        );
    }

    #[test]
    fn bad_arity_and_range() {
        let r = extract_commands("goto(agent0) get(agent5, storage, tuna) noop(agent0)", 1);
        assert_eq!(r.commands, vec![Command::noop(0)]);
        assert_eq!(r.diagnostics.len(), 2);
    }
}
