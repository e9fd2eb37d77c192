//! Prompt templates and assembly.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::demo::{synthesize_demo, DemoError, DemoStep};
use super::memory::MemoryWindow;
use crate::content::derive_task_graph_for_level;
use crate::engine::Engine;

const SHIPPED_TEMPLATE: &str = include_str!("../../data/prompt_template.txt");

pub const SECTION_INSTRUCTIONS: &str = "## Instructions";
pub const SECTION_RECIPES: &str = "## Recipes";
pub const SECTION_KNOWLEDGE: &str = "## Inference Knowledge";
pub const SECTION_DEMO: &str = "## Demonstration";
pub const SECTION_MEMORY: &str = "## Memory";
pub const SECTION_STATE: &str = "## Current State";
pub const SECTION_FEEDBACK: &str = "## Feedback";
pub const SECTION_OUTPUT: &str = "## Output Format";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "k", rename_all = "snake_case")]
pub enum DemoSteps {
    Full,
    FirstK(usize),
}

fn yes() -> bool {
    true
}

fn full() -> DemoSteps {
    DemoSteps::Full
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptToggles {
    #[serde(default = "yes")]
    pub include_knowledge: bool,
    #[serde(default = "full")]
    pub demo_steps: DemoSteps,
    #[serde(default = "yes")]
    pub include_feedback: bool,
}

impl Default for PromptToggles {
    fn default() -> Self {
        Self {
            include_knowledge: true,
            demo_steps: DemoSteps::Full,
            include_feedback: true,
        }
    }
}

impl PromptToggles {
    /// Named ablations: `full`, `few_step`, `no_knowledge`, `no_feedback`.
    pub fn ablation(name: &str) -> Option<Self> {
        let base = Self::default();
        Some(match name {
            "full" => base,
            "few_step" => Self {
                demo_steps: DemoSteps::FirstK(2),
                ..base
            },
            "no_knowledge" => Self {
                include_knowledge: false,
                ..base
            },
            "no_feedback" => Self {
                include_feedback: false,
                ..base
            },
            _ => return None,
        })
    }
}

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("template is missing the `@@ {0}` section")]
    MissingSection(&'static str),
    #[error("level {0} has no demonstration dish")]
    NoDemo(u32),
    #[error(transparent)]
    Demo(#[from] DemoError),
}

/// Text blocks keyed by their `@@ name` markers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub instructions: String,
    pub knowledge: String,
    pub output_format: String,
}

impl PromptTemplate {
    pub fn shipped() -> Self {
        Self::parse(SHIPPED_TEMPLATE).expect("shipped template is complete")
    }

    pub fn parse(text: &str) -> Result<Self, PromptError> {
        let mut sections: BTreeMap<&str, String> = BTreeMap::new();
        let mut current: Option<&str> = None;
        for line in text.lines() {
            if let Some(name) = line.strip_prefix("@@ ") {
                current = Some(name.trim());
                sections.entry(name.trim()).or_default();
            } else if let Some(name) = current {
                let body = sections.get_mut(name).expect("section opened");
                body.push_str(line);
                body.push('\n');
            }
        }
        let mut take = |name: &'static str| {
            sections
                .remove(name)
                .map(|s| s.trim_end().to_string())
                .ok_or(PromptError::MissingSection(name))
        };
        Ok(Self {
            instructions: take("instructions")?,
            knowledge: take("knowledge")?,
            output_format: take("output_format")?,
        })
    }
}

/// Everything constant across an episode's prompts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub instructions_text: String,
    pub recipes_text: String,
    pub inference_knowledge_text: String,
    pub output_format_text: String,
    pub demo: Vec<DemoStep>,
    /// Agent count the demonstration was recorded with.
    pub demo_agents: usize,
    pub toggles: PromptToggles,
}

fn agent_list(n: usize) -> String {
    (0..n).map(|i| format!("agent{i}")).collect::<Vec<_>>().join(", ")
}

fn fill(text: &str, vars: &[(&str, &str)]) -> String {
    vars.iter()
        .fold(text.to_string(), |acc, (k, v)| acc.replace(&format!("{{{k}}}"), v))
}

/// One line per recipe on the way to any dish of the level's pool.
pub fn recipes_text(engine: &Engine) -> String {
    let mut seen = BTreeSet::new();
    let mut out = String::new();
    for dish in &engine.level().order_pool {
        let Ok(graph) = derive_task_graph_for_level(dish, engine.pack(), engine.level()) else {
            continue;
        };
        for node in graph.nodes {
            let r = node.recipe;
            if seen.insert(r.output.clone()) {
                let inputs: Vec<&str> = r.inputs.expanded().collect();
                writeln!(
                    out,
                    "- {}: put {} in the {} and activate it; ready after {} steps",
                    r.output,
                    inputs.join(", "),
                    r.tool,
                    r.duration
                )
                .unwrap();
            }
        }
    }
    out.trim_end().to_string()
}

impl PromptBundle {
    pub fn for_level(
        engine: &Engine,
        num_agents: usize,
        demo_agents: Option<usize>,
        toggles: PromptToggles,
    ) -> Result<Self, PromptError> {
        Self::with_template(&PromptTemplate::shipped(), engine, num_agents, demo_agents, toggles)
    }

    pub fn with_template(
        template: &PromptTemplate,
        engine: &Engine,
        num_agents: usize,
        demo_agents: Option<usize>,
        toggles: PromptToggles,
    ) -> Result<Self, PromptError> {
        let level = engine.level();
        let agents = agent_list(num_agents);
        let n = num_agents.to_string();
        let locations = engine.location_ids().join(", ");
        let ingredients = level.ingredients.join(", ");
        let tools = level.tools.join(", ");
        let vars = [
            ("num_agents", n.as_str()),
            ("agents", agents.as_str()),
            ("locations", locations.as_str()),
            ("ingredients", ingredients.as_str()),
            ("tools", tools.as_str()),
        ];
        let demo_agents = demo_agents.unwrap_or(num_agents);
        let dish = level.demo_dish.clone().ok_or(PromptError::NoDemo(level.id))?;
        let demo = synthesize_demo(engine.pack_arc().clone(), &dish, demo_agents)?;
        Ok(Self {
            instructions_text: fill(&template.instructions, &vars),
            recipes_text: recipes_text(engine),
            inference_knowledge_text: fill(&template.knowledge, &vars),
            output_format_text: fill(&template.output_format, &vars),
            demo,
            demo_agents,
            toggles,
        })
    }

    /// Demonstration steps kept by the `demo_steps` toggle.
    pub fn demo_in_use(&self) -> &[DemoStep] {
        match self.toggles.demo_steps {
            DemoSteps::Full => &self.demo,
            DemoSteps::FirstK(k) => &self.demo[..k.min(self.demo.len())],
        }
    }
}

/// Builds the full prompt. Sections appear in a fixed order; optional ones
/// are left out entirely rather than left empty.
pub fn assemble_prompt(bundle: &PromptBundle, state_text: &str, memory: &MemoryWindow, feedback: &[String]) -> String {
    let mut out = String::new();
    let mut section = |header: &str, body: &str| {
        out.push_str(header);
        out.push('\n');
        out.push_str(body.trim_end());
        out.push_str("\n\n");
    };
    section(SECTION_INSTRUCTIONS, &bundle.instructions_text);
    section(SECTION_RECIPES, &bundle.recipes_text);
    if bundle.toggles.include_knowledge {
        section(SECTION_KNOWLEDGE, &bundle.inference_knowledge_text);
    }
    let demo = bundle.demo_in_use();
    if !demo.is_empty() {
        let mut body = String::new();
        for (i, step) in demo.iter().enumerate() {
            write!(
                body,
                "### Step {}\nState:\n{}Dispatch:\n{}\n\n",
                i + 1,
                step.state_text,
                step.dispatch_text
            )
            .unwrap();
        }
        section(SECTION_DEMO, &body);
    }
    if !memory.is_empty() {
        let mut body = String::new();
        let len = memory.len();
        for (i, e) in memory.entries().enumerate() {
            write!(
                body,
                "### {} step(s) ago\nState:\n{}Dispatch:\n{}\n",
                len - i,
                e.state_text,
                e.dispatch_text
            )
            .unwrap();
            if bundle.toggles.include_feedback && !e.feedback_text.is_empty() {
                write!(body, "Feedback:\n{}\n", e.feedback_text).unwrap();
            }
            body.push('\n');
        }
        section(SECTION_MEMORY, &body);
    }
    section(SECTION_STATE, state_text);
    if bundle.toggles.include_feedback && !feedback.is_empty() {
        let body: String = feedback.iter().map(|l| format!("- {l}\n")).collect();
        section(SECTION_FEEDBACK, &body);
    }
    section(SECTION_OUTPUT, &bundle.output_format_text);
    out.truncate(out.trim_end().len());
    out.push('\n');
    out
}
