//! Dishes, recipes, tools and levels, plus the loader that validates a pack.

mod graph;
mod stats;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::multiset::Multiset;

pub use graph::{derive_task_graph, derive_task_graph_for_level, GraphError, TaskGraph, TaskNode};
pub use stats::{content_stats, stats_csv, DishStats};

/// Number of task intervals evaluated per level.
pub const TAU_VALUES_PER_LEVEL: usize = 5;

const SHIPPED_PACK: &str = include_str!("../../data/pack.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemKind {
    Ingredient,
    Intermediate,
    Dish,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolSpec {
    pub name: String,
    /// Default cook duration for recipes on this tool.
    pub duration: u32,
    /// Attended tools keep the activating agent busy while they run.
    #[serde(default)]
    pub attended: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecipeRule {
    pub tool: String,
    pub inputs: Multiset,
    pub output: String,
    pub duration: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DishSpec {
    pub name: String,
    pub lifetime: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelClass {
    Entry,
    Simple,
    Intermediate,
    Advanced,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelSpec {
    pub id: u32,
    pub class: LevelClass,
    pub tools: Vec<String>,
    pub ingredients: Vec<String>,
    pub order_pool: Vec<String>,
    pub tau_int_values: Vec<u32>,
    pub max_steps: u32,
    pub default_agents: u32,
    /// Dish used for the worked demonstration in the prompt.
    #[serde(default)]
    pub demo_dish: Option<String>,
}

/// Immutable after load.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContentPack {
    pub version: String,
    pub tools: Vec<ToolSpec>,
    pub items: BTreeMap<String, ItemKind>,
    pub recipes: Vec<RecipeRule>,
    pub dishes: Vec<DishSpec>,
    pub levels: Vec<LevelSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationCode {
    Schema,
    Io,
    DuplicateName,
    UnknownItem,
    UnknownTool,
    UnknownLevel,
    BadRecipe,
    DuplicateRule,
    CyclicRecipe,
    UnreachableDish,
    BadTauValues,
    EmptyPool,
    NotADish,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationCode::Schema => "schema",
            ViolationCode::Io => "io",
            ViolationCode::DuplicateName => "duplicate_name",
            ViolationCode::UnknownItem => "unknown_item",
            ViolationCode::UnknownTool => "unknown_tool",
            ViolationCode::UnknownLevel => "unknown_level",
            ViolationCode::BadRecipe => "bad_recipe",
            ViolationCode::DuplicateRule => "duplicate_rule",
            ViolationCode::CyclicRecipe => "cyclic_recipe",
            ViolationCode::UnreachableDish => "unreachable_dish",
            ViolationCode::BadTauValues => "bad_tau_values",
            ViolationCode::EmptyPool => "empty_pool",
            ViolationCode::NotADish => "not_a_dish",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub message: String,
}

impl Violation {
    fn new(code: ViolationCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code.as_str(), self.message)
    }
}

#[derive(Debug, Clone, Error)]
#[error("content pack rejected with {} violation(s): {}", .violations.len(), render_violations(.violations))]
pub struct ContentError {
    pub violations: Vec<Violation>,
}

impl ContentError {
    pub fn has(&self, code: ViolationCode) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }
}

fn render_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

// On-disk layout. Recipe inputs are written as lists, durations may fall back
// to the tool default.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PackFile {
    version: String,
    tools: Vec<ToolSpec>,
    ingredients: Vec<String>,
    #[serde(default)]
    intermediates: Vec<String>,
    dishes: Vec<DishSpec>,
    recipes: Vec<RecipeFile>,
    levels: Vec<LevelSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecipeFile {
    tool: String,
    inputs: Vec<String>,
    output: String,
    #[serde(default)]
    duration: Option<u32>,
}

/// Reads and validates a pack from disk.
pub fn load_content(path: impl AsRef<Path>) -> Result<ContentPack, ContentError> {
    let bytes = std::fs::read(path.as_ref()).map_err(|e| ContentError {
        violations: vec![Violation::new(
            ViolationCode::Io,
            format!("{}: {e}", path.as_ref().display()),
        )],
    })?;
    ContentPack::from_json_bytes(&bytes)
}

impl ContentPack {
    /// The pack compiled into the crate.
    pub fn shipped() -> ContentPack {
        Self::from_json_bytes(SHIPPED_PACK.as_bytes()).expect("shipped content pack is valid")
    }

    pub fn shipped_json() -> &'static str {
        SHIPPED_PACK
    }

    pub fn from_json_bytes(bytes: &[u8]) -> Result<ContentPack, ContentError> {
        let file: PackFile = serde_json::from_slice(bytes).map_err(|e| ContentError {
            violations: vec![Violation::new(ViolationCode::Schema, e.to_string())],
        })?;
        build_pack(file)
    }

    pub fn level(&self, id: u32) -> Option<&LevelSpec> {
        self.levels.iter().find(|l| l.id == id)
    }

    pub fn tool(&self, name: &str) -> Option<&ToolSpec> {
        self.tools.iter().find(|t| t.name == name)
    }

    pub fn dish(&self, name: &str) -> Option<&DishSpec> {
        self.dishes.iter().find(|d| d.name == name)
    }

    pub fn kind_of(&self, item: &str) -> Option<ItemKind> {
        self.items.get(item).copied()
    }

    pub fn items_of_kind(&self, kind: ItemKind) -> impl Iterator<Item = &str> {
        self.items
            .iter()
            .filter(move |(_, k)| **k == kind)
            .map(|(n, _)| n.as_str())
    }

    pub fn ingredient_count(&self) -> usize {
        self.items_of_kind(ItemKind::Ingredient).count()
    }

    /// Recipes whose output is `item`.
    pub fn recipes_producing<'a>(&'a self, item: &'a str) -> impl Iterator<Item = &'a RecipeRule> {
        self.recipes.iter().filter(move |r| r.output == item)
    }

    /// The recipe on `tool` whose inputs are exactly `contents`.
    pub fn recipe_matching(&self, tool: &str, contents: &Multiset) -> Option<&RecipeRule> {
        self.recipes.iter().find(|r| r.tool == tool && &r.inputs == contents)
    }
}

fn build_pack(file: PackFile) -> Result<ContentPack, ContentError> {
    let mut violations = Vec::new();
    let mut items: BTreeMap<String, ItemKind> = BTreeMap::new();

    let mut declare = |name: &str, kind: ItemKind, violations: &mut Vec<Violation>| {
        if name.is_empty() {
            violations.push(Violation::new(ViolationCode::Schema, "empty item name"));
        } else if items.insert(name.to_string(), kind).is_some() {
            violations.push(Violation::new(
                ViolationCode::DuplicateName,
                format!("item `{name}` declared more than once"),
            ));
        }
    };
    for i in &file.ingredients {
        declare(i, ItemKind::Ingredient, &mut violations);
    }
    for i in &file.intermediates {
        declare(i, ItemKind::Intermediate, &mut violations);
    }
    for d in &file.dishes {
        declare(&d.name, ItemKind::Dish, &mut violations);
        if d.lifetime == 0 {
            violations.push(Violation::new(
                ViolationCode::Schema,
                format!("dish `{}` has zero lifetime", d.name),
            ));
        }
    }

    let mut tool_names = BTreeSet::new();
    for t in &file.tools {
        if !tool_names.insert(t.name.as_str()) {
            violations.push(Violation::new(
                ViolationCode::DuplicateName,
                format!("tool `{}` declared more than once", t.name),
            ));
        }
        if t.duration == 0 {
            violations.push(Violation::new(
                ViolationCode::Schema,
                format!("tool `{}` has zero duration", t.name),
            ));
        }
        if items.contains_key(&t.name) || t.name == crate::engine::STORAGE || t.name == crate::engine::SERVING_TABLE {
            violations.push(Violation::new(
                ViolationCode::DuplicateName,
                format!("tool name `{}` collides with another name", t.name),
            ));
        }
    }

    let mut recipes = Vec::with_capacity(file.recipes.len());
    let mut seen_rules = BTreeSet::new();
    for r in file.recipes {
        let tool = file.tools.iter().find(|t| t.name == r.tool);
        if tool.is_none() {
            violations.push(Violation::new(
                ViolationCode::UnknownTool,
                format!("recipe for `{}` uses unknown tool `{}`", r.output, r.tool),
            ));
        }
        if r.inputs.is_empty() {
            violations.push(Violation::new(
                ViolationCode::BadRecipe,
                format!("recipe for `{}` has no inputs", r.output),
            ));
        }
        for item in r.inputs.iter().chain(std::iter::once(&r.output)) {
            if !items.contains_key(item) {
                violations.push(Violation::new(
                    ViolationCode::UnknownItem,
                    format!("recipe for `{}` references unknown item `{item}`", r.output),
                ));
            }
        }
        if items.get(&r.output) == Some(&ItemKind::Ingredient) {
            violations.push(Violation::new(
                ViolationCode::BadRecipe,
                format!("recipe output `{}` is a raw ingredient", r.output),
            ));
        }
        if r.inputs.contains(&r.output) {
            violations.push(Violation::new(
                ViolationCode::CyclicRecipe,
                format!("recipe for `{}` consumes its own output", r.output),
            ));
        }
        let inputs: Multiset = r.inputs.iter().cloned().collect();
        if !seen_rules.insert((r.tool.clone(), inputs.clone())) {
            violations.push(Violation::new(
                ViolationCode::DuplicateRule,
                format!("two recipes on `{}` share inputs {inputs}", r.tool),
            ));
        }
        let duration = match r.duration {
            Some(0) => {
                violations.push(Violation::new(
                    ViolationCode::Schema,
                    format!("recipe for `{}` has zero duration", r.output),
                ));
                1
            }
            Some(d) => d,
            None => tool.map(|t| t.duration).unwrap_or(1),
        };
        recipes.push(RecipeRule {
            tool: r.tool,
            inputs,
            output: r.output,
            duration,
        });
    }

    if let Some(cycle_item) = find_cycle(&recipes) {
        violations.push(Violation::new(
            ViolationCode::CyclicRecipe,
            format!("recipes form a cycle through `{cycle_item}`"),
        ));
    }

    // Every declared intermediate or dish must be produced by some rule.
    for (name, kind) in &items {
        if *kind != ItemKind::Ingredient && !recipes.iter().any(|r| &r.output == name) {
            violations.push(Violation::new(
                ViolationCode::UnreachableDish,
                format!("no recipe produces `{name}`"),
            ));
        }
    }

    let mut level_ids = BTreeSet::new();
    for l in &file.levels {
        if !level_ids.insert(l.id) {
            violations.push(Violation::new(
                ViolationCode::DuplicateName,
                format!("level {} declared more than once", l.id),
            ));
        }
    }

    // kind = dish iff the item appears in some level's order pool
    let pooled: BTreeSet<&str> = file
        .levels
        .iter()
        .flat_map(|l| l.order_pool.iter().map(String::as_str))
        .collect();
    for d in &file.dishes {
        if !pooled.contains(d.name.as_str()) {
            violations.push(Violation::new(
                ViolationCode::NotADish,
                format!("dish `{}` is in no level's order pool", d.name),
            ));
        }
    }

    let pack = ContentPack {
        version: file.version,
        tools: file.tools,
        items,
        recipes,
        dishes: file.dishes,
        levels: file.levels,
    };

    // Level checks need a structurally sound pack; skip them if the recipe
    // graph is already broken.
    if violations.is_empty() {
        for level in &pack.levels {
            if let Err(mut v) = validate_level(level, &pack) {
                violations.append(&mut v);
            }
        }
    }

    if violations.is_empty() {
        Ok(pack)
    } else {
        Err(ContentError { violations })
    }
}

/// Detects a cycle in the item dependency graph (input -> output edges).
fn find_cycle(recipes: &[RecipeRule]) -> Option<String> {
    let mut edges: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for r in recipes {
        for input in r.inputs.distinct() {
            edges.entry(input).or_default().insert(r.output.as_str());
        }
    }
    let nodes: BTreeSet<&str> = edges
        .iter()
        .flat_map(|(k, v)| std::iter::once(*k).chain(v.iter().copied()))
        .collect();
    let mut indegree: BTreeMap<&str, usize> = nodes.iter().map(|n| (*n, 0)).collect();
    for targets in edges.values() {
        for t in targets {
            *indegree.get_mut(t).unwrap() += 1;
        }
    }
    let mut ready: Vec<&str> = indegree.iter().filter(|(_, d)| **d == 0).map(|(n, _)| *n).collect();
    let mut visited = 0;
    while let Some(n) = ready.pop() {
        visited += 1;
        if let Some(targets) = edges.get(n) {
            for t in targets {
                let d = indegree.get_mut(t).unwrap();
                *d -= 1;
                if *d == 0 {
                    ready.push(t);
                }
            }
        }
    }
    if visited == nodes.len() {
        None
    } else {
        indegree.into_iter().find(|(_, d)| *d > 0).map(|(n, _)| n.to_string())
    }
}

/// Checks a level's schema and that every pooled dish can be cooked with the
/// level's own tools and ingredients.
pub fn validate_level(level: &LevelSpec, pack: &ContentPack) -> Result<(), Vec<Violation>> {
    let mut v = Vec::new();
    let tag = format!("level {}", level.id);

    if level.tau_int_values.len() != TAU_VALUES_PER_LEVEL {
        v.push(Violation::new(
            ViolationCode::BadTauValues,
            format!(
                "{tag}: expected {TAU_VALUES_PER_LEVEL} task intervals, got {}",
                level.tau_int_values.len()
            ),
        ));
    }
    if level.tau_int_values.contains(&0) {
        v.push(Violation::new(
            ViolationCode::BadTauValues,
            format!("{tag}: task intervals must be positive"),
        ));
    }
    if level.tau_int_values.windows(2).any(|w| w[0] >= w[1]) {
        v.push(Violation::new(
            ViolationCode::BadTauValues,
            format!("{tag}: task intervals must be strictly ascending"),
        ));
    }
    if level.max_steps == 0 {
        v.push(Violation::new(
            ViolationCode::Schema,
            format!("{tag}: max_steps is zero"),
        ));
    }
    if level.default_agents == 0 {
        v.push(Violation::new(
            ViolationCode::Schema,
            format!("{tag}: default_agents is zero"),
        ));
    }
    if level.order_pool.is_empty() {
        v.push(Violation::new(
            ViolationCode::EmptyPool,
            format!("{tag}: order pool is empty"),
        ));
    }
    for t in &level.tools {
        if pack.tool(t).is_none() {
            v.push(Violation::new(
                ViolationCode::UnknownTool,
                format!("{tag}: unknown tool `{t}`"),
            ));
        }
    }
    for i in &level.ingredients {
        if pack.kind_of(i) != Some(ItemKind::Ingredient) {
            v.push(Violation::new(
                ViolationCode::UnknownItem,
                format!("{tag}: `{i}` is not an ingredient"),
            ));
        }
    }
    let mut demo_and_pool: Vec<&String> = level.order_pool.iter().collect();
    demo_and_pool.extend(level.demo_dish.iter());
    for d in demo_and_pool {
        if pack.kind_of(d) != Some(ItemKind::Dish) {
            v.push(Violation::new(
                ViolationCode::NotADish,
                format!("{tag}: `{d}` is not a dish"),
            ));
        }
    }
    if v.is_empty() {
        for dish in &level.order_pool {
            if let Err(e) = derive_task_graph_for_level(dish, pack, level) {
                v.push(Violation::new(ViolationCode::UnreachableDish, format!("{tag}: {e}")));
            }
        }
    }

    if v.is_empty() {
        Ok(())
    } else {
        Err(v)
    }
}
