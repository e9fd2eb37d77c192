use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use super::{ContentPack, ItemKind, LevelSpec, RecipeRule};
use crate::multiset::Multiset;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("unknown dish `{0}`")]
    UnknownDish(String),
    #[error("`{0}` cannot be produced from the available tools and ingredients")]
    Unreachable(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TaskNode {
    pub recipe: RecipeRule,
    /// Nodes producing this node's non-ingredient inputs.
    pub children: Vec<usize>,
    /// 1 for a node whose inputs are all raw ingredients.
    pub depth: u32,
}

/// Recipe applications from raw ingredients to one dish. Nodes are stored in
/// topological order (every child precedes its parent); the root is last.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TaskGraph {
    pub dish: String,
    pub nodes: Vec<TaskNode>,
}

impl TaskGraph {
    pub fn root(&self) -> &TaskNode {
        self.nodes.last().expect("task graph has a root")
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn depth(&self) -> u32 {
        self.root().depth
    }

    pub fn tools(&self) -> BTreeSet<&str> {
        self.nodes.iter().map(|n| n.recipe.tool.as_str()).collect()
    }

    /// Raw ingredients consumed anywhere in the graph, with multiplicity.
    pub fn raw_ingredients(&self, pack: &ContentPack) -> Multiset {
        let mut out = Multiset::new();
        for node in &self.nodes {
            for item in node.recipe.inputs.expanded() {
                if pack.kind_of(item) == Some(ItemKind::Ingredient) {
                    out.insert(item);
                }
            }
        }
        out
    }

    pub fn max_mixture_size(&self) -> u32 {
        self.nodes.iter().map(|n| n.recipe.inputs.len()).max().unwrap_or(0)
    }

    /// Checks that children always precede parents.
    pub fn is_topologically_ordered(&self) -> bool {
        self.nodes
            .iter()
            .enumerate()
            .all(|(i, n)| n.children.iter().all(|c| *c < i))
    }
}

/// Derives the smallest task graph for `dish` using every tool and ingredient
/// in the pack.
pub fn derive_task_graph(dish: &str, pack: &ContentPack) -> Result<TaskGraph, GraphError> {
    let tools: BTreeSet<&str> = pack.tools.iter().map(|t| t.name.as_str()).collect();
    let ingredients: BTreeSet<&str> = pack.items_of_kind(ItemKind::Ingredient).collect();
    derive_with(dish, pack, &tools, &ingredients)
}

/// Same as [`derive_task_graph`] but restricted to one level's kitchen.
pub fn derive_task_graph_for_level(dish: &str, pack: &ContentPack, level: &LevelSpec) -> Result<TaskGraph, GraphError> {
    let tools: BTreeSet<&str> = level.tools.iter().map(String::as_str).collect();
    let ingredients: BTreeSet<&str> = level.ingredients.iter().map(String::as_str).collect();
    derive_with(dish, pack, &tools, &ingredients)
}

fn derive_with(
    dish: &str,
    pack: &ContentPack,
    tools: &BTreeSet<&str>,
    ingredients: &BTreeSet<&str>,
) -> Result<TaskGraph, GraphError> {
    if pack.kind_of(dish).is_none() {
        return Err(GraphError::UnknownDish(dish.to_string()));
    }
    let mut planner = Cheapest {
        pack,
        tools,
        ingredients,
        memo: BTreeMap::new(),
        visiting: BTreeSet::new(),
    };
    if planner.cost(dish).is_none() || ingredients.contains(dish) {
        return Err(GraphError::Unreachable(dish.to_string()));
    }
    let mut nodes = Vec::new();
    planner.emit(dish, &mut nodes);
    Ok(TaskGraph {
        dish: dish.to_string(),
        nodes,
    })
}

struct Cheapest<'a> {
    pack: &'a ContentPack,
    tools: &'a BTreeSet<&'a str>,
    ingredients: &'a BTreeSet<&'a str>,
    // item -> (node count, index into pack.recipes); None = unreachable
    memo: BTreeMap<String, Option<(usize, usize)>>,
    visiting: BTreeSet<String>,
}

impl Cheapest<'_> {
    /// Node count of the cheapest graph producing `item`; 0 for ingredients.
    fn cost(&mut self, item: &str) -> Option<usize> {
        if self.ingredients.contains(item) {
            return Some(0);
        }
        if let Some(hit) = self.memo.get(item) {
            return hit.map(|(c, _)| c);
        }
        if !self.visiting.insert(item.to_string()) {
            return None;
        }
        let mut best: Option<(usize, usize)> = None;
        for (idx, rule) in self.pack.recipes.iter().enumerate() {
            if rule.output != item || !self.tools.contains(rule.tool.as_str()) {
                continue;
            }
            let mut total = 1;
            let mut ok = true;
            for (input, n) in rule.inputs.iter() {
                match self.cost(input) {
                    Some(c) => total += c * n as usize,
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok && best.is_none_or(|(c, _)| total < c) {
                best = Some((total, idx));
            }
        }
        self.visiting.remove(item);
        self.memo.insert(item.to_string(), best);
        best.map(|(c, _)| c)
    }

    fn emit(&mut self, item: &str, nodes: &mut Vec<TaskNode>) -> usize {
        let (_, idx) = self.memo[item].expect("emit only reachable items");
        let rule = self.pack.recipes[idx].clone();
        let mut children = Vec::new();
        let mut depth = 1;
        for input in rule.inputs.expanded() {
            if self.ingredients.contains(input) {
                continue;
            }
            let child = self.emit(input, nodes);
            depth = depth.max(nodes[child].depth + 1);
            children.push(child);
        }
        nodes.push(TaskNode {
            recipe: rule,
            children,
            depth,
        });
        nodes.len() - 1
    }
}
