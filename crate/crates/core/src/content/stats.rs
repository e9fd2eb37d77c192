use serde::Serialize;

use super::{derive_task_graph, ContentPack};

/// One row of the dish-complexity table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DishStats {
    pub dish: String,
    pub num_tools: usize,
    pub num_ingredients: usize,
    pub num_steps: usize,
    pub max_mixture_size: u32,
}

/// Per-dish complexity in pack order. Dishes whose graph cannot be derived
/// are skipped; a validated pack has none.
pub fn content_stats(pack: &ContentPack) -> Vec<DishStats> {
    pack.dishes
        .iter()
        .filter_map(|d| {
            let g = derive_task_graph(&d.name, pack).ok()?;
            Some(DishStats {
                dish: d.name.clone(),
                num_tools: g.tools().len(),
                num_ingredients: g.raw_ingredients(pack).distinct().count(),
                num_steps: g.node_count(),
                max_mixture_size: g.max_mixture_size(),
            })
        })
        .collect()
}

pub fn stats_csv(stats: &[DishStats]) -> String {
    let mut out = String::from("dish,num_tools,num_ingredients,num_steps,max_mixture_size\n");
    for s in stats {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            s.dish, s.num_tools, s.num_ingredients, s.num_steps, s.max_mixture_size
        ));
    }
    out
}
