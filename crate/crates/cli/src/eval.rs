//! Evaluation sweeps: levels x agent counts x task intervals x seeds, reduced
//! to per-cell interval counts and a collaboration score.

use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use brigade_core::content::TAU_VALUES_PER_LEVEL;
use brigade_core::dispatcher::PromptToggles;
use brigade_core::metrics::{compute_cos, IntervalCounts};
use brigade_core::{run_episode, ContentPack, EpisodeConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::planner::PlannerSpec;

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub levels: Vec<u32>,
    pub agent_counts: Vec<usize>,
    /// 1-based indices into each level's task intervals.
    pub tau_indices: Vec<usize>,
    pub seeds: u64,
    pub seed_base: u64,
    pub planner: PlannerSpec,
    pub profiles: Option<PathBuf>,
    pub toggles: PromptToggles,
    pub demo_agents: Option<usize>,
    pub max_steps: Option<u32>,
}

/// Counts for one task interval of one cell, summed over seeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntervalCell {
    pub tau_index: usize,
    pub tau_int: u32,
    pub completed: u32,
    pub failed: u32,
    pub active: u32,
}

impl IntervalCell {
    pub fn rate(&self) -> Option<f64> {
        let total = self.completed + self.failed;
        (total > 0).then(|| self.completed as f64 / total as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    pub level: u32,
    pub agents: usize,
    pub intervals: Vec<IntervalCell>,
    /// Mean interval rate with still-active orders left out.
    pub cos: Option<f64>,
    /// Same, counting still-active orders as failures.
    pub cos_active_as_failed: Option<f64>,
    pub aborted_runs: usize,
}

struct Run {
    cell: usize,
    slot: usize,
    config: EpisodeConfig,
}

pub fn run_sweep(spec: &SweepSpec, pack: Arc<ContentPack>) -> Result<Vec<CellResult>> {
    if spec.seeds == 0 {
        bail!("at least one seed is needed");
    }
    let mut cells = Vec::new();
    let mut runs = Vec::new();
    for &level_id in &spec.levels {
        let level = pack.level(level_id).with_context(|| format!("no level {level_id}"))?;
        for &agents in &spec.agent_counts {
            let cell = cells.len();
            let mut intervals = Vec::new();
            for (slot, &k) in spec.tau_indices.iter().enumerate() {
                if !(1..=level.tau_int_values.len()).contains(&k) {
                    bail!("task interval index {k} is outside 1..={}", level.tau_int_values.len());
                }
                let tau_int = level.tau_int_values[k - 1];
                intervals.push(IntervalCell {
                    tau_index: k,
                    tau_int,
                    completed: 0,
                    failed: 0,
                    active: 0,
                });
                for s in 0..spec.seeds {
                    let mut config = EpisodeConfig::for_level(level, tau_int, spec.seed_base + s);
                    config.num_agents = agents;
                    config.toggles = spec.toggles.clone();
                    config.demo_agents = spec.demo_agents;
                    config.planner = spec.planner.to_string();
                    if let Some(t) = spec.max_steps {
                        config.max_steps = t;
                    }
                    if spec.planner.owns_transport_retries() {
                        config.transport_retries = 0;
                    }
                    runs.push(Run { cell, slot, config });
                }
            }
            cells.push(CellResult {
                level: level_id,
                agents,
                intervals,
                cos: None,
                cos_active_as_failed: None,
                aborted_runs: 0,
            });
        }
    }

    let reports: Vec<_> = runs
        .par_iter()
        .map(|run| -> Result<_> {
            let mut planner = spec.planner.build(run.config.seed, spec.profiles.as_deref())?;
            Ok(run_episode(&run.config, pack.clone(), &mut planner)?)
        })
        .collect::<Result<_>>()?;

    for (run, report) in runs.iter().zip(reports) {
        let cell = &mut cells[run.cell];
        let iv = &mut cell.intervals[run.slot];
        iv.completed += report.completed;
        iv.failed += report.failed;
        iv.active += report.active_at_end;
        if let Some(why) = &report.aborted {
            log::warn!(
                "level {} agents {} seed {} aborted: {why}",
                cell.level,
                cell.agents,
                run.config.seed
            );
            cell.aborted_runs += 1;
        }
    }
    for cell in &mut cells {
        let plain: Vec<_> = cell
            .intervals
            .iter()
            .map(|i| IntervalCounts::new(i.tau_int, i.completed, i.failed))
            .collect();
        let strict: Vec<_> = cell
            .intervals
            .iter()
            .map(|i| IntervalCounts::new(i.tau_int, i.completed, i.failed + i.active))
            .collect();
        cell.cos = compute_cos(&plain).ok().map(|r| r.cos);
        cell.cos_active_as_failed = compute_cos(&strict).ok().map(|r| r.cos);
    }
    Ok(cells)
}

fn fmt_rate(r: Option<f64>) -> String {
    r.map(|v| format!("{v:.6}")).unwrap_or_default()
}

/// One row per (level, agents) cell with counts and rates for every interval.
pub fn cells_csv(cells: &[CellResult], planner: &str, seeds: u64) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["level".to_string(), "agents".into(), "planner".into(), "seeds".into()];
    for k in 1..=TAU_VALUES_PER_LEVEL {
        for col in ["int", "completed", "failed", "active", "rate"] {
            header.push(format!("tau{k}_{col}"));
        }
    }
    header.extend(["cos".into(), "cos_active_as_failed".into(), "aborted_runs".into()]);
    w.write_record(&header)?;
    for c in cells {
        let mut row = vec![
            c.level.to_string(),
            c.agents.to_string(),
            planner.to_string(),
            seeds.to_string(),
        ];
        for k in 1..=TAU_VALUES_PER_LEVEL {
            match c.intervals.iter().find(|i| i.tau_index == k) {
                Some(i) => row.extend([
                    i.tau_int.to_string(),
                    i.completed.to_string(),
                    i.failed.to_string(),
                    i.active.to_string(),
                    fmt_rate(i.rate()),
                ]),
                None => row.extend(std::iter::repeat_n(String::new(), 5)),
            }
        }
        row.extend([
            fmt_rate(c.cos),
            fmt_rate(c.cos_active_as_failed),
            c.aborted_runs.to_string(),
        ]);
        w.write_record(&row)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// Levels as columns, one `completed/total` row per interval and a CoS row,
/// one block per agent count.
pub fn table_csv(cells: &[CellResult]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut levels: Vec<u32> = Vec::new();
    let mut agent_counts: Vec<usize> = Vec::new();
    for c in cells {
        if !levels.contains(&c.level) {
            levels.push(c.level);
        }
        if !agent_counts.contains(&c.agents) {
            agent_counts.push(c.agents);
        }
    }
    let mut header = vec!["agents".to_string(), "row".into()];
    header.extend(levels.iter().map(|l| format!("level_{l}")));
    header.push("average".into());
    w.write_record(&header)?;
    let tau_indices: Vec<usize> = cells
        .first()
        .map(|c| c.intervals.iter().map(|i| i.tau_index).collect())
        .unwrap_or_default();
    for &agents in &agent_counts {
        let row_cells: Vec<Option<&CellResult>> = levels
            .iter()
            .map(|&l| cells.iter().find(|c| c.level == l && c.agents == agents))
            .collect();
        for (slot, k) in tau_indices.iter().enumerate() {
            let mut row = vec![agents.to_string(), format!("tau{k}")];
            for c in &row_cells {
                row.push(c.map_or(String::new(), |c| {
                    let i = &c.intervals[slot];
                    format!("{}/{}", i.completed, i.completed + i.failed)
                }));
            }
            row.push(String::new());
            w.write_record(&row)?;
        }
        let scores: Vec<Option<f64>> = row_cells.iter().map(|c| c.and_then(|c| c.cos)).collect();
        let mut row = vec![agents.to_string(), "cos".into()];
        row.extend(scores.iter().map(|s| s.map(|v| format!("{v:.3}")).unwrap_or_default()));
        let known: Vec<f64> = scores.iter().flatten().copied().collect();
        row.push(if known.is_empty() {
            String::new()
        } else {
            format!("{:.3}", known.iter().sum::<f64>() / known.len() as f64)
        });
        w.write_record(&row)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}
