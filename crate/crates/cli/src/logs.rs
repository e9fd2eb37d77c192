//! Episode logs on disk: `summary.json` plus append-only `steps.jsonl`.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use brigade_core::planners::ReplayPlanner;
use brigade_core::scheduler::{parse_steps_jsonl, EpisodeSummary};
use brigade_core::{run_episode, ContentPack, EpisodeReport};

pub const SUMMARY_FILE: &str = "summary.json";
pub const STEPS_FILE: &str = "steps.jsonl";

pub fn write_report(dir: &Path, report: &EpisodeReport) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let summary = serde_json::to_string_pretty(&report.summary())?;
    fs::write(dir.join(SUMMARY_FILE), summary + "\n")?;
    fs::write(dir.join(STEPS_FILE), report.steps_jsonl())?;
    Ok(())
}

/// Accepts the log directory or either file inside it.
fn log_dir(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.to_path_buf()
    } else {
        path.parent().map(Path::to_path_buf).unwrap_or_default()
    }
}

pub fn read_report(path: &Path) -> Result<EpisodeReport> {
    let dir = log_dir(path);
    let summary_path = dir.join(SUMMARY_FILE);
    let steps_path = dir.join(STEPS_FILE);
    let summary: EpisodeSummary = serde_json::from_str(
        &fs::read_to_string(&summary_path).with_context(|| format!("reading {}", summary_path.display()))?,
    )
    .with_context(|| format!("parsing {}", summary_path.display()))?;
    let steps = parse_steps_jsonl(
        &fs::read_to_string(&steps_path).with_context(|| format!("reading {}", steps_path.display()))?,
    )
    .with_context(|| format!("parsing {}", steps_path.display()))?;
    if steps.len() != summary.steps_run {
        bail!(
            "{} has {} steps but the summary records {}",
            STEPS_FILE,
            steps.len(),
            summary.steps_run
        );
    }
    Ok(EpisodeReport::from_parts(summary, steps))
}

/// Where a replay first departs from its recording.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayDiff {
    pub tick: Option<u32>,
    pub what: String,
}

pub struct ReplayOutcome {
    pub report: EpisodeReport,
    pub diffs: Vec<ReplayDiff>,
}

/// Re-runs a recorded episode from its raw completions and compares every
/// step hash, the final state and the report hash.
pub fn replay(recorded: &EpisodeReport, pack: Arc<ContentPack>) -> Result<ReplayOutcome> {
    let mut planner = ReplayPlanner::from_report(recorded);
    let report = run_episode(&recorded.config, pack, &mut planner)?;
    let mut diffs = Vec::new();
    for (a, b) in recorded.steps.iter().zip(&report.steps) {
        if a.state_hash != b.state_hash || a.dispatch != b.dispatch {
            diffs.push(ReplayDiff {
                tick: Some(a.tick),
                what: format!(
                    "state {:016x} vs {:016x}; dispatch {:?} vs {:?}",
                    a.state_hash, b.state_hash, a.dispatch, b.dispatch
                ),
            });
        }
    }
    if recorded.steps.len() != report.steps.len() {
        diffs.push(ReplayDiff {
            tick: None,
            what: format!(
                "{} recorded steps, {} replayed",
                recorded.steps.len(),
                report.steps.len()
            ),
        });
    }
    if recorded.aborted != report.aborted {
        diffs.push(ReplayDiff {
            tick: None,
            what: format!("aborted {:?} vs {:?}", recorded.aborted, report.aborted),
        });
    }
    if recorded.final_hash != report.final_hash {
        diffs.push(ReplayDiff {
            tick: None,
            what: format!("final state {:016x} vs {:016x}", recorded.final_hash, report.final_hash),
        });
    }
    if recorded.report_hash() != report.report_hash() {
        diffs.push(ReplayDiff {
            tick: None,
            what: format!(
                "report {:016x} vs {:016x}",
                recorded.report_hash(),
                report.report_hash()
            ),
        });
    }
    Ok(ReplayOutcome { report, diffs })
}
