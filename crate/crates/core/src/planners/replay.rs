use super::{PlanRequest, Planner, PlannerError};
use crate::scheduler::EpisodeReport;

/// Returns recorded completions verbatim, in recording order.
#[derive(Debug, Clone)]
pub struct ReplayPlanner {
    completions: Vec<String>,
    next: usize,
}

impl ReplayPlanner {
    pub fn new(completions: Vec<String>) -> Self {
        Self { completions, next: 0 }
    }

    /// Every raw completion of a report, retries included.
    pub fn from_report(report: &EpisodeReport) -> Self {
        Self::new(
            report
                .steps
                .iter()
                .flat_map(|s| s.raw_outputs.iter().cloned())
                .collect(),
        )
    }

    pub fn remaining(&self) -> usize {
        self.completions.len() - self.next
    }
}

impl Planner for ReplayPlanner {
    fn name(&self) -> String {
        "replay".into()
    }

    fn complete(&mut self, _request: &PlanRequest<'_>) -> Result<String, PlannerError> {
        let out = self
            .completions
            .get(self.next)
            .cloned()
            .ok_or(PlannerError::ReplayExhausted(self.completions.len()))?;
        self.next += 1;
        Ok(out)
    }
}
