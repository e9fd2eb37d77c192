//! Task decomposition and assignment: choose binary v[p][i][m] maximizing
//! sum(u * v) subject to a global time budget and at most one agent per
//! sub-task.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Exact search is limited to desk-scale instances.
pub const MAX_BINARY_VARS: usize = 20;

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentInstance {
    pub num_agents: usize,
    /// `utility[p][i][m]`; `f64::NEG_INFINITY` marks pairs the agent cannot
    /// execute (serialized as `null`).
    #[serde(with = "neg_inf_as_null")]
    pub utility: Vec<Vec<Vec<f64>>>,
    /// `duration[p][i][m]`, positive.
    pub duration: Vec<Vec<Vec<f64>>>,
    pub budget: f64,
    /// Optional cap on sub-tasks per agent. `None` is the plain two-constraint
    /// program; the step planner uses `Some(1)` because an agent takes one
    /// command per step.
    #[serde(default)]
    pub agent_capacity: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    /// `v[p][i][m]`.
    pub v: Vec<Vec<Vec<bool>>>,
    pub total_utility: f64,
    pub total_duration: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolverError {
    #[error("instance has {vars} binary variables; exact search is limited to {limit}")]
    SizeLimit { vars: usize, limit: usize },
    #[error("malformed instance: {0}")]
    Shape(String),
}

impl SolverError {
    pub fn code(&self) -> &'static str {
        match self {
            SolverError::SizeLimit { .. } => "size_limit",
            SolverError::Shape(_) => "bad_shape",
        }
    }
}

impl AssignmentInstance {
    pub fn num_tasks(&self) -> usize {
        self.utility.len()
    }

    /// Sub-task count of task `p`.
    pub fn subtasks(&self, p: usize) -> usize {
        self.utility[p].first().map_or(0, Vec::len)
    }

    pub fn num_binary_vars(&self) -> usize {
        (0..self.num_tasks()).map(|p| self.subtasks(p) * self.num_agents).sum()
    }

    pub fn check_shape(&self) -> Result<(), SolverError> {
        if self.duration.len() != self.utility.len() {
            return Err(SolverError::Shape("utility and duration disagree on task count".into()));
        }
        if !self.budget.is_finite() && self.budget != f64::INFINITY {
            return Err(SolverError::Shape("budget must be a number".into()));
        }
        for p in 0..self.num_tasks() {
            let m = self.subtasks(p);
            if self.utility[p].len() != self.num_agents || self.duration[p].len() != self.num_agents {
                return Err(SolverError::Shape(format!("task {p} does not list every agent")));
            }
            for i in 0..self.num_agents {
                if self.utility[p][i].len() != m || self.duration[p][i].len() != m {
                    return Err(SolverError::Shape(format!(
                        "task {p}, agent {i}: expected {m} sub-tasks"
                    )));
                }
                for (&u, &d) in self.utility[p][i].iter().zip(&self.duration[p][i]) {
                    if u.is_nan() || u == f64::INFINITY {
                        return Err(SolverError::Shape(format!("task {p}: bad utility {u}")));
                    }
                    if !(d.is_finite() && d > 0.0) {
                        return Err(SolverError::Shape(format!("task {p}: bad duration {d}")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn empty_assignment(&self) -> Assignment {
        Assignment {
            v: (0..self.num_tasks())
                .map(|p| vec![vec![false; self.subtasks(p)]; self.num_agents])
                .collect(),
            total_utility: 0.0,
            total_duration: 0.0,
        }
    }

    fn slots(&self) -> Vec<(usize, usize)> {
        (0..self.num_tasks())
            .flat_map(|p| (0..self.subtasks(p)).map(move |m| (p, m)))
            .collect()
    }

    /// Builds the assignment from a per-slot agent choice.
    pub fn assignment_from(&self, choice: &[((usize, usize), Option<usize>)]) -> Assignment {
        let mut a = self.empty_assignment();
        for &((p, m), agent) in choice {
            if let Some(i) = agent {
                a.v[p][i][m] = true;
                a.total_utility += self.utility[p][i][m];
                a.total_duration += self.duration[p][i][m];
            }
        }
        a
    }
}

impl Assignment {
    /// Checks both constraint families, the optional per-agent cap and that
    /// only executable pairs are selected.
    pub fn is_feasible(&self, inst: &AssignmentInstance) -> bool {
        let mut duration = 0.0;
        let mut per_agent = vec![0usize; inst.num_agents];
        for p in 0..inst.num_tasks() {
            for m in 0..inst.subtasks(p) {
                let mut takers = 0;
                for (i, taken) in per_agent.iter_mut().enumerate() {
                    if self.v[p][i][m] {
                        if inst.utility[p][i][m] == f64::NEG_INFINITY {
                            return false;
                        }
                        takers += 1;
                        *taken += 1;
                        duration += inst.duration[p][i][m];
                    }
                }
                if takers > 1 {
                    return false;
                }
            }
        }
        if let Some(cap) = inst.agent_capacity {
            if per_agent.iter().any(|&n| n > cap) {
                return false;
            }
        }
        duration <= inst.budget + EPS
    }

    fn flat(&self) -> Vec<bool> {
        self.v.iter().flatten().flatten().copied().collect()
    }
}

/// Exhaustive branch-and-bound. Among optimal assignments the one whose
/// flattened `v` (task, agent, sub-task order) is lexicographically smallest
/// is returned.
pub fn solve_assignment_exact(inst: &AssignmentInstance) -> Result<Assignment, SolverError> {
    inst.check_shape()?;
    let vars = inst.num_binary_vars();
    if vars > MAX_BINARY_VARS {
        return Err(SolverError::SizeLimit {
            vars,
            limit: MAX_BINARY_VARS,
        });
    }
    if inst.budget < 0.0 {
        return Ok(inst.empty_assignment());
    }
    let slots = inst.slots();
    // optimistic gain still available from slot k onwards
    let mut suffix = vec![0.0; slots.len() + 1];
    for k in (0..slots.len()).rev() {
        let (p, m) = slots[k];
        let best = (0..inst.num_agents)
            .map(|i| inst.utility[p][i][m])
            .fold(0.0_f64, f64::max);
        suffix[k] = suffix[k + 1] + best;
    }
    let mut search = Search {
        inst,
        slots: &slots,
        suffix: &suffix,
        choice: vec![None; slots.len()],
        load: vec![0; inst.num_agents],
        best: None,
    };
    search.dfs(0, 0.0, 0.0);
    let (_, best) = search.best.expect("the empty assignment is always feasible");
    Ok(best)
}

struct Search<'a> {
    inst: &'a AssignmentInstance,
    slots: &'a [(usize, usize)],
    suffix: &'a [f64],
    choice: Vec<Option<usize>>,
    load: Vec<usize>,
    best: Option<(Vec<bool>, Assignment)>,
}

impl Search<'_> {
    fn dfs(&mut self, k: usize, utility: f64, duration: f64) {
        if let Some((_, b)) = &self.best {
            if utility + self.suffix[k] < b.total_utility - EPS {
                return;
            }
        }
        if k == self.slots.len() {
            self.offer(utility);
            return;
        }
        let (p, m) = self.slots[k];
        self.choice[k] = None;
        self.dfs(k + 1, utility, duration);
        for i in 0..self.inst.num_agents {
            let u = self.inst.utility[p][i][m];
            let d = self.inst.duration[p][i][m];
            if u == f64::NEG_INFINITY || duration + d > self.inst.budget + EPS {
                continue;
            }
            if self.inst.agent_capacity.is_some_and(|cap| self.load[i] >= cap) {
                continue;
            }
            self.choice[k] = Some(i);
            self.load[i] += 1;
            self.dfs(k + 1, utility + u, duration + d);
            self.load[i] -= 1;
            self.choice[k] = None;
        }
    }

    fn offer(&mut self, utility: f64) {
        let replace = match &self.best {
            None => true,
            Some((flat, b)) => {
                if utility > b.total_utility + EPS {
                    true
                } else if (utility - b.total_utility).abs() <= EPS {
                    self.current().flat() < *flat
                } else {
                    false
                }
            }
        };
        if replace {
            let cand = self.current();
            self.best = Some((cand.flat(), cand));
        }
    }

    fn current(&self) -> Assignment {
        let pairs: Vec<_> = self.slots.iter().copied().zip(self.choice.iter().copied()).collect();
        self.inst.assignment_from(&pairs)
    }
}

/// Picks (task, agent, sub-task) triples in descending utility order whenever
/// they keep the assignment feasible. Non-positive utilities are never taken.
pub fn solve_assignment_greedy(inst: &AssignmentInstance) -> Result<Assignment, SolverError> {
    inst.check_shape()?;
    let mut triples = Vec::new();
    for p in 0..inst.num_tasks() {
        for i in 0..inst.num_agents {
            for m in 0..inst.subtasks(p) {
                let u = inst.utility[p][i][m];
                if u > 0.0 {
                    triples.push((u, p, i, m));
                }
            }
        }
    }
    triples.sort_by(|a, b| b.0.total_cmp(&a.0).then((a.1, a.2, a.3).cmp(&(b.1, b.2, b.3))));
    let mut taken = inst.empty_assignment();
    let mut load = vec![0usize; inst.num_agents];
    for (u, p, i, m) in triples {
        let slot_free = (0..inst.num_agents).all(|j| !taken.v[p][j][m]);
        let d = inst.duration[p][i][m];
        let fits = taken.total_duration + d <= inst.budget + EPS;
        let cap_ok = inst.agent_capacity.is_none_or(|cap| load[i] < cap);
        if slot_free && fits && cap_ok {
            taken.v[p][i][m] = true;
            taken.total_utility += u;
            taken.total_duration += d;
            load[i] += 1;
        }
    }
    Ok(taken)
}

mod neg_inf_as_null {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Vec<Vec<f64>>], s: S) -> Result<S::Ok, S::Error> {
        let mapped: Vec<Vec<Vec<Option<f64>>>> = v
            .iter()
            .map(|a| {
                a.iter()
                    .map(|b| b.iter().map(|x| x.is_finite().then_some(*x)).collect())
                    .collect()
            })
            .collect();
        mapped.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<Vec<f64>>>, D::Error> {
        let raw: Vec<Vec<Vec<Option<f64>>>> = Vec::deserialize(d)?;
        Ok(raw
            .into_iter()
            .map(|a| {
                a.into_iter()
                    .map(|b| b.into_iter().map(|x| x.unwrap_or(f64::NEG_INFINITY)).collect())
                    .collect()
            })
            .collect())
    }
}
