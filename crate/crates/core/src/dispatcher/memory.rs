use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryEntry {
    pub state_text: String,
    pub dispatch_text: String,
    pub feedback_text: String,
}

/// The last `horizon` (state, dispatch, feedback) triples, oldest first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryWindow {
    horizon: usize,
    entries: VecDeque<MemoryEntry>,
}

impl MemoryWindow {
    pub fn new(horizon: usize) -> Self {
        Self {
            horizon,
            entries: VecDeque::with_capacity(horizon),
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn push(&mut self, entry: MemoryEntry) {
        if self.horizon == 0 {
            return;
        }
        if self.entries.len() == self.horizon {
            self.entries.pop_front();
        }
        self.entries.push_back(entry);
    }

    pub fn entries(&self) -> impl Iterator<Item = &MemoryEntry> {
        self.entries.iter()
    }

    pub fn last_mut(&mut self) -> Option<&mut MemoryEntry> {
        self.entries.back_mut()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(i: usize) -> MemoryEntry {
        MemoryEntry {
            state_text: format!("time: {i}"),
            dispatch_text: String::new(),
            feedback_text: String::new(),
        }
    }

    #[test]
    fn evicts_oldest() {
        let mut m = MemoryWindow::new(3);
        for i in 0..5 {
            m.push(entry(i));
            assert!(m.len() <= 3);
        }
        let kept: Vec<_> = m.entries().map(|e| e.state_text.clone()).collect();
        assert_eq!(kept, ["time: 2", "time: 3", "time: 4"]);
    }

    #[test]
    fn zero_horizon_keeps_nothing() {
        let mut m = MemoryWindow::new(0);
        m.push(entry(0));
        assert!(m.is_empty());
    }
}
