use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// A bag of item names with counts. Iteration is in name order, which keeps
/// rendering and serialization canonical.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Multiset(BTreeMap<String, u32>);

impl Multiset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, item: impl Into<String>) {
        self.insert_n(item, 1);
    }

    pub fn insert_n(&mut self, item: impl Into<String>, n: u32) {
        if n == 0 {
            return;
        }
        *self.0.entry(item.into()).or_insert(0) += n;
    }

    /// Removes one copy of `item`. Returns false if none was present.
    pub fn remove_one(&mut self, item: &str) -> bool {
        match self.0.get_mut(item) {
            Some(count) if *count > 1 => {
                *count -= 1;
                true
            }
            Some(_) => {
                self.0.remove(item);
                true
            }
            None => false,
        }
    }

    pub fn count(&self, item: &str) -> u32 {
        self.0.get(item).copied().unwrap_or(0)
    }

    pub fn contains(&self, item: &str) -> bool {
        self.count(item) > 0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Total number of items, counting multiplicity.
    pub fn len(&self) -> u32 {
        self.0.values().sum()
    }

    pub fn distinct(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Every item expanded by multiplicity, in name order.
    pub fn expanded(&self) -> impl Iterator<Item = &str> {
        self.0
            .iter()
            .flat_map(|(k, v)| std::iter::repeat_n(k.as_str(), *v as usize))
    }

    pub fn is_subset_of(&self, other: &Multiset) -> bool {
        self.0.iter().all(|(k, v)| other.count(k) >= *v)
    }

    /// Items of `self` not covered by `other` (multiset difference).
    pub fn difference(&self, other: &Multiset) -> Multiset {
        let mut out = Multiset::new();
        for (k, v) in &self.0 {
            let have = other.count(k);
            if *v > have {
                out.insert_n(k.clone(), v - have);
            }
        }
        out
    }

    pub fn extend_from(&mut self, other: &Multiset) {
        for (k, v) in &other.0 {
            self.insert_n(k.clone(), *v);
        }
    }

    pub fn clear(&mut self) {
        self.0.clear();
    }

    pub fn take(&mut self) -> Multiset {
        std::mem::take(self)
    }
}

impl<S: Into<String>> FromIterator<S> for Multiset {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        let mut m = Multiset::new();
        for item in iter {
            m.insert(item);
        }
        m
    }
}

impl fmt::Display for Multiset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, item) in self.expanded().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str(item)?;
        }
        f.write_str("]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn remove_and_difference() {
        let mut m: Multiset = ["tomato", "tomato", "cheese"].into_iter().collect();
        assert_eq!(m.len(), 3);
        assert!(m.remove_one("tomato"));
        assert_eq!(m.count("tomato"), 1);
        assert!(!m.remove_one("salmon"));

        let need: Multiset = ["tomato", "cheese", "dough"].into_iter().collect();
        let missing = need.difference(&m);
        assert_eq!(missing.expanded().collect::<Vec<_>>(), vec!["dough"]);
        assert_eq!(m.to_string(), "[cheese, tomato]");
    }
}
