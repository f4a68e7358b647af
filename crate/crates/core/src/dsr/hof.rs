use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::expr::{ExprError, ExprTree, TokenSet};

/// One archived expression.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HofEntry {
    pub infix: String,
    /// Comma-separated pre-order symbols.
    pub preorder: String,
    pub fitness: f64,
    /// Token count.
    pub complexity: usize,
    /// Iteration at which the expression was first seen.
    pub iteration: usize,
}

impl HofEntry {
    pub fn from_tree(tree: &ExprTree, fitness: f64, iteration: usize) -> Self {
        Self {
            infix: tree.to_infix(),
            preorder: tree.to_token_list(),
            fitness,
            complexity: tree.len(),
            iteration,
        }
    }

    pub fn tree(&self, set: &TokenSet) -> Result<ExprTree, ExprError> {
        ExprTree::parse_token_list(&self.preorder, set)
    }

    /// Best first: higher fitness, then fewer tokens, then lexical pre-order.
    pub fn rank(&self, other: &Self) -> Ordering {
        other
            .fitness
            .total_cmp(&self.fitness)
            .then(self.complexity.cmp(&other.complexity))
            .then_with(|| self.preorder.cmp(&other.preorder))
    }
}

/// Bounded archive of the best distinct expressions plus the best
/// expression of every size seen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HallOfFame {
    capacity: usize,
    entries: Vec<HofEntry>,
    by_size: BTreeMap<usize, HofEntry>,
}

impl HallOfFame {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity: capacity.max(1),
            entries: Vec::new(),
            by_size: BTreeMap::new(),
        }
    }

    pub fn offer(&mut self, entry: HofEntry) {
        match self.by_size.get(&entry.complexity) {
            Some(cur) if cur.rank(&entry) != Ordering::Greater => {}
            _ => {
                self.by_size.insert(entry.complexity, entry.clone());
            }
        }
        if self.entries.iter().any(|e| e.preorder == entry.preorder) {
            return;
        }
        if self.entries.len() == self.capacity {
            let worst = self.entries.last().expect("capacity is at least one");
            if entry.rank(worst) != Ordering::Less {
                return;
            }
            self.entries.pop();
        }
        let at = self
            .entries
            .partition_point(|e| e.rank(&entry) == Ordering::Less);
        self.entries.insert(at, entry);
    }

    pub fn entries(&self) -> &[HofEntry] {
        &self.entries
    }

    pub fn best(&self) -> Option<&HofEntry> {
        self.entries.first()
    }

    pub fn best_fitness(&self) -> f64 {
        self.best().map_or(0.0, |e| e.fitness)
    }

    /// Entries not beaten in both fitness and size, by increasing size.
    pub fn pareto_front(&self) -> Vec<HofEntry> {
        let mut front: Vec<HofEntry> = Vec::new();
        for e in self.by_size.values() {
            if front.last().is_none_or(|last| e.fitness > last.fitness) {
                front.push(e.clone());
            }
        }
        front
    }
}
