use std::collections::HashMap;

use crate::game::{GameId, StateKey};

/// Learned action values. Each visited state owns a row aligned with the
/// canonical legal-action order of that state; states never updated have
/// no row and read as all zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    game: GameId,
    pub alpha: f64,
    pub gamma: f64,
    /// Exploration rate the table was trained with. Recorded, not used for play.
    pub epsilon: f64,
    pub episodes_trained: u64,
    entries: HashMap<StateKey, Vec<f64>>,
}

impl QTable {
    pub fn new(game: GameId, alpha: f64, gamma: f64, epsilon: f64) -> Self {
        QTable { game, alpha, gamma, epsilon, episodes_trained: 0, entries: HashMap::new() }
    }

    pub fn game(&self) -> GameId {
        self.game
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn values(&self, key: &StateKey) -> Option<&[f64]> {
        self.entries.get(key).map(Vec::as_slice)
    }

    pub fn value(&self, key: &StateKey, action_index: usize) -> f64 {
        self.values(key).and_then(|row| row.get(action_index).copied()).unwrap_or(0.0)
    }

    /// Best value over the state's actions; 0 for unseen states.
    pub fn max_value(&self, key: &StateKey) -> f64 {
        match self.values(key) {
            Some(row) if !row.is_empty() => row.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            _ => 0.0,
        }
    }

    pub fn set(&mut self, key: &StateKey, n_actions: usize, action_index: usize, value: f64) {
        let row = self.entries.entry(key.clone()).or_insert_with(|| vec![0.0; n_actions]);
        debug_assert_eq!(row.len(), n_actions, "row length must match legal action count");
        row[action_index] = value;
    }

    pub fn insert_row(&mut self, key: StateKey, values: Vec<f64>) {
        self.entries.insert(key, values);
    }

    /// Rows ordered by key bytes.
    pub fn sorted_entries(&self) -> Vec<(&StateKey, &[f64])> {
        let mut rows: Vec<_> = self.entries.iter().map(|(k, v)| (k, v.as_slice())).collect();
        rows.sort_unstable_by(|a, b| a.0.cmp(b.0));
        rows
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.values().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Bitwise equality of parameters and every stored value.
    pub fn bit_identical(&self, other: &QTable) -> bool {
        self.game == other.game
            && self.alpha.to_bits() == other.alpha.to_bits()
            && self.gamma.to_bits() == other.gamma.to_bits()
            && self.epsilon.to_bits() == other.epsilon.to_bits()
            && self.episodes_trained == other.episodes_trained
            && self.entries.len() == other.entries.len()
            && self.entries.iter().all(|(k, v)| {
                other
                    .entries
                    .get(k)
                    .is_some_and(|w| v.len() == w.len() && v.iter().zip(w).all(|(a, b)| a.to_bits() == b.to_bits()))
            })
    }
}
