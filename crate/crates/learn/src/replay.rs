//! Fixed-capacity ring buffer of transitions with uniform minibatch sampling.

use rand::Rng;
use serde::{Deserialize, Serialize};

pub const OBS_DIM: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub obs: [f64; OBS_DIM],
    /// Normalized command in `[-1, 1]`.
    pub action: f64,
    pub reward: f64,
    pub next_obs: [f64; OBS_DIM],
    /// True on reach or failure; a timeout is not terminal.
    pub terminal: bool,
}

impl Transition {
    pub const WIDTH: usize = 2 * OBS_DIM + 3;

    pub fn to_row(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&self.obs);
        out.push(self.action);
        out.push(self.reward);
        out.extend_from_slice(&self.next_obs);
        out.push(if self.terminal { 1.0 } else { 0.0 });
    }

    pub fn from_row(row: &[f64]) -> Self {
        let mut obs = [0.0; OBS_DIM];
        let mut next_obs = [0.0; OBS_DIM];
        obs.copy_from_slice(&row[..OBS_DIM]);
        next_obs.copy_from_slice(&row[OBS_DIM + 2..2 * OBS_DIM + 2]);
        Self { obs, action: row[OBS_DIM], reward: row[OBS_DIM + 1], next_obs, terminal: row[2 * OBS_DIM + 2] != 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    /// Next slot to overwrite once full.
    head: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0);
        Self { capacity, items: Vec::new(), head: 0 }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn head(&self) -> usize {
        self.head
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.head] = t;
        }
        self.head = (self.head + 1) % self.capacity;
    }

    pub fn get(&self, i: usize) -> &Transition {
        &self.items[i]
    }

    /// Storage order, for serialization.
    pub fn items(&self) -> &[Transition] {
        &self.items
    }

    pub fn restore(capacity: usize, items: Vec<Transition>, head: usize) -> Self {
        assert!(items.len() <= capacity && head < capacity.max(1));
        Self { capacity, items, head }
    }

    /// Distinct indices drawn uniformly.
    pub fn sample_indices<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Vec<usize> {
        assert!(batch <= self.items.len(), "buffer holds {} < batch {batch}", self.items.len());
        rand::seq::index::sample(rng, self.items.len(), batch).into_vec()
    }
}
