use super::distribution::ACTION_DIM;
use crate::agent::{Action, OBS_DIM};

/// One stored step of an agent's own trajectory. Inputs are the normalised vectors
/// the network actually saw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub input_prev: [f64; OBS_DIM],
    pub raw_action: [f64; ACTION_DIM],
    pub action: Action,
    pub logprob: f64,
    pub reward: f64,
    pub input_next: [f64; OBS_DIM],
    /// Last transition of an episode: advantages do not flow across it.
    pub episode_end: bool,
}

/// Per-agent rollout storage, consumed whole by one update.
#[derive(Debug, Clone)]
pub struct RolloutBuffer {
    agent_id: usize,
    capacity: usize,
    transitions: Vec<Transition>,
}

impl RolloutBuffer {
    pub fn new(agent_id: usize, capacity: usize) -> Self {
        assert!(capacity >= 1);
        RolloutBuffer { agent_id, capacity, transitions: Vec::with_capacity(capacity) }
    }

    pub fn agent_id(&self) -> usize {
        self.agent_id
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Appends a transition; returns true once the buffer holds `capacity` entries.
    pub fn push(&mut self, t: Transition) -> bool {
        debug_assert!(self.transitions.len() < self.capacity);
        self.transitions.push(t);
        self.is_full()
    }

    pub fn is_full(&self) -> bool {
        self.transitions.len() >= self.capacity
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn mark_episode_end(&mut self) {
        if let Some(last) = self.transitions.last_mut() {
            last.episode_end = true;
        }
    }

    pub fn clear(&mut self) {
        self.transitions.clear();
    }
}
