use crate::infrastructure::EndpointId;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

/// The run's single random source: initial delays and task destinations.
#[derive(Clone, Debug)]
pub struct TaskGenerator {
    rng: ChaCha8Rng,
    endpoints: usize,
}

impl TaskGenerator {
    pub fn new(seed: u64, endpoints: usize) -> Self {
        TaskGenerator { rng: ChaCha8Rng::seed_from_u64(seed), endpoints }
    }

    /// One delay per robot, uniform on `[lo, hi]`.
    pub fn initial_delays(&mut self, robots: usize, [lo, hi]: [f64; 2]) -> Vec<f64> {
        (0..robots).map(|_| if hi > lo { self.rng.random_range(lo..=hi) } else { lo }).collect()
    }

    /// Uniform choice among endpoints not in `excluded`.
    pub fn pick_goal(&mut self, excluded: &BTreeSet<EndpointId>) -> Option<EndpointId> {
        let free: Vec<EndpointId> = (0..self.endpoints).filter(|e| !excluded.contains(e)).collect();
        if free.is_empty() {
            return None;
        }
        Some(free[self.rng.random_range(0..free.len())])
    }
}
