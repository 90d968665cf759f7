use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub observation: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub observation_next: Vec<f64>,
    /// True only for terminal states; time-limit truncation keeps bootstrapping.
    pub done: bool,
}

impl Transition {
    pub fn is_finite(&self) -> bool {
        self.reward.is_finite()
            && self
                .observation
                .iter()
                .chain(&self.action)
                .chain(&self.observation_next)
                .all(|v| v.is_finite())
    }
}

/// Fixed-capacity ring of transitions; the oldest entry is overwritten first.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    cursor: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Argument("replay capacity must be > 0".into()));
        }
        Ok(Self {
            capacity,
            items: Vec::with_capacity(capacity.min(1 << 16)),
            cursor: 0,
        })
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

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.cursor] = t;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
    }

    /// Storage slot `i` (not age order).
    pub fn get(&self, i: usize) -> Option<&Transition> {
        self.items.get(i)
    }

    /// Contents from oldest to newest.
    pub fn iter_oldest_first(&self) -> impl Iterator<Item = &Transition> {
        let split = if self.items.len() < self.capacity {
            0
        } else {
            self.cursor
        };
        self.items[split..].iter().chain(&self.items[..split])
    }

    /// Uniform draw of `n` slot indices with replacement.
    pub fn sample_indices<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<usize> {
        if self.items.is_empty() {
            return Vec::new();
        }
        (0..n)
            .map(|_| rng.random_range(0..self.items.len()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use std::collections::VecDeque;

    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn t(i: usize) -> Transition {
        Transition {
            observation: vec![i as f64],
            action: vec![0.0],
            reward: i as f64,
            observation_next: vec![0.0],
            done: false,
        }
    }

    #[test]
    fn overflow_evicts_first() {
        let mut b = ReplayBuffer::new(4).unwrap();
        for i in 0..5 {
            b.push(t(i));
        }
        assert_eq!(b.len(), 4);
        assert!(b.iter_oldest_first().all(|x| x.reward != 0.0));
        let order: Vec<f64> = b.iter_oldest_first().map(|x| x.reward).collect();
        assert_eq!(order, vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn single_item_is_always_sampled() {
        let mut b = ReplayBuffer::new(10).unwrap();
        b.push(t(7));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for i in b.sample_indices(50, &mut rng) {
            assert_eq!(b.get(i).unwrap().reward, 7.0);
        }
    }

    #[test]
    fn zero_capacity_rejected() {
        assert!(ReplayBuffer::new(0).is_err());
    }

    #[test]
    fn sampling_is_uniform() {
        let mut b = ReplayBuffer::new(20).unwrap();
        for i in 0..35 {
            b.push(t(i));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws = 100_000;
        let mut counts = [0usize; 20];
        for i in b.sample_indices(draws, &mut rng) {
            counts[i] += 1;
        }
        let expected = draws as f64 / 20.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // df = 19, p = 0.001
        assert!(chi2 < 43.82, "chi2 = {chi2}");
    }

    proptest! {
        #[test]
        fn matches_a_fifo_oracle(cap in 1usize..16, n in 0usize..60) {
            let mut b = ReplayBuffer::new(cap).unwrap();
            let mut oracle = VecDeque::new();
            for i in 0..n {
                b.push(t(i));
                oracle.push_back(i as f64);
                if oracle.len() > cap {
                    oracle.pop_front();
                }
            }
            let got: Vec<f64> = b.iter_oldest_first().map(|x| x.reward).collect();
            prop_assert_eq!(got, oracle.into_iter().collect::<Vec<_>>());
        }
    }
}
