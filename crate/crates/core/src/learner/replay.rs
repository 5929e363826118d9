use std::collections::VecDeque;

use rand::Rng;

use super::Transition;

/// FIFO buffer of whole episodes.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    episodes: VecDeque<Vec<Transition>>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        ReplayBuffer { capacity: capacity.max(1), episodes: VecDeque::new() }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.episodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty()
    }

    /// Appends an episode, evicting the oldest one when full. Empty episodes
    /// are ignored.
    pub fn push(&mut self, episode: Vec<Transition>) {
        if episode.is_empty() {
            return;
        }
        if self.episodes.len() == self.capacity {
            self.episodes.pop_front();
        }
        self.episodes.push_back(episode);
    }

    /// Indices of `count` episodes drawn uniformly with replacement.
    pub fn sample_indices<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<usize> {
        if self.episodes.is_empty() {
            return Vec::new();
        }
        (0..count).map(|_| rng.gen_range(0..self.episodes.len())).collect()
    }

    pub fn episode(&self, index: usize) -> &[Transition] {
        &self.episodes[index]
    }

    /// Transitions of `count` uniformly sampled episodes, concatenated in draw
    /// order.
    pub fn sample<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<&Transition> {
        self.sample_indices(count, rng).into_iter().flat_map(|i| self.episodes[i].iter()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maxsum::JointAction;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn episode(tag: u64) -> Vec<Transition> {
        vec![Transition {
            keys: vec![crate::values::ObsKey::new(0, tag)],
            actions: JointAction(vec![0]),
            reward: 0.0,
            next_keys: vec![crate::values::ObsKey::new(0, tag)],
            terminal: true,
        }]
    }

    #[test]
    fn evicts_oldest() {
        let mut r = ReplayBuffer::new(3);
        for t in 0..5 {
            r.push(episode(t));
            assert!(r.len() <= 3);
        }
        assert_eq!(r.episode(0)[0].keys[0].code, 2);
        r.push(Vec::new());
        assert_eq!(r.len(), 3);
    }

    #[test]
    fn sampling_is_uniform() {
        let mut r = ReplayBuffer::new(10);
        for t in 0..10 {
            r.push(episode(t));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let draws = 20_000;
        let mut counts = [0f64; 10];
        for i in r.sample_indices(draws, &mut rng) {
            counts[i] += 1.0;
        }
        let expected = draws as f64 / 10.0;
        let chi2: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
        // 99.9% quantile of chi-square with 9 degrees of freedom
        assert!(chi2 < 27.88, "chi2 = {chi2}");
    }
}
