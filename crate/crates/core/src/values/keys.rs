use std::collections::VecDeque;

/// Discretized local history of one agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObsKey {
    pub agent: usize,
    pub code: u64,
}

impl ObsKey {
    pub fn new(agent: usize, code: u64) -> Self {
        ObsKey { agent, code }
    }
}

/// Folds the last `history` observation codes of each agent into one key.
///
/// With `history == 1` the key code is the observation code itself. Longer
/// windows use a mixed-radix packing (radix `obs_space + 1`, the extra symbol
/// padding the start of an episode) while it fits in 64 bits, and a 64-bit mix
/// hash beyond that.
#[derive(Debug, Clone)]
pub struct HistoryEncoder {
    history: usize,
    obs_space: u64,
    windows: Vec<VecDeque<u64>>,
}

impl HistoryEncoder {
    pub fn new(n_agents: usize, history: usize, obs_space: u64) -> Self {
        HistoryEncoder {
            history: history.max(1),
            obs_space,
            windows: vec![VecDeque::new(); n_agents],
        }
    }

    pub fn reset(&mut self) {
        self.windows.iter_mut().for_each(VecDeque::clear);
    }

    /// Pushes one joint observation and returns the resulting keys.
    pub fn push(&mut self, codes: &[u64]) -> Vec<ObsKey> {
        for (w, &c) in self.windows.iter_mut().zip(codes) {
            w.push_back(c);
            while w.len() > self.history {
                w.pop_front();
            }
        }
        (0..self.windows.len())
            .map(|i| ObsKey::new(i, self.encode(&self.windows[i])))
            .collect()
    }

    fn encode(&self, window: &VecDeque<u64>) -> u64 {
        if self.history == 1 {
            return window.back().copied().unwrap_or(self.obs_space);
        }
        let radix = self.obs_space + 1;
        let pad = self.history - window.len();
        let digits = std::iter::repeat(self.obs_space).take(pad).chain(window.iter().copied());
        let packed = digits.clone().try_fold(0u64, |acc, d| acc.checked_mul(radix)?.checked_add(d));
        match packed {
            Some(v) if radix.checked_pow(self.history as u32).is_some() => v,
            _ => digits.fold(0x9e37_79b9_7f4a_7c15u64, |h, d| splitmix(h ^ d)),
        }
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn single_step_keys_are_codes() {
        let mut enc = HistoryEncoder::new(2, 1, 10);
        let k = enc.push(&[3, 9]);
        assert_eq!(k, vec![ObsKey::new(0, 3), ObsKey::new(1, 9)]);
    }

    #[test]
    fn two_step_packing_is_injective() {
        let mut seen = HashSet::new();
        for a in 0..5 {
            for b in 0..5 {
                let mut enc = HistoryEncoder::new(1, 2, 5);
                enc.push(&[a]);
                let k = enc.push(&[b])[0];
                assert!(seen.insert(k.code));
            }
            let mut enc = HistoryEncoder::new(1, 2, 5);
            assert!(seen.insert(enc.push(&[a])[0].code));
        }
    }
}
