//! Addressable random bits for simulated keys.
//!
//! Bit i of key `key` in trial `trial` is a pure function of
//! (seed, trial, key, i): the ChaCha8 key is built from (seed, trial), the
//! stream id is the key index and the 64-bit block ⌊i/64⌋ is the word position.
//! Trials can therefore be run in any order or on any thread.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

fn chacha_key(seed: u64, trial: u64) -> [u8; 32] {
    let mut k = [0u8; 32];
    k[..8].copy_from_slice(&seed.to_le_bytes());
    k[8..16].copy_from_slice(&trial.to_le_bytes());
    // domain tag, so that a different use of the same seed never collides
    k[16..24].copy_from_slice(b"dstlabk1");
    k
}

/// Lazily materialised infinite bit string.
#[derive(Clone, Debug)]
pub struct RandomBits {
    rng: ChaCha8Rng,
    loaded: Option<u64>,
    word: u64,
}

impl RandomBits {
    pub fn new(seed: u64, trial: u64, key: u64) -> Self {
        let mut rng = ChaCha8Rng::from_seed(chacha_key(seed, trial));
        rng.set_stream(key);
        Self { rng, loaded: None, word: 0 }
    }

    pub fn block(&mut self, idx: u64) -> u64 {
        if self.loaded != Some(idx) {
            self.rng.set_word_pos(idx as u128 * 2);
            self.word = self.rng.next_u64();
            self.loaded = Some(idx);
        }
        self.word
    }

    pub fn bit(&mut self, i: usize) -> bool {
        let w = self.block((i / 64) as u64);
        (w >> (i % 64)) & 1 == 1
    }
}

/// A uniform draw in [0, 1) for uses other than key bits (tie-breaking, tests).
pub fn uniform(seed: u64, trial: u64, idx: u64) -> f64 {
    let mut r = RandomBits::new(seed ^ 0x9e37_79b9_7f4a_7c15, trial, u64::MAX);
    (r.block(idx) >> 11) as f64 * libm::exp2(-53.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bits_are_addressable() {
        let mut a = RandomBits::new(7, 3, 11);
        let forward: alloc::vec::Vec<bool> = (0..300).map(|i| a.bit(i)).collect();
        let mut b = RandomBits::new(7, 3, 11);
        for i in (0..300).rev() {
            assert_eq!(b.bit(i), forward[i]);
        }
        let mut c = RandomBits::new(7, 3, 12);
        let other: alloc::vec::Vec<bool> = (0..300).map(|i| c.bit(i)).collect();
        assert_ne!(forward, other);
    }

    #[test]
    fn bits_look_fair() {
        let mut ones = 0u32;
        for key in 0..200 {
            let mut r = RandomBits::new(1, 0, key);
            ones += (0..100).filter(|&i| r.bit(i)).count() as u32;
        }
        // 20000 fair bits: sd 70.7
        assert!((ones as i64 - 10_000).abs() < 400, "{ones}");
        let u = uniform(1, 2, 3);
        assert!((0.0..1.0).contains(&u));
    }
}
