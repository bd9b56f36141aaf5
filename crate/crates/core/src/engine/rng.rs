//! Counter-based random streams.
//!
//! Every consumer of randomness asks for its own stream keyed by
//! `(master seed, domain label, entity)`. Streams are ChaCha12 keystreams: the
//! key is derived from the seed and label, the 64-bit stream id is the entity.
//! Two streams never share state, so adding draws in one domain cannot shift
//! the draws seen by another.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Randomness consumers. Each gets a disjoint family of streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StreamDomain {
    Events,
    Clouds,
    Detection,
    FalsePositives,
}

impl StreamDomain {
    pub fn label(self) -> &'static str {
        match self {
            StreamDomain::Events => "events",
            StreamDomain::Clouds => "clouds",
            StreamDomain::Detection => "detection",
            StreamDomain::FalsePositives => "false-positives",
        }
    }
}

/// An independent deterministic random stream.
#[derive(Debug, Clone)]
pub struct RngStream(ChaCha12Rng);

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}

/// Derives the stream for `(master_seed, label, entity)`.
pub fn rng_stream(master_seed: u64, label: &str, entity: u64) -> RngStream {
    let mut state = master_seed ^ entity_key(label).rotate_left(17);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha12Rng::from_seed(key);
    rng.set_stream(entity);
    RngStream(rng)
}

/// Stream factory bound to one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStreams {
    master_seed: u64,
}

impl RngStreams {
    pub fn new(master_seed: u64) -> Self {
        RngStreams { master_seed }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream(&self, domain: StreamDomain, entity: u64) -> RngStream {
        rng_stream(self.master_seed, domain.label(), entity)
    }
}

/// Stable 64-bit FNV-1a key for string identifiers.
pub fn entity_key(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use rand::Rng;

    fn draws(mut r: RngStream, n: usize) -> Vec<f64> {
        (0..n).map(|_| r.random::<f64>()).collect()
    }

    #[test]
    fn same_key_same_sequence() {
        assert_eq!(draws(rng_stream(7, "clouds", 3), 64), draws(rng_stream(7, "clouds", 3), 64));
    }

    #[test]
    fn keys_separate_streams() {
        let base = draws(rng_stream(7, "clouds", 3), 16);
        assert_ne!(base, draws(rng_stream(8, "clouds", 3), 16));
        assert_ne!(base, draws(rng_stream(7, "events", 3), 16));
        assert_ne!(base, draws(rng_stream(7, "clouds", 4), 16));
    }

    fn correlation(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
        let mut cov = 0.0;
        let (mut va, mut vb) = (0.0, 0.0);
        for (x, y) in a.iter().zip(b) {
            cov += (x - ma) * (y - mb);
            va += (x - ma) * (x - ma);
            vb += (y - mb) * (y - mb);
        }
        cov / libm::sqrt(va * vb)
    }

    #[test]
    fn labels_are_uncorrelated() {
        // |r| of two independent uniform samples of size n has s.d. 1/sqrt(n)
        let n = 20_000;
        let labels = ["events", "clouds", "detection", "false-positives"];
        for (i, a) in labels.iter().enumerate() {
            for b in &labels[i + 1..] {
                let r = correlation(&draws(rng_stream(42, a, 0), n), &draws(rng_stream(42, b, 0), n));
                assert!(r.abs() < 4.0 / libm::sqrt(n as f64), "{a} vs {b}: {r}");
            }
        }
        let r = correlation(&draws(rng_stream(42, "clouds", 0), n), &draws(rng_stream(42, "clouds", 1), n));
        assert!(r.abs() < 4.0 / libm::sqrt(n as f64));
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(entity_key(""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(entity_key("a"), 0xaf63_dc4c_8601_ec8c);
    }
}
