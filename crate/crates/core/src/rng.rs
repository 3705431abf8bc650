//! Counter-based seeding.
//!
//! Every random stream is a ChaCha8 generator keyed by a hash of the root
//! seed and addressed by a stream number, so trial `i` draws the same numbers
//! no matter which worker runs it or in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedSequence {
    key: [u8; 32],
}

impl SeedSequence {
    pub fn new(root: u64) -> Self {
        let mut key = [0u8; 32];
        let mut s = root;
        for chunk in key.chunks_mut(8) {
            s = mix64(s);
            chunk.copy_from_slice(&s.to_le_bytes());
        }
        SeedSequence { key }
    }

    /// Independent child sequence, e.g. one per sweep point.
    pub fn child(&self, tag: u64) -> Self {
        let mut first = [0u8; 8];
        first.copy_from_slice(&self.key[..8]);
        SeedSequence::new(u64::from_le_bytes(first) ^ mix64(tag.wrapping_add(0x5851_f42d_4c95_7f2d)))
    }

    /// Generator for stream `index`.
    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(index);
        rng
    }
}
