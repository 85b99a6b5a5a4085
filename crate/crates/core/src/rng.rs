//! Deterministic random substreams.
//!
//! Every consumer of randomness names its stream with a label. The label and
//! the run seed are mixed into a 64-bit ChaCha key; large sample draws are
//! cut into fixed blocks of [`BLOCK_LEN`] draws and block `i` uses ChaCha
//! stream `i` under that key. Output therefore depends only on
//! (seed, label, block index) and never on how blocks are scheduled across
//! threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Number of draws produced by one block generator.
pub const BLOCK_LEN: usize = 8192;

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// A named, seeded source of independent generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Substream {
    key: u64,
}

impl Substream {
    pub fn new(seed: u64, label: &str) -> Self {
        Self {
            key: mix64(mix64(seed) ^ fnv1a(label.as_bytes())),
        }
    }

    /// Child substream, e.g. one per CV fold.
    pub fn child(&self, label: &str) -> Self {
        Self {
            key: mix64(self.key ^ fnv1a(label.as_bytes())),
        }
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    /// Generator for stream 0.
    pub fn rng(&self) -> ChaCha8Rng {
        self.block_rng(0)
    }

    /// Generator for block `index`.
    pub fn block_rng(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.key);
        rng.set_stream(index);
        rng
    }
}
