//! Splittable deterministic randomness.
//!
//! A [`SeedTree`] node is a 64-bit key. Children are addressed by a name and
//! an index; the child key is
//!
//! ```text
//! splitmix64(key ^ splitmix64(fnv1a64(name)) ^ splitmix64(index ^ 0x5851_f42d_4c95_7f2d))
//! ```
//!
//! and a node's generator is `ChaCha8Rng::seed_from_u64(key)`. Because every
//! draw comes from a stream addressed by name, the values a run sees do not
//! depend on the order in which independent parts of it are evaluated.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedTree {
    key: u64,
}

impl SeedTree {
    pub fn new(seed: u64) -> Self {
        SeedTree {
            key: splitmix64(seed),
        }
    }

    pub fn key(self) -> u64 {
        self.key
    }

    pub fn child(self, name: &str, index: u64) -> SeedTree {
        SeedTree {
            key: splitmix64(
                self.key
                    ^ splitmix64(fnv1a64(name.as_bytes()))
                    ^ splitmix64(index ^ 0x5851_f42d_4c95_7f2d),
            ),
        }
    }

    /// Generator for the named substream.
    pub fn stream(self, name: &str, index: u64) -> ChaCha8Rng {
        self.child(name, index).rng()
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.key)
    }
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline]
fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}
