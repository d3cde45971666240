//! Keyed random streams.
//!
//! A stream is a ChaCha8 generator whose 256-bit key is derived from a
//! `(seed, domain)` pair and whose 64-bit stream counter is the replica
//! index. Any stream is reachable in O(1), so replicas can run on any worker
//! in any order and still draw the same numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Domain tags separating the families of streams used by one experiment.
pub mod domain {
    pub const WALK: u64 = 0x5741_4c4b;
    pub const ENVIRONMENT: u64 = 0x454e_5649;
    pub const AUDIT: u64 = 0x4155_4449;
    pub const ORACLE: u64 = 0x4f52_4143;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    domain: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        RngStream { seed, stream, domain: 0 }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Same seed and stream index, different key family.
    pub fn with_domain(self, domain: u64) -> Self {
        RngStream { domain: splitmix64(self.domain ^ splitmix64(domain)), ..self }
    }

    pub fn with_stream(self, stream: u64) -> Self {
        RngStream { stream, ..self }
    }

    pub fn rng(&self) -> StreamRng {
        let mut state = self.seed ^ self.domain.rotate_left(29);
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.stream);
        rng
    }
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Order-sensitive hash of lattice coordinates.
pub fn hash_coordinates(coords: &[i64]) -> u64 {
    coords
        .iter()
        .fold(0x243F_6A88_85A3_08D3, |h, &c| splitmix64(h ^ c as u64))
}
