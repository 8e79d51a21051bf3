//! Counter-based random streams.
//!
//! Every random quantity is addressed by `(base_seed, slot, purpose,
//! realization)` and, for per-site draws, a site index. The ChaCha key is
//! derived from the first three, the stream id is the realization and the
//! word position encodes the site, so a draw never depends on how many other
//! draws happened before it or on which thread made them.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for; distinct purposes never share a key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Disorder,
    Grain,
    Test(u64),
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Disorder => 0x6469_736f_7264_6572,
            Purpose::Grain => 0x6772_6169_6e00_0000,
            Purpose::Test(k) => 0x7465_7374_0000_0000 ^ k,
        }
    }
}

/// Address of a stream, minus the realization index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamKey {
    pub base_seed: u64,
    pub slot: u64,
    pub purpose: Purpose,
}

impl StreamKey {
    pub fn new(base_seed: u64, slot: u64, purpose: Purpose) -> Self {
        Self { base_seed, slot, purpose }
    }

    /// Fresh generator positioned at the start of `realization`'s stream.
    pub fn stream(&self, realization: u64) -> ChaCha8Rng {
        let mut state = self.base_seed ^ self.purpose.tag().rotate_left(17) ^ self.slot.rotate_left(41);
        let mut seed = [0u8; 32];
        for chunk in seed.chunks_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(realization);
        rng
    }

    /// Uniform draw in [0, 1) for one site of one realization.
    pub fn site_uniform(&self, realization: u64, site: usize) -> f64 {
        let mut rng = self.stream(realization);
        rng.set_word_pos(2 * site as u128);
        unit_interval(rng.next_u64())
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn unit_interval(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
