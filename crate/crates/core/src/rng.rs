//! Counter-based derivation of per-(node, iteration, purpose) random streams.
//!
//! Every stream is keyed by the master seed plus its coordinates, so the
//! trajectory of a run does not depend on the order in which nodes are
//! processed within a round.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a derived stream is consumed for. Separate purposes get independent
/// streams even at the same (node, iteration).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Noise,
    Quantize,
    Subsample,
    Data,
    Init,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Noise => 1,
            Purpose::Quantize => 2,
            Purpose::Subsample => 3,
            Purpose::Data => 4,
            Purpose::Init => 5,
        }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent ChaCha stream for (master, node, iteration, purpose).
pub fn derive_stream(master: u64, node: u64, iteration: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut state = master;
    let mut mix = |v: u64| {
        state ^= v.wrapping_mul(0xff51_afd7_ed55_8ccd);
        splitmix64(&mut state)
    };
    let a = mix(node.wrapping_add(1));
    let b = mix(iteration.wrapping_add(1));
    let c = mix(purpose.tag());
    let d = mix(0xdead_beef_cafe_f00d);
    let mut seed = [0u8; 32];
    seed[0..8].copy_from_slice(&a.to_le_bytes());
    seed[8..16].copy_from_slice(&b.to_le_bytes());
    seed[16..24].copy_from_slice(&c.to_le_bytes());
    seed[24..32].copy_from_slice(&d.to_le_bytes());
    ChaCha8Rng::from_seed(seed)
}
