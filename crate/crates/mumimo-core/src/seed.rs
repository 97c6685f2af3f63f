//! Deterministic per-trial, per-stage RNG stream derivation.
//!
//! Every random stage of a trial draws from its own ChaCha stream seeded by
//! `(master_seed, trial_index, stage tag)`. Results are therefore identical
//! regardless of execution order or worker count, and changing the randomness
//! consumed by one stage (e.g. CSI corruption) cannot perturb another.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN_GAMMA);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// 256-bit seed derived by absorbing the master seed, trial index and stage
/// tag into a splitmix64 chain.
pub fn derive_seed(master_seed: u64, trial_index: u64, stage: &str) -> [u8; 32] {
    let mut state = master_seed;
    let _ = splitmix64(&mut state);
    state ^= trial_index.wrapping_mul(GOLDEN_GAMMA);
    let _ = splitmix64(&mut state);
    for chunk in stage.as_bytes().chunks(8) {
        let mut word = [0u8; 8];
        word[..chunk.len()].copy_from_slice(chunk);
        state ^= u64::from_le_bytes(word).wrapping_add(chunk.len() as u64);
        let _ = splitmix64(&mut state);
    }
    let mut seed = [0u8; 32];
    for i in 0..4 {
        seed[i * 8..(i + 1) * 8].copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    seed
}

/// RNG stream for one `(master seed, trial, stage)` triple.
pub fn stream(master_seed: u64, trial_index: u64, stage: &str) -> ChaCha12Rng {
    ChaCha12Rng::from_seed(derive_seed(master_seed, trial_index, stage))
}
