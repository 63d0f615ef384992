//! Deterministic seed derivation.
//!
//! All randomness in the crate flows from a single master seed. Each
//! stochastic stage derives its own stream with [`derive_seed`], keyed by a
//! stage name and optional indices, so any stage can be reproduced in
//! isolation and results do not depend on evaluation order or parallel
//! schedule.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// FNV-1a over the stage name and indices, mixed into the master seed.
pub fn derive_seed(master: u64, stage: &str, indices: &[u64]) -> u64 {
    const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = FNV_OFFSET ^ master;
    for &b in stage.as_bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    for &ix in indices {
        for b in ix.to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(FNV_PRIME);
        }
    }
    // splitmix64 finalizer to spread low-entropy inputs
    h = h.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = h;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream for one stage of one run.
pub fn stage_rng(master: u64, stage: &str, indices: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, stage, indices))
}

/// Per-row stream, used by row-parallel samplers so that the output is
/// identical no matter how rows are scheduled.
pub fn row_rng(master: u64, stage: &str, row: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, stage, &[row as u64]))
}
