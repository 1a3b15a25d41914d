//! Seed derivation and the generator every random draw goes through.
//!
//! All sampling uses ChaCha8 seeded from a `u64`. Per-slice seeds are the
//! first eight bytes (little-endian) of
//! `SHA-256(master_seed_le || u64_le(len(case_id)) || case_id || copy_le || slice_le)`,
//! so the draw for a slice never depends on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type SliceRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SliceRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn derive_slice_seed(master_seed: u64, case_id: &str, copy: u32, slice: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(master_seed.to_le_bytes());
    h.update((case_id.len() as u64).to_le_bytes());
    h.update(case_id.as_bytes());
    h.update(copy.to_le_bytes());
    h.update((slice as u64).to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}
