//! Deterministic seed hierarchy. Every random stream is addressed by the
//! master seed plus a path of indices, so adding iterations or packets never
//! shifts the draws of an unrelated stage.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Stage tags appended as the last path element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stage {
    Channel = 1,
    Data = 2,
    Noise = 3,
    Interleaver = 4,
}

pub fn derive_seed(master: u64, path: &[u64]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    for p in path {
        h.update(p.to_le_bytes());
    }
    h.finalize().into()
}

pub fn stream(master: u64, path: &[u64], stage: Stage) -> ChaCha8Rng {
    let mut full = path.to_vec();
    full.push(stage as u64);
    ChaCha8Rng::from_seed(derive_seed(master, &full))
}

/// 64-bit seed for components that take a plain integer.
pub fn derive_u64(master: u64, path: &[u64]) -> u64 {
    let b = derive_seed(master, path);
    u64::from_le_bytes(b[..8].try_into().expect("32-byte digest"))
}
