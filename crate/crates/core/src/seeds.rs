//! Named, independent random streams derived from one scenario seed.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

pub fn derive_seed(seed: u64, label: &str, index: u64) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"conscript/seed/v1");
    h.update(seed.to_be_bytes());
    h.update((label.len() as u32).to_be_bytes());
    h.update(label.as_bytes());
    h.update(index.to_be_bytes());
    h.finalize().into()
}

pub fn stream(seed: u64, label: &str, index: u64) -> ChaCha20Rng {
    ChaCha20Rng::from_seed(derive_seed(seed, label, index))
}
