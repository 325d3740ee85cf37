//! Keys, hybrid public-key encryption and sigma-protocol proofs.

mod hybrid;
mod proof;

use rand::RngCore;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::group::{Group, GroupError};

pub use self::hybrid::{
    pke_decrypt, pke_encrypt, HybridCiphertext, MAX_PLAINTEXT_LEN, TAG_LEN,
};
pub use self::proof::{
    dleq_prove, dleq_verify, or_prove, or_verify, schnorr_prove, schnorr_verify, DleqProof,
    DleqStatement, OrBranch, OrProof, OrStatement, OrWitness, SchnorrProof,
};
pub(crate) use self::proof::Reader;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CryptoError {
    #[error("plaintext of {got} bytes exceeds the {limit}-byte maximum")]
    PlaintextTooLong { got: usize, limit: usize },
    #[error("ciphertext failed authentication")]
    AuthenticationFailure,
    #[error("malformed encoding: {0}")]
    Malformed(String),
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// A secret exponent and the matching public element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KeyPair<G: Group> {
    pub secret: G::Scalar,
    pub public: G::Element,
}

impl<G: Group> KeyPair<G> {
    pub fn from_secret(group: &G, secret: G::Scalar) -> Self {
        KeyPair {
            secret,
            public: group.base_pow(&secret),
        }
    }
}

/// Draws a secret uniformly from `[1, q)`.
pub fn keygen<G: Group, R: RngCore + ?Sized>(group: &G, rng: &mut R) -> KeyPair<G> {
    KeyPair::from_secret(group, group.random_nonzero_scalar(rng))
}

/// Per-layer byte overhead of [`pke_encrypt`] for a group.
pub fn hybrid_overhead<G: Group>(group: &G) -> usize {
    group.element_len() + TAG_LEN
}

/// Fiat-Shamir hash: SHA-256 over a domain label, the group description and
/// each part, every field length-prefixed.
pub(crate) fn transcript_scalar<G: Group>(group: &G, label: &[u8], parts: &[&[u8]]) -> G::Scalar {
    let mut h = Sha256::new();
    let mut absorb = |bytes: &[u8]| {
        h.update((bytes.len() as u32).to_be_bytes());
        h.update(bytes);
    };
    absorb(label);
    absorb(&group.label());
    for part in parts {
        absorb(part);
    }
    let digest: [u8; 32] = h.finalize().into();
    group.scalar_from_digest(&digest)
}

pub fn sha256(bytes: &[u8]) -> [u8; 32] {
    Sha256::digest(bytes).into()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{ModpGroup, P256Group};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn toy_keypair_from_forced_secret() {
        let g = ModpGroup::toy();
        let kp = KeyPair::from_secret(&g, g.scalar(3));
        assert_eq!(kp.public.value(), 8);
    }

    #[test]
    fn keygen_never_emits_zero() {
        let g = ModpGroup::toy();
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        for _ in 0..10_000 {
            let kp = keygen(&g, &mut rng);
            assert_ne!(kp.secret.value(), 0);
            assert_eq!(kp.public, g.base_pow(&kp.secret));
        }
    }

    #[test]
    fn keygen_is_deterministic_per_seed() {
        let a = keygen(&P256Group, &mut ChaCha20Rng::seed_from_u64(77));
        let b = keygen(&P256Group, &mut ChaCha20Rng::seed_from_u64(77));
        assert_eq!(a, b);
    }

    #[test]
    fn overheads() {
        assert_eq!(hybrid_overhead(&ModpGroup::toy()), 20);
        assert_eq!(hybrid_overhead(&P256Group), 49);
    }
}
