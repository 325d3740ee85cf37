//! Timed cascade mix-net: layered encryption, per-hop pools, and the
//! threshold variants used to study flooding.

mod policy;
mod server;

use rand::RngCore;
use thiserror::Error;

use crate::crypto::{hybrid_overhead, pke_decrypt, pke_encrypt, CryptoError, HybridCiphertext};
use crate::group::Group;
use crate::wire::{EnvelopeParams, PlaintextMessage, PLAINTEXT_LEN};

pub use self::policy::{should_fire, MixPolicy, PoolStats};
pub use self::server::{
    Ack, BulletinBoard, BulletinExport, Cascade, HopOutput, IntakeRules, MixServer, PoolEntry,
    Reject,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MixError {
    #[error("invalid mix-net parameters: {0}")]
    InvalidParams(String),
    #[error("mix server {0} already fired this round")]
    FiredTwice(usize),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

/// Public parameters clients need: the cascade's keys in hop order.
#[derive(Debug, Clone)]
pub struct MixnetParams<G: Group> {
    pub group: G,
    pub server_keys: Vec<G::Element>,
}

impl<G: Group> MixnetParams<G> {
    pub fn new(group: G, server_keys: Vec<G::Element>) -> Result<Self, MixError> {
        if server_keys.is_empty() {
            return Err(MixError::InvalidParams("need at least one mix server".into()));
        }
        Ok(MixnetParams { group, server_keys })
    }

    pub fn layers(&self) -> usize {
        self.server_keys.len()
    }

    /// Length of ciphertexts entering hop `position` (1-based).
    pub fn hop_input_len(&self, position: usize) -> usize {
        PLAINTEXT_LEN + (self.layers() + 1 - position) * hybrid_overhead(&self.group)
    }

    pub fn envelope_params(&self) -> EnvelopeParams {
        EnvelopeParams::Mixnet {
            layers: self.layers(),
            element_len: self.group.element_len(),
        }
    }
}

/// `E(pk_1, ... E(pk_M, m) ...)` as raw bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OnionCiphertext {
    pub bytes: Vec<u8>,
    pub layers: usize,
}

/// Encrypts under `pk_M` first and `pk_1` last, so server 1 peels first.
pub fn onion_encrypt<G: Group, R: RngCore + ?Sized>(
    plaintext: &PlaintextMessage,
    params: &MixnetParams<G>,
    rng: &mut R,
) -> OnionCiphertext {
    let mut bytes = plaintext.as_bytes().to_vec();
    for pk in params.server_keys.iter().rev() {
        bytes = pke_encrypt(&params.group, pk, &bytes, rng)
            .expect("onion layers stay far below the plaintext limit")
            .to_bytes();
    }
    OnionCiphertext {
        bytes,
        layers: params.layers(),
    }
}

/// Removes one layer with a server's secret key.
pub fn peel_layer<G: Group>(group: &G, sk: &G::Scalar, bytes: &[u8]) -> Result<Vec<u8>, CryptoError> {
    let ct = HybridCiphertext::from_bytes(group, bytes)?;
    pke_decrypt(group, sk, &ct)
}

/// Honest submitters whose messages made it into a fired batch.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AnonymityCensus {
    /// Honest savvy users who delivered a real message.
    pub honest_savvy: usize,
    /// Honest casual users (and savvy users who sent only dummies).
    pub honest_casual: usize,
}

pub fn effective_anonymity(census: &AnonymityCensus) -> usize {
    census.honest_savvy + census.honest_casual
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::{keygen, KeyPair};
    use crate::group::{ModpGroup, P256Group};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn setup<G: Group>(g: G, m: usize, rng: &mut ChaCha20Rng) -> (MixnetParams<G>, Vec<KeyPair<G>>) {
        let keys: Vec<_> = (0..m).map(|_| keygen(&g, rng)).collect();
        let params = MixnetParams::new(g, keys.iter().map(|k| k.public).collect()).unwrap();
        (params, keys)
    }

    #[test]
    fn five_layer_dummy_peels_to_zero_block() {
        let mut rng = ChaCha20Rng::seed_from_u64(10);
        let (params, keys) = setup(P256Group, 5, &mut rng);
        let onion = onion_encrypt(&PlaintextMessage::dummy(), &params, &mut rng);
        assert_eq!(onion.bytes.len(), params.hop_input_len(1));
        let mut cur = onion.bytes;
        for (i, k) in keys.iter().enumerate() {
            cur = peel_layer(&P256Group, &k.secret, &cur).unwrap();
            assert_eq!(cur.len(), params.hop_input_len(i + 2));
        }
        assert_eq!(cur, vec![0u8; 256]);
    }

    #[test]
    fn single_layer_is_one_hybrid_encryption() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let (params, keys) = setup(P256Group, 1, &mut rng);
        let m = PlaintextMessage::real(b"hi").unwrap();
        let onion = onion_encrypt(&m, &params, &mut rng);
        assert_eq!(onion.bytes.len(), 256 + 49);
        assert_eq!(peel_layer(&P256Group, &keys[0].secret, &onion.bytes).unwrap(), m.as_bytes());
    }

    #[test]
    fn wrong_order_fails_first_peel() {
        let mut rng = ChaCha20Rng::seed_from_u64(12);
        let (params, keys) = setup(P256Group, 5, &mut rng);
        let onion = onion_encrypt(&PlaintextMessage::dummy(), &params, &mut rng);
        assert_eq!(
            peel_layer(&P256Group, &keys[1].secret, &onion.bytes),
            Err(CryptoError::AuthenticationFailure)
        );
    }

    #[test]
    fn toy_lengths() {
        let mut rng = ChaCha20Rng::seed_from_u64(13);
        let (params, _) = setup(ModpGroup::toy(), 5, &mut rng);
        assert_eq!(params.hop_input_len(1), 356);
        assert_eq!(params.hop_input_len(5), 276);
        assert_eq!(params.hop_input_len(6), 256);
        assert!(MixnetParams::new(ModpGroup::toy(), vec![]).is_err());
    }

    #[test]
    fn anonymity_is_sum_of_honest_senders() {
        let c = AnonymityCensus {
            honest_savvy: 3,
            honest_casual: 47,
        };
        assert_eq!(effective_anonymity(&c), 50);
        assert_eq!(effective_anonymity(&AnonymityCensus::default()), 0);
    }
}
