use chacha20poly1305::aead::{Aead, KeyInit, Payload};
use chacha20poly1305::{ChaCha20Poly1305, Key, Nonce};
use hkdf::Hkdf;
use rand::RngCore;
use sha2::Sha256;

use super::CryptoError;
use crate::group::Group;

pub const TAG_LEN: usize = 16;
pub const MAX_PLAINTEXT_LEN: usize = 1 << 16;

const KDF_INFO: &[u8] = b"conscript/kem-dem/v1";

/// KEM-DEM ciphertext: `ephemeral || sealed`, where `sealed` carries the
/// payload plus a 16-byte tag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HybridCiphertext {
    pub ephemeral: Vec<u8>,
    pub sealed: Vec<u8>,
}

impl HybridCiphertext {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.ephemeral.len() + self.sealed.len());
        out.extend_from_slice(&self.ephemeral);
        out.extend_from_slice(&self.sealed);
        out
    }

    pub fn from_bytes<G: Group>(group: &G, bytes: &[u8]) -> Result<Self, CryptoError> {
        let elen = group.element_len();
        if bytes.len() < elen + TAG_LEN {
            return Err(CryptoError::Malformed(format!(
                "ciphertext of {} bytes is shorter than the {}-byte overhead",
                bytes.len(),
                elen + TAG_LEN
            )));
        }
        Ok(HybridCiphertext {
            ephemeral: bytes[..elen].to_vec(),
            sealed: bytes[elen..].to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.ephemeral.len() + self.sealed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn derive_cipher<G: Group>(
    group: &G,
    ephemeral: &[u8],
    recipient: &G::Element,
    shared: &G::Element,
) -> ChaCha20Poly1305 {
    let ikm = group.encode_element(shared);
    let mut info = Vec::with_capacity(KDF_INFO.len() + 128);
    info.extend_from_slice(KDF_INFO);
    info.extend_from_slice(&group.label());
    info.extend_from_slice(ephemeral);
    info.extend_from_slice(&group.encode_element(recipient));
    let mut key = [0u8; 32];
    Hkdf::<Sha256>::new(None, &ikm)
        .expand(&info, &mut key)
        .expect("32 bytes is a valid HKDF-SHA256 output length");
    ChaCha20Poly1305::new(Key::from_slice(&key))
}

// Every key is used for exactly one message, so a fixed nonce is sound.
fn nonce() -> &'static Nonce {
    Nonce::from_slice(&[0u8; 12])
}

pub fn pke_encrypt<G: Group, R: RngCore + ?Sized>(
    group: &G,
    pk: &G::Element,
    plaintext: &[u8],
    rng: &mut R,
) -> Result<HybridCiphertext, CryptoError> {
    if plaintext.len() > MAX_PLAINTEXT_LEN {
        return Err(CryptoError::PlaintextTooLong {
            got: plaintext.len(),
            limit: MAX_PLAINTEXT_LEN,
        });
    }
    let r = group.random_nonzero_scalar(rng);
    let ephemeral = group.encode_element(&group.base_pow(&r));
    let shared = group.pow(pk, &r);
    let cipher = derive_cipher(group, &ephemeral, pk, &shared);
    let sealed = cipher
        .encrypt(
            nonce(),
            Payload {
                msg: plaintext,
                aad: &ephemeral,
            },
        )
        .expect("in-memory AEAD encryption cannot fail");
    Ok(HybridCiphertext { ephemeral, sealed })
}

pub fn pke_decrypt<G: Group>(
    group: &G,
    sk: &G::Scalar,
    ct: &HybridCiphertext,
) -> Result<Vec<u8>, CryptoError> {
    if ct.sealed.len() < TAG_LEN {
        return Err(CryptoError::Malformed("sealed part shorter than tag".into()));
    }
    let eph = group.decode_element(&ct.ephemeral)?;
    let recipient = group.base_pow(sk);
    let shared = group.pow(&eph, sk);
    let cipher = derive_cipher(group, &ct.ephemeral, &recipient, &shared);
    cipher
        .decrypt(
            nonce(),
            Payload {
                msg: &ct.sealed,
                aad: &ct.ephemeral,
            },
        )
        .map_err(|_| CryptoError::AuthenticationFailure)
}
