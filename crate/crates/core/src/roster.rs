//! Registered-user roster and the Schnorr signatures that let registered
//! submissions count toward a threshold.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::canonical::{self, hex_list, CanonicalError};
use crate::crypto::{schnorr_prove, schnorr_verify, KeyPair, SchnorrProof};
use crate::group::{Group, GroupSpec};
use crate::wire::{RosterSignature, SubmissionEnvelope};

const SIGNATURE_CONTEXT: &[u8] = b"conscript/roster-signature/v1";

pub fn scheme_tag<G: Group>(group: &G) -> String {
    format!("schnorr-{}", group.name())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignatureStatus {
    Unsigned,
    Valid,
    /// Present but bad scheme, unknown signer or failed verification.
    Invalid,
}

#[derive(Debug, Clone)]
pub struct Roster<G: Group> {
    group: G,
    keys: Vec<G::Element>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RosterFile {
    pub group: GroupSpec,
    #[serde(with = "hex_list")]
    pub keys: Vec<Vec<u8>>,
}

impl<G: Group> Roster<G> {
    pub fn new(group: G, keys: Vec<G::Element>) -> Self {
        Roster { group, keys }
    }

    pub fn empty(group: G) -> Self {
        Roster::new(group, Vec::new())
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn contains(&self, key: &G::Element) -> bool {
        self.keys.contains(key)
    }

    pub fn register(&mut self, key: G::Element) {
        if !self.contains(&key) {
            self.keys.push(key);
        }
    }

    /// Canonical file form; keys are listed in sorted hex order.
    pub fn to_file(&self) -> Vec<u8> {
        let mut keys: Vec<Vec<u8>> = self.keys.iter().map(|k| self.group.encode_element(k)).collect();
        keys.sort();
        keys.dedup();
        canonical::to_canonical(&RosterFile {
            group: self.group.spec(),
            keys,
        })
    }

    pub fn from_file(group: G, bytes: &[u8]) -> Result<Self, CanonicalError> {
        let file: RosterFile = canonical::from_canonical(bytes)?;
        if file.group != group.spec() {
            return Err(CanonicalError::Malformed("roster group mismatch".into()));
        }
        if file.keys.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CanonicalError::NonCanonical);
        }
        let keys = file
            .keys
            .iter()
            .map(|k| group.decode_element(k))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CanonicalError::Malformed(e.to_string()))?;
        Ok(Roster::new(group, keys))
    }

    /// Checks an envelope's signature against this roster.
    pub fn check(&self, envelope: &SubmissionEnvelope) -> SignatureStatus {
        let Some(sig) = &envelope.signature else {
            return SignatureStatus::Unsigned;
        };
        if verify_signature(&self.group, envelope, sig, |k| self.contains(k)) {
            SignatureStatus::Valid
        } else {
            SignatureStatus::Invalid
        }
    }
}

fn signing_context(envelope: &SubmissionEnvelope) -> Vec<u8> {
    let mut ctx = SIGNATURE_CONTEXT.to_vec();
    ctx.extend(envelope.signing_bytes());
    ctx
}

fn verify_signature<G: Group>(
    group: &G,
    envelope: &SubmissionEnvelope,
    sig: &RosterSignature,
    registered: impl Fn(&G::Element) -> bool,
) -> bool {
    if sig.scheme != scheme_tag(group) {
        return false;
    }
    let Ok(signer) = group.decode_element(&sig.signer) else {
        return false;
    };
    if !registered(&signer) {
        return false;
    }
    let Ok(proof) = SchnorrProof::<G>::from_bytes(group, &sig.signature) else {
        return false;
    };
    schnorr_verify(group, &signer, &signing_context(envelope), &proof)
}

/// Attaches a Schnorr signature by `key` over the envelope's unsigned
/// canonical bytes, replacing any existing signature.
pub fn sign_envelope<G: Group, R: RngCore + ?Sized>(
    group: &G,
    key: &KeyPair<G>,
    envelope: &SubmissionEnvelope,
    rng: &mut R,
) -> SubmissionEnvelope {
    let proof = schnorr_prove(group, &key.secret, &key.public, &signing_context(envelope), rng);
    SubmissionEnvelope {
        signature: Some(RosterSignature {
            signer: group.encode_element(&key.public),
            scheme: scheme_tag(group),
            signature: proof.to_bytes(group),
        }),
        ..envelope.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::keygen;
    use crate::group::P256Group;
    use crate::wire::{canonical_encode, SystemTag};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn sign_and_check() {
        let g = P256Group;
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let member = keygen(&g, &mut rng);
        let outsider = keygen(&g, &mut rng);
        let roster = Roster::new(g, vec![member.public]);
        let env = SubmissionEnvelope::new(SystemTag::Mixnet, 1, vec![1, 2, 3]);
        assert_eq!(roster.check(&env), SignatureStatus::Unsigned);

        let signed = sign_envelope(&g, &member, &env, &mut rng);
        assert_eq!(roster.check(&signed), SignatureStatus::Valid);
        assert!(canonical_encode(&signed).len() > canonical_encode(&env).len());

        let forged = sign_envelope(&g, &outsider, &env, &mut rng);
        assert_eq!(roster.check(&forged), SignatureStatus::Invalid);

        let mut moved = signed.clone();
        moved.round = 2;
        assert_eq!(roster.check(&moved), SignatureStatus::Invalid);
    }

    #[test]
    fn roster_file_round_trip() {
        let g = P256Group;
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let keys: Vec<_> = (0..3).map(|_| keygen(&g, &mut rng).public).collect();
        let roster = Roster::new(g, keys.clone());
        let file = roster.to_file();
        let back = Roster::from_file(g, &file).unwrap();
        assert_eq!(back.to_file(), file);
        assert!(keys.iter().all(|k| back.contains(k)));
    }
}
