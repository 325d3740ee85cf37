use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::canonical::{self, hex_bytes, hex_list, CanonicalError};
use crate::crypto::{schnorr_prove, schnorr_verify, KeyPair, SchnorrProof};
use crate::group::Group;

const DIRECTORY_CONTEXT: &[u8] = b"conscript/directory/v1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuthoritySignature {
    #[serde(with = "hex_bytes")]
    pub authority: Vec<u8>,
    #[serde(with = "hex_bytes")]
    pub sig: Vec<u8>,
}

/// Server keys in hop order, signed by every directory authority.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirectoryList {
    #[serde(with = "hex_list")]
    pub keys: Vec<Vec<u8>>,
    pub signatures: Vec<AuthoritySignature>,
}

#[derive(Serialize)]
struct SignedBody<'a> {
    #[serde(with = "hex_list")]
    keys: &'a [Vec<u8>],
}

fn signing_context(keys: &[Vec<u8>]) -> Vec<u8> {
    let mut ctx = DIRECTORY_CONTEXT.to_vec();
    ctx.extend(canonical::to_canonical(&SignedBody { keys }));
    ctx
}

pub fn publish_directory<G: Group, R: RngCore + ?Sized>(
    group: &G,
    authorities: &[KeyPair<G>],
    server_keys: &[G::Element],
    rng: &mut R,
) -> DirectoryList {
    assert!(!authorities.is_empty(), "a directory needs at least one authority");
    let keys: Vec<Vec<u8>> = server_keys.iter().map(|k| group.encode_element(k)).collect();
    let ctx = signing_context(&keys);
    let signatures = authorities
        .iter()
        .map(|a| AuthoritySignature {
            authority: group.encode_element(&a.public),
            sig: schnorr_prove(group, &a.secret, &a.public, &ctx, rng).to_bytes(group),
        })
        .collect();
    DirectoryList { keys, signatures }
}

/// True iff every listed authority has exactly one valid signature and no
/// other signer appears.
pub fn verify_directory<G: Group>(group: &G, list: &DirectoryList, authorities: &[G::Element]) -> bool {
    if authorities.is_empty() || list.signatures.len() != authorities.len() {
        return false;
    }
    let ctx = signing_context(&list.keys);
    authorities.iter().all(|auth| {
        let enc = group.encode_element(auth);
        let mut matching = list.signatures.iter().filter(|s| s.authority == enc);
        let (Some(sig), None) = (matching.next(), matching.next()) else {
            return false;
        };
        SchnorrProof::<G>::from_bytes(group, &sig.sig)
            .map(|p| schnorr_verify(group, auth, &ctx, &p))
            .unwrap_or(false)
    })
}

impl DirectoryList {
    pub fn decode_keys<G: Group>(&self, group: &G) -> Option<Vec<G::Element>> {
        self.keys.iter().map(|k| group.decode_element(k).ok()).collect()
    }

    pub fn to_canonical(&self) -> Vec<u8> {
        canonical::to_canonical(self)
    }

    pub fn from_canonical(bytes: &[u8]) -> Result<Self, CanonicalError> {
        canonical::from_canonical(bytes)
    }
}
