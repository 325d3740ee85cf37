//! One round of a verifiable client/server DC-net.
//!
//! Client `i` picks `x_i`, publishes `X_i = g^x_i` and `C_i = Ŷ^x_i · m_i`
//! where `Ŷ = Π Y_j` and `m_i` is the identity for dummies. Server `j`
//! publishes `S_ji = X_i^y_j` with a DLEQ proof, so
//! `Π C_i / Π S_ji = Π m_i`. The client's OR proof shows either that `C_i`
//! carries no message (DLEQ) or that it knows the slot owner's key.

use rand::RngCore;
use thiserror::Error;

use crate::crypto::{
    dleq_prove, dleq_verify, or_prove, or_verify, CryptoError, DleqProof, DleqStatement, KeyPair,
    OrProof, OrStatement, OrWitness, Reader,
};
use crate::group::{Group, GroupError};
use crate::wire::EnvelopeParams;

const CLIENT_CONTEXT: &[u8] = b"conscript/dcnet-client/v1";
const SHARE_CONTEXT: &[u8] = b"conscript/dcnet-share/v1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DcError {
    #[error("DC-net needs at least one server")]
    NoServers,
    #[error("payload of {got} bytes exceeds the {limit}-byte slot")]
    OversizePayload { got: usize, limit: usize },
    #[error("owner secret does not match the registered slot key")]
    OwnerSecretMismatch,
    #[error("unverified input: {0}")]
    UnverifiedInput(String),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error(transparent)]
    Group(#[from] GroupError),
}

#[derive(Debug, Clone)]
pub struct DcRoundParams<G: Group> {
    pub group: G,
    pub server_keys: Vec<G::Element>,
    /// `Ŷ`, the product of all server keys.
    pub combined: G::Element,
    pub round: u64,
    /// `K`, the slot owner's registered key.
    pub owner_key: G::Element,
}

impl<G: Group> DcRoundParams<G> {
    pub fn new(
        group: G,
        server_keys: Vec<G::Element>,
        round: u64,
        owner_key: G::Element,
    ) -> Result<Self, DcError> {
        if server_keys.is_empty() {
            return Err(DcError::NoServers);
        }
        let combined = server_keys
            .iter()
            .fold(group.identity(), |acc, y| group.mul(&acc, y));
        Ok(DcRoundParams {
            group,
            server_keys,
            combined,
            round,
            owner_key,
        })
    }

    pub fn envelope_params(&self) -> EnvelopeParams {
        EnvelopeParams::Dcnet {
            element_len: self.group.element_len(),
            scalar_len: self.group.scalar_len(),
        }
    }

    fn client_context(&self) -> Vec<u8> {
        let mut ctx = CLIENT_CONTEXT.to_vec();
        ctx.extend(self.round.to_be_bytes());
        ctx
    }

    fn statement(&self, x_pub: &G::Element, c: &G::Element) -> OrStatement<G> {
        OrStatement {
            left: DleqStatement {
                base1: self.group.generator(),
                base2: self.combined,
                public1: *x_pub,
                public2: *c,
            },
            right: self.owner_key,
        }
    }
}

#[derive(Debug, Clone)]
pub enum DcRole<'a, G: Group> {
    Dummy,
    Owner { payload: &'a [u8], secret: G::Scalar },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DcClientCiphertext<G: Group> {
    pub commitment: G::Element,
    pub ciphertext: G::Element,
    pub proof: OrProof<G>,
}

impl<G: Group> DcClientCiphertext<G> {
    pub fn encoded_len(group: &G) -> usize {
        2 * group.element_len() + OrProof::<G>::encoded_len(group)
    }

    /// `X || C || proof`.
    pub fn to_bytes(&self, group: &G) -> Vec<u8> {
        let mut out = Vec::with_capacity(Self::encoded_len(group));
        out.extend(group.encode_element(&self.commitment));
        out.extend(group.encode_element(&self.ciphertext));
        self.proof.write(group, &mut out);
        out
    }

    pub fn from_bytes(group: &G, bytes: &[u8]) -> Result<Self, CryptoError> {
        let mut r = Reader::new(group, bytes);
        let commitment = r.element()?;
        let ciphertext = r.element()?;
        let proof = OrProof::read(&mut r)?;
        r.finish()?;
        Ok(DcClientCiphertext {
            commitment,
            ciphertext,
            proof,
        })
    }
}

pub fn dc_client_submit<G: Group, R: RngCore + ?Sized>(
    params: &DcRoundParams<G>,
    role: &DcRole<'_, G>,
    rng: &mut R,
) -> Result<DcClientCiphertext<G>, DcError> {
    let x = params.group.random_scalar(rng);
    dc_client_submit_with(params, role, &x, rng)
}

/// As [`dc_client_submit`] with the pad exponent supplied by the caller.
pub fn dc_client_submit_with<G: Group, R: RngCore + ?Sized>(
    params: &DcRoundParams<G>,
    role: &DcRole<'_, G>,
    x: &G::Scalar,
    rng: &mut R,
) -> Result<DcClientCiphertext<G>, DcError> {
    let g = &params.group;
    let commitment = g.base_pow(x);
    let pad = g.pow(&params.combined, x);
    let (ciphertext, witness) = match role {
        DcRole::Dummy => (pad, OrWitness::Left(*x)),
        DcRole::Owner { payload, secret } => {
            if payload.len() > g.max_message_len() {
                return Err(DcError::OversizePayload {
                    got: payload.len(),
                    limit: g.max_message_len(),
                });
            }
            if g.base_pow(secret) != params.owner_key {
                return Err(DcError::OwnerSecretMismatch);
            }
            let m = g.embed_message(payload)?;
            (g.mul(&pad, &m), OrWitness::Right(*secret))
        }
    };
    let statement = params.statement(&commitment, &ciphertext);
    let proof = or_prove(g, &witness, &statement, &params.client_context(), rng);
    Ok(DcClientCiphertext {
        commitment,
        ciphertext,
        proof,
    })
}

pub fn dc_verify_client<G: Group>(params: &DcRoundParams<G>, ct: &DcClientCiphertext<G>) -> bool {
    let statement = params.statement(&ct.commitment, &ct.ciphertext);
    or_verify(&params.group, &statement, &params.client_context(), &ct.proof)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DcServerShare<G: Group> {
    pub index: usize,
    /// `(S_ji, proof)` for each client commitment, in input order.
    pub shares: Vec<(G::Element, DleqProof<G>)>,
}

fn share_context(round: u64, server: usize, client: usize) -> Vec<u8> {
    let mut ctx = SHARE_CONTEXT.to_vec();
    ctx.extend(round.to_be_bytes());
    ctx.extend((server as u64).to_be_bytes());
    ctx.extend((client as u64).to_be_bytes());
    ctx
}

pub fn dc_server_share<G: Group, R: RngCore + ?Sized>(
    group: &G,
    index: usize,
    key: &KeyPair<G>,
    commitments: &[G::Element],
    round: u64,
    rng: &mut R,
) -> DcServerShare<G> {
    let shares = commitments
        .iter()
        .enumerate()
        .map(|(i, x_pub)| {
            let s = group.pow(x_pub, &key.secret);
            let st = DleqStatement {
                base1: group.generator(),
                base2: *x_pub,
                public1: key.public,
                public2: s,
            };
            let proof = dleq_prove(group, &key.secret, &st, &share_context(round, index, i), rng);
            (s, proof)
        })
        .collect();
    DcServerShare { index, shares }
}

/// Checks every share proof of server `share.index` against `commitments`.
pub fn dc_verify_share<G: Group>(
    params: &DcRoundParams<G>,
    commitments: &[G::Element],
    share: &DcServerShare<G>,
) -> bool {
    let g = &params.group;
    let Some(server_key) = params.server_keys.get(share.index) else {
        return false;
    };
    share.shares.len() == commitments.len()
        && share
            .shares
            .iter()
            .zip(commitments)
            .enumerate()
            .all(|(i, ((s, proof), x_pub))| {
                let st = DleqStatement {
                    base1: g.generator(),
                    base2: *x_pub,
                    public1: *server_key,
                    public2: *s,
                };
                dleq_verify(g, &st, &share_context(params.round, share.index, i), proof)
            })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DcOutcome {
    /// Every client sent a dummy.
    Empty,
    Payload(Vec<u8>),
    /// The aggregate is not a valid embedding, e.g. two owners collided.
    Garbage,
}

/// Verifies everything, then opens `Π C_i / Π S_ji`.
pub fn dc_reconstruct<G: Group>(
    params: &DcRoundParams<G>,
    ciphertexts: &[DcClientCiphertext<G>],
    shares: &[DcServerShare<G>],
) -> Result<DcOutcome, DcError> {
    let g = &params.group;
    if let Some(i) = ciphertexts.iter().position(|ct| !dc_verify_client(params, ct)) {
        return Err(DcError::UnverifiedInput(format!("client ciphertext {i}")));
    }
    if shares.len() != params.server_keys.len() {
        return Err(DcError::UnverifiedInput(format!(
            "{} server shares for {} servers",
            shares.len(),
            params.server_keys.len()
        )));
    }
    let commitments: Vec<G::Element> = ciphertexts.iter().map(|ct| ct.commitment).collect();
    for (j, share) in shares.iter().enumerate() {
        if share.index != j || !dc_verify_share(params, &commitments, share) {
            return Err(DcError::UnverifiedInput(format!("server share {j}")));
        }
    }

    let mut aggregate = ciphertexts
        .iter()
        .fold(g.identity(), |acc, ct| g.mul(&acc, &ct.ciphertext));
    for share in shares {
        for (s, _) in &share.shares {
            aggregate = g.div(&aggregate, s);
        }
    }
    if aggregate == g.identity() {
        return Ok(DcOutcome::Empty);
    }
    Ok(match g.extract_message(&aggregate) {
        Some(payload) if !payload.is_empty() => DcOutcome::Payload(payload),
        _ => DcOutcome::Garbage,
    })
}

/// Server side of a whole round: verifies client inputs, excludes the bad
/// ones, computes every server's shares and reconstructs.
#[derive(Debug, Clone)]
pub struct DcRoundResult<G: Group> {
    pub accepted: Vec<DcClientCiphertext<G>>,
    pub rejected: usize,
    pub shares: Vec<DcServerShare<G>>,
    pub outcome: DcOutcome,
}

pub fn dc_run_round<G: Group, R: RngCore + ?Sized>(
    params: &DcRoundParams<G>,
    server_keys: &[KeyPair<G>],
    submissions: Vec<DcClientCiphertext<G>>,
    rng: &mut R,
) -> Result<DcRoundResult<G>, DcError> {
    let total = submissions.len();
    let accepted: Vec<_> = submissions
        .into_iter()
        .filter(|ct| dc_verify_client(params, ct))
        .collect();
    let commitments: Vec<G::Element> = accepted.iter().map(|ct| ct.commitment).collect();
    let shares: Vec<_> = server_keys
        .iter()
        .enumerate()
        .map(|(j, kp)| dc_server_share(&params.group, j, kp, &commitments, params.round, rng))
        .collect();
    let outcome = dc_reconstruct(params, &accepted, &shares)?;
    Ok(DcRoundResult {
        rejected: total - accepted.len(),
        accepted,
        shares,
        outcome,
    })
}
