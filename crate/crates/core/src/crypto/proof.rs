//! Non-interactive sigma protocols made non-interactive with Fiat-Shamir.
//!
//! Proofs carry their commitments as well as the challenge, so verification
//! recomputes the hash *and* checks each verification equation. Altering any
//! single field therefore breaks at least one check deterministically, even
//! in the toy group where a bare challenge collision has probability 1/q.

use rand::RngCore;

use super::{transcript_scalar, CryptoError};
use crate::group::Group;

const SCHNORR_LABEL: &[u8] = b"conscript/schnorr/v1";
const DLEQ_LABEL: &[u8] = b"conscript/dleq/v1";
const OR_LABEL: &[u8] = b"conscript/or-dleq-schnorr/v1";

/// Proof of knowledge of `x` with `statement = g^x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SchnorrProof<G: Group> {
    pub commitment: G::Element,
    pub challenge: G::Scalar,
    pub response: G::Scalar,
}

/// `log_{base1} public1 = log_{base2} public2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DleqStatement<G: Group> {
    pub base1: G::Element,
    pub base2: G::Element,
    pub public1: G::Element,
    pub public2: G::Element,
}

/// Chaum-Pedersen proof for a [`DleqStatement`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DleqProof<G: Group> {
    pub commitment1: G::Element,
    pub commitment2: G::Element,
    pub challenge: G::Scalar,
    pub response: G::Scalar,
}

/// Either a DLEQ witness (left) or knowledge of `log_g right` (right).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrStatement<G: Group> {
    pub left: DleqStatement<G>,
    pub right: G::Element,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrBranch {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy)]
pub enum OrWitness<G: Group> {
    Left(G::Scalar),
    Right(G::Scalar),
}

impl<G: Group> OrWitness<G> {
    pub fn branch(&self) -> OrBranch {
        match self {
            OrWitness::Left(_) => OrBranch::Left,
            OrWitness::Right(_) => OrBranch::Right,
        }
    }
}

/// Disjunctive proof; the two challenge shares must add up to the
/// transcript hash. Its shape does not depend on the real branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrProof<G: Group> {
    pub left: DleqProof<G>,
    pub right: SchnorrProof<G>,
}

fn schnorr_challenge<G: Group>(
    group: &G,
    statement: &G::Element,
    commitment: &G::Element,
    context: &[u8],
) -> G::Scalar {
    transcript_scalar(
        group,
        SCHNORR_LABEL,
        &[
            &group.encode_element(&group.generator()),
            &group.encode_element(statement),
            &group.encode_element(commitment),
            context,
        ],
    )
}

fn dleq_challenge<G: Group>(
    group: &G,
    st: &DleqStatement<G>,
    c1: &G::Element,
    c2: &G::Element,
    context: &[u8],
) -> G::Scalar {
    transcript_scalar(
        group,
        DLEQ_LABEL,
        &[
            &group.encode_element(&st.base1),
            &group.encode_element(&st.base2),
            &group.encode_element(&st.public1),
            &group.encode_element(&st.public2),
            &group.encode_element(c1),
            &group.encode_element(c2),
            context,
        ],
    )
}

fn or_challenge<G: Group>(
    group: &G,
    st: &OrStatement<G>,
    proof: &OrProof<G>,
    context: &[u8],
) -> G::Scalar {
    let e = |x: &G::Element| group.encode_element(x);
    transcript_scalar(
        group,
        OR_LABEL,
        &[
            &e(&group.generator()),
            &e(&st.left.base1),
            &e(&st.left.base2),
            &e(&st.left.public1),
            &e(&st.left.public2),
            &e(&st.right),
            &e(&proof.left.commitment1),
            &e(&proof.left.commitment2),
            &e(&proof.right.commitment),
            context,
        ],
    )
}

pub fn schnorr_prove<G: Group, R: RngCore + ?Sized>(
    group: &G,
    secret: &G::Scalar,
    statement: &G::Element,
    context: &[u8],
    rng: &mut R,
) -> SchnorrProof<G> {
    let nonce = group.random_scalar(rng);
    let commitment = group.base_pow(&nonce);
    let challenge = schnorr_challenge(group, statement, &commitment, context);
    let response = group.scalar_add(&nonce, &group.scalar_mul(&challenge, secret));
    SchnorrProof {
        commitment,
        challenge,
        response,
    }
}

fn schnorr_equation<G: Group>(group: &G, statement: &G::Element, p: &SchnorrProof<G>) -> bool {
    group.base_pow(&p.response) == group.mul(&p.commitment, &group.pow(statement, &p.challenge))
}

pub fn schnorr_verify<G: Group>(
    group: &G,
    statement: &G::Element,
    context: &[u8],
    proof: &SchnorrProof<G>,
) -> bool {
    proof.challenge == schnorr_challenge(group, statement, &proof.commitment, context)
        && schnorr_equation(group, statement, proof)
}

pub fn dleq_prove<G: Group, R: RngCore + ?Sized>(
    group: &G,
    secret: &G::Scalar,
    statement: &DleqStatement<G>,
    context: &[u8],
    rng: &mut R,
) -> DleqProof<G> {
    let nonce = group.random_scalar(rng);
    let commitment1 = group.pow(&statement.base1, &nonce);
    let commitment2 = group.pow(&statement.base2, &nonce);
    let challenge = dleq_challenge(group, statement, &commitment1, &commitment2, context);
    let response = group.scalar_add(&nonce, &group.scalar_mul(&challenge, secret));
    DleqProof {
        commitment1,
        commitment2,
        challenge,
        response,
    }
}

fn dleq_equations<G: Group>(group: &G, st: &DleqStatement<G>, p: &DleqProof<G>) -> bool {
    group.pow(&st.base1, &p.response)
        == group.mul(&p.commitment1, &group.pow(&st.public1, &p.challenge))
        && group.pow(&st.base2, &p.response)
            == group.mul(&p.commitment2, &group.pow(&st.public2, &p.challenge))
}

pub fn dleq_verify<G: Group>(
    group: &G,
    statement: &DleqStatement<G>,
    context: &[u8],
    proof: &DleqProof<G>,
) -> bool {
    proof.challenge
        == dleq_challenge(
            group,
            statement,
            &proof.commitment1,
            &proof.commitment2,
            context,
        )
        && dleq_equations(group, statement, proof)
}

pub fn or_prove<G: Group, R: RngCore + ?Sized>(
    group: &G,
    witness: &OrWitness<G>,
    statement: &OrStatement<G>,
    context: &[u8],
    rng: &mut R,
) -> OrProof<G> {
    let nonce = group.random_scalar(rng);
    let sim_challenge = group.random_scalar(rng);
    let sim_response = group.random_scalar(rng);
    let zero = group.scalar_from_u64(0);

    let mut proof = match witness {
        OrWitness::Left(_) => {
            // simulate the Schnorr branch: a = g^s * K^-c
            let neg = group.scalar_neg(&sim_challenge);
            let commitment = group.mul(
                &group.base_pow(&sim_response),
                &group.pow(&statement.right, &neg),
            );
            OrProof {
                left: DleqProof {
                    commitment1: group.pow(&statement.left.base1, &nonce),
                    commitment2: group.pow(&statement.left.base2, &nonce),
                    challenge: zero,
                    response: zero,
                },
                right: SchnorrProof {
                    commitment,
                    challenge: sim_challenge,
                    response: sim_response,
                },
            }
        }
        OrWitness::Right(_) => {
            let neg = group.scalar_neg(&sim_challenge);
            let st = &statement.left;
            OrProof {
                left: DleqProof {
                    commitment1: group.mul(
                        &group.pow(&st.base1, &sim_response),
                        &group.pow(&st.public1, &neg),
                    ),
                    commitment2: group.mul(
                        &group.pow(&st.base2, &sim_response),
                        &group.pow(&st.public2, &neg),
                    ),
                    challenge: sim_challenge,
                    response: sim_response,
                },
                right: SchnorrProof {
                    commitment: group.base_pow(&nonce),
                    challenge: zero,
                    response: zero,
                },
            }
        }
    };

    let total = or_challenge(group, statement, &proof, context);
    match witness {
        OrWitness::Left(x) => {
            let c = group.scalar_sub(&total, &proof.right.challenge);
            proof.left.challenge = c;
            proof.left.response = group.scalar_add(&nonce, &group.scalar_mul(&c, x));
        }
        OrWitness::Right(k) => {
            let c = group.scalar_sub(&total, &proof.left.challenge);
            proof.right.challenge = c;
            proof.right.response = group.scalar_add(&nonce, &group.scalar_mul(&c, k));
        }
    }
    proof
}

pub fn or_verify<G: Group>(
    group: &G,
    statement: &OrStatement<G>,
    context: &[u8],
    proof: &OrProof<G>,
) -> bool {
    let total = or_challenge(group, statement, proof, context);
    group.scalar_add(&proof.left.challenge, &proof.right.challenge) == total
        && dleq_equations(group, &statement.left, &proof.left)
        && schnorr_equation(group, &statement.right, &proof.right)
}

/// Sequential reader over fixed-width encodings.
pub(crate) struct Reader<'a, G: Group> {
    group: &'a G,
    bytes: &'a [u8],
}

impl<'a, G: Group> Reader<'a, G> {
    pub(crate) fn new(group: &'a G, bytes: &'a [u8]) -> Self {
        Reader { group, bytes }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], CryptoError> {
        if self.bytes.len() < n {
            return Err(CryptoError::Malformed("encoding truncated".into()));
        }
        let (head, tail) = self.bytes.split_at(n);
        self.bytes = tail;
        Ok(head)
    }

    pub(crate) fn element(&mut self) -> Result<G::Element, CryptoError> {
        let n = self.group.element_len();
        Ok(self.group.decode_element(self.take(n)?)?)
    }

    pub(crate) fn scalar(&mut self) -> Result<G::Scalar, CryptoError> {
        let n = self.group.scalar_len();
        Ok(self.group.decode_scalar(self.take(n)?)?)
    }

    pub(crate) fn finish(self) -> Result<(), CryptoError> {
        if self.bytes.is_empty() {
            Ok(())
        } else {
            Err(CryptoError::Malformed(format!(
                "{} trailing bytes",
                self.bytes.len()
            )))
        }
    }
}

impl<G: Group> SchnorrProof<G> {
    pub fn encoded_len(group: &G) -> usize {
        group.element_len() + 2 * group.scalar_len()
    }

    pub fn write(&self, group: &G, out: &mut Vec<u8>) {
        out.extend(group.encode_element(&self.commitment));
        out.extend(group.encode_scalar(&self.challenge));
        out.extend(group.encode_scalar(&self.response));
    }

    pub fn to_bytes(&self, group: &G) -> Vec<u8> {
        let mut out = Vec::with_capacity(Self::encoded_len(group));
        self.write(group, &mut out);
        out
    }

    pub(crate) fn read(r: &mut Reader<'_, G>) -> Result<Self, CryptoError> {
        Ok(SchnorrProof {
            commitment: r.element()?,
            challenge: r.scalar()?,
            response: r.scalar()?,
        })
    }

    pub fn from_bytes(group: &G, bytes: &[u8]) -> Result<Self, CryptoError> {
        let mut r = Reader::new(group, bytes);
        let p = Self::read(&mut r)?;
        r.finish()?;
        Ok(p)
    }
}

impl<G: Group> DleqProof<G> {
    pub fn encoded_len(group: &G) -> usize {
        2 * group.element_len() + 2 * group.scalar_len()
    }

    pub fn write(&self, group: &G, out: &mut Vec<u8>) {
        out.extend(group.encode_element(&self.commitment1));
        out.extend(group.encode_element(&self.commitment2));
        out.extend(group.encode_scalar(&self.challenge));
        out.extend(group.encode_scalar(&self.response));
    }

    pub fn to_bytes(&self, group: &G) -> Vec<u8> {
        let mut out = Vec::with_capacity(Self::encoded_len(group));
        self.write(group, &mut out);
        out
    }

    pub(crate) fn read(r: &mut Reader<'_, G>) -> Result<Self, CryptoError> {
        Ok(DleqProof {
            commitment1: r.element()?,
            commitment2: r.element()?,
            challenge: r.scalar()?,
            response: r.scalar()?,
        })
    }

    pub fn from_bytes(group: &G, bytes: &[u8]) -> Result<Self, CryptoError> {
        let mut r = Reader::new(group, bytes);
        let p = Self::read(&mut r)?;
        r.finish()?;
        Ok(p)
    }
}

impl<G: Group> OrProof<G> {
    pub fn encoded_len(group: &G) -> usize {
        DleqProof::<G>::encoded_len(group) + SchnorrProof::<G>::encoded_len(group)
    }

    pub fn write(&self, group: &G, out: &mut Vec<u8>) {
        self.left.write(group, out);
        self.right.write(group, out);
    }

    pub fn to_bytes(&self, group: &G) -> Vec<u8> {
        let mut out = Vec::with_capacity(Self::encoded_len(group));
        self.write(group, &mut out);
        out
    }

    pub(crate) fn read(r: &mut Reader<'_, G>) -> Result<Self, CryptoError> {
        Ok(OrProof {
            left: DleqProof::read(r)?,
            right: SchnorrProof::read(r)?,
        })
    }

    pub fn from_bytes(group: &G, bytes: &[u8]) -> Result<Self, CryptoError> {
        let mut r = Reader::new(group, bytes);
        let p = Self::read(&mut r)?;
        r.finish()?;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::KeyPair;
    use crate::group::{ModpGroup, P256Group};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn rng() -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(42)
    }

    #[test]
    fn toy_schnorr_completeness_and_probes() {
        let g = ModpGroup::toy();
        let x = g.scalar(3);
        let y = g.element(8).unwrap();
        let p = schnorr_prove(&g, &x, &y, b"ctx", &mut rng());
        assert!(schnorr_verify(&g, &y, b"ctx", &p));

        let mut bumped = p;
        bumped.response = g.scalar_add(&p.response, &g.scalar(1));
        assert!(!schnorr_verify(&g, &y, b"ctx", &bumped));
    }

    #[test]
    fn schnorr_context_binding() {
        let g = P256Group;
        let kp = crate::crypto::keygen(&g, &mut rng());
        let p = schnorr_prove(&g, &kp.secret, &kp.public, b"round-1", &mut rng());
        assert!(schnorr_verify(&g, &kp.public, b"round-1", &p));
        assert!(!schnorr_verify(&g, &kp.public, b"round-2", &p));
    }

    #[test]
    fn toy_dleq_oracle() {
        let g = ModpGroup::toy();
        let st = DleqStatement::<ModpGroup> {
            base1: g.generator(),
            base2: g.element(16).unwrap(),
            public1: g.element(8).unwrap(),
            public2: g.element(2).unwrap(),
        };
        let p = dleq_prove(&g, &g.scalar(3), &st, b"", &mut rng());
        assert!(dleq_verify(&g, &st, b"", &p));

        let wrong = DleqStatement {
            public2: g.element(4).unwrap(),
            ..st
        };
        assert!(!dleq_verify(&g, &wrong, b"", &p));
    }

    #[test]
    fn dleq_identity_case() {
        let g = ModpGroup::toy();
        let st = DleqStatement::<ModpGroup> {
            base1: g.generator(),
            base2: g.element(16).unwrap(),
            public1: g.identity(),
            public2: g.identity(),
        };
        let p = dleq_prove(&g, &g.scalar(0), &st, b"id", &mut rng());
        assert!(dleq_verify(&g, &st, b"id", &p));
    }

    fn or_fixture<G: Group>(g: &G, r: &mut ChaCha20Rng) -> (G::Scalar, G::Scalar, OrStatement<G>) {
        let x = g.random_scalar(r);
        let y = crate::crypto::keygen(g, r);
        let owner = crate::crypto::keygen(g, r);
        let st = OrStatement {
            left: DleqStatement {
                base1: g.generator(),
                base2: y.public,
                public1: g.base_pow(&x),
                public2: g.pow(&y.public, &x),
            },
            right: owner.public,
        };
        (x, owner.secret, st)
    }

    #[test]
    fn or_proof_both_branches() {
        let g = P256Group;
        let mut r = rng();
        let (x, k, st) = or_fixture(&g, &mut r);
        let left = or_prove(&g, &OrWitness::Left(x), &st, b"c", &mut r);
        let right = or_prove(&g, &OrWitness::Right(k), &st, b"c", &mut r);
        assert!(or_verify(&g, &st, b"c", &left));
        assert!(or_verify(&g, &st, b"c", &right));
        assert_eq!(left.to_bytes(&g).len(), right.to_bytes(&g).len());
        assert_eq!(left.to_bytes(&g).len(), OrProof::<P256Group>::encoded_len(&g));
        assert!(!or_verify(&g, &st, b"d", &left));
    }

    #[test]
    fn or_proof_without_any_witness_fails() {
        let g = P256Group;
        let mut r = rng();
        let (_, _, st) = or_fixture(&g, &mut r);
        let bogus = g.random_scalar(&mut r);
        let p = or_prove(&g, &OrWitness::Left(bogus), &st, b"c", &mut r);
        assert!(!or_verify(&g, &st, b"c", &p));
        let p = or_prove(&g, &OrWitness::Right(bogus), &st, b"c", &mut r);
        assert!(!or_verify(&g, &st, b"c", &p));
    }

    #[test]
    fn proof_bytes_round_trip() {
        let g = ModpGroup::toy();
        let kp = KeyPair::from_secret(&g, g.scalar(3));
        let p = schnorr_prove(&g, &kp.secret, &kp.public, b"", &mut rng());
        let bytes = p.to_bytes(&g);
        assert_eq!(bytes.len(), 12);
        assert_eq!(SchnorrProof::from_bytes(&g, &bytes).unwrap(), p);
        assert!(SchnorrProof::<ModpGroup>::from_bytes(&g, &bytes[..11]).is_err());
        let mut long = bytes.clone();
        long.push(0);
        assert!(SchnorrProof::<ModpGroup>::from_bytes(&g, &long).is_err());
    }
}
