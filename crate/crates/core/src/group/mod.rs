//! Prime-order groups used by every protocol layer.
//!
//! Two instantiations exist: [`ModpGroup`], a small multiplicative subgroup of
//! the integers modulo a prime that is cheap enough to check by hand, and
//! [`P256Group`], the NIST P-256 curve. Protocol code is written once against
//! the [`Group`] trait and monomorphized for each.

mod modp;
mod p256;

use std::fmt::Debug;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use self::modp::{ModpElement, ModpGroup, ModpScalar};
pub use self::p256::P256Group;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroupError {
    #[error("invalid group parameters: {0}")]
    InvalidParameters(String),
    #[error("element encoding has length {got}, expected {expected}")]
    BadLength { got: usize, expected: usize },
    #[error("bytes do not encode an element of the prime-order subgroup")]
    NotInGroup,
    #[error("scalar encoding is not reduced modulo the group order")]
    ScalarOutOfRange,
    #[error("message of {got} bytes cannot be embedded (limit {limit})")]
    MessageTooLong { got: usize, limit: usize },
    #[error("message cannot be embedded in this group")]
    Unembeddable,
}

/// A cyclic group of prime order `q` with a fixed generator.
///
/// Elements and scalars are plain `Copy` values; all arithmetic goes through
/// the group handle so that parameterized groups can carry their modulus.
pub trait Group: Clone + Debug + Send + Sync + 'static {
    type Scalar: Copy + Eq + Debug + Send + Sync;
    type Element: Copy + Eq + Debug + Send + Sync;

    /// Canonical description bound into every hash transcript.
    fn label(&self) -> Vec<u8>;
    /// Short identifier used in scheme tags and file headers.
    fn name(&self) -> String;
    fn spec(&self) -> GroupSpec;

    fn element_len(&self) -> usize;
    fn scalar_len(&self) -> usize;

    fn generator(&self) -> Self::Element;
    fn identity(&self) -> Self::Element;
    fn mul(&self, a: &Self::Element, b: &Self::Element) -> Self::Element;
    fn invert(&self, a: &Self::Element) -> Self::Element;
    fn pow(&self, base: &Self::Element, exp: &Self::Scalar) -> Self::Element;
    fn base_pow(&self, exp: &Self::Scalar) -> Self::Element {
        self.pow(&self.generator(), exp)
    }
    fn div(&self, a: &Self::Element, b: &Self::Element) -> Self::Element {
        self.mul(a, &self.invert(b))
    }

    fn scalar_from_u64(&self, v: u64) -> Self::Scalar;
    fn scalar_add(&self, a: &Self::Scalar, b: &Self::Scalar) -> Self::Scalar;
    fn scalar_mul(&self, a: &Self::Scalar, b: &Self::Scalar) -> Self::Scalar;
    fn scalar_neg(&self, a: &Self::Scalar) -> Self::Scalar;
    fn scalar_sub(&self, a: &Self::Scalar, b: &Self::Scalar) -> Self::Scalar {
        self.scalar_add(a, &self.scalar_neg(b))
    }
    fn scalar_is_zero(&self, a: &Self::Scalar) -> bool {
        *a == self.scalar_from_u64(0)
    }
    /// Uniform in `[0, q)`.
    fn random_scalar<R: RngCore + ?Sized>(&self, rng: &mut R) -> Self::Scalar;
    /// Uniform in `[1, q)`.
    fn random_nonzero_scalar<R: RngCore + ?Sized>(&self, rng: &mut R) -> Self::Scalar {
        loop {
            let s = self.random_scalar(rng);
            if !self.scalar_is_zero(&s) {
                return s;
            }
        }
    }
    /// Reduces a 32-byte digest into a scalar.
    fn scalar_from_digest(&self, digest: &[u8; 32]) -> Self::Scalar;

    fn encode_element(&self, e: &Self::Element) -> Vec<u8>;
    fn decode_element(&self, bytes: &[u8]) -> Result<Self::Element, GroupError>;
    fn encode_scalar(&self, s: &Self::Scalar) -> Vec<u8>;
    fn decode_scalar(&self, bytes: &[u8]) -> Result<Self::Scalar, GroupError>;

    /// Largest payload accepted by [`Group::embed_message`].
    fn max_message_len(&self) -> usize;
    /// Maps a short payload to a group element. The empty payload maps to
    /// the identity.
    fn embed_message(&self, payload: &[u8]) -> Result<Self::Element, GroupError>;
    /// Inverse of [`Group::embed_message`]; `None` when the element is not
    /// the image of any payload.
    fn extract_message(&self, e: &Self::Element) -> Option<Vec<u8>>;
}

/// Serializable group selector used in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum GroupSpec {
    /// Order-`q` subgroup of `Z_p^*` generated by `g`.
    ToyModp { p: u64, q: u64, g: u64 },
    P256Curve,
}

impl GroupSpec {
    /// The p = 23, q = 11, g = 2 group used as a hand-checkable oracle.
    pub const TOY: GroupSpec = GroupSpec::ToyModp { p: 23, q: 11, g: 2 };

    pub fn validate(&self) -> Result<(), GroupError> {
        match *self {
            GroupSpec::ToyModp { p, q, g } => ModpGroup::new(p, q, g).map(|_| ()),
            GroupSpec::P256Curve => Ok(()),
        }
    }

    /// Encoded group-element width in bytes.
    pub fn element_len(&self) -> usize {
        match self {
            GroupSpec::ToyModp { .. } => modp::ELEMENT_LEN,
            GroupSpec::P256Curve => p256::ELEMENT_LEN,
        }
    }

    pub fn scalar_len(&self) -> usize {
        match self {
            GroupSpec::ToyModp { .. } => modp::SCALAR_LEN,
            GroupSpec::P256Curve => p256::SCALAR_LEN,
        }
    }
}

/// Runs `$body` with `$g` bound to the concrete group described by `$spec`.
///
/// The toy arm validates parameters first and evaluates to
/// `Err(GroupError)` (converted with `From`) on bad parameters.
#[macro_export]
macro_rules! with_group {
    ($spec:expr, $g:ident => $body:expr) => {
        match $spec {
            $crate::group::GroupSpec::P256Curve => {
                let $g = $crate::group::P256Group;
                $body
            }
            $crate::group::GroupSpec::ToyModp { p, q, g } => {
                match $crate::group::ModpGroup::new(p, q, g) {
                    Ok($g) => $body,
                    Err(e) => Err(e.into()),
                }
            }
        }
    };
}
