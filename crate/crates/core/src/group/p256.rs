use p256::elliptic_curve::group::Group as _;
use p256::elliptic_curve::ops::Reduce;
use p256::elliptic_curve::sec1::{FromEncodedPoint, ToEncodedPoint};
use p256::elliptic_curve::{Field, PrimeField};
use p256::{AffinePoint, EncodedPoint, FieldBytes, ProjectivePoint, Scalar, U256};
use rand::RngCore;

use super::{Group, GroupError, GroupSpec};

/// Compressed SEC1 width; the identity is encoded as 33 zero bytes.
pub(crate) const ELEMENT_LEN: usize = 33;
pub(crate) const SCALAR_LEN: usize = 32;

/// Embedded payload budget: one length byte and one counter byte share the
/// 32-byte x-coordinate with the payload.
const MAX_EMBED: usize = 30;

/// NIST P-256.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct P256Group;

fn x_candidate(payload: &[u8], counter: u8) -> [u8; 33] {
    let mut buf = [0u8; 33];
    buf[0] = 0x02;
    buf[1] = payload.len() as u8;
    buf[2..2 + payload.len()].copy_from_slice(payload);
    buf[32] = counter;
    buf
}

fn decompress(buf: &[u8]) -> Option<ProjectivePoint> {
    let ep = EncodedPoint::from_bytes(buf).ok()?;
    Option::<AffinePoint>::from(AffinePoint::from_encoded_point(&ep)).map(ProjectivePoint::from)
}

fn x_on_curve(x: &[u8; 33]) -> bool {
    decompress(x).is_some()
}

impl Group for P256Group {
    type Scalar = Scalar;
    type Element = ProjectivePoint;

    fn label(&self) -> Vec<u8> {
        b"nist-p256".to_vec()
    }

    fn name(&self) -> String {
        "p256".to_string()
    }

    fn spec(&self) -> GroupSpec {
        GroupSpec::P256Curve
    }

    fn element_len(&self) -> usize {
        ELEMENT_LEN
    }

    fn scalar_len(&self) -> usize {
        SCALAR_LEN
    }

    fn generator(&self) -> ProjectivePoint {
        ProjectivePoint::GENERATOR
    }

    fn identity(&self) -> ProjectivePoint {
        ProjectivePoint::IDENTITY
    }

    fn mul(&self, a: &ProjectivePoint, b: &ProjectivePoint) -> ProjectivePoint {
        a + b
    }

    fn invert(&self, a: &ProjectivePoint) -> ProjectivePoint {
        -a
    }

    fn pow(&self, base: &ProjectivePoint, exp: &Scalar) -> ProjectivePoint {
        base * exp
    }

    fn base_pow(&self, exp: &Scalar) -> ProjectivePoint {
        ProjectivePoint::GENERATOR * exp
    }

    fn scalar_from_u64(&self, v: u64) -> Scalar {
        Scalar::from(v)
    }

    fn scalar_add(&self, a: &Scalar, b: &Scalar) -> Scalar {
        a + b
    }

    fn scalar_mul(&self, a: &Scalar, b: &Scalar) -> Scalar {
        a * b
    }

    fn scalar_neg(&self, a: &Scalar) -> Scalar {
        -a
    }

    fn scalar_is_zero(&self, a: &Scalar) -> bool {
        bool::from(a.is_zero())
    }

    fn random_scalar<R: RngCore + ?Sized>(&self, rng: &mut R) -> Scalar {
        Scalar::random(rng)
    }

    fn scalar_from_digest(&self, digest: &[u8; 32]) -> Scalar {
        <Scalar as Reduce<U256>>::reduce_bytes(FieldBytes::from_slice(digest))
    }

    fn encode_element(&self, e: &ProjectivePoint) -> Vec<u8> {
        if bool::from(e.is_identity()) {
            return vec![0u8; ELEMENT_LEN];
        }
        e.to_affine().to_encoded_point(true).as_bytes().to_vec()
    }

    fn decode_element(&self, bytes: &[u8]) -> Result<ProjectivePoint, GroupError> {
        if bytes.len() != ELEMENT_LEN {
            return Err(GroupError::BadLength {
                got: bytes.len(),
                expected: ELEMENT_LEN,
            });
        }
        if bytes.iter().all(|&b| b == 0) {
            return Ok(ProjectivePoint::IDENTITY);
        }
        if bytes[0] != 0x02 && bytes[0] != 0x03 {
            return Err(GroupError::NotInGroup);
        }
        decompress(bytes).ok_or(GroupError::NotInGroup)
    }

    fn encode_scalar(&self, s: &Scalar) -> Vec<u8> {
        s.to_repr().to_vec()
    }

    fn decode_scalar(&self, bytes: &[u8]) -> Result<Scalar, GroupError> {
        if bytes.len() != SCALAR_LEN {
            return Err(GroupError::BadLength {
                got: bytes.len(),
                expected: SCALAR_LEN,
            });
        }
        Option::from(Scalar::from_repr(*FieldBytes::from_slice(bytes)))
            .ok_or(GroupError::ScalarOutOfRange)
    }

    fn max_message_len(&self) -> usize {
        MAX_EMBED
    }

    /// Try-and-increment: the x-coordinate is `[len][payload][zero pad][counter]`
    /// and the first counter yielding a curve point wins; the even-y root is used.
    fn embed_message(&self, payload: &[u8]) -> Result<ProjectivePoint, GroupError> {
        if payload.len() > MAX_EMBED {
            return Err(GroupError::MessageTooLong {
                got: payload.len(),
                limit: MAX_EMBED,
            });
        }
        if payload.is_empty() {
            return Ok(ProjectivePoint::IDENTITY);
        }
        (0..=u8::MAX)
            .find_map(|counter| decompress(&x_candidate(payload, counter)))
            .ok_or(GroupError::Unembeddable)
    }

    fn extract_message(&self, e: &ProjectivePoint) -> Option<Vec<u8>> {
        if bool::from(e.is_identity()) {
            return Some(Vec::new());
        }
        let enc = e.to_affine().to_encoded_point(true);
        let bytes = enc.as_bytes();
        if bytes[0] != 0x02 {
            return None;
        }
        let len = bytes[1] as usize;
        if len == 0 || len > MAX_EMBED {
            return None;
        }
        if bytes[2 + len..32].iter().any(|&b| b != 0) {
            return None;
        }
        let payload = &bytes[2..2 + len];
        let counter = bytes[32];
        // only the first successful counter is a valid embedding
        if (0..counter).any(|c| x_on_curve(&x_candidate(payload, c))) {
            return None;
        }
        Some(payload.to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn element_encoding_round_trips() {
        let g = P256Group;
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        for _ in 0..20 {
            let e = g.base_pow(&g.random_scalar(&mut rng));
            let enc = g.encode_element(&e);
            assert_eq!(enc.len(), 33);
            assert_eq!(g.decode_element(&enc).unwrap(), e);
        }
        let id = g.encode_element(&g.identity());
        assert_eq!(id, vec![0u8; 33]);
        assert_eq!(g.decode_element(&id).unwrap(), g.identity());
    }

    #[test]
    fn rejects_off_curve_and_uncompressed() {
        let g = P256Group;
        let mut enc = g.encode_element(&g.generator());
        enc[0] = 0x04;
        assert!(g.decode_element(&enc).is_err());
        assert!(g.decode_element(&[0u8; 32]).is_err());
    }

    #[test]
    fn scalar_encoding_rejects_unreduced() {
        let g = P256Group;
        assert_eq!(g.decode_scalar(&[0xff; 32]), Err(GroupError::ScalarOutOfRange));
        let s = g.scalar_from_u64(77);
        assert_eq!(g.decode_scalar(&g.encode_scalar(&s)).unwrap(), s);
    }

    #[test]
    fn embedding_round_trips_and_products_are_garbage() {
        let g = P256Group;
        for payload in [&b"x"[..], b"leak", &[0u8; 30][..], &[0xab; 30][..]] {
            let e = g.embed_message(payload).unwrap();
            assert_eq!(g.extract_message(&e).as_deref(), Some(payload));
        }
        let a = g.embed_message(b"first").unwrap();
        let b = g.embed_message(b"second").unwrap();
        assert_eq!(g.extract_message(&g.mul(&a, &b)), None);
        assert!(g.embed_message(&[1u8; 31]).is_err());
    }
}
