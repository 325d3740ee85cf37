use rand::RngCore;

use super::{Group, GroupError, GroupSpec};

pub(crate) const ELEMENT_LEN: usize = 4;
pub(crate) const SCALAR_LEN: usize = 4;

/// Messages are small integers `m` encoded as `g^m`; decoding searches
/// exponents up to this bound.
const DLOG_SEARCH_LIMIT: u64 = 1 << 16;

/// Order-`q` subgroup of `Z_p^*`, with `p < 2^32`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModpGroup {
    p: u64,
    q: u64,
    g: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModpElement(u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModpScalar(u64);

impl ModpElement {
    pub fn value(self) -> u64 {
        self.0
    }
}

impl ModpScalar {
    pub fn value(self) -> u64 {
        self.0
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

impl ModpGroup {
    pub fn new(p: u64, q: u64, g: u64) -> Result<Self, GroupError> {
        let bad = |why: &str| Err(GroupError::InvalidParameters(why.to_string()));
        if p >= 1 << 32 {
            return bad("modulus must fit in 32 bits");
        }
        if !is_prime(p) {
            return bad("modulus is not prime");
        }
        if !is_prime(q) {
            return bad("order is not prime");
        }
        if (p - 1) % q != 0 {
            return bad("order does not divide p - 1");
        }
        if g <= 1 || g >= p {
            return bad("generator must lie in [2, p)");
        }
        if pow_mod(g, q, p) != 1 {
            return bad("generator does not have order q");
        }
        Ok(ModpGroup { p, q, g })
    }

    pub fn toy() -> Self {
        ModpGroup { p: 23, q: 11, g: 2 }
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    pub fn order(&self) -> u64 {
        self.q
    }

    pub fn element(&self, v: u64) -> Result<ModpElement, GroupError> {
        if v == 0 || v >= self.p || pow_mod(v, self.q, self.p) != 1 {
            return Err(GroupError::NotInGroup);
        }
        Ok(ModpElement(v))
    }

    pub fn scalar(&self, v: u64) -> ModpScalar {
        ModpScalar(v % self.q)
    }
}

impl Group for ModpGroup {
    type Scalar = ModpScalar;
    type Element = ModpElement;

    fn label(&self) -> Vec<u8> {
        format!("modp:p={},q={},g={}", self.p, self.q, self.g).into_bytes()
    }

    fn name(&self) -> String {
        "modp".to_string()
    }

    fn spec(&self) -> GroupSpec {
        GroupSpec::ToyModp { p: self.p, q: self.q, g: self.g }
    }

    fn element_len(&self) -> usize {
        ELEMENT_LEN
    }

    fn scalar_len(&self) -> usize {
        SCALAR_LEN
    }

    fn generator(&self) -> ModpElement {
        ModpElement(self.g)
    }

    fn identity(&self) -> ModpElement {
        ModpElement(1)
    }

    fn mul(&self, a: &ModpElement, b: &ModpElement) -> ModpElement {
        ModpElement(mul_mod(a.0, b.0, self.p))
    }

    fn invert(&self, a: &ModpElement) -> ModpElement {
        // a^(q-1) = a^-1 inside the order-q subgroup
        ModpElement(pow_mod(a.0, self.q - 1, self.p))
    }

    fn pow(&self, base: &ModpElement, exp: &ModpScalar) -> ModpElement {
        ModpElement(pow_mod(base.0, exp.0, self.p))
    }

    fn scalar_from_u64(&self, v: u64) -> ModpScalar {
        self.scalar(v)
    }

    fn scalar_add(&self, a: &ModpScalar, b: &ModpScalar) -> ModpScalar {
        ModpScalar((a.0 + b.0) % self.q)
    }

    fn scalar_mul(&self, a: &ModpScalar, b: &ModpScalar) -> ModpScalar {
        ModpScalar(mul_mod(a.0, b.0, self.q))
    }

    fn scalar_neg(&self, a: &ModpScalar) -> ModpScalar {
        ModpScalar((self.q - a.0) % self.q)
    }

    fn random_scalar<R: RngCore + ?Sized>(&self, rng: &mut R) -> ModpScalar {
        // rejection sampling keeps the draw exactly uniform
        let zone = u64::MAX - (u64::MAX % self.q);
        loop {
            let v = rng.next_u64();
            if v < zone {
                return ModpScalar(v % self.q);
            }
        }
    }

    fn scalar_from_digest(&self, digest: &[u8; 32]) -> ModpScalar {
        let r = digest
            .iter()
            .fold(0u64, |acc, &b| ((acc << 8) | b as u64) % self.q);
        ModpScalar(r)
    }

    fn encode_element(&self, e: &ModpElement) -> Vec<u8> {
        (e.0 as u32).to_be_bytes().to_vec()
    }

    fn decode_element(&self, bytes: &[u8]) -> Result<ModpElement, GroupError> {
        let raw: [u8; ELEMENT_LEN] = bytes.try_into().map_err(|_| GroupError::BadLength {
            got: bytes.len(),
            expected: ELEMENT_LEN,
        })?;
        self.element(u32::from_be_bytes(raw) as u64)
    }

    fn encode_scalar(&self, s: &ModpScalar) -> Vec<u8> {
        (s.0 as u32).to_be_bytes().to_vec()
    }

    fn decode_scalar(&self, bytes: &[u8]) -> Result<ModpScalar, GroupError> {
        let raw: [u8; SCALAR_LEN] = bytes.try_into().map_err(|_| GroupError::BadLength {
            got: bytes.len(),
            expected: SCALAR_LEN,
        })?;
        let v = u32::from_be_bytes(raw) as u64;
        if v >= self.q {
            return Err(GroupError::ScalarOutOfRange);
        }
        Ok(ModpScalar(v))
    }

    fn max_message_len(&self) -> usize {
        2
    }

    fn embed_message(&self, payload: &[u8]) -> Result<ModpElement, GroupError> {
        if payload.len() > self.max_message_len() {
            return Err(GroupError::MessageTooLong {
                got: payload.len(),
                limit: self.max_message_len(),
            });
        }
        if payload.first() == Some(&0) {
            // big-endian integers must be minimal, otherwise decoding is ambiguous
            return Err(GroupError::Unembeddable);
        }
        let m = payload.iter().fold(0u64, |acc, &b| (acc << 8) | b as u64);
        if m >= self.q {
            return Err(GroupError::Unembeddable);
        }
        Ok(self.base_pow(&ModpScalar(m)))
    }

    fn extract_message(&self, e: &ModpElement) -> Option<Vec<u8>> {
        let limit = self.q.min(DLOG_SEARCH_LIMIT);
        let mut acc = 1u64;
        for m in 0..limit {
            if acc == e.0 {
                let bytes = (m as u16).to_be_bytes();
                let start = bytes.iter().position(|&b| b != 0).unwrap_or(2);
                return Some(bytes[start..].to_vec());
            }
            acc = mul_mod(acc, self.g, self.p);
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn toy_group_table() {
        let g = ModpGroup::toy();
        // powers of 2 mod 23: 1 2 4 8 16 9 18 13 3 6 12
        let expected = [1, 2, 4, 8, 16, 9, 18, 13, 3, 6, 12];
        for (i, want) in expected.iter().enumerate() {
            assert_eq!(g.base_pow(&g.scalar(i as u64)).value(), *want);
        }
        assert_eq!(g.base_pow(&g.scalar(11)), g.identity());
    }

    #[test]
    fn inverse_and_division() {
        let g = ModpGroup::toy();
        let a = g.element(8).unwrap();
        assert_eq!(g.mul(&a, &g.invert(&a)), g.identity());
        assert_eq!(g.div(&g.element(16).unwrap(), &a), g.element(2).unwrap());
    }

    #[test]
    fn non_members_do_not_decode() {
        let g = ModpGroup::toy();
        // 5 is a quadratic non-residue mod 23, so it sits outside the order-11 subgroup
        assert_eq!(g.decode_element(&5u32.to_be_bytes()), Err(GroupError::NotInGroup));
        assert_eq!(g.decode_element(&0u32.to_be_bytes()), Err(GroupError::NotInGroup));
        assert!(g.decode_element(&[0, 1]).is_err());
        assert_eq!(g.decode_scalar(&11u32.to_be_bytes()), Err(GroupError::ScalarOutOfRange));
    }

    #[test]
    fn digest_reduction_matches_big_integer_mod() {
        let g = ModpGroup::toy();
        let mut d = [0u8; 32];
        d[31] = 25;
        assert_eq!(g.scalar_from_digest(&d).value(), 3);
        d[30] = 1; // 256 + 25 = 281 = 25 * 11 + 6
        assert_eq!(g.scalar_from_digest(&d).value(), 6);
    }

    #[test]
    fn message_embedding() {
        let g = ModpGroup::toy();
        assert_eq!(g.embed_message(&[]).unwrap(), g.identity());
        assert_eq!(g.embed_message(&[5]).unwrap().value(), 32 % 23);
        assert_eq!(g.extract_message(&g.element(9).unwrap()), Some(vec![5]));
        assert_eq!(g.extract_message(&g.identity()), Some(vec![]));
        assert!(g.embed_message(&[11]).is_err());
        assert!(g.embed_message(&[0, 3]).is_err());
    }

    #[test]
    fn random_scalars_cover_range() {
        let g = ModpGroup::toy();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let mut seen = [false; 11];
        for _ in 0..500 {
            seen[g.random_scalar(&mut rng).value() as usize] = true;
        }
        assert!(seen.iter().all(|s| *s));
    }
}
