//! One byte form per value: compact JSON with lexicographically sorted keys,
//! no insignificant whitespace, and lowercase hex for binary fields.
//!
//! Decoding is strict: the input must parse, match the schema, and equal the
//! re-encoding of what was parsed, byte for byte.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CanonicalError {
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("input is well formed but not in canonical form")]
    NonCanonical,
}

/// Encodes `value` canonically. Object keys come out sorted because
/// `serde_json::Value` maps are ordered.
pub fn to_canonical<T: Serialize>(value: &T) -> Vec<u8> {
    let tree = serde_json::to_value(value).expect("canonical types serialize to JSON");
    serde_json::to_vec(&tree).expect("JSON values always serialize")
}

pub fn to_canonical_string<T: Serialize>(value: &T) -> String {
    String::from_utf8(to_canonical(value)).expect("JSON output is UTF-8")
}

/// Parses without insisting on the canonical byte form.
pub fn from_lenient<T: DeserializeOwned>(bytes: &[u8]) -> Result<T, CanonicalError> {
    let tree: serde_json::Value =
        serde_json::from_slice(bytes).map_err(|e| CanonicalError::Malformed(e.to_string()))?;
    T::deserialize(tree).map_err(|e| CanonicalError::Malformed(e.to_string()))
}

/// Parses and rejects any byte form other than [`to_canonical`]'s.
pub fn from_canonical<T: DeserializeOwned + Serialize>(bytes: &[u8]) -> Result<T, CanonicalError> {
    let value: T = from_lenient(bytes)?;
    if to_canonical(&value) != bytes {
        return Err(CanonicalError::NonCanonical);
    }
    Ok(value)
}

/// Serde adapter storing `Vec<u8>` as lowercase hex.
pub mod hex_bytes {
    use super::*;

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        hex::decode(&s).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `Vec<Vec<u8>>` as a list of hex strings.
pub mod hex_list {
    use super::*;

    pub fn serialize<S: Serializer>(items: &[Vec<u8>], s: S) -> Result<S::Ok, S::Error> {
        let strings: Vec<String> = items.iter().map(hex::encode).collect();
        strings.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<u8>>, D::Error> {
        let strings = Vec::<String>::deserialize(d)?;
        strings
            .iter()
            .map(|s| hex::decode(s).map_err(serde::de::Error::custom))
            .collect()
    }
}
