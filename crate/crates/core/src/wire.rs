//! Fixed-length plaintext blocks and the submission envelope every client
//! puts on the wire.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canonical::{self, hex_bytes, CanonicalError};
use crate::crypto::TAG_LEN;

/// Every plaintext block, dummy or real, is exactly this long.
pub const PLAINTEXT_LEN: usize = 256;
/// One control byte and a two-byte length prefix precede the payload.
pub const MAX_PAYLOAD_LEN: usize = PLAINTEXT_LEN - 3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WireError {
    #[error("payload of {got} bytes exceeds {limit}")]
    OversizePayload { got: usize, limit: usize },
    #[error("dummy messages carry no payload")]
    NonEmptyDummy,
    #[error("plaintext block must be {PLAINTEXT_LEN} bytes, got {0}")]
    BadBlockLength(usize),
    #[error("plaintext block is not a valid dummy or real message")]
    InvalidBlock,
    #[error("invalid envelope parameters: {0}")]
    InvalidParams(String),
    #[error("malformed envelope: {0}")]
    Malformed(String),
    #[error("envelope is not in canonical form")]
    NonCanonical,
}

impl From<CanonicalError> for WireError {
    fn from(e: CanonicalError) -> Self {
        match e {
            CanonicalError::Malformed(m) => WireError::Malformed(m),
            CanonicalError::NonCanonical => WireError::NonCanonical,
        }
    }
}

/// `[control][len: u16 BE][payload][zero padding]`, 256 bytes total.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PlaintextMessage {
    block: [u8; PLAINTEXT_LEN],
}

impl std::fmt::Debug for PlaintextMessage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PlaintextMessage")
            .field("real", &self.is_real())
            .field("payload", &String::from_utf8_lossy(self.payload()))
            .finish()
    }
}

impl PlaintextMessage {
    pub fn dummy() -> Self {
        PlaintextMessage {
            block: [0u8; PLAINTEXT_LEN],
        }
    }

    pub fn real(payload: &[u8]) -> Result<Self, WireError> {
        make_plaintext(payload, false)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, WireError> {
        let block: [u8; PLAINTEXT_LEN] = bytes
            .try_into()
            .map_err(|_| WireError::BadBlockLength(bytes.len()))?;
        let msg = PlaintextMessage { block };
        match block[0] {
            0 if block.iter().all(|&b| b == 0) => Ok(msg),
            1 => {
                let len = u16::from_be_bytes([block[1], block[2]]) as usize;
                if len > MAX_PAYLOAD_LEN || block[3 + len..].iter().any(|&b| b != 0) {
                    return Err(WireError::InvalidBlock);
                }
                Ok(msg)
            }
            _ => Err(WireError::InvalidBlock),
        }
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.block
    }

    pub fn control_bit(&self) -> u8 {
        self.block[0]
    }

    pub fn is_dummy(&self) -> bool {
        self.block[0] == 0
    }

    pub fn is_real(&self) -> bool {
        self.block[0] == 1
    }

    pub fn payload(&self) -> &[u8] {
        let len = u16::from_be_bytes([self.block[1], self.block[2]]) as usize;
        &self.block[3..3 + len.min(MAX_PAYLOAD_LEN)]
    }
}

pub fn make_plaintext(payload: &[u8], is_dummy: bool) -> Result<PlaintextMessage, WireError> {
    if is_dummy {
        if !payload.is_empty() {
            return Err(WireError::NonEmptyDummy);
        }
        return Ok(PlaintextMessage::dummy());
    }
    if payload.len() > MAX_PAYLOAD_LEN {
        return Err(WireError::OversizePayload {
            got: payload.len(),
            limit: MAX_PAYLOAD_LEN,
        });
    }
    let mut block = [0u8; PLAINTEXT_LEN];
    block[0] = 1;
    block[1..3].copy_from_slice(&(payload.len() as u16).to_be_bytes());
    block[3..3 + payload.len()].copy_from_slice(payload);
    Ok(PlaintextMessage { block })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemTag {
    Mixnet,
    Dcnet,
}

impl std::fmt::Display for SystemTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SystemTag::Mixnet => "mixnet",
            SystemTag::Dcnet => "dcnet",
        })
    }
}

/// Signature of a registered user over the unsigned envelope's canonical bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RosterSignature {
    #[serde(rename = "pk", with = "hex_bytes")]
    pub signer: Vec<u8>,
    pub scheme: String,
    #[serde(rename = "sig", with = "hex_bytes")]
    pub signature: Vec<u8>,
}

/// The object a client submits to the anonymity system.
///
/// Canonical form: `{"body":<hex>,"round":<int>,"sig":{...},"sys":<tag>}`
/// with `sig` omitted entirely when unsigned.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubmissionEnvelope {
    #[serde(with = "hex_bytes")]
    pub body: Vec<u8>,
    pub round: u64,
    #[serde(rename = "sig", default, skip_serializing_if = "Option::is_none")]
    pub signature: Option<RosterSignature>,
    #[serde(rename = "sys")]
    pub system: SystemTag,
}

impl SubmissionEnvelope {
    pub fn new(system: SystemTag, round: u64, body: Vec<u8>) -> Self {
        SubmissionEnvelope {
            body,
            round,
            signature: None,
            system,
        }
    }

    /// Bytes covered by a roster signature.
    pub fn signing_bytes(&self) -> Vec<u8> {
        let unsigned = SubmissionEnvelope {
            signature: None,
            ..self.clone()
        };
        canonical_encode(&unsigned)
    }
}

pub fn canonical_encode(envelope: &SubmissionEnvelope) -> Vec<u8> {
    canonical::to_canonical(envelope)
}

pub fn canonical_decode(bytes: &[u8]) -> Result<SubmissionEnvelope, WireError> {
    Ok(canonical::from_canonical(bytes)?)
}

/// Accepts any JSON rendering of an envelope. Only used when a deployment
/// disables canonical-form enforcement.
pub fn lenient_decode(bytes: &[u8]) -> Result<SubmissionEnvelope, WireError> {
    Ok(canonical::from_lenient(bytes)?)
}

/// A second serializer with its own conventions (reverse key order, spaces
/// after separators, uppercase hex), standing in for an independently
/// written client library.
pub fn variant_encode(envelope: &SubmissionEnvelope) -> Vec<u8> {
    let mut out = String::from("{");
    out.push_str(&format!("\"sys\": \"{}\", ", envelope.system));
    if let Some(sig) = &envelope.signature {
        out.push_str(&format!(
            "\"sig\": {{\"sig\": \"{}\", \"scheme\": \"{}\", \"pk\": \"{}\"}}, ",
            hex::encode_upper(&sig.signature),
            sig.scheme,
            hex::encode_upper(&sig.signer)
        ));
    }
    out.push_str(&format!("\"round\": {}, ", envelope.round));
    out.push_str(&format!("\"body\": \"{}\"", hex::encode_upper(&envelope.body)));
    out.push('}');
    out.into_bytes()
}

/// Parameters that fix the body length of an unsigned envelope.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvelopeParams {
    Mixnet { layers: usize, element_len: usize },
    Dcnet { element_len: usize, scalar_len: usize },
}

/// Body length in bytes of every legal unsigned envelope for `params`.
///
/// A mix-net body is the 256-byte block plus one KEM-DEM overhead per layer.
/// A DC-net body is the commitment, the ciphertext element and the OR proof
/// (three commitments, two challenge shares, two responses).
pub fn envelope_length(params: EnvelopeParams) -> Result<usize, WireError> {
    match params {
        EnvelopeParams::Mixnet {
            layers,
            element_len,
        } => {
            if layers == 0 {
                return Err(WireError::InvalidParams("mix-net needs at least one layer".into()));
            }
            Ok(PLAINTEXT_LEN + layers * (element_len + TAG_LEN))
        }
        EnvelopeParams::Dcnet {
            element_len,
            scalar_len,
        } => {
            if element_len == 0 || scalar_len == 0 {
                return Err(WireError::InvalidParams("zero-width group encoding".into()));
            }
            Ok(5 * element_len + 4 * scalar_len)
        }
    }
}

/// Full canonical byte length of an unsigned envelope in `round`.
pub fn encoded_envelope_length(params: EnvelopeParams, round: u64) -> Result<usize, WireError> {
    let body = envelope_length(params)?;
    let sys = match params {
        EnvelopeParams::Mixnet { .. } => SystemTag::Mixnet,
        EnvelopeParams::Dcnet { .. } => SystemTag::Dcnet,
    };
    // {"body":"<2*body>","round":<digits>,"sys":"<tag>"}
    Ok(r#"{"body":"","round":,"sys":""}"#.len()
        + 2 * body
        + round.to_string().len()
        + sys.to_string().len())
}
