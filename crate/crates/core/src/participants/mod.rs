//! Web servers, script bundles, directory authorities, CORS, and the
//! casual / savvy clients that visit pages.

mod client;
mod directory;

use std::collections::BTreeSet;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::sha256;
use crate::dcnet::{dc_client_submit, DcError, DcRole, DcRoundParams};
use crate::group::Group;
use crate::mixnet::{onion_encrypt, MixnetParams};
use crate::wire::{self, PlaintextMessage, SubmissionEnvelope, SystemTag, WireError};

pub use self::client::{
    pregenerate, roster_sign, run_visit, CachedEnvelope, ClientKind, ClientProfile, DeviceClass,
    PluginSettings, VisitContext, VisitOutcome, VisitTrace,
};
pub use self::directory::{publish_directory, verify_directory, AuthoritySignature, DirectoryList};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParticipantError {
    #[error("client is not on the roster")]
    Unregistered,
    #[error("no slot-owner secret for a DC-net real message")]
    MissingOwnerSecret,
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error(transparent)]
    Dc(#[from] DcError),
}

/// The anonymity system a page submits to, with everything a generator needs.
#[derive(Debug, Clone)]
pub enum SystemParams<G: Group> {
    Mixnet(MixnetParams<G>),
    Dcnet(DcRoundParams<G>),
}

impl<G: Group> SystemParams<G> {
    pub fn tag(&self) -> SystemTag {
        match self {
            SystemParams::Mixnet(_) => SystemTag::Mixnet,
            SystemParams::Dcnet(_) => SystemTag::Dcnet,
        }
    }

    pub fn group(&self) -> &G {
        match self {
            SystemParams::Mixnet(p) => &p.group,
            SystemParams::Dcnet(p) => &p.group,
        }
    }

    pub fn server_keys(&self) -> &[G::Element] {
        match self {
            SystemParams::Mixnet(p) => &p.server_keys,
            SystemParams::Dcnet(p) => &p.server_keys,
        }
    }

    /// Simulated cost of producing one envelope, in group exponentiations.
    /// Dummy and real envelopes cost the same.
    pub fn generation_cost(&self) -> u64 {
        match self {
            SystemParams::Mixnet(p) => 2 * p.layers() as u64,
            // X, pad, two real-branch commitments, two simulated-branch terms
            SystemParams::Dcnet(_) => 6,
        }
    }

    pub fn dummy_envelope<R: RngCore + ?Sized>(&self, round: u64, rng: &mut R) -> SubmissionEnvelope {
        let body = match self {
            SystemParams::Mixnet(p) => onion_encrypt(&PlaintextMessage::dummy(), p, rng).bytes,
            SystemParams::Dcnet(p) => dc_client_submit(p, &DcRole::Dummy, rng)
                .expect("dummy submissions cannot fail")
                .to_bytes(&p.group),
        };
        SubmissionEnvelope::new(self.tag(), round, body)
    }

    pub fn real_envelope<R: RngCore + ?Sized>(
        &self,
        payload: &[u8],
        owner_secret: Option<&G::Scalar>,
        round: u64,
        rng: &mut R,
    ) -> Result<SubmissionEnvelope, ParticipantError> {
        let body = match self {
            SystemParams::Mixnet(p) => onion_encrypt(&PlaintextMessage::real(payload)?, p, rng).bytes,
            SystemParams::Dcnet(p) => {
                let secret = owner_secret.ok_or(ParticipantError::MissingOwnerSecret)?;
                let role = DcRole::Owner {
                    payload,
                    secret: *secret,
                };
                dc_client_submit(p, &role, rng)?.to_bytes(&p.group)
            }
        };
        Ok(SubmissionEnvelope::new(self.tag(), round, body))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorId {
    HonestMixnet,
    HonestDcnet,
    /// Emits a recognizable envelope the mix will reject.
    MarkedProbe,
    /// Honest dummy, serialized by a different library.
    FormattingVariant,
}

impl GeneratorId {
    pub fn as_str(&self) -> &'static str {
        match self {
            GeneratorId::HonestMixnet => "honest-mixnet",
            GeneratorId::HonestDcnet => "honest-dcnet",
            GeneratorId::MarkedProbe => "marked-probe",
            GeneratorId::FormattingVariant => "formatting-variant",
        }
    }

    pub fn honest_for(system: SystemTag) -> Self {
        match system {
            SystemTag::Mixnet => GeneratorId::HonestMixnet,
            SystemTag::Dcnet => GeneratorId::HonestDcnet,
        }
    }
}

/// Body of every marked-probe envelope.
pub const PROBE_MARKER: &[u8] = b"Bogus!";

/// Script text served to the browser. Only the bytes matter to the plug-in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptBundle {
    pub generator: GeneratorId,
    pub bytes: Vec<u8>,
    pub digest: [u8; 32],
}

impl ScriptBundle {
    pub fn new(generator: GeneratorId) -> Self {
        let bytes = format!(
            "/* conscript client */\n(function(){{ conscript.run({:?}); }})();\n",
            generator.as_str()
        )
        .into_bytes();
        let digest = sha256(&bytes);
        ScriptBundle {
            generator,
            bytes,
            digest,
        }
    }

    /// Runs the bundle as a casual browser would.
    pub fn execute<G: Group, R: RngCore + ?Sized>(
        &self,
        system: &SystemParams<G>,
        round: u64,
        rng: &mut R,
    ) -> (Vec<u8>, u64) {
        match self.generator {
            GeneratorId::HonestMixnet | GeneratorId::HonestDcnet => {
                let env = system.dummy_envelope(round, rng);
                (wire::canonical_encode(&env), system.generation_cost())
            }
            GeneratorId::FormattingVariant => {
                let env = system.dummy_envelope(round, rng);
                (wire::variant_encode(&env), system.generation_cost())
            }
            GeneratorId::MarkedProbe => {
                let env = SubmissionEnvelope::new(system.tag(), round, PROBE_MARKER.to_vec());
                (wire::canonical_encode(&env), 0)
            }
        }
    }
}

pub fn is_probe_marker(bytes: &[u8]) -> bool {
    wire::lenient_decode(bytes).is_ok_and(|e| e.body == PROBE_MARKER)
}

/// Which bundle a web server hands to which visitor.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ServingPolicy {
    #[default]
    Honest,
    MalformedToAll,
    /// Honest bundle only to the listed client ids; marked probe to the rest.
    Selective { honest_set: BTreeSet<u64> },
    VariantToAll,
}

/// Participation probability per device class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatePolicy {
    pub workstation: f64,
    pub mobile: f64,
}

impl RatePolicy {
    pub const ALWAYS: RatePolicy = RatePolicy {
        workstation: 1.0,
        mobile: 1.0,
    };

    pub fn rho(&self, device: DeviceClass) -> f64 {
        match device {
            DeviceClass::Workstation => self.workstation,
            DeviceClass::Mobile => self.mobile,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PageResponse {
    pub origin: String,
    pub bundle: ScriptBundle,
    pub directory: DirectoryList,
    pub rate: RatePolicy,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServeRecord {
    pub client_id: u64,
    pub generator: GeneratorId,
}

#[derive(Debug, Clone)]
pub struct WebServer {
    pub origin: String,
    pub policy: ServingPolicy,
    pub rate: RatePolicy,
    pub adversarial: bool,
    log: Vec<ServeRecord>,
}

impl WebServer {
    pub fn new(origin: impl Into<String>, policy: ServingPolicy, rate: RatePolicy, adversarial: bool) -> Self {
        WebServer {
            origin: origin.into(),
            policy,
            rate,
            adversarial,
            log: Vec::new(),
        }
    }

    pub fn serve(&mut self, client_id: u64, system: SystemTag, directory: &DirectoryList) -> PageResponse {
        let generator = match &self.policy {
            ServingPolicy::Honest => GeneratorId::honest_for(system),
            ServingPolicy::MalformedToAll => GeneratorId::MarkedProbe,
            ServingPolicy::Selective { honest_set } if honest_set.contains(&client_id) => {
                GeneratorId::honest_for(system)
            }
            ServingPolicy::Selective { .. } => GeneratorId::MarkedProbe,
            ServingPolicy::VariantToAll => GeneratorId::FormattingVariant,
        };
        self.log.push(ServeRecord { client_id, generator });
        PageResponse {
            origin: self.origin.clone(),
            bundle: ScriptBundle::new(generator),
            directory: directory.clone(),
            rate: self.rate,
        }
    }

    /// Serving history; only an adversarial server's log is adversary-visible.
    pub fn log(&self) -> &[ServeRecord] {
        &self.log
    }
}

/// `Access-Control-Allow-Origin` configuration of the anonymity system.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CorsPolicy {
    pub allowed: Vec<String>,
}

impl CorsPolicy {
    pub fn allow_all() -> Self {
        CorsPolicy {
            allowed: vec!["*".into()],
        }
    }

    pub fn allows(&self, origin: &str) -> bool {
        self.allowed.iter().any(|a| a == "*" || a == origin)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CorsOutcome {
    Delivered(Vec<u8>),
    Blocked,
}

/// Preflight model: the request goes through only if the system's origin
/// config names the page's origin or allows everything.
pub fn cors_submit(policy: &CorsPolicy, envelope: Vec<u8>, requesting_origin: &str) -> CorsOutcome {
    if policy.allows(requesting_origin) {
        CorsOutcome::Delivered(envelope)
    } else {
        CorsOutcome::Blocked
    }
}
