use std::collections::{BTreeSet, VecDeque};

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::{verify_directory, PageResponse, ParticipantError, SystemParams};
use crate::crypto::KeyPair;
use crate::group::Group;
use crate::roster::sign_envelope;
use crate::wire::{self, SubmissionEnvelope};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClientKind {
    Casual,
    Savvy,
    RegisteredSavvy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeviceClass {
    Workstation,
    Mobile,
}

/// Plug-in behavior switches. Each one is a defense that can be ablated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PluginSettings {
    /// Swap only when the served bundle's digest matches the known-good one.
    pub digest_check: bool,
    /// Build the real envelope offline so visits cost the same as a dummy.
    pub pregenerate: bool,
    /// Serialize real envelopes exactly like the served script does.
    pub canonical_output: bool,
}

impl Default for PluginSettings {
    fn default() -> Self {
        PluginSettings {
            digest_check: true,
            pregenerate: true,
            canonical_output: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CachedEnvelope {
    pub round: u64,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone)]
pub struct ClientProfile<G: Group> {
    pub id: u64,
    pub kind: ClientKind,
    pub device: DeviceClass,
    pub consent: bool,
    pub expected_digest: Option<[u8; 32]>,
    pub queue: VecDeque<Vec<u8>>,
    pub cache: Option<CachedEnvelope>,
    pub roster_key: Option<KeyPair<G>>,
    /// DC-net slot-owner secret `k`.
    pub owner_secret: Option<G::Scalar>,
    pub plugin: PluginSettings,
    /// (origin, round) pairs where a tampered bundle was seen.
    suppressed: BTreeSet<(String, u64)>,
}

impl<G: Group> ClientProfile<G> {
    pub fn casual(id: u64, device: DeviceClass) -> Self {
        ClientProfile {
            id,
            kind: ClientKind::Casual,
            device,
            consent: true,
            expected_digest: None,
            queue: VecDeque::new(),
            cache: None,
            roster_key: None,
            owner_secret: None,
            plugin: PluginSettings::default(),
            suppressed: BTreeSet::new(),
        }
    }

    pub fn savvy(id: u64, device: DeviceClass, expected_digest: [u8; 32], plugin: PluginSettings) -> Self {
        ClientProfile {
            kind: ClientKind::Savvy,
            expected_digest: Some(expected_digest),
            plugin,
            ..Self::casual(id, device)
        }
    }

    pub fn registered(
        id: u64,
        device: DeviceClass,
        expected_digest: [u8; 32],
        plugin: PluginSettings,
        key: KeyPair<G>,
    ) -> Self {
        ClientProfile {
            kind: ClientKind::RegisteredSavvy,
            roster_key: Some(key),
            ..Self::savvy(id, device, expected_digest, plugin)
        }
    }

    pub fn with_payload(mut self, payload: impl Into<Vec<u8>>) -> Self {
        self.queue.push_back(payload.into());
        self
    }

    pub fn is_savvy(&self) -> bool {
        self.kind != ClientKind::Casual
    }

    fn finish_real(
        &self,
        group: &G,
        envelope: SubmissionEnvelope,
        rng: &mut (impl RngCore + ?Sized),
    ) -> Vec<u8> {
        let envelope = match &self.roster_key {
            Some(key) => sign_envelope(group, key, &envelope, rng),
            None => envelope,
        };
        if self.plugin.canonical_output {
            wire::canonical_encode(&envelope)
        } else {
            wire::variant_encode(&envelope)
        }
    }

    fn build_real<R: RngCore + ?Sized>(
        &self,
        system: &SystemParams<G>,
        round: u64,
        rng: &mut R,
    ) -> Result<Option<Vec<u8>>, ParticipantError> {
        let Some(payload) = self.queue.front() else {
            return Ok(None);
        };
        let env = system.real_envelope(payload, self.owner_secret.as_ref(), round, rng)?;
        Ok(Some(self.finish_real(system.group(), env, rng)))
    }
}

/// Builds the next real envelope ahead of time; the cost is not booked to
/// any visit.
pub fn pregenerate<G: Group, R: RngCore + ?Sized>(
    profile: &mut ClientProfile<G>,
    system: &SystemParams<G>,
    round: u64,
    rng: &mut R,
) -> Result<(), ParticipantError> {
    if !profile.is_savvy() {
        return Ok(());
    }
    if let Some(bytes) = profile.build_real(system, round, rng)? {
        profile.cache = Some(CachedEnvelope { round, bytes });
    }
    Ok(())
}

pub fn roster_sign<G: Group, R: RngCore + ?Sized>(
    group: &G,
    profile: &ClientProfile<G>,
    envelope: &SubmissionEnvelope,
    rng: &mut R,
) -> Result<SubmissionEnvelope, ParticipantError> {
    let key = profile.roster_key.as_ref().ok_or(ParticipantError::Unregistered)?;
    Ok(sign_envelope(group, key, envelope, rng))
}

#[derive(Debug, Clone, Copy)]
pub struct VisitContext<'a, G: Group> {
    pub system: &'a SystemParams<G>,
    pub authorities: &'a [G::Element],
    pub round: u64,
    pub clock: u64,
}

/// What the network and the page's own script can see of a visit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisitTrace {
    pub client_id: u64,
    pub origin: String,
    pub digest: [u8; 32],
    pub time: u64,
    /// Time from page load to submission, in cost units.
    pub cost: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisitOutcome {
    pub envelope: Option<Vec<u8>>,
    pub cost: u64,
    pub trace: VisitTrace,
    /// Ground truth for accounting only; never part of an adversary view.
    pub real: bool,
}

/// One page visit: consent, rate gate, directory check, then either the
/// served script's output or the plug-in's real envelope in its place.
pub fn run_visit<G: Group, R: RngCore + ?Sized>(
    profile: &mut ClientProfile<G>,
    page: &PageResponse,
    ctx: &VisitContext<'_, G>,
    rng: &mut R,
) -> VisitOutcome {
    let mut outcome = VisitOutcome {
        envelope: None,
        cost: 0,
        trace: VisitTrace {
            client_id: profile.id,
            origin: page.origin.clone(),
            digest: page.bundle.digest,
            time: ctx.clock,
            cost: 0,
        },
        real: false,
    };
    if !profile.consent {
        return outcome;
    }
    let rho = page.rate.rho(profile.device).clamp(0.0, 1.0);
    if !rng.gen_bool(rho) {
        return outcome;
    }
    let group = ctx.system.group();
    if !verify_directory(group, &page.directory, ctx.authorities)
        || page.directory.decode_keys(group).as_deref() != Some(ctx.system.server_keys())
    {
        return outcome;
    }

    let swap = wants_swap(profile, page, ctx.round);
    // the served script always runs, so the page sees the same work either way
    let (dummy, dummy_cost) = page.bundle.execute(ctx.system, ctx.round, rng);
    let mut emitted = dummy;
    let mut cost = dummy_cost;

    if swap {
        if profile.plugin.pregenerate {
            match profile.cache.take() {
                Some(c) if c.round == ctx.round => {
                    emitted = c.bytes;
                    outcome.real = true;
                }
                // stale or missing: behave casually and keep the payload queued
                _ => {}
            }
        } else if let Ok(Some(bytes)) = profile.build_real(ctx.system, ctx.round, rng) {
            emitted = bytes;
            cost += ctx.system.generation_cost();
            outcome.real = true;
        }
        if outcome.real {
            profile.queue.pop_front();
        }
    }

    outcome.envelope = Some(emitted);
    outcome.cost = cost;
    outcome.trace.cost = cost;
    outcome
}

fn wants_swap<G: Group>(profile: &mut ClientProfile<G>, page: &PageResponse, round: u64) -> bool {
    if !profile.is_savvy() || profile.queue.is_empty() {
        return false;
    }
    let key = (page.origin.clone(), round);
    if profile.suppressed.contains(&key) {
        return false;
    }
    if profile.plugin.digest_check && profile.expected_digest != Some(page.bundle.digest) {
        profile.suppressed.insert(key);
        return false;
    }
    true
}
