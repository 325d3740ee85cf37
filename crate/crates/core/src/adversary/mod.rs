//! Attacks on conscripted anonymity and the savvy-vs-casual distinguishing
//! game used to measure them.

mod game;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canonical::{self, hex_list};
use crate::group::Group;
use crate::mixnet::{effective_anonymity, MixPolicy};
use crate::participants::{ServeRecord, SystemParams, VisitTrace};
use crate::sim::{run_scenario_round, Deployment, RoundResult, ScenarioConfig, SimError, WireRecord};
use crate::wire::encoded_envelope_length;

pub use self::game::{
    run_distinguishing_game, run_selective_dos, Defense, Defenses, GameConfig, GameReport,
    GameResult, GameTemplate, SelectiveDosOutcome, Strategy,
};

/// Everything one adversary legitimately observes in a round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdversaryView {
    /// Every envelope on the wire, keyed by network endpoint.
    pub wire: Vec<WireRecord>,
    /// Serving history of adversarial web servers.
    pub serve_log: Vec<ServeRecord>,
    /// Visits to adversarial pages, as their own script sees them.
    pub traces: Vec<VisitTrace>,
    /// Public output: real messages and total messages processed.
    pub published_real: usize,
    pub published_total: usize,
    /// `(real, dummy)` split, known only to a corrupt last mix server.
    pub last_mix_counts: Option<(usize, usize)>,
    /// Public: canonical byte length of any unsigned envelope this round.
    pub envelope_len: usize,
    /// Public: cost units of the honest generator.
    pub generation_cost: u64,
}

impl AdversaryView {
    pub fn observe<G: Group>(result: &RoundResult, dep: &Deployment<G>, last_server_adversarial: bool) -> Self {
        let adversarial: Vec<&str> = result
            .serve_logs
            .iter()
            .filter(|l| l.adversarial)
            .map(|l| l.origin.as_str())
            .collect();
        let params = match &dep.system {
            SystemParams::Mixnet(p) => p.envelope_params(),
            SystemParams::Dcnet(p) => p.envelope_params(),
        };
        AdversaryView {
            wire: result.wire.clone(),
            serve_log: result
                .serve_logs
                .iter()
                .filter(|l| l.adversarial)
                .flat_map(|l| l.log.iter().cloned())
                .collect(),
            traces: result
                .traces
                .iter()
                .filter(|t| adversarial.contains(&t.origin.as_str()))
                .cloned()
                .collect(),
            published_real: result.real_count(),
            published_total: result.processed(),
            last_mix_counts: match (&result.bulletin, last_server_adversarial) {
                (Some(b), true) => Some((b.real.len(), b.dummy_count)),
                _ => None,
            },
            envelope_len: encoded_envelope_length(params, dep.round).expect("valid deployment"),
            generation_cost: dep.system.generation_cost(),
        }
    }

    pub fn envelopes_from(&self, client_id: u64) -> impl Iterator<Item = &WireRecord> {
        self.wire.iter().filter(move |w| w.client_id == Some(client_id))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum LeakError {
    #[error("the last mix server is honest; dummy counts are not observable")]
    Unavailable,
}

/// `(real, dummy)` as seen by a corrupt last server; `real` estimates how
/// many savvy users were active.
pub fn dummy_count_leak(view: &AdversaryView) -> Result<(usize, usize), LeakError> {
    view.last_mix_counts.ok_or(LeakError::Unavailable)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FloodReport {
    pub fired: bool,
    pub honest_anonymity: usize,
    pub policy: MixPolicy,
    #[serde(with = "hex_list")]
    pub published: Vec<Vec<u8>>,
    pub sybils: usize,
    pub sybils_in_batch: usize,
}

impl FloodReport {
    pub fn to_canonical(&self) -> Vec<u8> {
        canonical::to_canonical(self)
    }
}

/// Sybil flood against a threshold-family mix: the adversary's envelopes
/// reach the pool before any honest visit.
pub fn run_flood_attack(
    base: &ScenarioConfig,
    policy: MixPolicy,
    sybils: usize,
) -> Result<FloodReport, SimError> {
    if !policy.is_threshold_family() {
        return Err(SimError::Setup("flooding needs a threshold-family policy".into()));
    }
    let cfg = ScenarioConfig {
        policy,
        sybils,
        ..base.clone()
    };
    let result = run_scenario_round(&cfg)?;
    Ok(FloodReport {
        fired: result.fired_at.is_some(),
        honest_anonymity: effective_anonymity(&result.census),
        policy,
        published: result.real_payloads(),
        sybils,
        sybils_in_batch: result.sybils_in_batch,
    })
}
