//! Scenario orchestration: configuration, the round event loop, metrics
//! reports and the dummy-generation benchmark.

mod bench;
mod config;
mod engine;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canonical;
use crate::dcnet::{DcError, DcOutcome};
use crate::group::GroupError;
use crate::mixnet::{effective_anonymity, BulletinExport, MixError};
use crate::participants::ParticipantError;
use crate::wire::SystemTag;

pub use self::bench::{bench, BenchReport, BenchRow};
pub use self::config::{
    build_round, check, validate_config, ConfigError, ConsentConfig, ConsentMode, PluginConfig,
    ScenarioConfig, WebServerConfig,
};
pub use self::engine::{
    run_round, Buckets, DcSummary, Deployment, RoundResult, RoundSpec, ScheduledSybil,
    ScheduledVisit, ServerLog, SimClock, WireRecord,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("invalid setup: {0}")]
    Setup(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Mix(#[from] MixError),
    #[error(transparent)]
    Dc(#[from] DcError),
    #[error(transparent)]
    Participant(#[from] ParticipantError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnonymityReport {
    pub effective: usize,
    pub j_delivered: usize,
    pub k_delivered: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountsReport {
    pub blocked: usize,
    pub delivered: usize,
    pub drop: usize,
    pub dummy: usize,
    pub duplicate: usize,
    pub emitted: usize,
    pub real: usize,
    pub rejected: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DcReport {
    pub accepted: usize,
    pub outcome: String,
    #[serde(with = "canonical::hex_bytes")]
    pub payload: Vec<u8>,
}

/// Result of `run`, exported canonically.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub anonymity: AnonymityReport,
    pub bulletin: Option<BulletinExport>,
    pub counts: CountsReport,
    pub dcnet: Option<DcReport>,
    pub fired_at: Option<u64>,
    pub rejects: BTreeMap<String, usize>,
    pub round: u64,
    pub seed: u64,
    pub system: SystemTag,
}

impl MetricsReport {
    pub fn from_round(result: &RoundResult, seed: u64) -> Self {
        let b = result.bulletin.as_ref();
        MetricsReport {
            anonymity: AnonymityReport {
                effective: effective_anonymity(&result.census),
                j_delivered: result.census.honest_savvy,
                k_delivered: result.census.honest_casual,
            },
            bulletin: b.map(|b| b.export()),
            counts: CountsReport {
                blocked: result.buckets.blocked,
                delivered: result.buckets.delivered,
                drop: b.map_or(0, |b| b.drop_count),
                dummy: b.map_or(0, |b| b.dummy_count),
                duplicate: b.map_or(0, |b| b.duplicate_count),
                emitted: result.buckets.emitted,
                real: result.real_count(),
                rejected: result.buckets.rejected,
            },
            dcnet: result.dc.as_ref().map(|d| {
                let (outcome, payload) = match &d.outcome {
                    DcOutcome::Empty => ("empty", Vec::new()),
                    DcOutcome::Payload(p) => ("payload", p.clone()),
                    DcOutcome::Garbage => ("garbage", Vec::new()),
                };
                DcReport {
                    accepted: d.accepted,
                    outcome: outcome.into(),
                    payload,
                }
            }),
            fired_at: result.fired_at,
            rejects: result.rejects.clone(),
            round: result.round,
            seed,
            system: result.system,
        }
    }

    pub fn to_canonical(&self) -> Vec<u8> {
        canonical::to_canonical(self)
    }
}

/// Builds and runs one round for a validated config.
pub fn run_scenario_round(cfg: &ScenarioConfig) -> Result<RoundResult, SimError> {
    check(cfg)?;
    crate::with_group!(cfg.group, g => {
        let (dep, spec) = build_round(cfg, g)?;
        run_round(&dep, spec)
    })
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<MetricsReport, SimError> {
    let result = run_scenario_round(cfg)?;
    Ok(MetricsReport::from_round(&result, cfg.seed))
}
