use rand::Rng;
use serde::{Deserialize, Serialize};

use super::engine::{Deployment, RoundSpec, ScheduledSybil, ScheduledVisit};
use super::SimError;
use crate::crypto::keygen;
use crate::group::{Group, GroupSpec};
use crate::mixnet::MixPolicy;
use crate::participants::{
    ClientProfile, CorsPolicy, DeviceClass, GeneratorId, PluginSettings, RatePolicy, ScriptBundle,
    ServingPolicy, WebServer,
};
use crate::roster::Roster;
use crate::seeds;
use crate::wire::{self, SystemTag, MAX_PAYLOAD_LEN};

/// A declarative experiment: who is honest, how many of each client kind,
/// which servers serve what.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub system: SystemTag,
    pub group: GroupSpec,
    /// Number of mix (or DC-net) servers.
    pub servers: usize,
    pub policy: MixPolicy,
    /// Unregistered savvy clients, `j`.
    #[serde(default)]
    pub savvy: usize,
    /// Casual clients, `k`.
    #[serde(default)]
    pub casual: usize,
    /// Registered savvy clients; their keys form the roster.
    #[serde(default)]
    pub registered: usize,
    #[serde(default)]
    pub sybils: usize,
    /// Queued payloads for savvy then registered clients, in id order.
    /// Missing entries default to `message-<id>`.
    #[serde(default)]
    pub payloads: Vec<String>,
    pub web_servers: Vec<WebServerConfig>,
    #[serde(default = "allow_all")]
    pub cors: Vec<String>,
    #[serde(default)]
    pub consent: ConsentConfig,
    #[serde(default = "always")]
    pub rate: RatePolicy,
    #[serde(default)]
    pub mobile_fraction: f64,
    #[serde(default = "one")]
    pub authorities: usize,
    #[serde(default = "one")]
    pub round: u64,
    /// Visits are spread uniformly over `[0, round_seconds)`.
    #[serde(default = "hour")]
    pub round_seconds: u64,
    /// Savvy clients visit every web server instead of one.
    #[serde(default)]
    pub multi_server: bool,
    #[serde(default)]
    pub plugin: PluginConfig,
    #[serde(default = "yes")]
    pub canonical_only: bool,
    pub seed: u64,
}

fn allow_all() -> Vec<String> {
    vec!["*".into()]
}
fn always() -> RatePolicy {
    RatePolicy::ALWAYS
}
fn one<T: From<u8>>() -> T {
    T::from(1)
}
fn hour() -> u64 {
    3600
}
fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WebServerConfig {
    pub origin: String,
    #[serde(default)]
    pub policy: ServingPolicy,
    #[serde(default)]
    pub adversarial: bool,
    /// Overrides the scenario-wide rate.
    #[serde(default)]
    pub rate: Option<RatePolicy>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConsentMode {
    OptIn,
    OptOut,
}

/// Consent applies to casual visitors; plug-in users have opted in by
/// installing it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConsentConfig {
    pub mode: ConsentMode,
    /// Fraction who opt in (opt-in mode) or opt out (opt-out mode).
    #[serde(default)]
    pub fraction: f64,
}

impl Default for ConsentConfig {
    fn default() -> Self {
        ConsentConfig {
            mode: ConsentMode::OptOut,
            fraction: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PluginConfig {
    #[serde(default = "yes")]
    pub digest_check: bool,
    #[serde(default = "yes")]
    pub pregenerate: bool,
    #[serde(default = "yes")]
    pub canonical_output: bool,
}

impl Default for PluginConfig {
    fn default() -> Self {
        PluginConfig {
            digest_check: true,
            pregenerate: true,
            canonical_output: true,
        }
    }
}

impl From<PluginConfig> for PluginSettings {
    fn from(p: PluginConfig) -> Self {
        PluginSettings {
            digest_check: p.digest_check,
            pregenerate: p.pregenerate,
            canonical_output: p.canonical_output,
        }
    }
}

/// A validation failure naming the offending field.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{path}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn at(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            path: path.into(),
            message: message.into(),
        }
    }
}

/// Parses and fully validates a scenario. Any JSON layout is accepted.
pub fn validate_config(bytes: &[u8]) -> Result<ScenarioConfig, ConfigError> {
    let value: serde_json::Value =
        serde_json::from_slice(bytes).map_err(|e| ConfigError::at("", e.to_string()))?;
    let cfg: ScenarioConfig = serde_path_to_error::deserialize(value).map_err(|e| {
        let parent = e.path().to_string();
        let message = e.inner().to_string();
        // name the missing field itself rather than its parent object
        let path = match message.strip_prefix("missing field `").and_then(|m| m.split('`').next()) {
            Some(field) if parent == "." => field.to_string(),
            Some(field) => format!("{parent}.{field}"),
            None => parent,
        };
        ConfigError::at(path, message)
    })?;
    check(&cfg)?;
    Ok(cfg)
}

fn unit(path: &str, v: f64) -> Result<(), ConfigError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(ConfigError::at(path, format!("{v} is not a probability")))
    }
}

pub fn check(cfg: &ScenarioConfig) -> Result<(), ConfigError> {
    if cfg.servers == 0 {
        return Err(ConfigError::at("servers", "at least one server is required"));
    }
    cfg.group
        .validate()
        .map_err(|e| ConfigError::at("group", e.to_string()))?;
    if cfg.web_servers.is_empty() {
        return Err(ConfigError::at("web_servers", "at least one web server is required"));
    }
    for (i, w) in cfg.web_servers.iter().enumerate() {
        if cfg.web_servers[..i].iter().any(|o| o.origin == w.origin) {
            return Err(ConfigError::at(format!("web_servers[{i}].origin"), "duplicate origin"));
        }
        if let Some(r) = w.rate {
            unit(&format!("web_servers[{i}].rate.workstation"), r.workstation)?;
            unit(&format!("web_servers[{i}].rate.mobile"), r.mobile)?;
        }
    }
    if cfg.policy.counts_only_signed() && cfg.registered == 0 {
        return Err(ConfigError::at(
            "policy.count_only_roster_signed",
            "counting only roster-signed messages needs a roster (registered > 0)",
        ));
    }
    if cfg.authorities == 0 {
        return Err(ConfigError::at("authorities", "at least one directory authority is required"));
    }
    if cfg.round_seconds == 0 {
        return Err(ConfigError::at("round_seconds", "must be positive"));
    }
    unit("rate.workstation", cfg.rate.workstation)?;
    unit("rate.mobile", cfg.rate.mobile)?;
    unit("mobile_fraction", cfg.mobile_fraction)?;
    unit("consent.fraction", cfg.consent.fraction)?;

    let senders = cfg.savvy + cfg.registered;
    if cfg.payloads.len() > senders {
        return Err(ConfigError::at("payloads", "more payloads than savvy clients"));
    }
    let limit = match cfg.system {
        SystemTag::Mixnet => MAX_PAYLOAD_LEN,
        SystemTag::Dcnet => {
            if senders > 1 {
                return Err(ConfigError::at("savvy", "a DC-net round has a single slot owner"));
            }
            if cfg.registered > 0 {
                return Err(ConfigError::at("registered", "roster signatures apply to the mix-net only"));
            }
            with_limit(cfg.group)
        }
    };
    for (i, p) in cfg.payloads.iter().enumerate() {
        if p.len() > limit {
            return Err(ConfigError::at(
                format!("payloads[{i}]"),
                format!("{} bytes exceeds {limit}", p.len()),
            ));
        }
    }
    Ok(())
}

fn with_limit(spec: GroupSpec) -> usize {
    let limit: Result<usize, crate::group::GroupError> = crate::with_group!(spec, g => Ok(g.max_message_len()));
    limit.unwrap_or(0)
}

impl ScenarioConfig {
    pub fn payload(&self, id: u64) -> Vec<u8> {
        self.payloads
            .get(id as usize)
            .map(|p| p.as_bytes().to_vec())
            .unwrap_or_else(|| format!("message-{id}").into_bytes())
    }

    pub fn to_canonical(&self) -> Vec<u8> {
        crate::canonical::to_canonical(self)
    }
}

/// Builds the deployment and the round described by `cfg`.
///
/// Client ids: savvy `0..j`, registered next, casual after that.
pub fn build_round<G: Group>(cfg: &ScenarioConfig, group: G) -> Result<(Deployment<G>, RoundSpec<G>), SimError> {
    let dep = Deployment::generate(group.clone(), cfg.system, cfg.servers, cfg.authorities, cfg.round, cfg.seed)?;
    let web: Vec<WebServer> = cfg
        .web_servers
        .iter()
        .map(|w| WebServer::new(w.origin.clone(), w.policy.clone(), w.rate.unwrap_or(cfg.rate), w.adversarial))
        .collect();
    let digest = ScriptBundle::new(GeneratorId::honest_for(cfg.system)).digest;
    let plugin: PluginSettings = cfg.plugin.into();

    let device = |id: u64| {
        let mut r = seeds::stream(cfg.seed, "device", id);
        if r.gen_bool(cfg.mobile_fraction) {
            DeviceClass::Mobile
        } else {
            DeviceClass::Workstation
        }
    };

    let mut clients = Vec::new();
    let mut roster_keys = Vec::new();
    let mut id = 0u64;
    for _ in 0..cfg.savvy {
        let mut c = ClientProfile::savvy(id, device(id), digest, plugin).with_payload(cfg.payload(id));
        if let Some(owner) = &dep.owner {
            c.owner_secret = Some(owner.secret);
        }
        clients.push(c);
        id += 1;
    }
    for _ in 0..cfg.registered {
        let key = keygen(&group, &mut seeds::stream(cfg.seed, "roster-key", id));
        roster_keys.push(key.public);
        clients.push(ClientProfile::registered(id, device(id), digest, plugin, key).with_payload(cfg.payload(id)));
        id += 1;
    }
    for _ in 0..cfg.casual {
        let mut c = ClientProfile::casual(id, device(id));
        let draw = seeds::stream(cfg.seed, "consent", id).gen_bool(cfg.consent.fraction);
        c.consent = match cfg.consent.mode {
            ConsentMode::OptIn => draw,
            ConsentMode::OptOut => !draw,
        };
        clients.push(c);
        id += 1;
    }

    let mut sched = seeds::stream(cfg.seed, "schedule", cfg.round);
    let servers = web.len();
    let mut visits = Vec::new();
    for (index, c) in clients.iter().enumerate() {
        let targets: Vec<usize> = if c.is_savvy() && cfg.multi_server {
            (0..servers).collect()
        } else {
            vec![index % servers]
        };
        for server in targets {
            visits.push(ScheduledVisit {
                time: sched.gen_range(0..cfg.round_seconds),
                client: index,
                server,
            });
        }
    }

    let sybils = (0..cfg.sybils)
        .map(|i| {
            let mut r = seeds::stream(cfg.seed, "sybil", i as u64);
            ScheduledSybil {
                time: 0,
                envelope: wire::canonical_encode(&dep.system.dummy_envelope(cfg.round, &mut r)),
            }
        })
        .collect();

    let spec = RoundSpec {
        web,
        clients,
        visits,
        sybils,
        policy: cfg.policy,
        cors: CorsPolicy {
            allowed: cfg.cors.clone(),
        },
        canonical_only: cfg.canonical_only,
        roster: (cfg.registered > 0).then(|| Roster::new(group, roster_keys)),
        seed: cfg.seed,
    };
    Ok((dep, spec))
}
