use std::collections::BTreeSet;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::AdversaryView;
use crate::canonical::{self, hex_bytes};
use crate::group::{Group, GroupSpec};
use crate::mixnet::MixPolicy;
use crate::participants::{
    is_probe_marker, ClientProfile, CorsPolicy, DeviceClass, GeneratorId, PluginSettings,
    RatePolicy, ScriptBundle, ServingPolicy, WebServer,
};
use crate::seeds;
use crate::sim::{run_round, Deployment, RoundSpec, ScenarioConfig, ScheduledVisit, SimError};
use crate::wire::{self, SystemTag, WireError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Flags any envelope whose length differs from the standard one.
    LengthClassifier,
    /// Flags any envelope not in canonical byte form.
    FormatFingerprinter,
    /// Flags visits whose submission took longer than a dummy's generation.
    TimingObserver,
    /// Tampers with the served bundle and watches what comes out.
    BundleProber,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::LengthClassifier,
        Strategy::FormatFingerprinter,
        Strategy::TimingObserver,
        Strategy::BundleProber,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::LengthClassifier => "length-classifier",
            Strategy::FormatFingerprinter => "format-fingerprinter",
            Strategy::TimingObserver => "timing-observer",
            Strategy::BundleProber => "bundle-prober",
        }
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| format!("unknown strategy `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Defense {
    Canonicalization,
    DigestCheck,
    Pregeneration,
    MultiServer,
}

impl Defense {
    pub const ALL: [Defense; 4] = [
        Defense::Canonicalization,
        Defense::DigestCheck,
        Defense::Pregeneration,
        Defense::MultiServer,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Defense::Canonicalization => "canonicalization",
            Defense::DigestCheck => "digest-check",
            Defense::Pregeneration => "pregeneration",
            Defense::MultiServer => "multi-server",
        }
    }

    /// The built-in strategy that this defense exists to stop.
    pub fn designated_strategy(&self) -> Strategy {
        match self {
            Defense::Canonicalization => Strategy::FormatFingerprinter,
            Defense::DigestCheck => Strategy::BundleProber,
            Defense::Pregeneration => Strategy::TimingObserver,
            Defense::MultiServer => Strategy::BundleProber,
        }
    }
}

impl FromStr for Defense {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let norm = s.replace('_', "-");
        Defense::ALL
            .into_iter()
            .find(|d| d.as_str() == norm)
            .ok_or_else(|| format!("unknown defense `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Defenses {
    pub canonicalization: bool,
    pub digest_check: bool,
    pub multi_server: bool,
    pub pregeneration: bool,
}

impl Defenses {
    pub const ALL_ON: Defenses = Defenses {
        canonicalization: true,
        digest_check: true,
        multi_server: true,
        pregeneration: true,
    };

    pub fn with(mut self, defense: Defense, on: bool) -> Self {
        match defense {
            Defense::Canonicalization => self.canonicalization = on,
            Defense::DigestCheck => self.digest_check = on,
            Defense::Pregeneration => self.pregeneration = on,
            Defense::MultiServer => self.multi_server = on,
        }
        self
    }

    fn plugin(&self) -> PluginSettings {
        PluginSettings {
            digest_check: self.digest_check,
            pregenerate: self.pregeneration,
            canonical_output: self.canonicalization,
        }
    }
}

/// The fixed world each trial is played in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameTemplate {
    pub system: SystemTag,
    pub group: GroupSpec,
    pub servers: usize,
    /// Casual visitors of the adversarial site besides target and twin.
    pub background: usize,
    /// Casual visitors of the honest site when multi-server is on.
    pub honest_server_visitors: usize,
    pub payload: Vec<u8>,
    pub round_seconds: u64,
    pub seed: u64,
}

impl GameTemplate {
    pub fn from_scenario(cfg: &ScenarioConfig) -> Self {
        GameTemplate {
            system: cfg.system,
            group: cfg.group,
            servers: cfg.servers,
            background: cfg.casual,
            honest_server_visitors: 20,
            payload: cfg.payload(0),
            round_seconds: cfg.round_seconds,
            seed: cfg.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameConfig {
    pub trials: usize,
    pub template: GameTemplate,
    pub defenses: Defenses,
    pub strategy: Strategy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GameResult {
    pub trials: usize,
    pub correct: usize,
    /// `|2 * correct / trials - 1|`.
    pub advantage: f64,
    /// 95% normal-approximation half-width of the advantage.
    pub half_width: f64,
}

impl GameResult {
    pub fn new(trials: usize, correct: usize) -> Self {
        let r = trials.max(1) as f64;
        let p = correct as f64 / r;
        GameResult {
            trials,
            correct,
            advantage: (2.0 * p - 1.0).abs(),
            half_width: 2.0 * 1.96 * (p * (1.0 - p) / r).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameReport {
    pub advantage: f64,
    pub correct: usize,
    pub defenses: Defenses,
    pub half_width: f64,
    pub strategy: Strategy,
    pub trials: usize,
}

impl GameReport {
    pub fn new(cfg: &GameConfig, result: &GameResult) -> Self {
        GameReport {
            advantage: result.advantage,
            correct: result.correct,
            defenses: cfg.defenses,
            half_width: result.half_width,
            strategy: cfg.strategy,
            trials: result.trials,
        }
    }

    pub fn to_canonical(&self) -> Vec<u8> {
        canonical::to_canonical(self)
    }
}

const TARGET: u64 = 0;
const TWIN: u64 = 1;
const ADVERSARY_ORIGIN: &str = "adversary.example";
const HONEST_ORIGIN: &str = "honest.example";

/// How the bundle prober tampers, chosen from public knowledge of the
/// plug-in (whether it checks digests).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ProbeMode {
    /// Marked bundle to the target only; a savvy plug-in that does not
    /// check digests swaps anyway and reveals itself.
    Probe,
    /// Honest bundle to the target only, marked to everyone else.
    SelectiveDos,
}

fn serving_policy(strategy: Strategy, defenses: &Defenses, everyone: &BTreeSet<u64>) -> (ServingPolicy, Option<ProbeMode>) {
    if strategy != Strategy::BundleProber {
        return (ServingPolicy::Honest, None);
    }
    if defenses.digest_check {
        let honest_set = [TARGET].into();
        (ServingPolicy::Selective { honest_set }, Some(ProbeMode::SelectiveDos))
    } else {
        let honest_set = everyone.iter().copied().filter(|&id| id != TARGET).collect();
        (ServingPolicy::Selective { honest_set }, Some(ProbeMode::Probe))
    }
}

struct World<G: Group> {
    spec: RoundSpec<G>,
    mode: Option<ProbeMode>,
}

struct Population {
    target_savvy: bool,
    twin: bool,
    background: usize,
    honest_visitors: usize,
    multi_server: bool,
}

#[allow(clippy::too_many_arguments)]
fn build_world<G: Group>(
    dep: &Deployment<G>,
    tmpl: &GameTemplate,
    defenses: &Defenses,
    strategy: Strategy,
    pop: &Population,
    seed: u64,
) -> World<G> {
    let digest = ScriptBundle::new(GeneratorId::honest_for(tmpl.system)).digest;
    let plugin = defenses.plugin();
    let make = |id: u64, savvy: bool| {
        if savvy {
            let mut c = ClientProfile::savvy(id, DeviceClass::Workstation, digest, plugin)
                .with_payload(tmpl.payload.clone());
            c.owner_secret = dep.owner.as_ref().map(|o| o.secret.clone());
            c
        } else {
            ClientProfile::casual(id, DeviceClass::Workstation)
        }
    };

    let mut clients = vec![make(TARGET, pop.target_savvy)];
    if pop.twin {
        clients.push(make(TWIN, !pop.target_savvy));
    }
    let first_background = clients.len() as u64;
    for i in 0..pop.background as u64 {
        clients.push(make(first_background + i, false));
    }
    let a_visitors = clients.len();
    if pop.multi_server {
        for i in 0..pop.honest_visitors as u64 {
            clients.push(make(1000 + i, false));
        }
    }

    let everyone: BTreeSet<u64> = clients.iter().map(|c| c.id).collect();
    let (policy, mode) = serving_policy(strategy, defenses, &everyone);
    let mut web = vec![WebServer::new(ADVERSARY_ORIGIN, policy, RatePolicy::ALWAYS, true)];
    if pop.multi_server {
        web.push(WebServer::new(HONEST_ORIGIN, ServingPolicy::Honest, RatePolicy::ALWAYS, false));
    }

    let mut sched = seeds::stream(seed, "game-schedule", 0);
    let mut visits = Vec::new();
    for (index, c) in clients.iter().enumerate() {
        let servers: Vec<usize> = if index >= a_visitors {
            vec![1]
        } else if c.id <= TWIN && pop.multi_server {
            vec![0, 1]
        } else {
            vec![0]
        };
        // the challenge concerns the visit the adversary observes, so a
        // multi-site savvy user still holds its message when it reaches A
        let mut times: Vec<u64> = servers.iter().map(|_| sched.gen_range(0..tmpl.round_seconds)).collect();
        times.sort_unstable();
        for (server, time) in servers.into_iter().zip(times) {
            visits.push(ScheduledVisit {
                time,
                client: index,
                server,
            });
        }
    }

    World {
        spec: RoundSpec {
            web,
            clients,
            visits,
            sybils: Vec::new(),
            policy: MixPolicy::Timed {
                fire_after: tmpl.round_seconds,
            },
            cors: CorsPolicy::allow_all(),
            canonical_only: defenses.canonicalization,
            roster: None,
            seed,
        },
        mode,
    }
}

/// Served-honest count equals the number of messages processed and at least
/// one real message came out: the lone honest bundle's owner is exposed.
fn isolated(view: &AdversaryView) -> bool {
    let honest_served = view
        .serve_log
        .iter()
        .filter(|r| r.generator != GeneratorId::MarkedProbe)
        .count();
    view.published_real >= 1 && view.published_total == honest_served
}

/// The adversary's guess that the target is savvy.
fn guess(strategy: Strategy, mode: Option<ProbeMode>, view: &AdversaryView) -> bool {
    match strategy {
        Strategy::LengthClassifier => view
            .envelopes_from(TARGET)
            .any(|w| w.bytes.len() != view.envelope_len),
        Strategy::FormatFingerprinter => view
            .envelopes_from(TARGET)
            .any(|w| matches!(wire::canonical_decode(&w.bytes), Err(WireError::NonCanonical))),
        Strategy::TimingObserver => view
            .traces
            .iter()
            .any(|t| t.client_id == TARGET && t.cost > view.generation_cost),
        Strategy::BundleProber => match mode {
            Some(ProbeMode::Probe) => view
                .envelopes_from(TARGET)
                .filter(|w| w.origin.as_deref() == Some(ADVERSARY_ORIGIN))
                .any(|w| !is_probe_marker(&w.bytes)),
            _ => isolated(view),
        },
    }
}

/// Plays `trials` rounds. Exactly half the challenge bits are 1 (shuffled),
/// and a twin client is savvy exactly when the target is not, so the
/// number of savvy users never depends on the bit.
pub fn run_distinguishing_game(cfg: &GameConfig) -> Result<GameResult, SimError> {
    if cfg.trials == 0 {
        return Err(SimError::Setup("at least one trial is required".into()));
    }
    let tmpl = &cfg.template;
    crate::with_group!(tmpl.group, g => {
        let dep = Deployment::generate(g, tmpl.system, tmpl.servers, 1, 1, tmpl.seed)?;
        let mut bits: Vec<bool> = (0..cfg.trials).map(|i| i < cfg.trials / 2).collect();
        bits.shuffle(&mut seeds::stream(tmpl.seed, "game-bits", cfg.trials as u64));
        let mut correct = 0;
        for (t, &b) in bits.iter().enumerate() {
            let pop = Population {
                target_savvy: b,
                twin: true,
                background: tmpl.background,
                honest_visitors: tmpl.honest_server_visitors,
                multi_server: cfg.defenses.multi_server,
            };
            let trial_seed = u64::from_be_bytes(
                seeds::derive_seed(tmpl.seed, "game-trial", t as u64)[..8].try_into().unwrap(),
            );
            let world = build_world(&dep, tmpl, &cfg.defenses, cfg.strategy, &pop, trial_seed);
            let result = run_round(&dep, world.spec)?;
            let view = AdversaryView::observe(&result, &dep, false);
            if guess(cfg.strategy, world.mode, &view) == b {
                correct += 1;
            }
        }
        Ok(GameResult::new(cfg.trials, correct))
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectiveDosOutcome {
    #[serde(with = "hex_bytes")]
    pub exposed_payload: Vec<u8>,
    pub identified: bool,
    pub multi_server: bool,
    pub processed: usize,
    pub target_savvy: bool,
}

impl SelectiveDosOutcome {
    pub fn exposed(&self) -> Option<&[u8]> {
        self.identified.then_some(self.exposed_payload.as_slice())
    }

    pub fn to_canonical(&self) -> Vec<u8> {
        canonical::to_canonical(self)
    }
}

/// Honest script to the target only, marked script to every other visitor
/// of the adversarial site. With multi-server the target also visits an
/// honest site whose casual visitors mix with it.
pub fn run_selective_dos(tmpl: &GameTemplate, multi_server: bool, target_savvy: bool) -> Result<SelectiveDosOutcome, SimError> {
    crate::with_group!(tmpl.group, g => {
        let dep = Deployment::generate(g, tmpl.system, tmpl.servers, 1, 1, tmpl.seed)?;
        let pop = Population {
            target_savvy,
            twin: false,
            background: tmpl.background,
            honest_visitors: tmpl.honest_server_visitors,
            multi_server,
        };
        let defenses = Defenses::ALL_ON.with(super::Defense::MultiServer, multi_server);
        let world = build_world(&dep, tmpl, &defenses, Strategy::BundleProber, &pop, tmpl.seed);
        let result = run_round(&dep, world.spec)?;
        let view = AdversaryView::observe(&result, &dep, false);
        let identified = isolated(&view);
        let exposed_payload = if identified {
            result.real_payloads().into_iter().next().unwrap_or_default()
        } else {
            Vec::new()
        };
        Ok(SelectiveDosOutcome {
            exposed_payload,
            identified,
            multi_server,
            processed: view.published_total,
            target_savvy,
        })
    })
}
