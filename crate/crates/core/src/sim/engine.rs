use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand_chacha::ChaCha20Rng;

use super::SimError;
use crate::crypto::{keygen, KeyPair};
use crate::dcnet::{dc_run_round, dc_verify_client, DcClientCiphertext, DcOutcome, DcRoundParams};
use crate::group::Group;
use crate::mixnet::{
    should_fire, AnonymityCensus, BulletinBoard, Cascade, IntakeRules, MixPolicy, MixnetParams,
    PoolStats, Reject,
};
use crate::participants::{
    cors_submit, pregenerate, publish_directory, run_visit, ClientProfile, CorsOutcome,
    CorsPolicy, DirectoryList, ServeRecord, SystemParams, VisitContext, VisitTrace, WebServer,
};
use crate::roster::Roster;
use crate::seeds;
use crate::wire::{self, envelope_length, SystemTag, WireError};

/// Long-lived public setup: server keys, directory, and the slot owner key
/// for DC-net rounds.
#[derive(Debug, Clone)]
pub struct Deployment<G: Group> {
    pub group: G,
    pub round: u64,
    pub system: SystemParams<G>,
    pub server_keys: Vec<KeyPair<G>>,
    pub authorities: Vec<KeyPair<G>>,
    pub directory: DirectoryList,
    pub owner: Option<KeyPair<G>>,
}

impl<G: Group> Deployment<G> {
    pub fn generate(
        group: G,
        system: SystemTag,
        servers: usize,
        authorities: usize,
        round: u64,
        seed: u64,
    ) -> Result<Self, SimError> {
        if servers == 0 {
            return Err(SimError::Setup("at least one server is required".into()));
        }
        if authorities == 0 {
            return Err(SimError::Setup("at least one directory authority is required".into()));
        }
        let mut rng = seeds::stream(seed, "deployment-keys", 0);
        let server_keys: Vec<_> = (0..servers).map(|_| keygen(&group, &mut rng)).collect();
        let authority_keys: Vec<_> = (0..authorities).map(|_| keygen(&group, &mut rng)).collect();
        let publics: Vec<_> = server_keys.iter().map(|k| k.public).collect();
        let directory = publish_directory(&group, &authority_keys, &publics, &mut rng);
        let (params, owner) = match system {
            SystemTag::Mixnet => (SystemParams::Mixnet(MixnetParams::new(group.clone(), publics)?), None),
            SystemTag::Dcnet => {
                let owner = keygen(&group, &mut rng);
                let p = DcRoundParams::new(group.clone(), publics, round, owner.public)?;
                (SystemParams::Dcnet(p), Some(owner))
            }
        };
        Ok(Deployment {
            group,
            round,
            system: params,
            server_keys,
            authorities: authority_keys,
            directory,
            owner,
        })
    }

    pub fn authority_publics(&self) -> Vec<G::Element> {
        self.authorities.iter().map(|a| a.public).collect()
    }

    /// Body length of every legal unsigned envelope.
    pub fn envelope_body_len(&self) -> usize {
        let params = match &self.system {
            SystemParams::Mixnet(p) => p.envelope_params(),
            SystemParams::Dcnet(p) => p.envelope_params(),
        };
        envelope_length(params).expect("deployment parameters are valid")
    }
}

/// Integer-second clock with an event queue ordered by (time, sequence).
#[derive(Debug)]
pub struct SimClock<E> {
    now: u64,
    seq: u64,
    queue: BTreeMap<(u64, u64), E>,
}

impl<E> Default for SimClock<E> {
    fn default() -> Self {
        SimClock {
            now: 0,
            seq: 0,
            queue: BTreeMap::new(),
        }
    }
}

impl<E> SimClock<E> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    /// Events in the past are clamped to now.
    pub fn schedule(&mut self, at: u64, event: E) {
        self.queue.insert((at.max(self.now), self.seq), event);
        self.seq += 1;
    }

    pub fn pop(&mut self) -> Option<(u64, E)> {
        let ((t, _), e) = self.queue.pop_first()?;
        debug_assert!(t >= self.now);
        self.now = t;
        Some((t, e))
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScheduledVisit {
    pub time: u64,
    /// Index into `RoundSpec::clients`.
    pub client: usize,
    /// Index into `RoundSpec::web`.
    pub server: usize,
}

/// An adversary-crafted envelope posted straight to the system. Sybils are
/// not browsers, so CORS does not apply to them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduledSybil {
    pub time: u64,
    pub envelope: Vec<u8>,
}

#[derive(Debug, Clone)]
pub struct RoundSpec<G: Group> {
    pub web: Vec<WebServer>,
    pub clients: Vec<ClientProfile<G>>,
    pub visits: Vec<ScheduledVisit>,
    pub sybils: Vec<ScheduledSybil>,
    pub policy: MixPolicy,
    pub cors: CorsPolicy,
    pub canonical_only: bool,
    pub roster: Option<Roster<G>>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WireRecord {
    pub time: u64,
    /// `None` for Sybil traffic.
    pub client_id: Option<u64>,
    pub origin: Option<String>,
    pub bytes: Vec<u8>,
}

/// Every emitted envelope lands in exactly one of blocked, rejected or
/// delivered.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Buckets {
    pub emitted: usize,
    pub blocked: usize,
    pub rejected: usize,
    pub delivered: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DcSummary {
    pub outcome: DcOutcome,
    pub accepted: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServerLog {
    pub origin: String,
    pub adversarial: bool,
    pub log: Vec<ServeRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundResult {
    pub round: u64,
    pub system: SystemTag,
    pub fired_at: Option<u64>,
    pub bulletin: Option<BulletinBoard>,
    pub dc: Option<DcSummary>,
    pub buckets: Buckets,
    pub rejects: BTreeMap<String, usize>,
    pub census: AnonymityCensus,
    /// Sybil submissions that were in the fired batch.
    pub sybils_in_batch: usize,
    pub wire: Vec<WireRecord>,
    pub traces: Vec<VisitTrace>,
    pub serve_logs: Vec<ServerLog>,
}

impl RoundResult {
    /// Messages the system output: mix-net plaintexts or DC-net inputs.
    pub fn processed(&self) -> usize {
        match (&self.bulletin, &self.dc) {
            (Some(b), _) => b.real.len() + b.dummy_count,
            (None, Some(d)) => d.accepted,
            _ => 0,
        }
    }

    /// Real messages visible in the public output.
    pub fn real_count(&self) -> usize {
        match (&self.bulletin, &self.dc) {
            (Some(b), _) => b.real.len(),
            (None, Some(d)) => usize::from(!matches!(d.outcome, DcOutcome::Empty)),
            _ => 0,
        }
    }

    pub fn real_payloads(&self) -> Vec<Vec<u8>> {
        match (&self.bulletin, &self.dc) {
            (Some(b), _) => b.real_payloads(),
            (None, Some(DcSummary { outcome: DcOutcome::Payload(p), .. })) => vec![p.clone()],
            _ => Vec::new(),
        }
    }
}

struct DcIntake<G: Group> {
    params: DcRoundParams<G>,
    canonical_only: bool,
    body_len: usize,
    pool: Vec<DcClientCiphertext<G>>,
    fired: bool,
}

impl<G: Group> DcIntake<G> {
    fn submit(&mut self, bytes: &[u8]) -> Result<(), Reject> {
        if self.fired {
            return Err(Reject::RoundClosed);
        }
        let decoded = if self.canonical_only {
            wire::canonical_decode(bytes)
        } else {
            wire::lenient_decode(bytes)
        };
        let env = decoded.map_err(|e| match e {
            WireError::NonCanonical => Reject::NonCanonical,
            other => Reject::Malformed(other.to_string()),
        })?;
        if env.system != SystemTag::Dcnet {
            return Err(Reject::WrongSystem);
        }
        if env.round != self.params.round {
            return Err(Reject::WrongRound {
                got: env.round,
                current: self.params.round,
            });
        }
        if env.signature.is_some() {
            return Err(Reject::BadSignature);
        }
        if env.body.len() != self.body_len {
            return Err(Reject::BadLength {
                got: env.body.len(),
                expected: self.body_len,
            });
        }
        let ct = DcClientCiphertext::from_bytes(&self.params.group, &env.body)
            .map_err(|e| Reject::Malformed(e.to_string()))?;
        if !dc_verify_client(&self.params, &ct) {
            return Err(Reject::BadProof);
        }
        self.pool.push(ct);
        Ok(())
    }
}

enum Intake<G: Group> {
    Mix(Box<Cascade<G>>),
    Dc(DcIntake<G>),
}

enum Event {
    Visit(usize),
    Sybil(usize),
    Tick,
}

#[derive(Clone, Copy)]
enum Source {
    Client { index: usize, real: bool },
    Sybil,
}

/// Runs one round: serve, visit, CORS, intake, fire, tally.
pub fn run_round<G: Group>(dep: &Deployment<G>, mut spec: RoundSpec<G>) -> Result<RoundResult, SimError> {
    let round = dep.round;
    let seed = spec.seed;
    for client in spec.clients.iter_mut() {
        if client.is_savvy() && client.plugin.pregenerate {
            let mut rng = seeds::stream(seed, "pregenerate", client.id);
            pregenerate(client, &dep.system, round, &mut rng)?;
        }
    }

    let mut intake = match &dep.system {
        SystemParams::Mixnet(_) => {
            let rules = IntakeRules {
                round,
                canonical_only: spec.canonical_only,
                roster: spec.roster.clone(),
            };
            Intake::Mix(Box::new(Cascade::new(
                dep.group.clone(),
                dep.server_keys.clone(),
                spec.policy,
                rules,
                seed,
            )?))
        }
        SystemParams::Dcnet(p) => Intake::Dc(DcIntake {
            params: p.clone(),
            canonical_only: spec.canonical_only,
            body_len: dep.envelope_body_len(),
            pool: Vec::new(),
            fired: false,
        }),
    };

    let mut clock = SimClock::new();
    for (i, s) in spec.sybils.iter().enumerate() {
        clock.schedule(s.time, Event::Sybil(i));
    }
    for (i, v) in spec.visits.iter().enumerate() {
        clock.schedule(v.time, Event::Visit(i));
    }
    if let Some(t) = spec.policy.fire_after() {
        clock.schedule(t, Event::Tick);
    }

    let authorities = dep.authority_publics();
    let mut rngs: HashMap<u64, ChaCha20Rng> = HashMap::new();
    let mut buckets = Buckets::default();
    let mut rejects: BTreeMap<String, usize> = BTreeMap::new();
    let mut accepted: Vec<Source> = Vec::new();
    let mut wire_log = Vec::new();
    let mut traces = Vec::new();
    let mut fired_at = None;
    let mut bulletin = None;
    let mut dc = None;
    let mut census = AnonymityCensus::default();
    let mut sybils_in_batch = 0;

    while let Some((now, event)) = clock.pop() {
        let submission = match event {
            Event::Visit(i) => {
                let v = spec.visits[i];
                let client = &mut spec.clients[v.client];
                let page = spec.web[v.server].serve(client.id, dep.system.tag(), &dep.directory);
                let ctx = VisitContext {
                    system: &dep.system,
                    authorities: &authorities,
                    round,
                    clock: now,
                };
                let rng = rngs
                    .entry(client.id)
                    .or_insert_with(|| seeds::stream(seed, "client", client.id));
                let outcome = run_visit(client, &page, &ctx, rng);
                traces.push(outcome.trace);
                outcome.envelope.map(|bytes| {
                    wire_log.push(WireRecord {
                        time: now,
                        client_id: Some(client.id),
                        origin: Some(page.origin.clone()),
                        bytes: bytes.clone(),
                    });
                    let source = Source::Client {
                        index: v.client,
                        real: outcome.real,
                    };
                    (cors_submit(&spec.cors, bytes, &page.origin), source)
                })
            }
            Event::Sybil(i) => {
                let bytes = spec.sybils[i].envelope.clone();
                wire_log.push(WireRecord {
                    time: now,
                    client_id: None,
                    origin: None,
                    bytes: bytes.clone(),
                });
                Some((CorsOutcome::Delivered(bytes), Source::Sybil))
            }
            Event::Tick => None,
        };

        if let Some((cors, source)) = submission {
            buckets.emitted += 1;
            match cors {
                CorsOutcome::Blocked => buckets.blocked += 1,
                CorsOutcome::Delivered(bytes) => {
                    let result = match &mut intake {
                        Intake::Mix(c) => c.submit(&bytes).map(|_| ()),
                        Intake::Dc(d) => d.submit(&bytes),
                    };
                    match result {
                        Ok(()) => {
                            buckets.delivered += 1;
                            accepted.push(source);
                        }
                        Err(r) => {
                            buckets.rejected += 1;
                            *rejects.entry(r.kind().to_string()).or_default() += 1;
                        }
                    }
                }
            }
        }

        if fired_at.is_some() {
            continue;
        }
        let ready = match &intake {
            Intake::Mix(c) => c.should_fire(now),
            Intake::Dc(d) => should_fire(
                &spec.policy,
                PoolStats {
                    total: d.pool.len(),
                    signed: 0,
                },
                now,
            ),
        };
        if !ready {
            continue;
        }
        fired_at = Some(now);
        (census, sybils_in_batch) = tally(&accepted, &spec.clients);
        match &mut intake {
            Intake::Mix(c) => bulletin = Some(c.fire()?),
            Intake::Dc(d) => {
                d.fired = true;
                let mut rng = seeds::stream(seed, "dc-servers", round);
                let pool = std::mem::take(&mut d.pool);
                let result = dc_run_round(&d.params, &dep.server_keys, pool, &mut rng)?;
                dc = Some(DcSummary {
                    outcome: result.outcome,
                    accepted: result.accepted.len(),
                });
            }
        }
    }

    Ok(RoundResult {
        round,
        system: dep.system.tag(),
        fired_at,
        bulletin,
        dc,
        buckets,
        rejects,
        census,
        sybils_in_batch,
        wire: wire_log,
        traces,
        serve_logs: spec
            .web
            .iter()
            .map(|w| ServerLog {
                origin: w.origin.clone(),
                adversarial: w.adversarial,
                log: w.log().to_vec(),
            })
            .collect(),
    })
}

/// Honest senders in the fired batch: a client counts as savvy (j) if it
/// delivered a real message and as casual (k) otherwise.
fn tally<G: Group>(accepted: &[Source], clients: &[ClientProfile<G>]) -> (AnonymityCensus, usize) {
    let mut real = BTreeSet::new();
    let mut any = BTreeSet::new();
    let mut sybils = 0;
    for s in accepted {
        match *s {
            Source::Client { index, real: r } => {
                any.insert(clients[index].id);
                if r {
                    real.insert(clients[index].id);
                }
            }
            Source::Sybil => sybils += 1,
        }
    }
    let census = AnonymityCensus {
        honest_savvy: real.len(),
        honest_casual: any.len() - real.len(),
    };
    (census, sybils)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clock_orders_by_time_then_sequence() {
        let mut c = SimClock::new();
        c.schedule(5, "b");
        c.schedule(1, "a");
        c.schedule(5, "c");
        assert_eq!(c.pop(), Some((1, "a")));
        assert_eq!(c.pop(), Some((5, "b")));
        c.schedule(2, "late");
        assert_eq!(c.pop(), Some((5, "c")));
        assert_eq!(c.pop(), Some((5, "late")));
        assert!(c.is_empty());
    }
}
