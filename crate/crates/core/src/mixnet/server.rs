use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::RngCore;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{peel_layer, MixError, MixPolicy, MixnetParams, PoolStats};
use crate::canonical::{self, hex_list};
use crate::crypto::KeyPair;
use crate::group::Group;
use crate::roster::{Roster, SignatureStatus};
use crate::seeds;
use crate::wire::{self, PlaintextMessage, SystemTag, WireError};

/// Why the entry server refused a submission.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Reject {
    #[error("body is {got} bytes, expected {expected}")]
    BadLength { got: usize, expected: usize },
    #[error("envelope is not canonical")]
    NonCanonical,
    #[error("malformed envelope: {0}")]
    Malformed(String),
    #[error("roster signature does not verify")]
    BadSignature,
    #[error("proof of well-formedness does not verify")]
    BadProof,
    #[error("envelope is for another system")]
    WrongSystem,
    #[error("envelope is for round {got}, current round is {current}")]
    WrongRound { got: u64, current: u64 },
    #[error("pool already fired")]
    RoundClosed,
    #[error("only the entry server accepts client submissions")]
    NotEntryServer,
}

impl Reject {
    /// Stable metric key.
    pub fn kind(&self) -> &'static str {
        match self {
            Reject::BadLength { .. } => "bad-length",
            Reject::NonCanonical => "non-canonical",
            Reject::Malformed(_) => "malformed",
            Reject::BadSignature => "bad-signature",
            Reject::BadProof => "bad-proof",
            Reject::WrongSystem => "wrong-system",
            Reject::WrongRound { .. } => "wrong-round",
            Reject::RoundClosed => "round-closed",
            Reject::NotEntryServer => "not-entry-server",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ack {
    pub pool_size: usize,
    pub signed: bool,
}

/// What the entry server checks before admitting an envelope.
#[derive(Debug, Clone)]
pub struct IntakeRules<G: Group> {
    pub round: u64,
    /// Reject any byte form other than the canonical one.
    pub canonical_only: bool,
    pub roster: Option<Roster<G>>,
}

impl<G: Group> IntakeRules<G> {
    pub fn new(round: u64) -> Self {
        IntakeRules {
            round,
            canonical_only: true,
            roster: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolEntry {
    pub bytes: Vec<u8>,
    pub signed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HopOutput {
    /// Peeled ciphertexts for the next hop, in shuffled order.
    Forward(Vec<Vec<u8>>),
    Final(BulletinBoard),
}

/// One server of the cascade.
#[derive(Debug, Clone)]
pub struct MixServer<G: Group> {
    group: G,
    position: usize,
    keypair: KeyPair<G>,
    input_len: usize,
    last: bool,
    round: u64,
    pool: Vec<PoolEntry>,
    fired: bool,
    duplicates: usize,
    drops: usize,
}

impl<G: Group> MixServer<G> {
    /// `position` is 1-based within a cascade described by `params`.
    pub fn new(params: &MixnetParams<G>, position: usize, keypair: KeyPair<G>, round: u64) -> Self {
        assert!((1..=params.layers()).contains(&position), "hop position out of range");
        MixServer {
            group: params.group.clone(),
            position,
            keypair,
            input_len: params.hop_input_len(position),
            last: position == params.layers(),
            round,
            pool: Vec::new(),
            fired: false,
            duplicates: 0,
            drops: 0,
        }
    }

    pub fn position(&self) -> usize {
        self.position
    }

    pub fn input_len(&self) -> usize {
        self.input_len
    }

    pub fn pool(&self) -> &[PoolEntry] {
        &self.pool
    }

    pub fn has_fired(&self) -> bool {
        self.fired
    }

    pub fn stats(&self) -> PoolStats {
        PoolStats {
            total: self.pool.len(),
            signed: self.pool.iter().filter(|e| e.signed).count(),
        }
    }

    /// Client intake: decode, check system/round/length/signature, append.
    pub fn submit(&mut self, bytes: &[u8], rules: &IntakeRules<G>) -> Result<Ack, Reject> {
        if self.position != 1 {
            return Err(Reject::NotEntryServer);
        }
        if self.fired {
            return Err(Reject::RoundClosed);
        }
        let decoded = if rules.canonical_only {
            wire::canonical_decode(bytes)
        } else {
            wire::lenient_decode(bytes)
        };
        let envelope = decoded.map_err(|e| match e {
            WireError::NonCanonical => Reject::NonCanonical,
            other => Reject::Malformed(other.to_string()),
        })?;
        if envelope.system != SystemTag::Mixnet {
            return Err(Reject::WrongSystem);
        }
        if envelope.round != rules.round {
            return Err(Reject::WrongRound {
                got: envelope.round,
                current: rules.round,
            });
        }
        if envelope.body.len() != self.input_len {
            return Err(Reject::BadLength {
                got: envelope.body.len(),
                expected: self.input_len,
            });
        }
        let signed = match (&envelope.signature, &rules.roster) {
            (None, _) => false,
            (Some(_), None) => return Err(Reject::BadSignature),
            (Some(_), Some(roster)) => match roster.check(&envelope) {
                SignatureStatus::Valid => true,
                _ => return Err(Reject::BadSignature),
            },
        };
        self.pool.push(PoolEntry {
            bytes: envelope.body,
            signed,
        });
        Ok(Ack {
            pool_size: self.pool.len(),
            signed,
        })
    }

    /// Downstream intake of a batch from the previous hop. Entries of the
    /// wrong length are dropped.
    pub fn receive(&mut self, batch: Vec<Vec<u8>>) {
        for bytes in batch {
            if bytes.len() == self.input_len {
                self.pool.push(PoolEntry { bytes, signed: false });
            } else {
                self.drops += 1;
            }
        }
    }

    /// Dedupe by exact bytes (first copy wins), shuffle, peel one layer.
    pub fn fire<R: RngCore + ?Sized>(&mut self, rng: &mut R) -> Result<HopOutput, MixError> {
        if self.fired {
            return Err(MixError::FiredTwice(self.position));
        }
        self.fired = true;
        let mut seen = HashSet::new();
        let mut batch: Vec<Vec<u8>> = Vec::with_capacity(self.pool.len());
        for entry in self.pool.drain(..) {
            if seen.insert(entry.bytes.clone()) {
                batch.push(entry.bytes);
            } else {
                self.duplicates += 1;
            }
        }
        batch.shuffle(rng);

        let mut peeled = Vec::with_capacity(batch.len());
        for ct in &batch {
            match peel_layer(&self.group, &self.keypair.secret, ct) {
                Ok(pt) => peeled.push(pt),
                Err(_) => self.drops += 1,
            }
        }
        if !self.last {
            return Ok(HopOutput::Forward(peeled));
        }

        let mut board = BulletinBoard {
            round: self.round,
            real: Vec::new(),
            dummy_count: 0,
            duplicate_count: self.duplicates,
            drop_count: self.drops,
        };
        for pt in peeled {
            match PlaintextMessage::from_bytes(&pt) {
                Ok(m) if m.is_dummy() => board.dummy_count += 1,
                Ok(m) => board.real.push(m),
                Err(_) => board.drop_count += 1,
            }
        }
        Ok(HopOutput::Final(board))
    }

    pub fn duplicates(&self) -> usize {
        self.duplicates
    }

    pub fn drops(&self) -> usize {
        self.drops
    }
}

/// Output of the last hop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BulletinBoard {
    pub round: u64,
    /// Real plaintexts in the order the last server emitted them.
    pub real: Vec<PlaintextMessage>,
    pub dummy_count: usize,
    /// Summed over all hops.
    pub duplicate_count: usize,
    /// Summed over all hops.
    pub drop_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BulletinExport {
    pub drop_count: usize,
    pub dummy_count: usize,
    pub duplicate_count: usize,
    #[serde(with = "hex_list")]
    pub real: Vec<Vec<u8>>,
    pub round: u64,
}

impl BulletinBoard {
    pub fn empty(round: u64) -> Self {
        BulletinBoard {
            round,
            real: Vec::new(),
            dummy_count: 0,
            duplicate_count: 0,
            drop_count: 0,
        }
    }

    pub fn real_payloads(&self) -> Vec<Vec<u8>> {
        self.real.iter().map(|m| m.payload().to_vec()).collect()
    }

    /// The published form: plaintexts sorted so output order is not exported.
    pub fn export(&self) -> BulletinExport {
        let mut real: Vec<Vec<u8>> = self.real.iter().map(|m| m.as_bytes().to_vec()).collect();
        real.sort();
        BulletinExport {
            drop_count: self.drop_count,
            dummy_count: self.dummy_count,
            duplicate_count: self.duplicate_count,
            real,
            round: self.round,
        }
    }

    pub fn to_canonical(&self) -> Vec<u8> {
        canonical::to_canonical(&self.export())
    }
}

/// A full cascade with one seeded shuffle stream per server.
#[derive(Debug, Clone)]
pub struct Cascade<G: Group> {
    params: MixnetParams<G>,
    servers: Vec<MixServer<G>>,
    rngs: Vec<ChaCha20Rng>,
    pub policy: MixPolicy,
    pub rules: IntakeRules<G>,
}

impl<G: Group> Cascade<G> {
    pub fn new(
        group: G,
        keypairs: Vec<KeyPair<G>>,
        policy: MixPolicy,
        rules: IntakeRules<G>,
        seed: u64,
    ) -> Result<Self, MixError> {
        let params = MixnetParams::new(group, keypairs.iter().map(|k| k.public).collect())?;
        let servers = keypairs
            .into_iter()
            .enumerate()
            .map(|(i, kp)| MixServer::new(&params, i + 1, kp, rules.round))
            .collect();
        let rngs = (0..params.layers())
            .map(|i| seeds::stream(seed, "mix-shuffle", rules.round * 1024 + i as u64))
            .collect();
        Ok(Cascade {
            params,
            servers,
            rngs,
            policy,
            rules,
        })
    }

    pub fn params(&self) -> &MixnetParams<G> {
        &self.params
    }

    pub fn entry(&self) -> &MixServer<G> {
        &self.servers[0]
    }

    pub fn submit(&mut self, bytes: &[u8]) -> Result<Ack, Reject> {
        self.servers[0].submit(bytes, &self.rules)
    }

    pub fn should_fire(&self, clock: u64) -> bool {
        !self.servers[0].has_fired() && super::should_fire(&self.policy, self.servers[0].stats(), clock)
    }

    /// Fires server 1 and lets every downstream server fire on receipt.
    pub fn fire(&mut self) -> Result<BulletinBoard, MixError> {
        let mut batch = None;
        let mut upstream_drops = 0;
        let mut upstream_dups = 0;
        for (server, rng) in self.servers.iter_mut().zip(self.rngs.iter_mut()) {
            if let Some(b) = batch.take() {
                server.receive(b);
            }
            match server.fire(rng)? {
                HopOutput::Forward(next) => {
                    upstream_drops += server.drops();
                    upstream_dups += server.duplicates();
                    batch = Some(next);
                }
                HopOutput::Final(mut board) => {
                    board.drop_count += upstream_drops;
                    board.duplicate_count += upstream_dups;
                    return Ok(board);
                }
            }
        }
        unreachable!("the last server always produces a bulletin")
    }
}
