//! Conscripted anonymity sets: casual web visitors submit indistinguishable
//! dummy messages to a mix-net or verifiable DC-net so that plug-in users'
//! real messages hide among them.

pub mod adversary;
pub mod canonical;
pub mod crypto;
pub mod dcnet;
pub mod group;
pub mod mixnet;
pub mod participants;
pub mod roster;
pub mod seeds;
pub mod sim;
pub mod wire;
