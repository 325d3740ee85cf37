use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::canonical;
use crate::crypto::keygen;
use crate::dcnet::{dc_client_submit, DcRole, DcRoundParams};
use crate::group::{Group, ModpGroup, P256Group};
use crate::mixnet::{onion_encrypt, MixnetParams};
use crate::seeds;
use crate::wire::{self, PlaintextMessage, SubmissionEnvelope, SystemTag};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub iterations: usize,
    pub mean_ms: f64,
    pub operation: String,
    pub stddev_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn row(&self, operation: &str) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.operation == operation)
    }

    pub fn to_canonical(&self) -> Vec<u8> {
        canonical::to_canonical(self)
    }
}

fn measure(operation: String, iterations: usize, mut op: impl FnMut()) -> BenchRow {
    let samples: Vec<f64> = (0..iterations)
        .map(|_| {
            let start = Instant::now();
            op();
            start.elapsed().as_secs_f64() * 1e3
        })
        .collect();
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    BenchRow {
        iterations,
        mean_ms: mean,
        operation,
        stddev_ms: var.sqrt(),
    }
}

fn dc_dummy_row<G: Group>(group: G, name: &str, servers: usize, iterations: usize, seed: u64) -> BenchRow {
    let mut rng = seeds::stream(seed, "bench-dc", 0);
    let keys: Vec<_> = (0..servers).map(|_| keygen(&group, &mut rng).public).collect();
    let owner = keygen(&group, &mut rng);
    let params = DcRoundParams::new(group.clone(), keys, 1, owner.public).expect("servers > 0");
    measure(format!("dcnet-dummy-{name}"), iterations, || {
        let ct = dc_client_submit(&params, &DcRole::Dummy, &mut rng).expect("dummy");
        let env = SubmissionEnvelope::new(SystemTag::Dcnet, 1, ct.to_bytes(&group));
        std::hint::black_box(wire::canonical_encode(&env));
    })
}

/// Times native dummy generation, envelope encoding included: a mix-net
/// onion over `layers` P-256 servers and a DC-net dummy with its proof on
/// both groups.
pub fn bench(layers: usize, iterations: usize, seed: u64) -> BenchReport {
    let layers = layers.max(1);
    let mut rng = seeds::stream(seed, "bench-mix", 0);
    let keys: Vec<_> = (0..layers).map(|_| keygen(&P256Group, &mut rng).public).collect();
    let params = MixnetParams::new(P256Group, keys).expect("layers > 0");
    let mix = measure(format!("mixnet-dummy-p256-m{layers}"), iterations, || {
        let onion = onion_encrypt(&PlaintextMessage::dummy(), &params, &mut rng);
        let env = SubmissionEnvelope::new(SystemTag::Mixnet, 1, onion.bytes);
        std::hint::black_box(wire::canonical_encode(&env));
    });
    BenchReport {
        rows: vec![
            mix,
            dc_dummy_row(P256Group, "p256", layers, iterations, seed),
            dc_dummy_row(ModpGroup::toy(), "toy-modp", layers, iterations, seed),
        ],
    }
}
