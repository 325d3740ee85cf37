#![allow(dead_code)]

use std::path::PathBuf;

use conscript_core::adversary::{
    run_distinguishing_game, run_flood_attack, Defense, Defenses, GameConfig, GameReport,
    GameTemplate, Strategy,
};
use conscript_core::canonical;
use conscript_core::crypto::keygen;
use conscript_core::group::P256Group;
use conscript_core::mixnet::{onion_encrypt, BulletinExport, MixnetParams};
use conscript_core::participants::{publish_directory, DirectoryList};
use conscript_core::roster::sign_envelope;
use conscript_core::sim::{run_scenario, run_scenario_round, validate_config, ScenarioConfig};
use conscript_core::wire::{canonical_decode, canonical_encode, PlaintextMessage, SubmissionEnvelope, SystemTag};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde_json::Value;

pub fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

pub fn scenario(name: &str) -> ScenarioConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name);
    validate_config(&std::fs::read(path).unwrap()).unwrap()
}

/// Compares against the checked-in file; `UPDATE_GOLDEN=1` rewrites it.
pub fn check_golden(name: &str, make: impl Fn() -> Vec<u8>) {
    let bytes = make();
    assert_eq!(bytes, make(), "{name} differs between two runs");
    let path = golden_path(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, &bytes).unwrap();
    }
    let want = std::fs::read(&path).unwrap_or_else(|_| panic!("missing golden file {name}"));
    assert!(bytes == want, "{name} does not match golden bytes");
}

pub fn envelope(signed: bool) -> SubmissionEnvelope {
    let g = P256Group;
    let mut r = ChaCha20Rng::seed_from_u64(42);
    let keys: Vec<_> = (0..3).map(|_| keygen(&g, &mut r).public).collect();
    let params = MixnetParams::new(g, keys).unwrap();
    let onion = onion_encrypt(&PlaintextMessage::dummy(), &params, &mut r);
    let env = SubmissionEnvelope::new(SystemTag::Mixnet, 7, onion.bytes);
    if signed {
        let user = keygen(&g, &mut r);
        sign_envelope(&g, &user, &env, &mut r)
    } else {
        env
    }
}

pub fn directory() -> DirectoryList {
    let g = P256Group;
    let mut r = ChaCha20Rng::seed_from_u64(43);
    let auths: Vec<_> = (0..2).map(|_| keygen(&g, &mut r)).collect();
    let servers: Vec<_> = (0..3).map(|_| keygen(&g, &mut r).public).collect();
    publish_directory(&g, &auths, &servers, &mut r)
}

pub fn bulletin() -> Vec<u8> {
    let result = run_scenario_round(&scenario("mixnet-basic.json")).unwrap();
    result.bulletin.unwrap().to_canonical()
}

pub fn golden_cases() -> Vec<(&'static str, fn() -> Vec<u8>)> {
    vec![
        ("envelope.json", || canonical_encode(&envelope(false))),
        ("envelope-signed.json", || canonical_encode(&envelope(true))),
        ("directory.json", || directory().to_canonical()),
        ("bulletin.json", bulletin),
        ("run-report.json", || run_scenario(&scenario("mixnet-basic.json")).unwrap().to_canonical()),
        ("dcnet-report.json", || run_scenario(&scenario("dcnet-basic.json")).unwrap().to_canonical()),
        ("flood-report.json", || {
            let cfg = scenario("flood-threshold.json");
            run_flood_attack(&cfg, cfg.policy, cfg.sybils).unwrap().to_canonical()
        }),
        ("game-report.json", || {
            let cfg = GameConfig {
                trials: 40,
                template: GameTemplate::from_scenario(&scenario("game.json")),
                defenses: Defenses::ALL_ON.with(Defense::DigestCheck, false),
                strategy: Strategy::BundleProber,
            };
            let result = run_distinguishing_game(&cfg).unwrap();
            GameReport::new(&cfg, &result).to_canonical()
        }),
    ]
}

/// Renders JSON with an explicit key order per object.
pub fn render(v: &Value, reverse: bool, out: &mut String) {
    match v {
        Value::Object(m) => {
            let mut keys: Vec<&String> = m.keys().collect();
            keys.sort();
            if reverse {
                keys.reverse();
            }
            out.push('{');
            for (i, k) in keys.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(k).unwrap());
                out.push(':');
                render(&m[k.as_str()], reverse, out);
            }
            out.push('}');
        }
        Value::Array(a) => {
            out.push('[');
            for (i, x) in a.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                render(x, reverse, out);
            }
            out.push(']');
        }
        other => out.push_str(&serde_json::to_string(other).unwrap()),
    }
}

/// Byte offsets outside string literals.
pub fn structural_offsets(s: &str) -> Vec<usize> {
    let mut offsets = Vec::new();
    let mut in_str = false;
    let mut escaped = false;
    for (i, c) in s.char_indices() {
        if in_str {
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_str = false,
                _ => {}
            }
            continue;
        }
        offsets.push(i);
        if c == '"' {
            in_str = true;
        }
    }
    offsets.push(s.len());
    offsets
}

/// Reordered keys, uppercase hex and inserted whitespace.
pub fn variants(canonical: &[u8]) -> Vec<Vec<u8>> {
    let text = std::str::from_utf8(canonical).unwrap();
    let value: Value = serde_json::from_slice(canonical).unwrap();
    let mut out = Vec::new();

    let mut reversed = String::new();
    render(&value, true, &mut reversed);
    out.push(reversed.into_bytes());

    // every adjacent-key swap at the top level
    if let Value::Object(m) = &value {
        let keys: Vec<&String> = m.keys().collect();
        for i in 0..keys.len().saturating_sub(1) {
            let mut order = keys.clone();
            order.swap(i, i + 1);
            let body: Vec<String> = order
                .iter()
                .map(|k| {
                    let mut s = String::new();
                    render(&m[k.as_str()], false, &mut s);
                    format!("{}:{}", serde_json::to_string(k).unwrap(), s)
                })
                .collect();
            out.push(format!("{{{}}}", body.join(",")).into_bytes());
        }
    }

    // uppercase each hex string that has a letter in it
    let mut from = 0;
    while let Some(start) = text[from..].find('"').map(|i| from + i) {
        let end = start + 1 + text[start + 1..].find('"').unwrap();
        let lit = &text[start + 1..end];
        if lit.len() % 2 == 0 && lit.bytes().all(|b| b.is_ascii_hexdigit()) && lit.bytes().any(|b| b.is_ascii_lowercase()) {
            out.push(format!("{}{}{}", &text[..start + 1], lit.to_ascii_uppercase(), &text[end..]).into_bytes());
        }
        from = end + 1;
    }

    for pos in structural_offsets(text) {
        for ws in [" ", "\n", "\t", "\r\n"] {
            out.push(format!("{}{}{}", &text[..pos], ws, &text[pos..]).into_bytes());
        }
    }
    out
}

/// Every generated variant with whether the strict decoder accepted it.
pub fn corpus_results() -> Vec<(Vec<u8>, bool)> {
    let mut out = Vec::new();
    for signed in [false, true] {
        for v in variants(&canonical_encode(&envelope(signed))) {
            let ok = canonical_decode(&v).is_ok();
            out.push((v, ok));
        }
    }
    for v in variants(&directory().to_canonical()) {
        let ok = DirectoryList::from_canonical(&v).is_ok();
        out.push((v, ok));
    }
    for v in variants(&bulletin()) {
        let ok = canonical::from_canonical::<BulletinExport>(&v).is_ok();
        out.push((v, ok));
    }
    out
}
