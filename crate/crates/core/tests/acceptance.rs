//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use conscript_core::adversary::{
    run_distinguishing_game, run_flood_attack, run_selective_dos, Defense, Defenses, GameConfig,
    GameTemplate, Strategy,
};
use conscript_core::crypto::{
    dleq_prove, dleq_verify, keygen, or_prove, or_verify, schnorr_prove, schnorr_verify, KeyPair,
    DleqProof, DleqStatement, OrProof, OrStatement, OrWitness, SchnorrProof,
};
use conscript_core::dcnet::{
    dc_client_submit, dc_client_submit_with, dc_reconstruct, dc_run_round, dc_server_share,
    dc_verify_client, dc_verify_share, DcClientCiphertext, DcOutcome, DcRole, DcRoundParams,
};
use conscript_core::group::{Group, GroupSpec, ModpGroup, P256Group};
use conscript_core::mixnet::{
    onion_encrypt, peel_layer, Cascade, IntakeRules, MixPolicy, MixnetParams,
};
use conscript_core::participants::RatePolicy;
use conscript_core::sim::{bench, run_scenario, run_scenario_round, ScenarioConfig};
use conscript_core::wire::{
    canonical_encode, make_plaintext, PlaintextMessage, SubmissionEnvelope, SystemTag,
    MAX_PAYLOAD_LEN,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn end_to_end_mixnet() -> Outcome {
    let cfg = common::scenario("mixnet-basic.json");
    ensure(
        cfg.servers == 5 && cfg.savvy == 3 && cfg.casual == 47 && matches!(cfg.policy, MixPolicy::Timed { .. }),
        || "scenario is not M=5, timed, j=3, k=47".into(),
    )?;
    let start = Instant::now();
    let result = run_scenario_round(&cfg).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let report = run_scenario(&cfg).map_err(|e| e.to_string())?;
    let mut got = result.real_payloads();
    got.sort();
    let mut want: Vec<Vec<u8>> = cfg.payloads.iter().map(|p| p.as_bytes().to_vec()).collect();
    want.sort();
    ensure(got == want, || format!("bulletin payloads {got:?}"))?;
    ensure(report.counts.dummy == 47, || format!("dummy_count {}", report.counts.dummy))?;
    ensure(report.anonymity.effective == 50, || format!("anonymity {}", report.anonymity.effective))?;
    ensure(secs < 10.0, || format!("runtime {secs:.2}s"))?;
    Ok(format!("3 real, 47 dummy, anonymity 50 in {secs:.2}s"))
}

fn game_template() -> GameTemplate {
    GameTemplate::from_scenario(&common::scenario("game.json"))
}

fn play(trials: usize, defenses: Defenses, strategy: Strategy) -> Result<(f64, f64), String> {
    let cfg = GameConfig {
        trials,
        template: game_template(),
        defenses,
        strategy,
    };
    let start = Instant::now();
    let r = run_distinguishing_game(&cfg).map_err(|e| e.to_string())?;
    Ok((r.advantage, start.elapsed().as_secs_f64()))
}

fn game_all_defenses() -> Outcome {
    let mut parts = Vec::new();
    for s in Strategy::ALL {
        let (adv, secs) = play(1000, Defenses::ALL_ON, s)?;
        ensure(adv <= 0.05, || format!("{} advantage {adv}", s.as_str()))?;
        ensure(secs < 60.0, || format!("{} took {secs:.1}s", s.as_str()))?;
        parts.push(format!("{}={adv:.3} ({secs:.1}s)", s.as_str()));
    }
    Ok(format!("R=1000: {}", parts.join(", ")))
}

fn defense_ablation() -> Outcome {
    let mut parts = Vec::new();
    for d in Defense::ALL {
        let s = d.designated_strategy();
        let (off, _) = play(200, Defenses::ALL_ON.with(d, false), s)?;
        let (on, _) = play(200, Defenses::ALL_ON.with(d, true), s)?;
        ensure(off >= 0.95 && on <= 0.05, || {
            format!("{} vs {}: off {off}, on {on}", d.as_str(), s.as_str())
        })?;
        parts.push(format!("{}/{} off={off:.2} on={on:.2}", d.as_str(), s.as_str()));
    }
    Ok(format!("R=200: {}", parts.join(", ")))
}

fn selective_dos() -> Outcome {
    let mut t = game_template();
    t.group = GroupSpec::P256Curve;
    t.payload = b"leak".to_vec();
    ensure(t.honest_server_visitors >= 20, || "fewer than 20 honest-server visitors".into())?;
    let single = run_selective_dos(&t, false, true).map_err(|e| e.to_string())?;
    ensure(single.identified && single.exposed() == Some(&b"leak"[..]), || format!("single server: {single:?}"))?;
    let multi = run_selective_dos(&t, true, true).map_err(|e| e.to_string())?;
    ensure(!multi.identified, || format!("multi server: {multi:?}"))?;
    Ok(format!(
        "single server exposes \"leak\"; with honest server ({} processed) identified=false",
        multi.processed
    ))
}

fn flood_base(savvy: usize, casual: usize, registered: usize) -> ScenarioConfig {
    let mut cfg = common::scenario("mixnet-basic.json");
    cfg.savvy = savvy;
    cfg.casual = casual;
    cfg.registered = registered;
    cfg.payloads.truncate(savvy);
    cfg.servers = 3;
    cfg
}

fn flood() -> Outcome {
    let plain = MixPolicy::Threshold {
        min_messages: 10,
        count_only_roster_signed: false,
    };
    let r = run_flood_attack(&flood_base(1, 20, 0), plain, 9).map_err(|e| e.to_string())?;
    ensure(r.fired && r.honest_anonymity == 1, || format!("plain threshold: {r:?}"))?;

    let roster = MixPolicy::ThresholdAndTimed {
        fire_after: 3600,
        min_messages: 10,
        count_only_roster_signed: true,
    };
    let sybil_only = run_flood_attack(&flood_base(0, 0, 9), roster, 500).map_err(|e| e.to_string())?;
    ensure(!sybil_only.fired, || "500 sybils with 9 signers fired the mix".into())?;
    let signers = run_flood_attack(&flood_base(0, 0, 10), roster, 500).map_err(|e| e.to_string())?;
    ensure(signers.fired, || "10 registered signers did not fire the mix".into())?;
    Ok("9 sybils leave anonymity 1; 500 sybils never fire the roster mix, 10 signers do".into())
}

fn non_monotonicity() -> Outcome {
    let policy = MixPolicy::Threshold {
        min_messages: 10,
        count_only_roster_signed: false,
    };
    let cfg = flood_base(1, 9, 0);
    let clean = run_flood_attack(&cfg, policy, 0).map_err(|e| e.to_string())?;
    let attacked = run_flood_attack(&cfg, policy, 1).map_err(|e| e.to_string())?;
    ensure(clean.honest_anonymity == 10 && attacked.honest_anonymity == 9, || {
        format!("{} -> {}", clean.honest_anonymity, attacked.honest_anonymity)
    })?;
    Ok("n=10: anonymity 10 -> 9 after one adversarial message".into())
}

fn modexp(base: u64, exp: u64, p: u64) -> u64 {
    (0..exp).fold(1, |acc, _| acc * base % p)
}

fn dc_rounds<G: Group>(g: G, payload: &[u8], seed: u64) -> Result<(), String> {
    let mut r = ChaCha20Rng::seed_from_u64(seed);
    let keys: Vec<_> = (0..3).map(|_| keygen(&g, &mut r)).collect();
    let owner = keygen(&g, &mut r);
    let params = DcRoundParams::new(g.clone(), keys.iter().map(|k| k.public).collect(), 1, owner.public)
        .map_err(|e| e.to_string())?;
    for n in [1usize, 2, 10, 32] {
        for owner_at in [Some(n / 2), None] {
            let subs: Vec<_> = (0..n)
                .map(|i| {
                    let role = if Some(i) == owner_at {
                        DcRole::Owner { payload, secret: owner.secret }
                    } else {
                        DcRole::Dummy
                    };
                    dc_client_submit(&params, &role, &mut r).unwrap()
                })
                .collect();
            let result = dc_run_round(&params, &keys, subs, &mut r).map_err(|e| e.to_string())?;
            let want = match owner_at {
                Some(_) => DcOutcome::Payload(payload.to_vec()),
                None => DcOutcome::Empty,
            };
            ensure(result.outcome == want, || format!("{} n={n}: {:?}", g.name(), result.outcome))?;

            // one mutation of a client proof and of a server share
            let mut bad = result.accepted[0].clone();
            bad.proof.left.response = g.scalar_add(&bad.proof.left.response, &g.scalar_from_u64(1));
            ensure(!dc_verify_client(&params, &bad), || "mutated client proof verified".into())?;
            let commitments: Vec<_> = result.accepted.iter().map(|c| c.commitment).collect();
            let mut shares = result.shares.clone();
            shares[n % 3].shares[n - 1].0 = g.mul(&shares[n % 3].shares[n - 1].0, &g.generator());
            ensure(!dc_verify_share(&params, &commitments, &shares[n % 3]), || "mutated share verified".into())?;
            ensure(dc_reconstruct(&params, &result.accepted, &shares).is_err(), || "reconstructed with bad share".into())?;
        }
    }
    Ok(())
}

fn dcnet() -> Outcome {
    // x=3, y=4 in p=23, g=2 against direct modular exponentiation
    let g = ModpGroup::toy();
    let server = KeyPair::from_secret(&g, g.scalar(4));
    let owner = KeyPair::from_secret(&g, g.scalar(6));
    let params = DcRoundParams::new(g, vec![server.public], 1, owner.public).map_err(|e| e.to_string())?;
    let mut r = ChaCha20Rng::seed_from_u64(1);
    let ct = dc_client_submit_with(&params, &DcRole::Dummy, &g.scalar(3), &mut r).map_err(|e| e.to_string())?;
    let share = dc_server_share(&g, 0, &server, &[ct.commitment], 1, &mut r);
    let oracle = (modexp(2, 3, 23), modexp(modexp(2, 4, 23), 3, 23), modexp(modexp(2, 3, 23), 4, 23));
    let got = (ct.commitment.value(), ct.ciphertext.value(), share.shares[0].0.value());
    ensure(oracle == (8, 2, 2) && got == oracle, || format!("toy X,C,S = {got:?}, oracle {oracle:?}"))?;

    dc_rounds(ModpGroup::toy(), &[9], 2)?;
    dc_rounds(P256Group, b"exactly thirty bytes payload!!", 3)?;

    // random single-byte mutations of a serialized client proof
    let g = P256Group;
    let mut r = ChaCha20Rng::seed_from_u64(4);
    let key = keygen(&g, &mut r);
    let owner = keygen(&g, &mut r);
    let params = DcRoundParams::new(g, vec![key.public], 1, owner.public).map_err(|e| e.to_string())?;
    let ct = dc_client_submit(&params, &DcRole::Dummy, &mut r).map_err(|e| e.to_string())?;
    let bytes = ct.to_bytes(&g);
    for _ in 0..200 {
        let mut m = bytes.clone();
        let i = r.gen_range(2 * g.element_len()..m.len());
        m[i] ^= 1 << r.gen_range(0..8);
        let ok = DcClientCiphertext::from_bytes(&g, &m).map(|c| dc_verify_client(&params, &c)).unwrap_or(false);
        ensure(!ok, || format!("mutated proof byte {i} verified"))?;
    }
    Ok("N in {1,2,10,32} exact on toy and P-256; all-dummy empty; mutations rejected; toy X=8 C=2 S=2".into())
}

fn flip<R: Rng>(bytes: &mut [u8], r: &mut R) {
    let i = r.gen_range(0..bytes.len());
    bytes[i] ^= 1 << r.gen_range(0..8);
}

fn crypto_properties() -> Outcome {
    let g = P256Group;
    let mut r = ChaCha20Rng::seed_from_u64(8);
    for case in 0..1000 {
        let layers = if case % 2 == 0 { 1 } else { 5 };
        let keys: Vec<_> = (0..layers).map(|_| keygen(&g, &mut r)).collect();
        let params = MixnetParams::new(g, keys.iter().map(|k| k.public).collect()).map_err(|e| e.to_string())?;
        let len = r.gen_range(0..=MAX_PAYLOAD_LEN);
        let body: Vec<u8> = (0..len).map(|_| r.gen()).collect();
        let pt = if case % 3 == 0 {
            PlaintextMessage::dummy()
        } else {
            make_plaintext(&body, false).map_err(|e| e.to_string())?
        };
        let mut bytes = onion_encrypt(&pt, &params, &mut r).bytes;
        for k in &keys {
            bytes = peel_layer(&g, &k.secret, &bytes).map_err(|e| format!("case {case}: {e}"))?;
        }
        ensure(bytes == pt.as_bytes(), || format!("onion case {case} did not round-trip"))?;
    }

    let ctx = b"acceptance";
    let mut complete = 0;
    let mut rejected = 0;
    for case in 0..1000 {
        let key = keygen(&g, &mut r);
        let other = keygen(&g, &mut r);
        let sp = schnorr_prove(&g, &key.secret, &key.public, ctx, &mut r);
        let st = DleqStatement {
            base1: g.generator(),
            base2: other.public,
            public1: key.public,
            public2: g.pow(&other.public, &key.secret),
        };
        let dp = dleq_prove(&g, &key.secret, &st, ctx, &mut r);
        let ost = OrStatement {
            left: st,
            right: other.public,
        };
        let witness = if case % 2 == 0 {
            OrWitness::Left(key.secret)
        } else {
            OrWitness::Right(other.secret)
        };
        let op = or_prove(&g, &witness, &ost, ctx, &mut r);
        if schnorr_verify(&g, &key.public, ctx, &sp) && dleq_verify(&g, &st, ctx, &dp) && or_verify(&g, &ost, ctx, &op) {
            complete += 1;
        }

        let mut b = sp.to_bytes(&g);
        flip(&mut b, &mut r);
        let s_ok = SchnorrProof::from_bytes(&g, &b).map(|p| schnorr_verify(&g, &key.public, ctx, &p)).unwrap_or(false);
        let mut b = dp.to_bytes(&g);
        flip(&mut b, &mut r);
        let d_ok = DleqProof::from_bytes(&g, &b).map(|p| dleq_verify(&g, &st, ctx, &p)).unwrap_or(false);
        let mut b = op.to_bytes(&g);
        flip(&mut b, &mut r);
        let o_ok = OrProof::from_bytes(&g, &b).map(|p| or_verify(&g, &ost, ctx, &p)).unwrap_or(false);
        if !s_ok && !d_ok && !o_ok {
            rejected += 1;
        }
    }
    ensure(complete == 1000, || format!("{complete}/1000 proofs verified"))?;
    ensure(rejected == 1000, || format!("{rejected}/1000 mutation probes rejected"))?;
    Ok("1000 onion round trips (M=1,5), 1000/1000 proofs complete, 1000/1000 mutations rejected".into())
}

fn canonical_encoding() -> Outcome {
    let cases = common::golden_cases();
    for (name, make) in &cases {
        let (a, b) = (make(), make());
        ensure(a == b, || format!("{name} differs between runs"))?;
        let want = std::fs::read(common::golden_path(name)).map_err(|e| format!("{name}: {e}"))?;
        ensure(a == want, || format!("{name} differs from golden file"))?;
    }
    let corpus = common::corpus_results();
    let accepted = corpus.iter().filter(|(_, ok)| *ok).count();
    ensure(accepted == 0, || format!("{accepted}/{} variants accepted", corpus.len()))?;
    Ok(format!("{} golden files byte-equal; {}/{} non-canonical variants rejected", cases.len(), corpus.len(), corpus.len()))
}

fn rate_and_shuffle() -> Outcome {
    let mut cfg = common::scenario("game.json");
    cfg.savvy = 0;
    cfg.payloads.clear();
    cfg.casual = 10_000;
    cfg.web_servers[0].adversarial = false;
    cfg.rate = RatePolicy {
        workstation: 0.1,
        mobile: 0.1,
    };
    let r = run_scenario_round(&cfg).map_err(|e| e.to_string())?;
    let emitted = r.buckets.emitted;
    ensure((910..=1090).contains(&emitted), || format!("rho=0.1 emitted {emitted} of 10000"))?;

    const N: usize = 10;
    const RUNS: u64 = 1000;
    let g = ModpGroup::toy();
    let mut counts = [[0u32; N]; N];
    for run in 0..RUNS {
        let mut kr = ChaCha20Rng::seed_from_u64(run);
        let keys = (0..3).map(|_| keygen(&g, &mut kr)).collect();
        let mut c = Cascade::new(g, keys, MixPolicy::Timed { fire_after: 1 }, IntakeRules::new(1), run)
            .map_err(|e| e.to_string())?;
        for i in 0..N {
            let pt = make_plaintext(&[i as u8], false).map_err(|e| e.to_string())?;
            let onion = onion_encrypt(&pt, c.params(), &mut kr);
            c.submit(&canonical_encode(&SubmissionEnvelope::new(SystemTag::Mixnet, 1, onion.bytes)))
                .map_err(|e| e.to_string())?;
        }
        let board = c.fire().map_err(|e| e.to_string())?;
        for (slot, m) in board.real.iter().enumerate() {
            counts[m.payload()[0] as usize][slot] += 1;
        }
    }
    let worst = counts
        .iter()
        .flatten()
        .map(|&n| (n as f64 / RUNS as f64 - 0.1).abs())
        .fold(0.0, f64::max);
    ensure(worst <= 0.03, || format!("slot frequency deviates by {worst:.3}"))?;
    Ok(format!("emitted {emitted}/10000 at rho=0.1; max slot deviation {worst:.3} over 1000 runs"))
}

fn bench_dummies() -> Outcome {
    let report = bench(5, 100, 1);
    let mut parts = Vec::new();
    for op in ["mixnet-dummy-p256-m5", "dcnet-dummy-p256"] {
        let row = report.row(op).ok_or_else(|| format!("missing row {op}"))?;
        ensure(row.iterations >= 100 && row.mean_ms < 11_000.0, || format!("{op}: {row:?}"))?;
        parts.push(format!("{op} {:.3}±{:.3} ms", row.mean_ms, row.stddev_ms));
    }
    Ok(format!("{} (n=100)", parts.join(", ")))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("end-to-end mix-net round", end_to_end_mixnet),
        ("distinguishing game, all defenses on", game_all_defenses),
        ("defense ablation", defense_ablation),
        ("selective DoS", selective_dos),
        ("flood attack", flood),
        ("threshold non-monotonicity", non_monotonicity),
        ("DC-net rounds", dcnet),
        ("crypto properties", crypto_properties),
        ("canonical encoding", canonical_encoding),
        ("rate limiting and shuffle uniformity", rate_and_shuffle),
        ("dummy generation bench", bench_dummies),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
