//! Acceptance criteria, run in sequence with one PASS/FAIL line each.

#![allow(clippy::needless_range_loop)]

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uavpki::authproto::{run_local, SessionConfig};
use uavpki::codec::{Decode, Encode};
use uavpki::crypto::{Hash256, KeyPair};
use uavpki::ledger::{
    create_checkpoint, merkle_prove, merkle_root, merkle_verify, state_from_checkpoint, MerkleProof, Payload,
    TxType,
};
use uavpki::lightclient::{make_bundle, LightClient};
use uavpki::selection::{build_view, estimate_storage, merge_views, ViewSpec};
use uavpki::simnet::{run_scenario, run_scenario_detailed, Outcome, Scenario};
use uavpki::trustgraph::{build_trust_graph, find_valid_path, is_valid_path, TrustPath};

use common::*;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check, Option<Duration>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn run_cli(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["uavpki"];
    argv.extend_from_slice(args);
    let code = uavpki::cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap())
}

/// Criterion 1: The scope rule rejects A-B-C-D on A -(3)-> B -(1)-> C -(2)-> D.
fn trust_rule_fidelity() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let chain_path = dir.path().join("chain.bin");
    let genesis = fixture("genesis.json");
    let schedule = fixture("scope_chain_schedule.json");
    let (code, _) = run_cli(&[
        "chain",
        "build",
        "--genesis",
        genesis.to_str().unwrap(),
        "--schedule",
        schedule.to_str().unwrap(),
        "--out",
        chain_path.to_str().unwrap(),
    ]);
    ensure(code == 0, || format!("chain build exited {code}"))?;

    let chain = uavpki::ledger::read_chain_file(&chain_path).map_err(|e| e.to_string())?;
    let graph = build_trust_graph(chain.state());
    let abcd: Vec<_> = ["A", "B", "C", "D"].iter().map(|n| id_of(n)).collect();
    let path = TrustPath::along(&graph, &abcd).ok_or("edges missing")?;
    ensure(path.scopes == [3, 1, 2], || format!("scopes {:?}", path.scopes))?;
    ensure(!is_valid_path(&graph, &path), || "A-B-C-D accepted".into())?;

    let (code, out) = run_cli(&[
        "path",
        "--chain",
        chain_path.to_str().unwrap(),
        "--from",
        "A",
        "--to",
        "D",
    ]);
    ensure(out.trim() == "none", || format!("path printed {out:?}"))?;
    ensure(code == 1, || format!("path exited {code}"))?;
    Ok("A-B-C-D rejected, path prints none".into())
}

/// Criterion 2: Path existence agrees with exhaustive enumeration.
fn oracle_equivalence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut queries = 0;
    for g in 0..1000 {
        let n = rng.gen_range(1..=6);
        let density = rng.gen_range(0.1..0.7);
        let edges = random_edges(&mut rng, n, density, 3);
        let graph = graph_of(n, &edges);
        let ids = ids(n);
        for a in 0..n {
            for b in 0..n {
                let got = find_valid_path(&graph, &ids[a], &ids[b]).map_err(|e| e.to_string())?;
                let want = simple_paths(n, &edges, a, b)
                    .iter()
                    .any(|p| oracle_rule(&scopes_along(&edges, p)));
                ensure(got.is_some() == want, || {
                    format!(
                        "graph {g} {edges:?}: {a}->{b} found {} oracle {want}",
                        got.is_some()
                    )
                })?;
                queries += 1;
            }
        }
    }
    Ok(format!("1000 graphs, {queries} queries, 0 mismatches"))
}

/// Criterion 3: Merged outgoing-k and incoming-k views cover a path of length <= 2k.
fn two_k_reconstruction() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut pairs = 0;
    for g in 0..500 {
        let n = rng.gen_range(2..=10);
        let density = rng.gen_range(0.1..0.45);
        let edges = random_edges(&mut rng, n, density, 3);
        let mut graph = graph_of(n, &edges);
        graph.set_height(7);
        let ids = ids(n);
        for k in [1u8, 2] {
            let out_views: Vec<_> = (0..n)
                .map(|i| {
                    build_view(
                        &graph,
                        ViewSpec {
                            owner: ids[i],
                            k_out: k,
                            k_in: 0,
                        },
                    )
                    .unwrap()
                })
                .collect();
            let in_views: Vec<_> = (0..n)
                .map(|i| {
                    build_view(
                        &graph,
                        ViewSpec {
                            owner: ids[i],
                            k_out: 0,
                            k_in: k,
                        },
                    )
                    .unwrap()
                })
                .collect();
            for a in 0..n {
                for b in 0..n {
                    let short: Vec<Vec<usize>> = simple_paths(n, &edges, a, b)
                        .into_iter()
                        .filter(|p| p.len() - 1 <= 2 * k as usize)
                        .collect();
                    if short.is_empty() {
                        continue;
                    }
                    pairs += 1;
                    let merged = merge_views(&out_views[a], &in_views[b]).map_err(|e| e.to_string())?;
                    let covered = short.iter().any(|p| {
                        p.windows(2)
                            .all(|w| merged.edge(&ids[w[0]], &ids[w[1]]).is_some())
                    });
                    ensure(covered, || {
                        format!("graph {g} k={k} {a}->{b} not covered: {edges:?}")
                    })?;
                }
            }
        }
    }
    Ok(format!(
        "500 graphs, {pairs} connected (pair, k) cases, 0 failures"
    ))
}

/// Criterion 4: Storage formula values.
fn storage_formula() -> Check {
    let a = estimate_storage(3.0, 2).estimated_items;
    let b = estimate_storage(4.0, 3).estimated_items;
    ensure(a == 18.0 && b == 128.0, || format!("got {a} and {b}"))?;
    Ok("estimate_storage(3,2)=18, estimate_storage(4,3)=128".into())
}

/// Criterion 5: Checkpoint plus suffix equals full replay.
fn checkpoint_equivalence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checks = 0;
    let mut kinds: BTreeMap<TxType, usize> = BTreeMap::new();
    for c in 0..100 {
        let chain = random_chain(&mut rng, 20);
        ensure(chain.height() == 20, || {
            format!("chain {c} height {}", chain.height())
        })?;
        for block in chain.blocks() {
            for tx in &block.body {
                *kinds.entry(tx.tx_type()).or_default() += 1;
            }
        }
        let full = chain.state().canonical_bytes();
        for h in 0..=20u64 {
            let cp = create_checkpoint(&chain, h).map_err(|e| e.to_string())?;
            let cp = uavpki::ledger::Checkpoint::from_canonical_bytes(&cp.to_canonical_bytes().unwrap())
                .map_err(|e| e.to_string())?;
            let state = state_from_checkpoint(&cp, &chain.blocks()[h as usize + 1..])
                .map_err(|e| format!("chain {c} checkpoint {h}: {e}"))?;
            ensure(state.canonical_bytes() == full, || {
                format!("chain {c} checkpoint {h} differs")
            })?;
            checks += 1;
        }
    }
    ensure(kinds.len() == 6, || {
        format!("transaction types exercised: {kinds:?}")
    })?;
    Ok(format!(
        "100 chains x 21 checkpoints = {checks} byte-identical states, all 6 tx types"
    ))
}

/// Criterion 6: Merkle proofs: honest ones verify, every single-bit mutation fails.
fn merkle_soundness() -> Check {
    let mut mutations = 0u64;
    for size in 1..=16usize {
        let leaves: Vec<Hash256> = (0..size)
            .map(|i| Hash256::digest(format!("leaf {size}/{i}").as_bytes()))
            .collect();
        let root = merkle_root(&leaves).unwrap();
        for (index, leaf) in leaves.iter().enumerate() {
            let proof = merkle_prove(&leaves, index).unwrap();
            ensure(merkle_verify(&root, leaf, &proof), || {
                format!("honest proof {size}/{index} fails")
            })?;

            for bit in 0..256 {
                let mut bad_leaf = *leaf;
                bad_leaf.0[bit / 8] ^= 1 << (bit % 8);
                let mut bad_root = root;
                bad_root.0[bit / 8] ^= 1 << (bit % 8);
                ensure(!merkle_verify(&root, &bad_leaf, &proof), || {
                    format!("leaf bit {bit} {size}/{index}")
                })?;
                ensure(!merkle_verify(&bad_root, leaf, &proof), || {
                    format!("root bit {bit} {size}/{index}")
                })?;
                mutations += 2;
            }

            let bytes = proof.to_canonical_bytes().unwrap();
            for bit in 0..bytes.len() * 8 {
                let mut bad = bytes.clone();
                bad[bit / 8] ^= 1 << (bit % 8);
                if let Ok(p) = MerkleProof::from_canonical_bytes(&bad) {
                    ensure(!merkle_verify(&root, leaf, &p), || {
                        format!("proof bit {bit} {size}/{index}")
                    })?;
                }
                mutations += 1;
            }
        }
    }
    Ok(format!(
        "trees of 1..=16 leaves, {mutations} single-bit mutations rejected"
    ))
}

/// Criterion 7: Fixture scenarios reach their expected outcomes for ten seeds.
fn end_to_end() -> Check {
    let cases = [
        ("honest_2k.json", Outcome::Authenticated),
        (
            "disjoint.json",
            Outcome::Aborted(uavpki::authproto::AbortReason::NoCommonNode),
        ),
        (
            "corrupt_bundle.json",
            Outcome::Aborted(uavpki::authproto::AbortReason::IntegrityFailure),
        ),
        (
            "impersonate.json",
            Outcome::Aborted(uavpki::authproto::AbortReason::AuthFailure),
        ),
        ("dropped_link.json", Outcome::Timeout),
    ];
    for (file, outcome) in cases {
        let base = Scenario::load(&fixture(file)).map_err(|e| e.to_string())?;
        ensure(base.attempts.iter().any(|a| a.expect == Some(outcome)), || {
            format!("{file} does not expect {outcome}")
        })?;
        for seed in 0..10 {
            let mut s = base.clone();
            s.seed = seed;
            let report = run_scenario(&s).map_err(|e| e.to_string())?;
            ensure(report.all_matched(), || {
                let got: Vec<String> = report.attempts.iter().map(|a| a.outcome.to_string()).collect();
                format!("{file} seed {seed}: {got:?}")
            })?;
        }
    }
    Ok("5 fixtures x 10 seeds matched".into())
}

/// Criterion 8: Single-field message corruption never authenticates.
fn adversarial_closure() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let config = SessionConfig::default();
    let mut setups = Vec::new();
    while setups.len() < 40 {
        let n = rng.gen_range(4..=8);
        let edges = random_edges(&mut rng, n, 0.35, 3);
        let chain = chain_from_edges(n, &edges, 3);
        let clients: Vec<LightClient> = (0..n)
            .map(|i| {
                let spec = ViewSpec {
                    owner: id_of(&label(i)),
                    k_out: 2,
                    k_in: 2,
                };
                LightClient::from_bundle(&make_bundle(&chain, spec).unwrap()).unwrap()
            })
            .collect();
        let clients = std::rc::Rc::new(clients);
        for a in 0..n {
            for b in 0..n {
                if a == b {
                    continue;
                }
                let key = KeyPair::from_label(&label(b));
                let honest = run_local(&clients[a], &clients[b], &key, config, &mut rng, &mut |_, _| {});
                if honest.authenticated() {
                    setups.push((clients.clone(), a, b, key, honest.messages.len()));
                }
            }
        }
    }
    let mut fields: BTreeMap<&str, usize> = BTreeMap::new();
    let trials = 1200;
    for t in 0..trials {
        let (clients, a, b, key, len) = &setups[rng.gen_range(0..setups.len())];
        let target = rng.gen_range(0..*len);
        let mut field = "";
        let mut corrupt_rng = ChaCha8Rng::seed_from_u64(rng.gen());
        let run = run_local(
            &clients[*a],
            &clients[*b],
            key,
            config,
            &mut rng,
            &mut |i, msg| {
                if i == target {
                    field = corrupt_message(msg, &mut corrupt_rng);
                }
            },
        );
        ensure(!field.is_empty(), || {
            format!("trial {t}: message {target} never sent")
        })?;
        ensure(!run.authenticated(), || {
            format!("trial {t}: corrupted {field} authenticated")
        })?;
        *fields.entry(field).or_default() += 1;
    }
    Ok(format!(
        "{trials} corruptions over {} fields, none authenticated",
        fields.len()
    ))
}

/// Criterion 9: Two process runs give the same report digest.
fn determinism() -> Check {
    let scenario = fixture("fleet_mixed.json");
    let run = || {
        let out = std::process::Command::new(env!("CARGO_BIN_EXE_uavpki"))
            .args(["sim", "--scenario", scenario.to_str().unwrap(), "--digest-only"])
            .output()
            .map_err(|e| e.to_string())?;
        ensure(out.status.success(), || format!("exit {:?}", out.status.code()))?;
        Ok::<_, String>(String::from_utf8(out.stdout).unwrap().trim().to_owned())
    };
    let first = run()?;
    let second = run()?;
    ensure(first == second, || format!("{first} != {second}"))?;
    let lib = run_scenario(&Scenario::load(&scenario).unwrap())
        .unwrap()
        .digest
        .to_hex();
    ensure(first == lib, || format!("process {first} != library {lib}"))?;
    Ok(format!("digest {}", &first[..16]))
}

/// Criterion 10: Authenticated paths never use an edge revoked by the time both
/// parties were provisioned.
fn revocation_soundness() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut authenticated = 0;
    let mut revocations = 0;
    for s in 0..200 {
        let scenario = random_scenario(&mut rng, s);
        let run = run_scenario_detailed(&scenario).map_err(|e| format!("scenario {s}: {e}"))?;
        let revokes: Vec<_> = run
            .chain
            .txs_of_type(TxType::Revoke)
            .map(|(loc, tx)| match tx.payload() {
                Payload::Revoke { subject } => (loc, tx.sender().unwrap(), *subject),
                _ => unreachable!(),
            })
            .collect();
        revocations += revokes.len();
        for (report, trace) in run.report.attempts.iter().zip(&run.traces) {
            if report.outcome != Outcome::Authenticated {
                continue;
            }
            authenticated += 1;
            let vp = trace.verified.as_ref().ok_or("authenticated without a path")?;
            let horizon = trace
                .initiator_height
                .zip(trace.responder_height)
                .map(|(a, b)| a.min(b))
                .ok_or("authenticated without heights")?;
            for edge in &vp.edges {
                let confirmed = run.chain.locate_tx(&edge.tx_id).ok_or("path edge not on chain")?;
                let stale = revokes.iter().any(|(loc, issuer, subject)| {
                    *issuer == edge.issuer
                        && *subject == edge.subject
                        && *loc > confirmed
                        && loc.height <= horizon
                });
                ensure(!stale, || {
                    format!(
                        "scenario {s}: revoked edge used, {} -> {}",
                        report.initiator, report.responder
                    )
                })?;
            }
        }
    }
    ensure(authenticated > 0, || "no session authenticated".into())?;
    Ok(format!(
        "200 scenarios, {revocations} revocations, {authenticated} authenticated sessions, 0 violations"
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (
            "trust-rule fidelity",
            trust_rule_fidelity,
            Some(Duration::from_secs(1)),
        ),
        (
            "oracle equivalence",
            oracle_equivalence,
            Some(Duration::from_secs(30)),
        ),
        (
            "2k reconstruction",
            two_k_reconstruction,
            Some(Duration::from_secs(30)),
        ),
        ("storage formula", storage_formula, None),
        (
            "checkpoint equivalence",
            checkpoint_equivalence,
            Some(Duration::from_secs(60)),
        ),
        (
            "merkle soundness",
            merkle_soundness,
            Some(Duration::from_secs(10)),
        ),
        ("end-to-end protocol", end_to_end, Some(Duration::from_secs(30))),
        (
            "adversarial closure",
            adversarial_closure,
            Some(Duration::from_secs(60)),
        ),
        ("determinism", determinism, None),
        (
            "revocation soundness",
            revocation_soundness,
            Some(Duration::from_secs(60)),
        ),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check, limit)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let elapsed = start.elapsed();
        let result = match (result, limit) {
            (Ok(_), Some(limit)) if elapsed > limit => Err(format!("took {elapsed:.2?}, limit {limit:?}")),
            (r, _) => r,
        };
        match result {
            Ok(detail) => println!("criterion {:>2} PASS  {name} ({elapsed:.2?}): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name} ({elapsed:.2?}): {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
