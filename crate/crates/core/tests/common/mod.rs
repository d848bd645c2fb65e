//! Shared fixtures and brute-force oracles for the integration tests.
//!
//! Oracles here never call the library's search code; they enumerate.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use proptest::prelude::*;
use rand::Rng;
use uavpki::crypto::{AccountId, Hash256, KeyPair};
use uavpki::ledger::{Chain, ChainBuilder, GenesisConfig};
use uavpki::trustgraph::{NodeInfo, TrustEdge, TrustGraph};

/// Directed edges keyed by (issuer index, subject index), valued by scope.
pub type EdgeMap = BTreeMap<(usize, usize), u8>;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

pub fn label(i: usize) -> String {
    format!("n{i}")
}

pub fn id_of(name: &str) -> AccountId {
    KeyPair::from_label(name).account_id()
}

pub fn ids(n: usize) -> Vec<AccountId> {
    (0..n).map(|i| id_of(&label(i))).collect()
}

pub fn node_info(name: &str) -> NodeInfo {
    let key = KeyPair::from_label(name);
    NodeInfo {
        id: key.account_id(),
        name: name.to_owned(),
        public_key: key.public_key(),
        properties: BTreeMap::new(),
        registration_tx: Hash256::digest(name.as_bytes()),
        registered_at: 0,
    }
}

pub fn graph_of(n: usize, edges: &EdgeMap) -> TrustGraph {
    let mut g = TrustGraph::new();
    for i in 0..n {
        g.insert_node(node_info(&label(i))).unwrap();
    }
    let ids = ids(n);
    for (&(a, b), &scope) in edges {
        g.upsert_edge(TrustEdge {
            issuer: ids[a],
            subject: ids[b],
            scope,
            since_height: 0,
            tx_id: Hash256::digest(format!("{a}->{b}").as_bytes()),
        })
        .unwrap();
    }
    g
}

pub fn random_edges(rng: &mut impl Rng, n: usize, density: f64, max_scope: u8) -> EdgeMap {
    let mut edges = EdgeMap::new();
    for a in 0..n {
        for b in 0..n {
            if a != b && rng.gen_bool(density) {
                edges.insert((a, b), rng.gen_range(1..=max_scope));
            }
        }
    }
    edges
}

/// Graphs of 1..=max_nodes nodes with scopes in 1..=max_scope.
pub fn arb_graph(max_nodes: usize, max_scope: u8) -> impl Strategy<Value = (usize, EdgeMap)> {
    (1..=max_nodes).prop_flat_map(move |n| {
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|a| (0..n).filter(move |&b| b != a).map(move |b| (a, b)))
            .collect();
        let slots = pairs.len();
        (
            Just(n),
            prop::collection::vec(prop::option::weighted(0.4, 1..=max_scope), slots).prop_map(
                move |scopes| {
                    pairs
                        .iter()
                        .zip(scopes)
                        .filter_map(|(&p, s)| s.map(|s| (p, s)))
                        .collect::<EdgeMap>()
                },
            ),
        )
    })
}

/// The scope rule in 1-based form: edge `i` of a path of `L` edges needs
/// scope at least `L - i + 1`.
pub fn oracle_rule(scopes: &[u8]) -> bool {
    let l = scopes.len();
    (1..=l).all(|i| usize::from(scopes[i - 1]) + i > l)
}

/// Every simple path from `from` to `to` of at least one edge.
pub fn simple_paths(n: usize, edges: &EdgeMap, from: usize, to: usize) -> Vec<Vec<usize>> {
    fn go(n: usize, edges: &EdgeMap, to: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let last = *path.last().unwrap();
        for next in 0..n {
            if !edges.contains_key(&(last, next)) || path.contains(&next) {
                continue;
            }
            path.push(next);
            if next == to {
                out.push(path.clone());
            } else {
                go(n, edges, to, path, out);
            }
            path.pop();
        }
    }
    let mut out = Vec::new();
    if from != to {
        go(n, edges, to, &mut vec![from], &mut out);
    }
    out
}

pub fn scopes_along(edges: &EdgeMap, path: &[usize]) -> Vec<u8> {
    path.windows(2).map(|w| edges[&(w[0], w[1])]).collect()
}

/// Shortest valid path, ties broken by the id sequence.
pub fn oracle_best_path(n: usize, edges: &EdgeMap, from: usize, to: usize) -> Option<Vec<AccountId>> {
    let ids = ids(n);
    simple_paths(n, edges, from, to)
        .into_iter()
        .filter(|p| oracle_rule(&scopes_along(edges, p)))
        .map(|p| p.iter().map(|&i| ids[i]).collect::<Vec<_>>())
        .min_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)))
}

/// Nodes and edges touched by directed walks of at most `k` edges that
/// start (outgoing) or end (incoming) at `owner`.
pub fn walk_closure(
    n: usize,
    edges: &EdgeMap,
    owner: usize,
    k: usize,
    outgoing: bool,
) -> (BTreeSet<usize>, BTreeSet<(usize, usize)>) {
    fn go(
        n: usize,
        edges: &EdgeMap,
        at: usize,
        left: usize,
        outgoing: bool,
        nodes: &mut BTreeSet<usize>,
        used: &mut BTreeSet<(usize, usize)>,
    ) {
        nodes.insert(at);
        if left == 0 {
            return;
        }
        for other in 0..n {
            let e = if outgoing { (at, other) } else { (other, at) };
            if edges.contains_key(&e) {
                used.insert(e);
                go(n, edges, other, left - 1, outgoing, nodes, used);
            }
        }
    }
    let mut nodes = BTreeSet::new();
    let mut used = BTreeSet::new();
    go(n, edges, owner, k, outgoing, &mut nodes, &mut used);
    (nodes, used)
}

/// Edge set of `g` as (issuer index, subject index) pairs.
pub fn edge_indices(g: &TrustGraph, n: usize) -> BTreeSet<(usize, usize)> {
    let ids = ids(n);
    let index: BTreeMap<AccountId, usize> = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    g.edges().map(|e| (index[&e.issuer], index[&e.subject])).collect()
}

pub fn node_indices(g: &TrustGraph, n: usize) -> BTreeSet<usize> {
    ids(n)
        .iter()
        .enumerate()
        .filter(|(_, id)| g.contains(id))
        .map(|(i, _)| i)
        .collect()
}

pub const PRODUCERS: [&str; 2] = ["p0", "p1"];

/// A chain of `blocks` blocks after genesis with a random mix of every
/// transaction type, each of which the ledger accepts.
pub fn random_chain(rng: &mut impl Rng, blocks: usize) -> Chain {
    let mut b = ChainBuilder::new(GenesisConfig::with_label_producers(4, 10, &PRODUCERS)).unwrap();
    let names: Vec<String> = (0..6).map(label).collect();
    let mut registered: Vec<usize> = Vec::new();
    let mut active: BTreeSet<(usize, usize)> = BTreeSet::new();
    for _ in 0..blocks {
        let mut touched: BTreeSet<(usize, usize)> = BTreeSet::new();
        for _ in 0..rng.gen_range(0..5) {
            match rng.gen_range(0..10) {
                0..=1 if registered.len() < names.len() => {
                    let next = (0..names.len()).find(|i| !registered.contains(i)).unwrap();
                    b.register(&names[next], BTreeMap::new()).unwrap();
                    registered.push(next);
                }
                2..=5 if registered.len() >= 2 => {
                    let a = registered[rng.gen_range(0..registered.len())];
                    let c = registered[rng.gen_range(0..registered.len())];
                    let committed = |x: usize| {
                        b.chain()
                            .state()
                            .account(&id_of(&names[x]))
                            .is_some_and(|acc| acc.is_entity())
                    };
                    if a == c || !committed(a) || !committed(c) || !touched.insert((a, c)) {
                        continue;
                    }
                    let scope = rng.gen_range(1..=4);
                    b.confirm(&names[a], &names[c], scope).unwrap();
                    active.insert((a, c));
                }
                6..=7 if !active.is_empty() => {
                    let pick = *active.iter().nth(rng.gen_range(0..active.len())).unwrap();
                    if !touched.insert(pick) {
                        continue;
                    }
                    b.revoke(&names[pick.0], &names[pick.1]).unwrap();
                    active.remove(&pick);
                }
                8 => {
                    let p = PRODUCERS[rng.gen_range(0..PRODUCERS.len())];
                    let funds = b.chain().state().balance(&id_of(p));
                    let spent = b
                        .pending()
                        .iter()
                        .filter(|t| t.sender() == Some(id_of(p)))
                        .count() as u64;
                    if funds > spent + 1 {
                        let to = &names[rng.gen_range(0..names.len())];
                        if b.chain().state().account(&id_of(to)).is_some() {
                            b.transfer(p, to, 1).unwrap();
                        }
                    }
                }
                _ => {
                    let p = PRODUCERS[rng.gen_range(0..PRODUCERS.len())];
                    if b.chain().state().account(&id_of(p)).is_none() {
                        continue;
                    }
                    let at = rng.gen_range(0..=b.chain().height());
                    b.checkpoint(p, at).unwrap();
                }
            }
        }
        b.seal().unwrap();
    }
    b.into_chain()
}

/// Registers `n0..n{n-1}` in block 1 and confirms `edges` in block 2.
pub fn chain_from_edges(n: usize, edges: &EdgeMap, max_scope: u8) -> Chain {
    let mut b = ChainBuilder::new(GenesisConfig::with_label_producers(max_scope, 1, &PRODUCERS)).unwrap();
    for i in 0..n {
        b.register(&label(i), BTreeMap::new()).unwrap();
    }
    b.seal().unwrap();
    for (&(a, c), &s) in edges {
        b.confirm(&label(a), &label(c), s).unwrap();
    }
    b.seal().unwrap();
    b.into_chain()
}

fn flip_bit(bytes: &mut [u8], rng: &mut impl Rng) {
    let bit = rng.gen_range(0..bytes.len() * 8);
    bytes[bit / 8] ^= 1 << (bit % 8);
}

fn nonzero(rng: &mut impl Rng) -> u64 {
    rng.gen_range(1..=u64::MAX)
}

/// Changes one field of a sorted hash list, keeping it sorted and distinct.
fn corrupt_hash_list(list: &mut Vec<Hash256>, rng: &mut impl Rng) -> &'static str {
    let before = list.clone();
    let what = match rng.gen_range(0..3) {
        0 if !list.is_empty() => {
            list.remove(rng.gen_range(0..list.len()));
            "hash_list.remove"
        }
        1 if !list.is_empty() => {
            let i = rng.gen_range(0..list.len());
            flip_bit(&mut list[i].0, rng);
            "hash_list.flip"
        }
        _ => {
            let mut h = [0u8; 32];
            rng.fill(&mut h);
            list.push(Hash256(h));
            "hash_list.insert"
        }
    };
    list.sort();
    list.dedup();
    assert_ne!(*list, before);
    what
}

/// Applies one random single-field corruption to `msg` and names the field.
pub fn corrupt_message(msg: &mut uavpki::authproto::Message, rng: &mut impl Rng) -> &'static str {
    use uavpki::authproto::Message;
    use uavpki::ledger::{ProofStep, Transaction};

    match msg {
        Message::Hello(h) => match rng.gen_range(0..3) {
            0 => {
                flip_bit(&mut h.responder_id.0 .0, rng);
                "hello.responder_id"
            }
            1 => {
                h.as_of_height = h.as_of_height.wrapping_add(nonzero(rng));
                "hello.as_of_height"
            }
            _ => corrupt_hash_list(&mut h.incoming_node_hashes, rng),
        },
        Message::DataRequest(d) => corrupt_hash_list(&mut d.requested_node_hashes, rng),
        Message::PathData(p) => {
            if p.txs.is_empty() {
                let tx = Transaction::coinbase(rng.gen());
                p.txs.push(uavpki::lightclient::ProvisionedTx {
                    tx,
                    block_height: 1,
                    proof: Default::default(),
                });
                return "path_data.insert";
            }
            let i = rng.gen_range(0..p.txs.len());
            let ptx = &mut p.txs[i];
            match rng.gen_range(0..5) {
                0 => {
                    p.txs.remove(i);
                    "path_data.remove"
                }
                1 => {
                    ptx.block_height = ptx.block_height.wrapping_add(nonzero(rng));
                    "path_data.block_height"
                }
                2 if !ptx.proof.steps.is_empty() => {
                    let j = rng.gen_range(0..ptx.proof.steps.len());
                    let step = &mut ptx.proof.steps[j];
                    *step = match *step {
                        ProofStep::Left(mut h) => {
                            flip_bit(&mut h.0, rng);
                            ProofStep::Left(h)
                        }
                        ProofStep::Right(mut h) => {
                            flip_bit(&mut h.0, rng);
                            ProofStep::Right(h)
                        }
                        ProofStep::Duplicate => ProofStep::Right(ptx.tx.id()),
                    };
                    "path_data.proof"
                }
                3 => {
                    let tx = &ptx.tx;
                    ptx.tx = Transaction::from_parts(
                        tx.sender(),
                        tx.nonce().wrapping_add(nonzero(rng)),
                        tx.payload().clone(),
                        tx.signature().copied(),
                    )
                    .unwrap();
                    "path_data.tx_nonce"
                }
                _ => {
                    let copy = ptx.clone();
                    p.txs.insert(i, copy);
                    "path_data.duplicate"
                }
            }
        }
        Message::Challenge(c) => {
            if rng.gen_bool(0.5) {
                flip_bit(&mut c.nonce, rng);
                "challenge.nonce"
            } else {
                flip_bit(&mut c.initiator_id.0 .0, rng);
                "challenge.initiator_id"
            }
        }
        Message::Response(r) => {
            flip_bit(&mut r.signature.0, rng);
            "response.signature"
        }
    }
}

/// A valid scenario with a random confirm/revoke schedule, a fleet of every
/// entity and random authentication attempts.
pub fn random_scenario(rng: &mut impl Rng, seed: u64) -> uavpki::simnet::Scenario {
    use uavpki::simnet::*;

    let n = rng.gen_range(4..=6);
    let name = |i: usize| format!("u{i}");
    let mut active: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut schedule = Vec::new();
    let mut tick = 1;
    for _ in 0..rng.gen_range(6..=18) {
        tick += rng.gen_range(0..3);
        if !active.is_empty() && rng.gen_bool(0.35) {
            let pick = *active.iter().nth(rng.gen_range(0..active.len())).unwrap();
            active.remove(&pick);
            schedule.push(ScheduleOp::Revoke {
                tick,
                issuer: name(pick.0),
                subject: name(pick.1),
            });
        } else {
            let a = rng.gen_range(0..n);
            let b = (a + rng.gen_range(1..n)) % n;
            active.insert((a, b));
            schedule.push(ScheduleOp::Confirm {
                tick,
                issuer: name(a),
                subject: name(b),
                scope: rng.gen_range(1..=3),
            });
        }
    }
    let last = tick;
    let fleet: Vec<UavSpec> = (0..n)
        .map(|i| UavSpec {
            uav: name(i),
            k_out: rng.gen_range(1..=2),
            k_in: rng.gen_range(1..=2),
            provision_tick: rng.gen_range(1..=last + 2),
        })
        .collect();
    let attempts = (0..rng.gen_range(3..=8))
        .map(|_| {
            let a = rng.gen_range(0..n);
            let b = (a + rng.gen_range(1..n)) % n;
            let ready = fleet[a].provision_tick.max(fleet[b].provision_tick);
            AttemptSpec {
                initiator: name(a),
                responder: name(b),
                tick: ready + rng.gen_range(0..10),
                expect: None,
            }
        })
        .collect();
    let scenario = Scenario {
        seed,
        genesis: SimGenesis {
            max_scope: 3,
            block_reward: 1,
            producers: vec!["gs-0".into(), "gs-1".into()],
        },
        entities: (0..n)
            .map(|i| EntitySpec {
                name: name(i),
                properties: BTreeMap::new(),
            })
            .collect(),
        schedule,
        fleet,
        attempts,
        link: LinkModel::default(),
        faults: Vec::new(),
        block_interval: 1,
        session_timeout: 50,
        max_height_drift: 10,
    };
    scenario.validate().unwrap();
    scenario
}
