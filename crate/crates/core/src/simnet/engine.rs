use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::authproto::{AbortReason, AuthSession, Message, SessionConfig, SessionState, VerifiedPath};
use crate::crypto::KeyPair;
use crate::ledger::{Chain, ChainBuilder, GenesisConfig, ScheduledTx, TxType};
use crate::lightclient::{make_bundle_at, Bundle, LightClient};
use crate::selection::ViewSpec;

use super::report::{AttemptReport, SimReport, UavReport};
use super::{Fault, Outcome, Scenario, ScheduleOp, SimError};

/// What one attempt relied on, for checks beyond the report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttemptTrace {
    pub verified: Option<VerifiedPath>,
    pub initiator_height: Option<u64>,
    pub responder_height: Option<u64>,
}

/// A report together with the final chain and per-attempt traces.
#[derive(Debug, Clone)]
pub struct SimRun {
    pub report: SimReport,
    pub traces: Vec<AttemptTrace>,
    pub chain: Chain,
}

pub fn run_scenario(scenario: &Scenario) -> Result<SimReport, SimError> {
    run_scenario_detailed(scenario).map(|run| run.report)
}

pub fn run_scenario_detailed(scenario: &Scenario) -> Result<SimRun, SimError> {
    scenario.validate()?;
    let mut sim = Sim::new(scenario)?;
    sim.run()?;
    Ok(sim.finish())
}

// Events at one tick run in class order: ledger first, then provisioning,
// then sessions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Class {
    Queue,
    Seal,
    Provision,
    Start,
    Deliver,
    Timeout,
}

#[derive(Debug)]
enum Event {
    Queue(ScheduledTx),
    Seal,
    Provision(usize),
    Start(usize),
    Deliver {
        attempt: usize,
        to_initiator: bool,
        bytes: Vec<u8>,
    },
    TimeoutCheck(usize),
}

struct Uav {
    name: String,
    spec: ViewSpec,
    client: Option<LightClient>,
    report: UavReport,
}

struct Attempt {
    initiator: usize,
    responder: usize,
    started: u64,
    finished: Option<u64>,
    outcome: Option<Outcome>,
    last_progress: u64,
    sessions: Option<(AuthSession, AuthSession)>,
}

struct Sim<'a> {
    scenario: &'a Scenario,
    rng: ChaCha8Rng,
    builder: ChainBuilder,
    queue: BTreeMap<(u64, Class, u64), Event>,
    seq: u64,
    seal_ticks: BTreeSet<u64>,
    uavs: Vec<Uav>,
    attempts: Vec<Attempt>,
    now: u64,
}

impl<'a> Sim<'a> {
    fn new(scenario: &'a Scenario) -> Result<Self, SimError> {
        let producers: Vec<&str> = scenario.genesis.producers.iter().map(String::as_str).collect();
        let genesis = GenesisConfig::with_label_producers(
            scenario.genesis.max_scope,
            scenario.genesis.block_reward,
            &producers,
        );
        let builder = ChainBuilder::new(genesis).map_err(|e| SimError::InvalidScenario(e.to_string()))?;
        let uavs = scenario
            .fleet
            .iter()
            .map(|u| Uav {
                name: u.uav.clone(),
                spec: ViewSpec {
                    owner: KeyPair::from_label(&u.uav).account_id(),
                    k_out: u.k_out,
                    k_in: u.k_in,
                },
                client: None,
                report: UavReport {
                    name: u.uav.clone(),
                    ..UavReport::default()
                },
            })
            .collect();
        let index: BTreeMap<&str, usize> = scenario
            .fleet
            .iter()
            .enumerate()
            .map(|(i, u)| (u.uav.as_str(), i))
            .collect();
        let attempts = scenario
            .attempts
            .iter()
            .map(|a| Attempt {
                initiator: index[a.initiator.as_str()],
                responder: index[a.responder.as_str()],
                started: a.tick,
                finished: None,
                outcome: None,
                last_progress: a.tick,
                sessions: None,
            })
            .collect();

        let mut sim = Sim {
            scenario,
            rng: ChaCha8Rng::seed_from_u64(scenario.seed),
            builder,
            queue: BTreeMap::new(),
            seq: 0,
            seal_ticks: BTreeSet::new(),
            uavs,
            attempts,
            now: 0,
        };
        for e in &scenario.entities {
            sim.push(
                0,
                Class::Queue,
                Event::Queue(ScheduledTx::Register {
                    name: e.name.clone(),
                    properties: e.properties.clone(),
                }),
            );
        }
        for op in scenario.ordered_schedule() {
            let tx = match op {
                ScheduleOp::Confirm {
                    issuer,
                    subject,
                    scope,
                    ..
                } => ScheduledTx::Confirm {
                    issuer: issuer.clone(),
                    subject: subject.clone(),
                    scope: *scope,
                },
                ScheduleOp::Revoke { issuer, subject, .. } => ScheduledTx::Revoke {
                    issuer: issuer.clone(),
                    subject: subject.clone(),
                },
            };
            sim.push(op.tick(), Class::Queue, Event::Queue(tx));
        }
        for (i, u) in scenario.fleet.iter().enumerate() {
            sim.push(u.provision_tick, Class::Provision, Event::Provision(i));
        }
        for (i, a) in scenario.attempts.iter().enumerate() {
            sim.push(a.tick, Class::Start, Event::Start(i));
        }
        Ok(sim)
    }

    fn push(&mut self, tick: u64, class: Class, event: Event) {
        self.queue.insert((tick, class, self.seq), event);
        self.seq += 1;
    }

    fn has_fault(&self, pred: impl Fn(&Fault) -> bool) -> bool {
        self.scenario.faults.iter().any(pred)
    }

    fn run(&mut self) -> Result<(), SimError> {
        while let Some(((tick, _, _), event)) = self.queue.pop_first() {
            self.now = tick;
            match event {
                Event::Queue(tx) => {
                    self.builder
                        .queue(&tx)
                        .map_err(|e| SimError::InvalidScenario(e.to_string()))?;
                    let interval = self.scenario.block_interval;
                    let seal_at = tick.div_ceil(interval) * interval;
                    if self.seal_ticks.insert(seal_at) {
                        self.push(seal_at, Class::Seal, Event::Seal);
                    }
                }
                Event::Seal => {
                    self.builder
                        .seal_at(tick)
                        .map_err(|e| SimError::InvalidScenario(format!("block at tick {tick}: {e}")))?;
                }
                Event::Provision(u) => self.provision(u),
                Event::Start(a) => self.start(a),
                Event::Deliver {
                    attempt,
                    to_initiator,
                    bytes,
                } => self.deliver(attempt, to_initiator, &bytes),
                Event::TimeoutCheck(a) => {
                    let at = &mut self.attempts[a];
                    if at.outcome.is_none() && tick >= at.last_progress + self.scenario.session_timeout {
                        at.outcome = Some(Outcome::Timeout);
                        at.finished = Some(tick);
                    }
                }
            }
        }
        Ok(())
    }

    fn provision(&mut self, u: usize) {
        let chain = self.builder.chain();
        let name = self.uavs[u].name.clone();
        let mut height = chain.height();
        if self.has_fault(|f| matches!(f, Fault::WithholdRevocation { uav } if *uav == name)) {
            if let Some((loc, _)) = chain.txs_of_type(TxType::Revoke).last() {
                height = loc.height - 1;
            }
        }
        let Ok(bundle) = make_bundle_at(chain, self.uavs[u].spec, height) else {
            return;
        };
        let mut bytes = bundle.to_file_bytes().expect("bundles encode");
        if self.has_fault(|f| matches!(f, Fault::CorruptBundle { uav } if *uav == name)) {
            let i = self.rng.gen_range(0..bytes.len());
            bytes[i] ^= self.rng.gen_range(1..=255u8);
        }
        let genesis = chain.genesis_hash();
        let client = Bundle::from_file_bytes(&bytes)
            .ok()
            .and_then(|b| LightClient::from_bundle_anchored(&b, &genesis).ok());
        let uav = &mut self.uavs[u];
        uav.report.bundle_bytes = bytes.len() as u64;
        if let Some(c) = &client {
            uav.report.provisioned = true;
            uav.report.as_of_height = Some(c.as_of_height());
            uav.report.view_nodes = c.view().graph.node_count() as u64;
            uav.report.view_edges = c.view().graph.edge_count() as u64;
        }
        uav.client = client;
    }

    fn config(&self) -> SessionConfig {
        SessionConfig {
            max_height_drift: self.scenario.max_height_drift,
        }
    }

    fn start(&mut self, a: usize) {
        let (i, r) = (self.attempts[a].initiator, self.attempts[a].responder);
        let (Some(_), Some(responder_client)) = (&self.uavs[i].client, &self.uavs[r].client) else {
            self.conclude(a, Outcome::Aborted(AbortReason::IntegrityFailure));
            return;
        };
        let r_name = &self.uavs[r].name;
        let key = if self.has_fault(|f| matches!(f, Fault::ImpersonateKey { uav } if uav == r_name)) {
            KeyPair::from_label(&format!("{r_name}/impostor"))
        } else {
            KeyPair::from_label(r_name)
        };
        let init = AuthSession::initiator(self.uavs[i].spec.owner, self.config());
        let mut resp = AuthSession::responder(responder_client.owner(), key, self.config());
        let hello = resp.start(responder_client).expect("fresh responder session");
        self.attempts[a].sessions = Some((init, resp));
        self.progress(a);
        self.send(a, true, &hello);
    }

    fn conclude(&mut self, a: usize, outcome: Outcome) {
        let at = &mut self.attempts[a];
        at.outcome = Some(outcome);
        at.finished = Some(self.now);
    }

    fn progress(&mut self, a: usize) {
        self.attempts[a].last_progress = self.now;
        let due = self.now + self.scenario.session_timeout;
        self.push(due, Class::Timeout, Event::TimeoutCheck(a));
    }

    fn send(&mut self, a: usize, to_initiator: bool, msg: &Message) {
        let at = &self.attempts[a];
        let from = if to_initiator { at.responder } else { at.initiator };
        let mut bytes = msg.to_wire();
        let sender = &mut self.uavs[from].report;
        sender.messages_sent += 1;
        sender.bytes_sent += bytes.len() as u64;

        let extra = self
            .scenario
            .faults
            .iter()
            .filter_map(|f| match f {
                Fault::DropMessage { attempt, probability } if *attempt == a => Some(*probability),
                _ => None,
            })
            .fold(0.0, |acc: f64, p| 1.0 - (1.0 - acc) * (1.0 - p));
        let p_drop = 1.0 - (1.0 - self.scenario.link.drop) * (1.0 - extra);
        if self.rng.gen_bool(p_drop.clamp(0.0, 1.0)) {
            return;
        }
        if self.rng.gen_bool(self.scenario.link.corrupt) {
            let i = self.rng.gen_range(0..bytes.len());
            bytes[i] ^= self.rng.gen_range(1..=255u8);
        }
        let due = self.now + self.scenario.link.latency;
        self.push(
            due,
            Class::Deliver,
            Event::Deliver {
                attempt: a,
                to_initiator,
                bytes,
            },
        );
    }

    fn deliver(&mut self, a: usize, to_initiator: bool, bytes: &[u8]) {
        if self.attempts[a].outcome.is_some() {
            return;
        }
        let at = &mut self.attempts[a];
        let receiver = if to_initiator { at.initiator } else { at.responder };
        let (init, resp) = at.sessions.as_mut().expect("started attempts have sessions");
        let report = &mut self.uavs[receiver].report;
        report.messages_received += 1;
        report.bytes_received += bytes.len() as u64;
        let client = self.uavs[receiver]
            .client
            .as_ref()
            .expect("parties are provisioned");
        let session = if to_initiator { init } else { resp };
        let Ok(reply) = session.handle_wire(client, bytes, &mut self.rng) else {
            return;
        };
        let state = init_state(at);
        self.progress(a);
        if let Some(msg) = reply {
            self.send(a, !to_initiator, &msg);
        }
        match state {
            SessionState::Authenticated => self.conclude(a, Outcome::Authenticated),
            SessionState::Aborted(reason) => self.conclude(a, Outcome::Aborted(reason)),
            _ => {}
        }
    }

    fn finish(self) -> SimRun {
        let mut attempts = Vec::new();
        let mut traces = Vec::new();
        for (spec, at) in self.scenario.attempts.iter().zip(&self.attempts) {
            let verified = at
                .sessions
                .as_ref()
                .and_then(|(init, _)| init.verified_path().cloned());
            attempts.push(AttemptReport {
                initiator: spec.initiator.clone(),
                responder: spec.responder.clone(),
                started: at.started,
                finished: at.finished,
                outcome: at.outcome.unwrap_or(Outcome::Timeout),
                expected: spec.expect,
                path_len: verified.as_ref().map(|v| v.path.len()),
            });
            traces.push(AttemptTrace {
                verified,
                initiator_height: self.uavs[at.initiator]
                    .client
                    .as_ref()
                    .map(LightClient::as_of_height),
                responder_height: self.uavs[at.responder]
                    .client
                    .as_ref()
                    .map(LightClient::as_of_height),
            });
        }
        let chain = self.builder.into_chain();
        let report = SimReport {
            seed: self.scenario.seed,
            attempts,
            uavs: self.uavs.into_iter().map(|u| u.report).collect(),
            final_height: chain.height(),
            final_tick: self.now,
            digest: crate::crypto::Hash256::ZERO,
        }
        .seal();
        SimRun {
            report,
            traces,
            chain,
        }
    }
}

fn init_state(at: &Attempt) -> SessionState {
    at.sessions
        .as_ref()
        .map_or(SessionState::Start, |(i, _)| i.state())
}
