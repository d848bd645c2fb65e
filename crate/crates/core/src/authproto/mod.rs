//! Two-party authentication between UAVs.
//!
//! The responder announces the nodes on its incoming paths, the initiator
//! picks the ones it also reaches over its outgoing paths, the responder
//! supplies proved transactions for them, the initiator rebuilds and checks
//! a trust path to the responder, and finally the responder proves
//! possession of the key bound to the path's terminal node.
//!
//! Message order, initiator I and responder R:
//!
//! ```text
//! R -> I  Hello
//! I -> R  DataRequest
//! R -> I  PathData
//! I -> R  Challenge
//! R -> I  Response
//! ```
//!
//! The response signature covers a hash of every earlier message as seen by
//! the signer, so any change to a message in transit fails the final check.

mod messages;
mod runner;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::Encode;
use crate::crypto::{AccountId, Hash256, KeyPair, PublicKey};
use crate::lightclient::{LightClient, ProvisionedTx};
use crate::selection::{k_neighborhood, Direction, PartialGraphView};
use crate::trustgraph::{find_valid_path, TrustEdge, TrustPath};

pub use messages::{ChallengeMsg, DataRequest, HelloMsg, Message, MessageKind, PathData, ResponseMsg};
pub use runner::{run_local, run_mutual, LocalRun};

/// Default bound on the height difference between the two parties' views.
pub const DEFAULT_MAX_HEIGHT_DRIFT: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbortReason {
    NoCommonNode,
    IntegrityFailure,
    NoValidPath,
    AuthFailure,
    StaleView,
    ProtocolViolation,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AuthError {
    #[error("message {got:?} is not expected in state {state:?}")]
    StaleSession { state: SessionState, got: MessageKind },
    #[error("requested node hash {0:?} was not offered")]
    UnknownHash(Hash256),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Initiator,
    Responder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SessionState {
    Start,
    HelloSent,
    HelloReceived,
    DataRequested,
    DataSent,
    PathVerified,
    Challenged,
    Responded,
    Authenticated,
    Aborted(AbortReason),
}

impl SessionState {
    pub fn is_terminal(self) -> bool {
        matches!(
            self,
            SessionState::Authenticated | SessionState::Aborted(_) | SessionState::Responded
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SessionConfig {
    pub max_height_drift: u64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            max_height_drift: DEFAULT_MAX_HEIGHT_DRIFT,
        }
    }
}

fn registration_hashes(view: &PartialGraphView, ids: &[AccountId]) -> BTreeSet<Hash256> {
    ids.iter()
        .filter_map(|id| view.graph.node(id))
        .map(|n| n.registration_tx)
        .collect()
}

/// Registration hashes of every node on the owner's incoming paths.
pub fn make_hello(view: &PartialGraphView) -> HelloMsg {
    HelloMsg {
        responder_id: view.owner(),
        incoming_node_hashes: registration_hashes(view, &view.incoming_nodes())
            .into_iter()
            .collect(),
        as_of_height: view.as_of_height,
    }
}

/// Offered hashes that are also nodes on the initiator's outgoing paths.
pub fn find_common(initiator_view: &PartialGraphView, hello: &HelloMsg) -> BTreeSet<Hash256> {
    let ours = registration_hashes(initiator_view, &initiator_view.outgoing_nodes());
    hello
        .incoming_node_hashes
        .iter()
        .filter(|h| ours.contains(h))
        .copied()
        .collect()
}

/// For each requested node: the part of the responder's incoming view that
/// lies downstream of it, as proved registrations and confirmations, plus
/// held revocations issued by any of those nodes.
pub fn serve_request(responder: &LightClient, req: &DataRequest) -> Result<PathData, AuthError> {
    let view = responder.view();
    let owner = view.owner();
    let incoming = k_neighborhood(&view.graph, &owner, view.spec.k_in as usize, Direction::Incoming)
        .expect("owner is in its own view");
    let by_hash: BTreeMap<Hash256, AccountId> = incoming.nodes().map(|n| (n.registration_tx, n.id)).collect();

    let mut nodes = BTreeSet::new();
    let mut edges: BTreeSet<Hash256> = BTreeSet::new();
    for hash in &req.requested_node_hashes {
        let start = *by_hash.get(hash).ok_or(AuthError::UnknownHash(*hash))?;
        let mut queue = VecDeque::from([start]);
        nodes.insert(start);
        while let Some(u) = queue.pop_front() {
            if u == owner {
                continue;
            }
            for e in incoming.out_edges(&u) {
                edges.insert(e.tx_id);
                if nodes.insert(e.subject) {
                    queue.push_back(e.subject);
                }
            }
        }
    }

    let wanted: BTreeSet<Hash256> = nodes
        .iter()
        .map(|id| {
            incoming
                .node(id)
                .expect("visited nodes are in the view")
                .registration_tx
        })
        .chain(edges)
        .collect();
    let txs = responder
        .provisioned()
        .iter()
        .filter(|ptx| {
            wanted.contains(&ptx.tx.id())
                || matches!(
                    (ptx.tx.sender(), ptx.tx.tx_type()),
                    (Some(issuer), crate::ledger::TxType::Revoke) if nodes.contains(&issuer)
                )
        })
        .cloned()
        .collect();
    Ok(PathData { txs })
}

/// A trust path checked against locally held headers, with the key bound
/// to its terminal node and the edges it uses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifiedPath {
    pub path: TrustPath,
    pub edges: Vec<TrustEdge>,
    pub responder_key: PublicKey,
}

/// Merges the peer's transactions into the local view and searches a valid
/// path from initiator to responder. Transactions above the local tip
/// cannot be checked and are ignored.
pub fn verify_path(
    initiator: &LightClient,
    data: &PathData,
    initiator_id: &AccountId,
    responder_id: &AccountId,
) -> Result<VerifiedPath, AbortReason> {
    let tip = initiator.as_of_height();
    let usable: Vec<ProvisionedTx> = data
        .txs
        .iter()
        .filter(|ptx| ptx.block_height <= tip)
        .cloned()
        .collect();
    let graph = initiator
        .ingest_peer_data(&usable)
        .map_err(|_| AbortReason::IntegrityFailure)?;
    let path = find_valid_path(&graph, initiator_id, responder_id)
        .ok()
        .flatten()
        .ok_or(AbortReason::NoValidPath)?;
    let edges = path
        .hops()
        .map(|(a, b)| *graph.edge(&a, &b).expect("path edges exist"))
        .collect();
    let responder_key = graph.node(responder_id).expect("path target exists").public_key;
    Ok(VerifiedPath {
        path,
        edges,
        responder_key,
    })
}

/// What the responder's signature commits to besides the nonce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResponseContext {
    pub initiator: AccountId,
    pub responder: AccountId,
    pub as_of_height: u64,
    pub transcript: Hash256,
}

fn response_message(challenge: &ChallengeMsg, ctx: &ResponseContext) -> Vec<u8> {
    let mut out = b"uavpki/auth-response/v1".to_vec();
    out.extend_from_slice(&challenge.nonce);
    out.extend_from_slice(ctx.initiator.0.as_bytes());
    out.extend_from_slice(ctx.responder.0.as_bytes());
    out.extend_from_slice(&ctx.as_of_height.to_be_bytes());
    out.extend_from_slice(ctx.transcript.as_bytes());
    out
}

pub fn challenge(initiator_id: AccountId, rng: &mut dyn RngCore) -> ChallengeMsg {
    let mut nonce = [0u8; 32];
    rng.fill_bytes(&mut nonce);
    ChallengeMsg { initiator_id, nonce }
}

pub fn respond(key: &KeyPair, challenge: &ChallengeMsg, ctx: &ResponseContext) -> ResponseMsg {
    ResponseMsg {
        signature: key.sign(&response_message(challenge, ctx)),
    }
}

pub fn verify_response(
    key: &PublicKey,
    challenge: &ChallengeMsg,
    ctx: &ResponseContext,
    response: &ResponseMsg,
) -> bool {
    key.verify(&response_message(challenge, ctx), &response.signature)
}

/// One side of one authentication attempt.
#[derive(Debug, Clone)]
pub struct AuthSession {
    role: Role,
    state: SessionState,
    me: AccountId,
    key: Option<KeyPair>,
    config: SessionConfig,
    peer: Option<AccountId>,
    peer_height: Option<u64>,
    offered: BTreeSet<Hash256>,
    challenge: Option<ChallengeMsg>,
    verified: Option<VerifiedPath>,
    transcript: Vec<u8>,
}

impl AuthSession {
    pub fn initiator(me: AccountId, config: SessionConfig) -> Self {
        Self::new(Role::Initiator, me, None, config)
    }

    /// `key` signs the final response; an honest responder passes the key
    /// registered for `me`.
    pub fn responder(me: AccountId, key: KeyPair, config: SessionConfig) -> Self {
        Self::new(Role::Responder, me, Some(key), config)
    }

    fn new(role: Role, me: AccountId, key: Option<KeyPair>, config: SessionConfig) -> Self {
        AuthSession {
            role,
            state: SessionState::Start,
            me,
            key,
            config,
            peer: None,
            peer_height: None,
            offered: BTreeSet::new(),
            challenge: None,
            verified: None,
            transcript: Vec::new(),
        }
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    pub fn peer(&self) -> Option<AccountId> {
        self.peer
    }

    pub fn verified_path(&self) -> Option<&VerifiedPath> {
        self.verified.as_ref()
    }

    pub fn nonce(&self) -> Option<[u8; 32]> {
        self.challenge.map(|c| c.nonce)
    }

    fn record(&mut self, msg: &Message) {
        let bytes = msg.to_wire();
        self.transcript
            .extend_from_slice(&(bytes.len() as u32).to_be_bytes());
        self.transcript.extend_from_slice(&bytes);
    }

    pub fn transcript_hash(&self) -> Hash256 {
        Hash256::tagged(b"uavpki/transcript/v1", &[&self.transcript])
    }

    fn abort(&mut self, reason: AbortReason) -> Option<Message> {
        self.state = SessionState::Aborted(reason);
        None
    }

    fn unexpected(&self, got: MessageKind) -> AuthError {
        AuthError::StaleSession {
            state: self.state,
            got,
        }
    }

    /// Responder only: opens the session with a Hello.
    pub fn start(&mut self, client: &LightClient) -> Result<Message, AuthError> {
        if self.role != Role::Responder || self.state != SessionState::Start {
            return Err(self.unexpected(MessageKind::Hello));
        }
        let hello = make_hello(client.view());
        self.offered = hello.incoming_node_hashes.iter().copied().collect();
        let msg = Message::Hello(hello);
        self.record(&msg);
        self.state = SessionState::HelloSent;
        Ok(msg)
    }

    /// Feeds one incoming message. Returns the reply, if any. A message that
    /// does not fit the current state is refused and changes nothing.
    pub fn handle(
        &mut self,
        client: &LightClient,
        msg: &Message,
        rng: &mut dyn RngCore,
    ) -> Result<Option<Message>, AuthError> {
        match (self.role, self.state, msg) {
            (Role::Initiator, SessionState::Start, Message::Hello(hello)) => {
                self.record(msg);
                self.state = SessionState::HelloReceived;
                self.peer = Some(hello.responder_id);
                self.peer_height = Some(hello.as_of_height);
                if hello.as_of_height.abs_diff(client.as_of_height()) > self.config.max_height_drift {
                    return Ok(self.abort(AbortReason::StaleView));
                }
                let common = find_common(client.view(), hello);
                if common.is_empty() {
                    return Ok(self.abort(AbortReason::NoCommonNode));
                }
                let reply = Message::DataRequest(DataRequest {
                    requested_node_hashes: common.into_iter().collect(),
                });
                self.record(&reply);
                self.state = SessionState::DataRequested;
                Ok(Some(reply))
            }
            (Role::Initiator, SessionState::DataRequested, Message::PathData(data)) => {
                self.record(msg);
                let responder = self.peer.expect("set on hello");
                match verify_path(client, data, &self.me, &responder) {
                    Err(reason) => Ok(self.abort(reason)),
                    Ok(verified) => {
                        self.verified = Some(verified);
                        self.state = SessionState::PathVerified;
                        let c = challenge(self.me, rng);
                        self.challenge = Some(c);
                        let reply = Message::Challenge(c);
                        self.record(&reply);
                        self.state = SessionState::Challenged;
                        Ok(Some(reply))
                    }
                }
            }
            (Role::Initiator, SessionState::Challenged, Message::Response(response)) => {
                let ctx = ResponseContext {
                    initiator: self.me,
                    responder: self.peer.expect("set on hello"),
                    as_of_height: self.peer_height.expect("set on hello"),
                    transcript: self.transcript_hash(),
                };
                let challenge = self.challenge.expect("set when challenged");
                let key = self.verified.as_ref().expect("set when verified").responder_key;
                if verify_response(&key, &challenge, &ctx, response) {
                    self.state = SessionState::Authenticated;
                    Ok(None)
                } else {
                    Ok(self.abort(AbortReason::AuthFailure))
                }
            }
            (Role::Responder, SessionState::HelloSent, Message::DataRequest(req)) => {
                self.record(msg);
                if !req.requested_node_hashes.iter().all(|h| self.offered.contains(h)) {
                    return Ok(self.abort(AbortReason::ProtocolViolation));
                }
                let data = match serve_request(client, req) {
                    Ok(data) => data,
                    Err(_) => return Ok(self.abort(AbortReason::ProtocolViolation)),
                };
                let reply = Message::PathData(data);
                self.record(&reply);
                self.state = SessionState::DataSent;
                Ok(Some(reply))
            }
            (Role::Responder, SessionState::DataSent, Message::Challenge(c)) => {
                self.record(msg);
                self.peer = Some(c.initiator_id);
                let ctx = ResponseContext {
                    initiator: c.initiator_id,
                    responder: self.me,
                    as_of_height: client.as_of_height(),
                    transcript: self.transcript_hash(),
                };
                self.challenge = Some(*c);
                let key = self.key.as_ref().expect("responders hold a key");
                let reply = Message::Response(respond(key, c, &ctx));
                self.state = SessionState::Responded;
                Ok(Some(reply))
            }
            _ => Err(self.unexpected(msg.kind())),
        }
    }

    /// As [`AuthSession::handle`] for raw wire bytes. Undecodable input
    /// aborts the session.
    pub fn handle_wire(
        &mut self,
        client: &LightClient,
        bytes: &[u8],
        rng: &mut dyn RngCore,
    ) -> Result<Option<Message>, AuthError> {
        if self.state.is_terminal() {
            return Err(AuthError::StaleSession {
                state: self.state,
                got: bytes
                    .first()
                    .and_then(|t| MessageKind::ALL.get((*t as usize).wrapping_sub(1)).copied())
                    .unwrap_or(MessageKind::Hello),
            });
        }
        match Message::from_wire(bytes) {
            Ok(msg) => self.handle(client, &msg, rng),
            Err(_) => Ok(self.abort(AbortReason::ProtocolViolation)),
        }
    }
}

/// Encoded size of a message on the wire.
pub fn wire_len(msg: &Message) -> usize {
    msg.to_canonical_bytes().map_or(0, |b| b.len())
}
