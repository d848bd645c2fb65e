use rand::RngCore;

use crate::crypto::KeyPair;
use crate::lightclient::LightClient;

use super::{AuthSession, Message, SessionConfig, SessionState, VerifiedPath};

/// Result of an in-process exchange.
#[derive(Debug, Clone)]
pub struct LocalRun {
    pub initiator: SessionState,
    pub responder: SessionState,
    /// Messages as delivered, after tampering.
    pub messages: Vec<Message>,
    pub verified: Option<VerifiedPath>,
}

impl LocalRun {
    pub fn authenticated(&self) -> bool {
        self.initiator == SessionState::Authenticated
    }
}

/// Runs one authentication with no transport in between. `tamper` sees
/// every message (numbered from 0) before delivery and may change it.
pub fn run_local(
    initiator: &LightClient,
    responder: &LightClient,
    responder_key: &KeyPair,
    config: SessionConfig,
    rng: &mut dyn RngCore,
    tamper: &mut dyn FnMut(usize, &mut Message),
) -> LocalRun {
    let mut i = AuthSession::initiator(initiator.owner(), config);
    let mut r = AuthSession::responder(responder.owner(), responder_key.clone(), config);
    let mut messages = Vec::new();
    let mut next = r.start(responder).ok();
    let mut to_initiator = true;
    while let Some(mut msg) = next.take() {
        tamper(messages.len(), &mut msg);
        messages.push(msg.clone());
        let reply = if to_initiator {
            i.handle(initiator, &msg, rng)
        } else {
            r.handle(responder, &msg, rng)
        };
        next = reply.ok().flatten();
        to_initiator = !to_initiator;
    }
    LocalRun {
        initiator: i.state(),
        responder: r.state(),
        messages,
        verified: i.verified_path().cloned(),
    }
}

/// Both directions: `a` authenticates `b`, then `b` authenticates `a`.
pub fn run_mutual(
    a: (&LightClient, &KeyPair),
    b: (&LightClient, &KeyPair),
    config: SessionConfig,
    rng: &mut dyn RngCore,
) -> (LocalRun, LocalRun) {
    let ab = run_local(a.0, b.0, b.1, config, rng, &mut |_, _| {});
    let ba = run_local(b.0, a.0, a.1, config, rng, &mut |_, _| {});
    (ab, ba)
}
