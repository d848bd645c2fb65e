use serde::{Deserialize, Serialize};

use crate::crypto::Hash256;

use super::Outcome;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttemptReport {
    pub initiator: String,
    pub responder: String,
    pub started: u64,
    pub finished: Option<u64>,
    pub outcome: Outcome,
    pub expected: Option<Outcome>,
    /// Edges of the verified path, when one was found.
    pub path_len: Option<usize>,
}

impl AttemptReport {
    pub fn matched(&self) -> bool {
        self.expected.is_none_or(|e| e == self.outcome)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UavReport {
    pub name: String,
    pub provisioned: bool,
    pub as_of_height: Option<u64>,
    pub bundle_bytes: u64,
    pub view_nodes: u64,
    pub view_edges: u64,
    pub messages_sent: u64,
    pub messages_received: u64,
    pub bytes_sent: u64,
    pub bytes_received: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimReport {
    pub seed: u64,
    pub attempts: Vec<AttemptReport>,
    pub uavs: Vec<UavReport>,
    pub final_height: u64,
    pub final_tick: u64,
    /// SHA-256 over [`SimReport::canonical_bytes`].
    pub digest: Hash256,
}

impl SimReport {
    pub(super) fn seal(mut self) -> Self {
        self.digest = Hash256::ZERO;
        self.digest = Hash256::digest(&self.canonical_bytes());
        self
    }

    /// Compact JSON of the report with the digest field zeroed.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut copy = self.clone();
        copy.digest = Hash256::ZERO;
        serde_json::to_vec(&copy).expect("reports serialize")
    }

    pub fn verify_digest(&self) -> bool {
        Hash256::digest(&self.canonical_bytes()) == self.digest
    }

    pub fn all_matched(&self) -> bool {
        self.attempts.iter().all(AttemptReport::matched)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}
