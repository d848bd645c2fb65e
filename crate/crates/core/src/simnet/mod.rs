//! Deterministic discrete-event simulation.
//!
//! Full nodes produce blocks from a transaction schedule, ground stations
//! provision UAVs with bundles, and UAVs run authentication sessions over a
//! lossy link. Time is a logical tick counter and every random draw comes
//! from one generator seeded by the scenario, so a scenario and seed fully
//! determine the report.

mod engine;
mod report;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::authproto::AbortReason;
use crate::ledger::DEFAULT_MAX_SCOPE;

pub use engine::{run_scenario, run_scenario_detailed, AttemptTrace, SimRun};
pub use report::{AttemptReport, SimReport, UavReport};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("fault target not in scenario: {0}")]
    UnknownTarget(String),
    #[error("cannot read scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse scenario: {0}")]
    Parse(#[from] serde_json::Error),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, SimError> {
    Err(SimError::InvalidScenario(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Authenticated,
    Aborted(AbortReason),
    Timeout,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Authenticated => f.write_str("authenticated"),
            Outcome::Aborted(r) => write!(f, "aborted({r:?})"),
            Outcome::Timeout => f.write_str("timeout"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimGenesis {
    #[serde(default = "default_max_scope")]
    pub max_scope: u8,
    #[serde(default)]
    pub block_reward: u64,
    pub producers: Vec<String>,
}

fn default_max_scope() -> u8 {
    DEFAULT_MAX_SCOPE
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntitySpec {
    pub name: String,
    #[serde(default)]
    pub properties: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleOp {
    Confirm {
        tick: u64,
        issuer: String,
        subject: String,
        scope: u8,
    },
    Revoke {
        tick: u64,
        issuer: String,
        subject: String,
    },
}

impl ScheduleOp {
    pub fn tick(&self) -> u64 {
        match self {
            ScheduleOp::Confirm { tick, .. } | ScheduleOp::Revoke { tick, .. } => *tick,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UavSpec {
    pub uav: String,
    pub k_out: u8,
    pub k_in: u8,
    pub provision_tick: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttemptSpec {
    pub initiator: String,
    pub responder: String,
    pub tick: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<Outcome>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkModel {
    #[serde(default = "default_latency")]
    pub latency: u64,
    #[serde(default)]
    pub drop: f64,
    #[serde(default)]
    pub corrupt: f64,
}

fn default_latency() -> u64 {
    1
}

impl Default for LinkModel {
    fn default() -> Self {
        LinkModel {
            latency: 1,
            drop: 0.0,
            corrupt: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Fault {
    /// Flip one random byte of the UAV's bundle in transit to it.
    CorruptBundle { uav: String },
    /// The UAV's ground station provisions from the chain as it was before
    /// the most recent revocation.
    WithholdRevocation { uav: String },
    /// The UAV answers challenges with a key other than its registered one.
    ImpersonateKey { uav: String },
    /// Messages of one attempt are lost with the given probability.
    DropMessage { attempt: usize, probability: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub seed: u64,
    pub genesis: SimGenesis,
    pub entities: Vec<EntitySpec>,
    #[serde(default)]
    pub schedule: Vec<ScheduleOp>,
    pub fleet: Vec<UavSpec>,
    #[serde(default)]
    pub attempts: Vec<AttemptSpec>,
    #[serde(default)]
    pub link: LinkModel,
    #[serde(default)]
    pub faults: Vec<Fault>,
    #[serde(default = "default_block_interval")]
    pub block_interval: u64,
    #[serde(default = "default_session_timeout")]
    pub session_timeout: u64,
    #[serde(default = "default_drift")]
    pub max_height_drift: u64,
}

fn default_block_interval() -> u64 {
    1
}

fn default_session_timeout() -> u64 {
    50
}

fn default_drift() -> u64 {
    crate::authproto::DEFAULT_MAX_HEIGHT_DRIFT
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let scenario: Scenario = serde_json::from_str(text)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenarios serialize")
    }

    /// Schedule ops in the order they reach the ledger: by tick, then by
    /// position in the file.
    pub fn ordered_schedule(&self) -> Vec<&ScheduleOp> {
        let mut ops: Vec<&ScheduleOp> = self.schedule.iter().collect();
        ops.sort_by_key(|op| op.tick());
        ops
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.genesis.producers.is_empty() {
            return invalid("at least one producer is required");
        }
        if self.genesis.max_scope == 0 {
            return invalid("max_scope must be at least 1");
        }
        let mut names = BTreeSet::new();
        for e in &self.entities {
            if e.name.is_empty() || !names.insert(e.name.as_str()) {
                return invalid(format!("entity name `{}` is empty or repeated", e.name));
            }
        }
        let known = |n: &str| -> Result<(), SimError> {
            if names.contains(n) {
                Ok(())
            } else {
                invalid(format!("`{n}` is not a declared entity"))
            }
        };

        // Replays the confirm/revoke rules so that every scheduled
        // transaction is accepted by the ledger.
        let mut active = BTreeSet::new();
        for op in self.ordered_schedule() {
            match op {
                ScheduleOp::Confirm {
                    issuer,
                    subject,
                    scope,
                    ..
                } => {
                    known(issuer)?;
                    known(subject)?;
                    if issuer == subject {
                        return invalid(format!("`{issuer}` confirms itself"));
                    }
                    if *scope == 0 || *scope > self.genesis.max_scope {
                        return invalid(format!("scope {scope} outside 1..={}", self.genesis.max_scope));
                    }
                    active.insert((issuer, subject));
                }
                ScheduleOp::Revoke { issuer, subject, .. } => {
                    known(issuer)?;
                    known(subject)?;
                    if !active.remove(&(issuer, subject)) {
                        return invalid(format!("`{issuer}` revokes `{subject}` without a confirmation"));
                    }
                }
            }
        }

        let mut fleet = BTreeMap::new();
        for u in &self.fleet {
            known(&u.uav)?;
            if u.k_out > self.genesis.max_scope || u.k_in > self.genesis.max_scope {
                return invalid(format!("view depth of `{}` exceeds max_scope", u.uav));
            }
            if fleet.insert(u.uav.as_str(), u).is_some() {
                return invalid(format!("UAV `{}` listed twice", u.uav));
            }
        }
        for (i, a) in self.attempts.iter().enumerate() {
            let (Some(ini), Some(res)) = (fleet.get(a.initiator.as_str()), fleet.get(a.responder.as_str()))
            else {
                return invalid(format!("attempt {i} names a party outside the fleet"));
            };
            if a.initiator == a.responder {
                return invalid(format!("attempt {i} pairs a UAV with itself"));
            }
            if a.tick < ini.provision_tick.max(res.provision_tick) {
                return invalid(format!("attempt {i} starts before both parties are provisioned"));
            }
        }
        for p in [self.link.drop, self.link.corrupt] {
            if !(0.0..=1.0).contains(&p) {
                return invalid("link probabilities must lie in [0, 1]");
            }
        }
        if self.block_interval == 0 || self.session_timeout == 0 {
            return invalid("block_interval and session_timeout must be positive");
        }
        for f in &self.faults {
            self.check_target(f)
                .map_err(|e| SimError::InvalidScenario(e.to_string()))?;
        }
        Ok(())
    }

    fn check_target(&self, fault: &Fault) -> Result<(), SimError> {
        match fault {
            Fault::CorruptBundle { uav }
            | Fault::WithholdRevocation { uav }
            | Fault::ImpersonateKey { uav } => {
                if !self.fleet.iter().any(|u| &u.uav == uav) {
                    return Err(SimError::UnknownTarget(uav.clone()));
                }
            }
            Fault::DropMessage { attempt, probability } => {
                if *attempt >= self.attempts.len() {
                    return Err(SimError::UnknownTarget(format!("attempt {attempt}")));
                }
                if !(0.0..=1.0).contains(probability) {
                    return Err(SimError::UnknownTarget(format!("probability {probability}")));
                }
            }
        }
        Ok(())
    }
}

/// Returns `scenario` with `fault` scheduled.
pub fn inject_fault(scenario: &Scenario, fault: Fault) -> Result<Scenario, SimError> {
    scenario.check_target(&fault)?;
    let mut out = scenario.clone();
    out.faults.push(fault);
    Ok(out)
}
