use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::crypto::{AccountId, Hash256, KeyPair};

use super::block::{body_root, Block, BlockHeader};
use super::chain::Chain;
use super::genesis::GenesisConfig;
use super::tx::{Payload, Transaction};
use super::LedgerError;

/// Drives a [`Chain`] on behalf of named identities.
///
/// Identities are label-derived keys ([`KeyPair::from_label`]), so this is
/// a tool for fixtures, simulations and the CLI, not for key custody.
/// Transactions are queued and committed by [`ChainBuilder::seal`], which
/// acts as the scheduled producer for the next height.
#[derive(Debug, Clone)]
pub struct ChainBuilder {
    chain: Chain,
    keys: HashMap<String, KeyPair>,
    pending: Vec<Transaction>,
    pending_nonces: HashMap<AccountId, u64>,
}

impl ChainBuilder {
    pub fn new(genesis: GenesisConfig) -> Result<Self, LedgerError> {
        Ok(Self::from_chain(Chain::new(genesis)?))
    }

    pub fn from_chain(chain: Chain) -> Self {
        ChainBuilder {
            chain,
            keys: HashMap::new(),
            pending: Vec::new(),
            pending_nonces: HashMap::new(),
        }
    }

    pub fn chain(&self) -> &Chain {
        &self.chain
    }

    pub fn into_chain(self) -> Chain {
        self.chain
    }

    pub fn key(&mut self, name: &str) -> KeyPair {
        self.keys
            .entry(name.to_owned())
            .or_insert_with(|| KeyPair::from_label(name))
            .clone()
    }

    pub fn id(&mut self, name: &str) -> AccountId {
        self.key(name).account_id()
    }

    pub fn pending(&self) -> &[Transaction] {
        &self.pending
    }

    fn next_nonce(&self, id: &AccountId) -> u64 {
        let stored = self.chain.state().account(id).map_or(0, |a| a.nonce);
        stored + self.pending_nonces.get(id).copied().unwrap_or(0) + 1
    }

    /// Signs `payload` as `name` with the next free nonce and queues it.
    pub fn submit(&mut self, name: &str, payload: Payload) -> Result<Hash256, LedgerError> {
        let key = self.key(name);
        let id = key.account_id();
        let tx = Transaction::signed(&key, self.next_nonce(&id), payload)?;
        *self.pending_nonces.entry(id).or_default() += 1;
        let tx_id = tx.id();
        self.pending.push(tx);
        Ok(tx_id)
    }

    /// Queues an already built transaction unchanged.
    pub fn submit_raw(&mut self, tx: Transaction) {
        if let Some(sender) = tx.sender() {
            *self.pending_nonces.entry(sender).or_default() += 1;
        }
        self.pending.push(tx);
    }

    pub fn register(
        &mut self,
        name: &str,
        properties: BTreeMap<String, String>,
    ) -> Result<Hash256, LedgerError> {
        let pk = self.key(name).public_key();
        self.submit(name, Payload::register(name, pk, properties))
    }

    pub fn confirm(&mut self, issuer: &str, subject: &str, scope: u8) -> Result<Hash256, LedgerError> {
        let subject = self.id(subject);
        self.submit(issuer, Payload::Confirm { subject, scope })
    }

    pub fn revoke(&mut self, issuer: &str, subject: &str) -> Result<Hash256, LedgerError> {
        let subject = self.id(subject);
        self.submit(issuer, Payload::Revoke { subject })
    }

    pub fn transfer(&mut self, from: &str, to: &str, amount: u64) -> Result<Hash256, LedgerError> {
        let to = self.id(to);
        self.submit(from, Payload::Transfer { to, amount })
    }

    /// Queues a checkpoint transaction for a committed height, signed by `producer`.
    pub fn checkpoint(&mut self, producer: &str, at_height: u64) -> Result<Hash256, LedgerError> {
        let tip = self.chain.height();
        let (at_block, state_digest) = self
            .chain
            .header_hash(at_height)
            .zip(self.chain.state_digest_at(at_height))
            .ok_or(LedgerError::RangeError {
                height: at_height,
                tip,
            })?;
        self.submit(
            producer,
            Payload::Checkpoint {
                at_height,
                at_block,
                state_digest,
            },
        )
    }

    /// Block the scheduled producer would build from the queue, without appending it.
    pub fn propose(&self, timestamp: u64) -> Block {
        let height = self.chain.height() + 1;
        let params = &self.chain.state().params;
        let mut body = Vec::with_capacity(self.pending.len() + 1);
        if params.block_reward > 0 {
            body.push(Transaction::coinbase(height));
        }
        body.extend(self.pending.iter().cloned());
        Block {
            header: BlockHeader {
                height,
                parent_hash: self.chain.tip_hash(),
                merkle_root: body_root(&body),
                timestamp,
                producer: params.producer_for(height),
            },
            body,
        }
    }

    /// Commits the queue as the next block, timestamped with its height.
    /// The queue is cleared whether or not the block is accepted.
    pub fn seal(&mut self) -> Result<&Block, LedgerError> {
        let ts = self.chain.height() + 1;
        self.seal_at(ts)
    }

    pub fn seal_at(&mut self, timestamp: u64) -> Result<&Block, LedgerError> {
        let block = self.propose(timestamp);
        self.pending.clear();
        self.pending_nonces.clear();
        self.chain.validate_and_append(block)?;
        Ok(self.chain.tip())
    }

    pub fn apply_schedule(&mut self, schedule: &Schedule) -> Result<(), LedgerError> {
        for block in &schedule.blocks {
            for item in block {
                self.queue(item)?;
            }
            self.seal()?;
        }
        Ok(())
    }

    pub fn queue(&mut self, item: &ScheduledTx) -> Result<Hash256, LedgerError> {
        match item {
            ScheduledTx::Register { name, properties } => self.register(name, properties.clone()),
            ScheduledTx::Confirm {
                issuer,
                subject,
                scope,
            } => self.confirm(issuer, subject, *scope),
            ScheduledTx::Revoke { issuer, subject } => self.revoke(issuer, subject),
            ScheduledTx::Transfer { from, to, amount } => self.transfer(from, to, *amount),
            ScheduledTx::Checkpoint { producer, at_height } => self.checkpoint(producer, *at_height),
        }
    }
}

/// A transaction in a JSON schedule, naming identities by label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduledTx {
    Register {
        name: String,
        #[serde(default)]
        properties: BTreeMap<String, String>,
    },
    Confirm {
        issuer: String,
        subject: String,
        scope: u8,
    },
    Revoke {
        issuer: String,
        subject: String,
    },
    Transfer {
        from: String,
        to: String,
        amount: u64,
    },
    Checkpoint {
        producer: String,
        at_height: u64,
    },
}

/// Transactions grouped into consecutive blocks.
///
/// ```json
/// { "blocks": [
///     [ { "op": "register", "name": "A", "properties": { "type": "uav" } },
///       { "op": "register", "name": "B" } ],
///     [ { "op": "confirm", "issuer": "A", "subject": "B", "scope": 3 } ] ] }
/// ```
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    pub blocks: Vec<Vec<ScheduledTx>>,
}
