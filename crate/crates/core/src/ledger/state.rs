use std::collections::BTreeMap;

use thiserror::Error;

use crate::codec::{self, read_string_map, write_string_map, CodecError, Decode, Encode, Reader, Writer};
use crate::crypto::{AccountId, Hash256, PublicKey};

use super::tx::{Payload, Transaction, MAX_NAME_LEN, MAX_PROPERTIES, MAX_PROPERTY_LEN};

pub const MAX_PRODUCERS: usize = 1024;
const MAX_ACCOUNTS: usize = 1 << 24;

/// Chain-wide constants fixed by the genesis configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainParams {
    /// Largest scope a confirmation may carry (the trust model's `m`).
    pub max_scope: u8,
    pub block_reward: u64,
    /// Round-robin block producers, in genesis order.
    pub producers: Vec<AccountId>,
}

impl ChainParams {
    /// Producer entitled to build the block at `height` (height ≥ 1).
    pub fn producer_for(&self, height: u64) -> AccountId {
        let n = self.producers.len() as u64;
        self.producers[((height.saturating_sub(1)) % n) as usize]
    }
}

impl Encode for ChainParams {
    fn encode(&self, w: &mut Writer) -> codec::Result<()> {
        w.u8(self.max_scope);
        w.u64(self.block_reward);
        w.seq("producers", &self.producers, MAX_PRODUCERS)
    }
}

impl Decode for ChainParams {
    fn decode(r: &mut Reader<'_>) -> codec::Result<Self> {
        Ok(ChainParams {
            max_scope: r.u8()?,
            block_reward: r.u64()?,
            producers: r.seq("producers", MAX_PRODUCERS)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Registration {
    pub tx_id: Hash256,
    pub height: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Account {
    pub public_key: PublicKey,
    pub name: String,
    pub properties: BTreeMap<String, String>,
    pub balance: u64,
    pub nonce: u64,
    /// Set once the account has registered as a trust-graph entity.
    /// Genesis allocations start without one.
    pub registration: Option<Registration>,
}

impl Account {
    pub fn is_entity(&self) -> bool {
        self.registration.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Confirmation {
    pub scope: u8,
    pub since_height: u64,
    pub tx_id: Hash256,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LedgerState {
    pub params: ChainParams,
    pub height: u64,
    pub accounts: BTreeMap<AccountId, Account>,
    pub confirmations: BTreeMap<(AccountId, AccountId), Confirmation>,
}

impl LedgerState {
    pub fn account(&self, id: &AccountId) -> Option<&Account> {
        self.accounts.get(id)
    }

    pub fn balance(&self, id: &AccountId) -> u64 {
        self.accounts.get(id).map_or(0, |a| a.balance)
    }

    pub fn confirmation(&self, issuer: &AccountId, subject: &AccountId) -> Option<&Confirmation> {
        self.confirmations.get(&(*issuer, *subject))
    }

    pub fn canonical_bytes(&self) -> Vec<u8> {
        self.to_canonical_bytes()
            .expect("state is built only from validated transactions")
    }

    pub fn digest(&self) -> Hash256 {
        Hash256::digest(&self.canonical_bytes())
    }
}

impl Encode for Account {
    fn encode(&self, w: &mut Writer) -> codec::Result<()> {
        self.public_key.encode(w)?;
        w.str("name", &self.name, MAX_NAME_LEN)?;
        write_string_map(
            w,
            "properties",
            &self.properties,
            MAX_PROPERTIES,
            MAX_PROPERTY_LEN,
        )?;
        w.u64(self.balance);
        w.u64(self.nonce);
        match &self.registration {
            None => w.u8(0),
            Some(reg) => {
                w.u8(1);
                reg.tx_id.encode(w)?;
                w.u64(reg.height);
            }
        }
        Ok(())
    }
}

impl Decode for Account {
    fn decode(r: &mut Reader<'_>) -> codec::Result<Self> {
        Ok(Account {
            public_key: r.decode()?,
            name: r.string("name", MAX_NAME_LEN)?,
            properties: read_string_map(r, "properties", MAX_PROPERTIES, MAX_PROPERTY_LEN)?,
            balance: r.u64()?,
            nonce: r.u64()?,
            registration: match r.u8()? {
                0 => None,
                1 => Some(Registration {
                    tx_id: r.decode()?,
                    height: r.u64()?,
                }),
                tag => {
                    return Err(CodecError::InvalidTag {
                        what: "registration",
                        tag,
                    })
                }
            },
        })
    }
}

impl Encode for LedgerState {
    fn encode(&self, w: &mut Writer) -> codec::Result<()> {
        self.params.encode(w)?;
        w.u64(self.height);
        w.len_prefix("accounts", self.accounts.len(), MAX_ACCOUNTS)?;
        for (id, account) in &self.accounts {
            id.encode(w)?;
            account.encode(w)?;
        }
        w.len_prefix("confirmations", self.confirmations.len(), MAX_ACCOUNTS)?;
        for ((issuer, subject), c) in &self.confirmations {
            issuer.encode(w)?;
            subject.encode(w)?;
            w.u8(c.scope);
            w.u64(c.since_height);
            c.tx_id.encode(w)?;
        }
        Ok(())
    }
}

impl Decode for LedgerState {
    fn decode(r: &mut Reader<'_>) -> codec::Result<Self> {
        let params = r.decode()?;
        let height = r.u64()?;
        let mut accounts = BTreeMap::new();
        for _ in 0..r.len_prefix("accounts", MAX_ACCOUNTS)? {
            let id: AccountId = r.decode()?;
            if accounts.last_key_value().is_some_and(|(last, _)| *last >= id) {
                return Err(CodecError::NonCanonical("accounts must be sorted"));
            }
            accounts.insert(id, r.decode()?);
        }
        let mut confirmations = BTreeMap::new();
        for _ in 0..r.len_prefix("confirmations", MAX_ACCOUNTS)? {
            let key: (AccountId, AccountId) = (r.decode()?, r.decode()?);
            if confirmations
                .last_key_value()
                .is_some_and(|(last, _)| *last >= key)
            {
                return Err(CodecError::NonCanonical("confirmations must be sorted"));
            }
            let c = Confirmation {
                scope: r.u8()?,
                since_height: r.u64()?,
                tx_id: r.decode()?,
            };
            confirmations.insert(key, c);
        }
        Ok(LedgerState {
            params,
            height,
            accounts,
            confirmations,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TxError {
    #[error("bad signature")]
    BadSignature,
    #[error("bad nonce: expected {expected}, got {got}")]
    BadNonce { expected: u64, got: u64 },
    #[error("unknown account {0:?}")]
    UnknownAccount(AccountId),
    #[error("account {0:?} is not a registered entity")]
    NotRegistered(AccountId),
    #[error("account {0:?} is already registered")]
    DuplicateRegistration(AccountId),
    #[error("registration sender does not match the registered public key")]
    RegistrationKeyMismatch,
    #[error("insufficient balance: need {need}, have {have}")]
    InsufficientBalance { need: u64, have: u64 },
    #[error("balance overflow")]
    BalanceOverflow,
    #[error("an entity cannot confirm itself")]
    SelfConfirmation,
    #[error("scope {scope} outside 1..={max}")]
    ScopeOutOfRange { scope: u8, max: u8 },
    #[error("no active confirmation to revoke")]
    RevokeWithoutConfirmation,
    #[error("coinbase must be the first transaction and name the block height")]
    MisplacedCoinbase,
    #[error("only block producers may issue checkpoints")]
    UnauthorizedCheckpoint,
    #[error("checkpoint must reference an earlier block")]
    CheckpointOutOfRange,
    #[error("checkpoint does not match the recomputed state")]
    CheckpointMismatch,
}

/// Position of the transaction being applied.
#[derive(Debug, Clone, Copy)]
pub struct BlockContext {
    pub height: u64,
    pub producer: AccountId,
    pub index: usize,
}

/// Lookups into already committed history, needed to validate checkpoints.
/// `None` means the height is not known to this replayer.
pub trait ChainHistory {
    fn header_hash(&self, height: u64) -> Option<Hash256>;
    fn state_digest(&self, height: u64) -> Option<Hash256>;
}

/// Applies one transaction in place. On error `state` may be partially
/// modified; callers work on a scratch copy.
pub fn apply_transaction(
    state: &mut LedgerState,
    tx: &Transaction,
    ctx: &BlockContext,
    history: &dyn ChainHistory,
) -> Result<(), TxError> {
    if let Payload::Coinbase { height } = tx.payload() {
        if ctx.index != 0 || *height != ctx.height {
            return Err(TxError::MisplacedCoinbase);
        }
        let reward = state.params.block_reward;
        let producer = state
            .accounts
            .get_mut(&ctx.producer)
            .ok_or(TxError::UnknownAccount(ctx.producer))?;
        producer.balance = producer
            .balance
            .checked_add(reward)
            .ok_or(TxError::BalanceOverflow)?;
        return Ok(());
    }

    let sender = tx.sender().expect("non-coinbase transactions carry a sender");

    if let Payload::RegisterEntity(reg) = tx.payload() {
        if reg.public_key.account_id() != sender {
            return Err(TxError::RegistrationKeyMismatch);
        }
        if !tx.verify_signature(&reg.public_key) {
            return Err(TxError::BadSignature);
        }
        let stored_nonce = match state.accounts.get(&sender) {
            Some(acc) if acc.is_entity() => return Err(TxError::DuplicateRegistration(sender)),
            Some(acc) => acc.nonce,
            None => 0,
        };
        check_nonce(stored_nonce, tx.nonce())?;
        let account = state.accounts.entry(sender).or_insert_with(|| Account {
            public_key: reg.public_key,
            name: String::new(),
            properties: BTreeMap::new(),
            balance: 0,
            nonce: 0,
            registration: None,
        });
        account.name = reg.name.clone();
        account.properties = reg.properties.clone();
        account.nonce = tx.nonce();
        account.registration = Some(Registration {
            tx_id: tx.id(),
            height: ctx.height,
        });
        return Ok(());
    }

    let account = state
        .accounts
        .get(&sender)
        .ok_or(TxError::UnknownAccount(sender))?;
    if !tx.verify_signature(&account.public_key) {
        return Err(TxError::BadSignature);
    }
    check_nonce(account.nonce, tx.nonce())?;

    match tx.payload() {
        Payload::Transfer { to, amount } => {
            if !state.accounts.contains_key(to) {
                return Err(TxError::UnknownAccount(*to));
            }
            let have = account.balance;
            if have < *amount {
                return Err(TxError::InsufficientBalance { need: *amount, have });
            }
            state.accounts.get_mut(&sender).unwrap().balance -= amount;
            let dest = state.accounts.get_mut(to).unwrap();
            dest.balance = dest
                .balance
                .checked_add(*amount)
                .ok_or(TxError::BalanceOverflow)?;
        }
        Payload::Confirm { subject, scope } => {
            if *subject == sender {
                return Err(TxError::SelfConfirmation);
            }
            if !account.is_entity() {
                return Err(TxError::NotRegistered(sender));
            }
            match state.accounts.get(subject) {
                None => return Err(TxError::UnknownAccount(*subject)),
                Some(s) if !s.is_entity() => return Err(TxError::NotRegistered(*subject)),
                Some(_) => {}
            }
            let max = state.params.max_scope;
            if *scope == 0 || *scope > max {
                return Err(TxError::ScopeOutOfRange { scope: *scope, max });
            }
            state.confirmations.insert(
                (sender, *subject),
                Confirmation {
                    scope: *scope,
                    since_height: ctx.height,
                    tx_id: tx.id(),
                },
            );
        }
        Payload::Revoke { subject } => {
            if state.confirmations.remove(&(sender, *subject)).is_none() {
                return Err(TxError::RevokeWithoutConfirmation);
            }
        }
        Payload::Checkpoint {
            at_height,
            at_block,
            state_digest,
        } => {
            if !state.params.producers.contains(&sender) {
                return Err(TxError::UnauthorizedCheckpoint);
            }
            if *at_height >= ctx.height {
                return Err(TxError::CheckpointOutOfRange);
            }
            // Heights older than the replay base cannot be rechecked here.
            if let Some(hash) = history.header_hash(*at_height) {
                if hash != *at_block {
                    return Err(TxError::CheckpointMismatch);
                }
            }
            if let Some(digest) = history.state_digest(*at_height) {
                if digest != *state_digest {
                    return Err(TxError::CheckpointMismatch);
                }
            }
        }
        Payload::Coinbase { .. } | Payload::RegisterEntity(_) => unreachable!("handled above"),
    }

    state.accounts.get_mut(&sender).unwrap().nonce = tx.nonce();
    Ok(())
}

fn check_nonce(stored: u64, got: u64) -> Result<(), TxError> {
    let expected = stored + 1;
    if got != expected {
        return Err(TxError::BadNonce { expected, got });
    }
    Ok(())
}
