use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::codec::{self, Decode, Encode, Reader, Writer};
use crate::crypto::{AccountId, Hash256, KeyPair, PublicKey};

use super::block::{Block, BlockHeader};
use super::state::{Account, ChainParams, LedgerState, MAX_PRODUCERS};
use super::tx::MAX_NAME_LEN;
use super::LedgerError;

pub const DEFAULT_MAX_SCOPE: u8 = 5;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenesisAccount {
    pub name: String,
    pub public_key: PublicKey,
    pub balance: u64,
    pub producer: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenesisConfig {
    pub max_scope: u8,
    pub block_reward: u64,
    pub accounts: Vec<GenesisAccount>,
}

impl GenesisConfig {
    /// Genesis where every producer key is derived from its name label.
    pub fn with_label_producers(max_scope: u8, block_reward: u64, producers: &[&str]) -> Self {
        GenesisConfig {
            max_scope,
            block_reward,
            accounts: producers
                .iter()
                .map(|name| GenesisAccount {
                    name: (*name).to_owned(),
                    public_key: KeyPair::from_label(name).public_key(),
                    balance: 0,
                    producer: true,
                })
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<(), LedgerError> {
        let bad = |msg: &str| Err(LedgerError::InvalidGenesis(msg.to_owned()));
        if self.max_scope == 0 {
            return bad("max_scope must be at least 1");
        }
        let producers = self.accounts.iter().filter(|a| a.producer).count();
        if producers == 0 {
            return bad("at least one producer is required");
        }
        if producers > MAX_PRODUCERS {
            return bad("too many producers");
        }
        let mut seen = BTreeSet::new();
        for a in &self.accounts {
            if a.name.len() > MAX_NAME_LEN {
                return bad("account name too long");
            }
            if !seen.insert(a.public_key.account_id()) {
                return bad("duplicate genesis account");
            }
        }
        Ok(())
    }

    pub fn params(&self) -> ChainParams {
        ChainParams {
            max_scope: self.max_scope,
            block_reward: self.block_reward,
            producers: self
                .accounts
                .iter()
                .filter(|a| a.producer)
                .map(|a| a.public_key.account_id())
                .collect(),
        }
    }

    pub fn digest(&self) -> Hash256 {
        Hash256::digest(&self.to_canonical_bytes().expect("validated genesis"))
    }

    pub fn genesis_state(&self) -> LedgerState {
        let accounts = self
            .accounts
            .iter()
            .map(|a| {
                (
                    a.public_key.account_id(),
                    Account {
                        public_key: a.public_key,
                        name: a.name.clone(),
                        properties: BTreeMap::new(),
                        balance: a.balance,
                        nonce: 0,
                        registration: None,
                    },
                )
            })
            .collect();
        LedgerState {
            params: self.params(),
            height: 0,
            accounts,
            confirmations: BTreeMap::new(),
        }
    }

    /// The genesis block has an empty body; its header commits to the
    /// configuration digest in place of a transaction root.
    pub fn genesis_block(&self) -> Block {
        Block {
            header: BlockHeader {
                height: 0,
                parent_hash: Hash256::ZERO,
                merkle_root: self.digest(),
                timestamp: 0,
                producer: AccountId::MIN,
            },
            body: Vec::new(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, LedgerError> {
        let file: GenesisFile =
            serde_json::from_str(text).map_err(|e| LedgerError::InvalidGenesis(e.to_string()))?;
        let config = file.into_config()?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, LedgerError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LedgerError::InvalidGenesis(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

impl Encode for GenesisAccount {
    fn encode(&self, w: &mut Writer) -> codec::Result<()> {
        w.str("name", &self.name, MAX_NAME_LEN)?;
        self.public_key.encode(w)?;
        w.u64(self.balance);
        w.bool(self.producer);
        Ok(())
    }
}

impl Decode for GenesisAccount {
    fn decode(r: &mut Reader<'_>) -> codec::Result<Self> {
        Ok(GenesisAccount {
            name: r.string("name", MAX_NAME_LEN)?,
            public_key: r.decode()?,
            balance: r.u64()?,
            producer: r.bool()?,
        })
    }
}

impl Encode for GenesisConfig {
    fn encode(&self, w: &mut Writer) -> codec::Result<()> {
        w.u8(self.max_scope);
        w.u64(self.block_reward);
        w.seq("genesis accounts", &self.accounts, 1 << 16)
    }
}

impl Decode for GenesisConfig {
    fn decode(r: &mut Reader<'_>) -> codec::Result<Self> {
        Ok(GenesisConfig {
            max_scope: r.u8()?,
            block_reward: r.u64()?,
            accounts: r.seq("genesis accounts", 1 << 16)?,
        })
    }
}

/// JSON form of the genesis configuration.
///
/// ```json
/// { "max_scope": 5, "block_reward": 10,
///   "accounts": [ { "name": "fullnode-0", "producer": true, "balance": 100 },
///                 { "name": "treasury", "public_key": "<64 hex chars>" } ] }
/// ```
///
/// An account without `public_key` gets the key derived from its `name`
/// label (see [`KeyPair::from_label`]).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenesisFile {
    #[serde(default = "default_max_scope")]
    pub max_scope: u8,
    #[serde(default)]
    pub block_reward: u64,
    pub accounts: Vec<GenesisAccountFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenesisAccountFile {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub public_key: Option<String>,
    #[serde(default)]
    pub balance: u64,
    #[serde(default)]
    pub producer: bool,
}

fn default_max_scope() -> u8 {
    DEFAULT_MAX_SCOPE
}

impl GenesisFile {
    pub fn into_config(self) -> Result<GenesisConfig, LedgerError> {
        let accounts = self
            .accounts
            .into_iter()
            .map(|a| {
                let public_key = match &a.public_key {
                    Some(hex) => hex
                        .parse()
                        .map_err(|_| LedgerError::InvalidGenesis(format!("bad public key for {}", a.name)))?,
                    None => KeyPair::from_label(&a.name).public_key(),
                };
                Ok(GenesisAccount {
                    name: a.name,
                    public_key,
                    balance: a.balance,
                    producer: a.producer,
                })
            })
            .collect::<Result<_, LedgerError>>()?;
        Ok(GenesisConfig {
            max_scope: self.max_scope,
            block_reward: self.block_reward,
            accounts,
        })
    }
}
