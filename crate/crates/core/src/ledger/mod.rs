//! Append-only ledger holding the trust graph.
//!
//! Transactions register entities, confirm and revoke key bindings, move
//! tokens and anchor checkpoints. Blocks link their bodies to the header
//! through a Merkle root and are produced round-robin by the producer
//! accounts named in the genesis configuration. The ledger state is a pure
//! function of the applied block sequence.

mod block;
mod builder;
mod chain;
mod checkpoint;
mod genesis;
pub mod merkle;
mod persist;
mod state;
mod tx;

use thiserror::Error;

use crate::codec::CodecError;
use crate::crypto::{AccountId, Hash256};

pub use block::{body_root, Block, BlockHeader, MAX_BLOCK_TXS};
pub use builder::{ChainBuilder, Schedule, ScheduledTx};
pub use chain::{validate_block, Chain, TxLocation};
pub use checkpoint::{create_checkpoint, state_from_checkpoint, Checkpoint};
pub use genesis::{GenesisAccount, GenesisAccountFile, GenesisConfig, GenesisFile, DEFAULT_MAX_SCOPE};
pub use merkle::{merkle_prove, merkle_root, merkle_verify, MerkleError, MerkleProof, ProofStep};
pub use persist::{decode_chain, encode_chain, read_chain_file, write_chain_file, ChainFileError};
pub use state::{
    apply_transaction, Account, BlockContext, ChainHistory, ChainParams, Confirmation, LedgerState,
    Registration, TxError,
};
pub use tx::{Payload, RegisterEntity, Transaction, TxType, MAX_NAME_LEN, MAX_PROPERTIES, MAX_PROPERTY_LEN};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("block parent {got:?} does not match tip {expected:?}")]
    BadParent { expected: Hash256, got: Hash256 },
    #[error("block height {got} does not follow tip height (expected {expected})")]
    BadHeight { expected: u64, got: u64 },
    #[error("merkle root does not match block body")]
    BadMerkleRoot,
    #[error("block producer {got:?} is not the scheduled producer {expected:?}")]
    BadProducer { expected: AccountId, got: AccountId },
    #[error("transaction {index} rejected: {source}")]
    Tx {
        index: usize,
        #[source]
        source: TxError,
    },
    #[error("height {height} is beyond the tip {tip}")]
    RangeError { height: u64, tip: u64 },
    #[error("checkpoint digest does not match its snapshot")]
    CheckpointMismatch,
    #[error("invalid genesis configuration: {0}")]
    InvalidGenesis(String),
    #[error("encoding error: {0}")]
    Codec(#[from] CodecError),
}

impl LedgerError {
    /// The transaction-level cause, when the block was rejected for one.
    pub fn tx_error(&self) -> Option<&TxError> {
        match self {
            LedgerError::Tx { source, .. } => Some(source),
            _ => None,
        }
    }
}
