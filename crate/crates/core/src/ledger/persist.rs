//! Chain file: a magic tag followed by `u32`-length-prefixed records. The
//! first record is the canonical genesis configuration, every following
//! record one canonical block, in height order starting at 1.

use std::path::Path;

use thiserror::Error;

use crate::codec::{read_records, write_record, CodecError, Decode, Encode};

use super::block::Block;
use super::chain::Chain;
use super::genesis::GenesisConfig;
use super::LedgerError;

const MAGIC: &[u8; 8] = b"UAVPKIC1";

#[derive(Debug, Error)]
pub enum ChainFileError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed chain file: {0}")]
    Codec(#[from] CodecError),
    #[error("chain file does not replay: {0}")]
    Ledger(#[from] LedgerError),
}

pub fn encode_chain(chain: &Chain) -> Result<Vec<u8>, CodecError> {
    let mut out = MAGIC.to_vec();
    write_record(&mut out, &chain.genesis().to_canonical_bytes()?)?;
    for block in chain.non_genesis_blocks() {
        write_record(&mut out, &block.to_canonical_bytes()?)?;
    }
    Ok(out)
}

/// Decodes and fully re-validates a chain.
pub fn decode_chain(bytes: &[u8]) -> Result<Chain, ChainFileError> {
    let body = bytes.strip_prefix(MAGIC).ok_or(CodecError::BadMagic)?;
    let records = read_records(body)?;
    let (first, rest) = records
        .split_first()
        .ok_or(CodecError::Incomplete("missing genesis record"))?;
    let genesis = GenesisConfig::from_canonical_bytes(first)?;
    let mut chain = Chain::new(genesis)?;
    for record in rest {
        chain.validate_and_append(Block::from_canonical_bytes(record)?)?;
    }
    Ok(chain)
}

pub fn write_chain_file(chain: &Chain, path: &Path) -> Result<(), ChainFileError> {
    std::fs::write(path, encode_chain(chain)?)?;
    Ok(())
}

pub fn read_chain_file(path: &Path) -> Result<Chain, ChainFileError> {
    decode_chain(&std::fs::read(path)?)
}
