use std::collections::HashMap;

use crate::crypto::Hash256;

use super::block::{body_root, Block, BlockHeader};
use super::genesis::GenesisConfig;
use super::merkle::{merkle_prove, MerkleProof};
use super::state::{apply_transaction, BlockContext, ChainHistory, LedgerState};
use super::tx::{Transaction, TxType};
use super::LedgerError;

/// Where a committed transaction lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TxLocation {
    pub height: u64,
    pub index: u32,
}

/// Checks `block` against its parent and applies it to a copy of `state`.
///
/// `state` must be the state after `parent`. On success the new state is
/// returned; on failure nothing is modified.
pub fn validate_block(
    state: &LedgerState,
    parent: &BlockHeader,
    block: &Block,
    history: &dyn ChainHistory,
) -> Result<LedgerState, LedgerError> {
    let header = &block.header;
    let parent_hash = parent.hash();
    if header.parent_hash != parent_hash {
        return Err(LedgerError::BadParent {
            expected: parent_hash,
            got: header.parent_hash,
        });
    }
    if header.height != parent.height + 1 {
        return Err(LedgerError::BadHeight {
            expected: parent.height + 1,
            got: header.height,
        });
    }
    let expected_producer = state.params.producer_for(header.height);
    if header.producer != expected_producer {
        return Err(LedgerError::BadProducer {
            expected: expected_producer,
            got: header.producer,
        });
    }
    if body_root(&block.body) != header.merkle_root {
        return Err(LedgerError::BadMerkleRoot);
    }

    let mut scratch = state.clone();
    scratch.height = header.height;
    for (index, tx) in block.body.iter().enumerate() {
        let ctx = BlockContext {
            height: header.height,
            producer: header.producer,
            index,
        };
        apply_transaction(&mut scratch, tx, &ctx, history)
            .map_err(|source| LedgerError::Tx { index, source })?;
    }
    Ok(scratch)
}

/// A fully validated chain with its current state.
///
/// Single writer: appends go through `&mut self`. Committed blocks are never
/// touched again.
#[derive(Debug, Clone)]
pub struct Chain {
    genesis: GenesisConfig,
    blocks: Vec<Block>,
    header_hashes: Vec<Hash256>,
    state_digests: Vec<Hash256>,
    state: LedgerState,
    tx_index: HashMap<Hash256, TxLocation>,
}

struct History<'a> {
    hashes: &'a [Hash256],
    digests: &'a [Hash256],
}

impl ChainHistory for History<'_> {
    fn header_hash(&self, height: u64) -> Option<Hash256> {
        self.hashes.get(height as usize).copied()
    }

    fn state_digest(&self, height: u64) -> Option<Hash256> {
        self.digests.get(height as usize).copied()
    }
}

impl Chain {
    pub fn new(genesis: GenesisConfig) -> Result<Self, LedgerError> {
        genesis.validate()?;
        let block = genesis.genesis_block();
        let state = genesis.genesis_state();
        Ok(Chain {
            header_hashes: vec![block.hash()],
            state_digests: vec![state.digest()],
            blocks: vec![block],
            state,
            genesis,
            tx_index: HashMap::new(),
        })
    }

    /// Rebuilds a chain from genesis, validating every block.
    pub fn replay<'a>(
        genesis: GenesisConfig,
        blocks: impl IntoIterator<Item = &'a Block>,
    ) -> Result<Self, LedgerError> {
        let mut chain = Chain::new(genesis)?;
        for block in blocks {
            chain.validate_and_append(block.clone())?;
        }
        Ok(chain)
    }

    pub fn genesis(&self) -> &GenesisConfig {
        &self.genesis
    }

    pub fn genesis_hash(&self) -> Hash256 {
        self.header_hashes[0]
    }

    pub fn state(&self) -> &LedgerState {
        &self.state
    }

    pub fn height(&self) -> u64 {
        self.blocks.len() as u64 - 1
    }

    pub fn tip(&self) -> &Block {
        self.blocks.last().expect("chain always has a genesis block")
    }

    pub fn tip_hash(&self) -> Hash256 {
        *self.header_hashes.last().unwrap()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Blocks after genesis, in order.
    pub fn non_genesis_blocks(&self) -> &[Block] {
        &self.blocks[1..]
    }

    pub fn block(&self, height: u64) -> Option<&Block> {
        self.blocks.get(height as usize)
    }

    pub fn header(&self, height: u64) -> Option<&BlockHeader> {
        self.block(height).map(|b| &b.header)
    }

    pub fn headers(&self) -> Vec<BlockHeader> {
        self.blocks.iter().map(|b| b.header).collect()
    }

    pub fn header_hash(&self, height: u64) -> Option<Hash256> {
        self.header_hashes.get(height as usize).copied()
    }

    /// Digest of the state right after the block at `height`.
    pub fn state_digest_at(&self, height: u64) -> Option<Hash256> {
        self.state_digests.get(height as usize).copied()
    }

    pub fn validate_and_append(&mut self, block: Block) -> Result<(), LedgerError> {
        let history = History {
            hashes: &self.header_hashes,
            digests: &self.state_digests,
        };
        let next = validate_block(&self.state, &self.tip().header, &block, &history)?;
        let height = block.header.height;
        for (i, tx) in block.body.iter().enumerate() {
            self.tx_index.insert(
                tx.id(),
                TxLocation {
                    height,
                    index: i as u32,
                },
            );
        }
        self.header_hashes.push(block.hash());
        self.state_digests.push(next.digest());
        self.blocks.push(block);
        self.state = next;
        Ok(())
    }

    /// Replays from genesis up to and including `height`.
    pub fn state_at(&self, height: u64) -> Result<LedgerState, LedgerError> {
        if height > self.height() {
            return Err(LedgerError::RangeError {
                height,
                tip: self.height(),
            });
        }
        if height == self.height() {
            return Ok(self.state.clone());
        }
        let replayed = Chain::replay(self.genesis.clone(), &self.blocks[1..=height as usize])?;
        Ok(replayed.state)
    }

    pub fn locate_tx(&self, id: &Hash256) -> Option<TxLocation> {
        self.tx_index.get(id).copied()
    }

    pub fn tx(&self, id: &Hash256) -> Option<&Transaction> {
        let loc = self.locate_tx(id)?;
        self.blocks[loc.height as usize].body.get(loc.index as usize)
    }

    /// Inclusion proof for a committed transaction against its block header.
    pub fn prove_tx(&self, id: &Hash256) -> Option<(TxLocation, MerkleProof)> {
        let loc = self.locate_tx(id)?;
        let block = &self.blocks[loc.height as usize];
        let proof = merkle_prove(&block.tx_ids(), loc.index as usize).ok()?;
        Some((loc, proof))
    }

    /// All committed transactions of one type with their locations, oldest first.
    pub fn txs_of_type(&self, ty: TxType) -> impl Iterator<Item = (TxLocation, &Transaction)> {
        self.blocks.iter().flat_map(move |b| {
            b.body
                .iter()
                .enumerate()
                .filter(move |(_, tx)| tx.tx_type() == ty)
                .map(move |(i, tx)| {
                    (
                        TxLocation {
                            height: b.header.height,
                            index: i as u32,
                        },
                        tx,
                    )
                })
        })
    }
}
