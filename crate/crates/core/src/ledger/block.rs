use crate::codec::{self, Decode, Encode, Reader, Writer};
use crate::crypto::{AccountId, Hash256};

use super::merkle::merkle_root;
use super::tx::Transaction;

pub const MAX_BLOCK_TXS: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockHeader {
    pub height: u64,
    pub parent_hash: Hash256,
    pub merkle_root: Hash256,
    /// Logical tick, not wall-clock time.
    pub timestamp: u64,
    pub producer: AccountId,
}

impl BlockHeader {
    pub fn hash(&self) -> Hash256 {
        Hash256::digest(&self.to_canonical_bytes().expect("headers are fixed-size"))
    }
}

impl Encode for BlockHeader {
    fn encode(&self, w: &mut Writer) -> codec::Result<()> {
        w.u64(self.height);
        self.parent_hash.encode(w)?;
        self.merkle_root.encode(w)?;
        w.u64(self.timestamp);
        self.producer.encode(w)
    }
}

impl Decode for BlockHeader {
    fn decode(r: &mut Reader<'_>) -> codec::Result<Self> {
        Ok(BlockHeader {
            height: r.u64()?,
            parent_hash: r.decode()?,
            merkle_root: r.decode()?,
            timestamp: r.u64()?,
            producer: r.decode()?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub header: BlockHeader,
    pub body: Vec<Transaction>,
}

impl Block {
    pub fn hash(&self) -> Hash256 {
        self.header.hash()
    }

    pub fn tx_ids(&self) -> Vec<Hash256> {
        self.body.iter().map(Transaction::id).collect()
    }
}

/// Merkle root committed by a header for the given body. An empty body
/// commits to the all-zero hash.
pub fn body_root(body: &[Transaction]) -> Hash256 {
    let ids: Vec<_> = body.iter().map(Transaction::id).collect();
    merkle_root(&ids).unwrap_or(Hash256::ZERO)
}

impl Encode for Block {
    fn encode(&self, w: &mut Writer) -> codec::Result<()> {
        self.header.encode(w)?;
        w.seq("block body", &self.body, MAX_BLOCK_TXS)
    }
}

impl Decode for Block {
    fn decode(r: &mut Reader<'_>) -> codec::Result<Self> {
        Ok(Block {
            header: r.decode()?,
            body: r.seq("block body", MAX_BLOCK_TXS)?,
        })
    }
}
