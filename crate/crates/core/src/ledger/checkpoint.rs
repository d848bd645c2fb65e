use crate::codec::{self, Decode, Encode, Reader, Writer};
use crate::crypto::Hash256;

use super::block::{Block, BlockHeader};
use super::chain::{validate_block, Chain};
use super::state::{ChainHistory, LedgerState};
use super::LedgerError;

/// Ledger state as of one block, enough to continue validating from there
/// without the history before it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Checkpoint {
    pub at_height: u64,
    pub at_block: Hash256,
    /// The full header of `at_block`; its hash must equal `at_block`.
    pub header: BlockHeader,
    pub state_digest: Hash256,
    pub state_snapshot: LedgerState,
}

impl Checkpoint {
    pub fn verify(&self) -> Result<(), LedgerError> {
        if self.state_snapshot.digest() != self.state_digest
            || self.header.hash() != self.at_block
            || self.header.height != self.at_height
            || self.state_snapshot.height != self.at_height
        {
            return Err(LedgerError::CheckpointMismatch);
        }
        Ok(())
    }
}

impl Encode for Checkpoint {
    fn encode(&self, w: &mut Writer) -> codec::Result<()> {
        w.u64(self.at_height);
        self.at_block.encode(w)?;
        self.header.encode(w)?;
        self.state_digest.encode(w)?;
        self.state_snapshot.encode(w)
    }
}

impl Decode for Checkpoint {
    fn decode(r: &mut Reader<'_>) -> codec::Result<Self> {
        Ok(Checkpoint {
            at_height: r.u64()?,
            at_block: r.decode()?,
            header: r.decode()?,
            state_digest: r.decode()?,
            state_snapshot: r.decode()?,
        })
    }
}

pub fn create_checkpoint(chain: &Chain, height: u64) -> Result<Checkpoint, LedgerError> {
    let state = chain.state_at(height)?;
    let header = *chain.header(height).expect("state_at checked the range");
    Ok(Checkpoint {
        at_height: height,
        at_block: header.hash(),
        header,
        state_digest: state.digest(),
        state_snapshot: state,
    })
}

/// History known to a replayer that starts from a checkpoint.
struct SuffixHistory {
    base: u64,
    hashes: Vec<Hash256>,
    digests: Vec<Hash256>,
}

impl SuffixHistory {
    fn lookup(&self, v: &[Hash256], height: u64) -> Option<Hash256> {
        height
            .checked_sub(self.base)
            .and_then(|i| v.get(i as usize).copied())
    }
}

impl ChainHistory for SuffixHistory {
    fn header_hash(&self, height: u64) -> Option<Hash256> {
        self.lookup(&self.hashes, height)
    }

    fn state_digest(&self, height: u64) -> Option<Hash256> {
        self.lookup(&self.digests, height)
    }
}

/// State after applying `blocks` (heights `at_height + 1 ..`) on top of a
/// checkpoint. Every block is fully validated.
pub fn state_from_checkpoint(checkpoint: &Checkpoint, blocks: &[Block]) -> Result<LedgerState, LedgerError> {
    checkpoint.verify()?;
    let mut state = checkpoint.state_snapshot.clone();
    let mut parent = checkpoint.header;
    let mut history = SuffixHistory {
        base: checkpoint.at_height,
        hashes: vec![checkpoint.at_block],
        digests: vec![checkpoint.state_digest],
    };
    for block in blocks {
        state = validate_block(&state, &parent, block, &history)?;
        parent = block.header;
        history.hashes.push(block.hash());
        history.digests.push(state.digest());
    }
    Ok(state)
}
