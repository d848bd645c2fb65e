//! Binary Merkle tree over transaction ids.
//!
//! Leaves are used as-is (they are already transaction hashes). Interior
//! nodes are `SHA-256(0x01 || left || right)`. When a level has an odd number
//! of nodes the last one is paired with itself. A single leaf is its own root.

use thiserror::Error;

use crate::codec::{self, CodecError, Decode, Encode, Reader, Writer};
use crate::crypto::Hash256;

const NODE_TAG: &[u8] = &[0x01];

/// Deepest tree we will build or accept a proof for.
pub const MAX_DEPTH: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MerkleError {
    #[error("cannot build a Merkle tree over zero leaves")]
    Empty,
    #[error("leaf index {index} out of range for {len} leaves")]
    IndexOutOfRange { index: usize, len: usize },
}

pub fn hash_pair(left: &Hash256, right: &Hash256) -> Hash256 {
    Hash256::tagged(NODE_TAG, &[&left.0, &right.0])
}

fn next_level(level: &[Hash256]) -> Vec<Hash256> {
    level
        .chunks(2)
        .map(|pair| match pair {
            [l, r] => hash_pair(l, r),
            [only] => hash_pair(only, only),
            _ => unreachable!(),
        })
        .collect()
}

pub fn merkle_root(leaves: &[Hash256]) -> Result<Hash256, MerkleError> {
    if leaves.is_empty() {
        return Err(MerkleError::Empty);
    }
    let mut level = leaves.to_vec();
    while level.len() > 1 {
        level = next_level(&level);
    }
    Ok(level[0])
}

/// One level of an inclusion proof, from the leaf upward.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProofStep {
    /// The sibling sits to the left of the running hash.
    Left(Hash256),
    /// The sibling sits to the right of the running hash.
    Right(Hash256),
    /// The running node was the odd one out and is paired with itself.
    Duplicate,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MerkleProof {
    pub steps: Vec<ProofStep>,
}

impl MerkleProof {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Position of the proven leaf in its block, read off the side flags.
    pub fn leaf_index(&self) -> u64 {
        self.steps
            .iter()
            .enumerate()
            .filter(|(_, s)| matches!(s, ProofStep::Left(_)))
            .map(|(i, _)| 1u64 << i)
            .sum()
    }

    pub fn fold(&self, leaf: Hash256) -> Hash256 {
        self.steps.iter().fold(leaf, |acc, step| match step {
            ProofStep::Left(sib) => hash_pair(sib, &acc),
            ProofStep::Right(sib) => hash_pair(&acc, sib),
            ProofStep::Duplicate => hash_pair(&acc, &acc),
        })
    }
}

pub fn merkle_prove(leaves: &[Hash256], index: usize) -> Result<MerkleProof, MerkleError> {
    if index >= leaves.len() {
        return Err(MerkleError::IndexOutOfRange {
            index,
            len: leaves.len(),
        });
    }
    let mut steps = Vec::new();
    let mut level = leaves.to_vec();
    let mut pos = index;
    while level.len() > 1 {
        let step = if pos % 2 == 1 {
            ProofStep::Left(level[pos - 1])
        } else if pos + 1 < level.len() {
            ProofStep::Right(level[pos + 1])
        } else {
            ProofStep::Duplicate
        };
        steps.push(step);
        level = next_level(&level);
        pos /= 2;
    }
    Ok(MerkleProof { steps })
}

pub fn merkle_verify(root: &Hash256, leaf: &Hash256, proof: &MerkleProof) -> bool {
    proof.steps.len() <= MAX_DEPTH && proof.fold(*leaf) == *root
}

impl Encode for MerkleProof {
    fn encode(&self, w: &mut Writer) -> codec::Result<()> {
        w.len_prefix("merkle_proof", self.steps.len(), MAX_DEPTH)?;
        for step in &self.steps {
            match step {
                ProofStep::Left(h) => {
                    w.u8(0);
                    h.encode(w)?;
                }
                ProofStep::Right(h) => {
                    w.u8(1);
                    h.encode(w)?;
                }
                ProofStep::Duplicate => w.u8(2),
            }
        }
        Ok(())
    }
}

impl Decode for MerkleProof {
    fn decode(r: &mut Reader<'_>) -> codec::Result<Self> {
        let len = r.len_prefix("merkle_proof", MAX_DEPTH)?;
        let steps = (0..len)
            .map(|_| match r.u8()? {
                0 => Ok(ProofStep::Left(r.decode()?)),
                1 => Ok(ProofStep::Right(r.decode()?)),
                2 => Ok(ProofStep::Duplicate),
                tag => Err(CodecError::InvalidTag {
                    what: "proof step",
                    tag,
                }),
            })
            .collect::<codec::Result<_>>()?;
        Ok(MerkleProof { steps })
    }
}
