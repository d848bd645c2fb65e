//! Proves one leaf of a seven-leaf tree and shows a flipped bit failing.

use uavpki::crypto::Hash256;
use uavpki::ledger::{merkle_prove, merkle_root, merkle_verify, ProofStep};

fn main() {
    let leaves: Vec<Hash256> = (0..7)
        .map(|i| Hash256::digest(format!("tx {i}").as_bytes()))
        .collect();
    let root = merkle_root(&leaves).unwrap();
    let proof = merkle_prove(&leaves, 6).unwrap();
    println!("root {}", root.short());
    for step in &proof.steps {
        match step {
            ProofStep::Left(h) => println!("  left  {}", h.short()),
            ProofStep::Right(h) => println!("  right {}", h.short()),
            ProofStep::Duplicate => println!("  duplicate"),
        }
    }
    println!("leaf 6 verifies: {}", merkle_verify(&root, &leaves[6], &proof));
    let mut forged = leaves[6];
    forged.0[0] ^= 1;
    println!("forged leaf verifies: {}", merkle_verify(&root, &forged, &proof));
}
