//! Scope-bounded path search on A -(3)-> B -(1)-> C -(2)-> D.

use std::collections::BTreeMap;

use uavpki::crypto::KeyPair;
use uavpki::ledger::{ChainBuilder, GenesisConfig};
use uavpki::trustgraph::{build_trust_graph, find_valid_path, valid_target_set};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut b = ChainBuilder::new(GenesisConfig::with_label_producers(5, 0, &["gs"]))?;
    for n in ["A", "B", "C", "D"] {
        b.register(n, BTreeMap::new())?;
    }
    b.seal()?;
    b.confirm("A", "B", 3)?;
    b.confirm("B", "C", 1)?;
    b.confirm("C", "D", 2)?;
    b.seal()?;
    let graph = build_trust_graph(b.chain().state());
    let id = |n: &str| KeyPair::from_label(n).account_id();

    for (from, to) in [("A", "B"), ("A", "C"), ("A", "D"), ("C", "D")] {
        match find_valid_path(&graph, &id(from), &id(to))? {
            Some(p) => println!("{from} to {to}: {}", p.display(&graph)),
            None => println!("{from} to {to}: none"),
        }
    }
    let reach: Vec<String> = valid_target_set(&graph, &id("A"), 5)?
        .iter()
        .map(|n| graph.display_name(n))
        .collect();
    println!("A accepts keys of {reach:?}");
    Ok(())
}
