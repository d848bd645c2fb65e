//! Builds a small chain, prints the trust edges and replays from a checkpoint.

use std::collections::BTreeMap;

use uavpki::ledger::{create_checkpoint, state_from_checkpoint, ChainBuilder, GenesisConfig};
use uavpki::trustgraph::build_trust_graph;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut b = ChainBuilder::new(GenesisConfig::with_label_producers(
        5,
        10,
        &["station-0", "station-1"],
    ))?;
    for name in ["alpha", "bravo", "charlie"] {
        b.register(name, BTreeMap::from([("type".into(), "uav".into())]))?;
    }
    b.seal()?;
    b.confirm("alpha", "bravo", 2)?;
    b.confirm("bravo", "charlie", 1)?;
    b.seal()?;
    b.revoke("bravo", "charlie")?;
    b.transfer("station-0", "alpha", 5)?;
    b.seal()?;

    let chain = b.chain();
    println!("height {} tip {}", chain.height(), chain.tip_hash());
    let graph = build_trust_graph(chain.state());
    for e in graph.edges() {
        println!(
            "{} -({})-> {} since {}",
            graph.display_name(&e.issuer),
            e.scope,
            graph.display_name(&e.subject),
            e.since_height
        );
    }

    let cp = create_checkpoint(chain, 1)?;
    let replayed = state_from_checkpoint(&cp, &chain.blocks()[2..])?;
    println!("checkpoint replay matches: {}", replayed == *chain.state());
    Ok(())
}
