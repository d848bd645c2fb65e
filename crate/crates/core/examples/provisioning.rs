//! A ground station writes a bundle; the UAV checks it and rejects a tampered copy.

use std::collections::BTreeMap;

use uavpki::crypto::KeyPair;
use uavpki::ledger::{ChainBuilder, GenesisConfig};
use uavpki::lightclient::{make_bundle, Bundle, LightClient};
use uavpki::selection::ViewSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut b = ChainBuilder::new(GenesisConfig::with_label_producers(4, 1, &["gs"]))?;
    for n in ["uav-1", "relay", "uav-2", "far"] {
        b.register(n, BTreeMap::new())?;
    }
    b.seal()?;
    b.confirm("uav-1", "relay", 3)?;
    b.confirm("relay", "uav-2", 2)?;
    b.confirm("uav-2", "far", 1)?;
    b.seal()?;

    let spec = ViewSpec {
        owner: KeyPair::from_label("uav-1").account_id(),
        k_out: 2,
        k_in: 1,
    };
    let bundle = make_bundle(b.chain(), spec)?;
    let bytes = bundle.to_file_bytes()?;
    println!(
        "bundle: {} headers, {} txs, {} bytes",
        bundle.headers.len(),
        bundle.txs.len(),
        bytes.len()
    );

    let client = LightClient::from_bundle(&Bundle::from_file_bytes(&bytes)?)?;
    let view = client.view();
    println!(
        "view as of {}: {} nodes, {} edges",
        view.as_of_height,
        view.graph.node_count(),
        view.graph.edge_count()
    );

    let mut tampered = bytes.clone();
    tampered[bytes.len() / 2] ^= 0x10;
    let verdict = Bundle::from_file_bytes(&tampered)
        .map_err(|e| e.to_string())
        .and_then(|b| LightClient::from_bundle(&b).map_err(|e| e.to_string()));
    println!(
        "tampered copy: {}",
        verdict.err().unwrap_or_else(|| "accepted".into())
    );
    Ok(())
}
