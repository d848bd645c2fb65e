//! Two UAVs authenticate over a path A -> B -> C -> D -> E, then an impostor tries.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use uavpki::authproto::{run_local, SessionConfig};
use uavpki::crypto::KeyPair;
use uavpki::ledger::{ChainBuilder, GenesisConfig};
use uavpki::lightclient::{make_bundle, LightClient};
use uavpki::selection::ViewSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut b = ChainBuilder::new(GenesisConfig::with_label_producers(5, 1, &["gs"]))?;
    for n in ["A", "B", "C", "D", "E"] {
        b.register(n, BTreeMap::new())?;
    }
    b.seal()?;
    for (i, s, scope) in [("A", "B", 4), ("B", "C", 3), ("C", "D", 2), ("D", "E", 1)] {
        b.confirm(i, s, scope)?;
    }
    b.seal()?;

    let client = |name: &str, k_out, k_in| -> Result<LightClient, Box<dyn std::error::Error>> {
        let spec = ViewSpec {
            owner: KeyPair::from_label(name).account_id(),
            k_out,
            k_in,
        };
        Ok(LightClient::from_bundle(&make_bundle(b.chain(), spec)?)?)
    };
    let (a, e) = (client("A", 2, 0)?, client("E", 0, 2)?);
    let mut rng = ChaCha8Rng::seed_from_u64(1);

    let honest = run_local(
        &a,
        &e,
        &KeyPair::from_label("E"),
        SessionConfig::default(),
        &mut rng,
        &mut |_, _| {},
    );
    println!(
        "honest E: {:?} after {} messages",
        honest.initiator,
        honest.messages.len()
    );
    if let Some(vp) = &honest.verified {
        println!(
            "path: {}",
            vp.path.display(&a.view().graph.merge(&e.view().graph)?)
        );
    }

    let impostor = run_local(
        &a,
        &e,
        &KeyPair::from_label("mallory"),
        SessionConfig::default(),
        &mut rng,
        &mut |_, _| {},
    );
    println!("impostor: {:?}", impostor.initiator);
    Ok(())
}
