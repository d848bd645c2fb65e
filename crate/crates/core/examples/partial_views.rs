//! Outgoing and incoming views on a line of six nodes and the storage estimate.

use std::collections::BTreeMap;

use uavpki::crypto::{Hash256, KeyPair};
use uavpki::selection::{build_view, estimate_full_reach, estimate_storage, merge_views, ViewSpec};
use uavpki::trustgraph::{find_valid_path, NodeInfo, TrustEdge, TrustGraph};

fn main() {
    let names = ["n0", "n1", "n2", "n3", "n4", "n5"];
    let id = |n: &str| KeyPair::from_label(n).account_id();
    let mut graph = TrustGraph::new();
    for n in names {
        let key = KeyPair::from_label(n);
        graph
            .insert_node(NodeInfo {
                id: key.account_id(),
                name: n.into(),
                public_key: key.public_key(),
                properties: BTreeMap::new(),
                registration_tx: Hash256::digest(n.as_bytes()),
                registered_at: 1,
            })
            .unwrap();
    }
    for (i, w) in names.windows(2).enumerate() {
        graph
            .upsert_edge(TrustEdge {
                issuer: id(w[0]),
                subject: id(w[1]),
                scope: (5 - i) as u8,
                since_height: 2,
                tx_id: Hash256::digest(w.concat().as_bytes()),
            })
            .unwrap();
    }

    let out = build_view(
        &graph,
        ViewSpec {
            owner: id("n0"),
            k_out: 2,
            k_in: 0,
        },
    )
    .unwrap();
    let inc = build_view(
        &graph,
        ViewSpec {
            owner: id("n4"),
            k_out: 0,
            k_in: 2,
        },
    )
    .unwrap();
    println!(
        "n0 stores {} nodes, n4 stores {}",
        out.graph.node_count(),
        inc.graph.node_count()
    );
    let merged = merge_views(&out, &inc).unwrap();
    let path = find_valid_path(&merged, &id("n0"), &id("n4")).unwrap().unwrap();
    println!("merged views: {}", path.display(&merged));

    for (n, k) in [(3.0, 2), (4.0, 3)] {
        println!(
            "degree {n}, depth {k}: view ~{} items",
            estimate_storage(n, k).estimated_items
        );
    }
    println!(
        "degree 4, full reach at m = 5: ~{} items",
        estimate_full_reach(4.0, 5).estimated_items
    );
}
