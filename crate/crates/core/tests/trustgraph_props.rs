mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use uavpki::trustgraph::{find_valid_path, is_valid_path, scope_rule_holds, valid_target_set, TrustPath};

use common::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn shortest_path_matches_enumeration((n, edges) in arb_graph(6, 4)) {
        let graph = graph_of(n, &edges);
        let ids = ids(n);
        for a in 0..n {
            for b in 0..n {
                let got = find_valid_path(&graph, &ids[a], &ids[b]).unwrap();
                let want = oracle_best_path(n, &edges, a, b);
                prop_assert_eq!(got.as_ref().map(|p| p.vertices.clone()), want);
                if let Some(p) = got {
                    prop_assert!(is_valid_path(&graph, &p));
                }
            }
        }
    }

    #[test]
    fn rule_matches_one_based_form(scopes in prop::collection::vec(1u8..=6, 1..8)) {
        prop_assert_eq!(scope_rule_holds(&scopes), oracle_rule(&scopes));
    }

    #[test]
    fn suffixes_of_valid_paths_are_valid((n, edges) in arb_graph(6, 4)) {
        let graph = graph_of(n, &edges);
        let ids = ids(n);
        for a in 0..n {
            for b in 0..n {
                for p in simple_paths(n, &edges, a, b) {
                    let verts: Vec<_> = p.iter().map(|&i| ids[i]).collect();
                    let path = TrustPath::along(&graph, &verts).unwrap();
                    if !is_valid_path(&graph, &path) {
                        continue;
                    }
                    for start in 1..verts.len() - 1 {
                        let suffix = TrustPath::along(&graph, &verts[start..]).unwrap();
                        prop_assert!(is_valid_path(&graph, &suffix));
                    }
                }
            }
        }
    }

    #[test]
    fn raising_a_scope_keeps_every_connection(
        (n, edges) in arb_graph(6, 3),
        pick in any::<prop::sample::Index>(),
    ) {
        prop_assume!(!edges.is_empty());
        let key = *pick.get(&edges.keys().copied().collect::<Vec<_>>());
        let mut raised = edges.clone();
        *raised.get_mut(&key).unwrap() += 1;
        let (before, after) = (graph_of(n, &edges), graph_of(n, &raised));
        let ids = ids(n);
        for a in 0..n {
            for b in 0..n {
                let had = find_valid_path(&before, &ids[a], &ids[b]).unwrap();
                let has = find_valid_path(&after, &ids[a], &ids[b]).unwrap();
                if let Some(had) = had {
                    prop_assert!(has.is_some_and(|p| p.len() <= had.len()));
                }
            }
        }
    }

    #[test]
    fn removing_an_edge_never_creates_paths(
        (n, edges) in arb_graph(6, 4),
        pick in any::<prop::sample::Index>(),
    ) {
        prop_assume!(!edges.is_empty());
        let key = *pick.get(&edges.keys().copied().collect::<Vec<_>>());
        let before = graph_of(n, &edges);
        let mut after = before.clone();
        let ids = ids(n);
        after.remove_edge(&ids[key.0], &ids[key.1]).unwrap();
        for a in 0..n {
            for b in 0..n {
                if let Some(p) = find_valid_path(&after, &ids[a], &ids[b]).unwrap() {
                    prop_assert!(!p.hops().any(|h| h == (ids[key.0], ids[key.1])));
                    prop_assert!(find_valid_path(&before, &ids[a], &ids[b]).unwrap().is_some());
                }
            }
        }
    }

    #[test]
    fn target_set_matches_enumeration((n, edges) in arb_graph(6, 4), max_len in 0usize..6) {
        let graph = graph_of(n, &edges);
        let ids = ids(n);
        for a in 0..n {
            let got = valid_target_set(&graph, &ids[a], max_len).unwrap();
            let want: BTreeSet<_> = (0..n)
                .filter(|&b| {
                    simple_paths(n, &edges, a, b)
                        .iter()
                        .any(|p| p.len() - 1 <= max_len && oracle_rule(&scopes_along(&edges, p)))
                })
                .map(|b| ids[b])
                .collect();
            prop_assert_eq!(got, want);
        }
    }
}

#[test]
fn trust_is_not_transitive() {
    let edges = EdgeMap::from([((0, 1), 1), ((1, 2), 1)]);
    let graph = graph_of(3, &edges);
    let ids = ids(3);
    assert!(find_valid_path(&graph, &ids[0], &ids[1]).unwrap().is_some());
    assert!(find_valid_path(&graph, &ids[1], &ids[2]).unwrap().is_some());
    assert!(find_valid_path(&graph, &ids[0], &ids[2]).unwrap().is_none());
}

#[test]
fn scope_one_means_direct_trust_only() {
    let edges = EdgeMap::from([((0, 1), 1), ((1, 2), 5), ((2, 3), 5)]);
    let graph = graph_of(4, &edges);
    let ids = ids(4);
    let targets = valid_target_set(&graph, &ids[0], 5).unwrap();
    assert_eq!(targets, BTreeSet::from([ids[1]]));
}

#[test]
fn worked_example_prefix_is_fine() {
    // A -(3)-> B -(1)-> C -(2)-> D
    let edges = EdgeMap::from([((0, 1), 3), ((1, 2), 1), ((2, 3), 2)]);
    let graph = graph_of(4, &edges);
    let ids = ids(4);
    let abc = find_valid_path(&graph, &ids[0], &ids[2]).unwrap().unwrap();
    assert_eq!(abc.scopes, vec![3, 1]);
    assert!(find_valid_path(&graph, &ids[0], &ids[3]).unwrap().is_none());
    assert!(find_valid_path(&graph, &ids[1], &ids[3]).unwrap().is_none());
    assert!(find_valid_path(&graph, &ids[2], &ids[3]).unwrap().is_some());
}
