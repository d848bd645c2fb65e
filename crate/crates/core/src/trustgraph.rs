//! Scope-bounded trust graph.
//!
//! Nodes are registered entities, edges are active confirmations. An edge
//! `A -(n)-> B` means A accepts paths of at most `n` edges that start with
//! this edge. A path `v0 .. vL` is valid iff every edge `i` (1-based) has
//! `n_i >= L - i + 1`: the remainder of the path from that edge on is no
//! longer than the edge allows.

use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::crypto::{AccountId, Hash256, PublicKey};
use crate::ledger::LedgerState;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("unknown node {0:?}")]
    UnknownNode(AccountId),
    #[error("edge {0:?} -> {1:?} references a node that is not in the graph")]
    MissingEndpoint(AccountId, AccountId),
    #[error("self edge on {0:?}")]
    SelfEdge(AccountId),
    #[error("conflicting records for node {0:?}")]
    NodeConflict(AccountId),
    #[error("conflicting records for edge {0:?} -> {1:?}")]
    EdgeConflict(AccountId, AccountId),
}

/// Registration data of an entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeInfo {
    pub id: AccountId,
    pub name: String,
    pub public_key: PublicKey,
    pub properties: BTreeMap<String, String>,
    /// Id of the registration transaction; the node's hash in the
    /// authentication handshake.
    pub registration_tx: Hash256,
    pub registered_at: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrustEdge {
    pub issuer: AccountId,
    pub subject: AccountId,
    pub scope: u8,
    pub since_height: u64,
    /// Id of the confirmation transaction that created this edge.
    pub tx_id: Hash256,
}

/// Immutable-by-convention snapshot of entities and their confirmations.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TrustGraph {
    nodes: BTreeMap<AccountId, NodeInfo>,
    edges: BTreeMap<(AccountId, AccountId), TrustEdge>,
    // (subject, issuer), for incoming-edge queries.
    reverse: BTreeSet<(AccountId, AccountId)>,
    height: u64,
}

impl TrustGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Ledger height this snapshot reflects.
    pub fn height(&self) -> u64 {
        self.height
    }

    pub fn set_height(&mut self, height: u64) {
        self.height = height;
    }

    pub fn insert_node(&mut self, node: NodeInfo) -> Result<(), GraphError> {
        match self.nodes.get(&node.id) {
            Some(existing) if *existing != node => Err(GraphError::NodeConflict(node.id)),
            Some(_) => Ok(()),
            None => {
                self.nodes.insert(node.id, node);
                Ok(())
            }
        }
    }

    /// Inserts or replaces the edge for `(issuer, subject)`.
    pub fn upsert_edge(&mut self, edge: TrustEdge) -> Result<(), GraphError> {
        if edge.issuer == edge.subject {
            return Err(GraphError::SelfEdge(edge.issuer));
        }
        if !self.nodes.contains_key(&edge.issuer) || !self.nodes.contains_key(&edge.subject) {
            return Err(GraphError::MissingEndpoint(edge.issuer, edge.subject));
        }
        self.edges.insert((edge.issuer, edge.subject), edge);
        self.reverse.insert((edge.subject, edge.issuer));
        Ok(())
    }

    pub fn remove_edge(&mut self, issuer: &AccountId, subject: &AccountId) -> Option<TrustEdge> {
        self.reverse.remove(&(*subject, *issuer));
        self.edges.remove(&(*issuer, *subject))
    }

    pub fn node(&self, id: &AccountId) -> Option<&NodeInfo> {
        self.nodes.get(id)
    }

    pub fn contains(&self, id: &AccountId) -> bool {
        self.nodes.contains_key(id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &NodeInfo> {
        self.nodes.values()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = AccountId> + '_ {
        self.nodes.keys().copied()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge(&self, issuer: &AccountId, subject: &AccountId) -> Option<&TrustEdge> {
        self.edges.get(&(*issuer, *subject))
    }

    pub fn edges(&self) -> impl Iterator<Item = &TrustEdge> {
        self.edges.values()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Outgoing edges of `id`, ordered by subject id.
    pub fn out_edges(&self, id: &AccountId) -> impl Iterator<Item = &TrustEdge> {
        self.edges
            .range((*id, AccountId::MIN)..=(*id, AccountId::MAX))
            .map(|(_, e)| e)
    }

    /// Incoming edges of `id`, ordered by issuer id.
    pub fn in_edges(&self, id: &AccountId) -> impl Iterator<Item = &TrustEdge> {
        self.reverse
            .range((*id, AccountId::MIN)..=(*id, AccountId::MAX))
            .map(move |(subject, issuer)| &self.edges[&(*issuer, *subject)])
    }

    /// Nodes whose registered name is `name`.
    pub fn find_by_name(&self, name: &str) -> Vec<&NodeInfo> {
        self.nodes.values().filter(|n| n.name == name).collect()
    }

    pub fn display_name(&self, id: &AccountId) -> String {
        self.node(id).map_or_else(|| id.short(), |n| n.name.clone())
    }

    /// Union of two graphs. Records for the same node or edge must agree.
    /// The result carries the larger of the two heights.
    pub fn merge(&self, other: &TrustGraph) -> Result<TrustGraph, GraphError> {
        let mut out = self.clone();
        out.height = out.height.max(other.height);
        for node in other.nodes.values() {
            out.insert_node(node.clone())?;
        }
        for (key, edge) in &other.edges {
            match out.edges.get(key) {
                Some(existing) if existing != edge => return Err(GraphError::EdgeConflict(key.0, key.1)),
                Some(_) => {}
                None => out.upsert_edge(*edge)?,
            }
        }
        Ok(out)
    }

    /// Subgraph induced by a node set and an edge predicate. Edges whose
    /// endpoints are not both kept are dropped.
    pub fn filtered(
        &self,
        keep_node: impl Fn(&AccountId) -> bool,
        keep_edge: impl Fn(&TrustEdge) -> bool,
    ) -> TrustGraph {
        let mut out = TrustGraph::new();
        out.height = self.height;
        for node in self.nodes.values().filter(|n| keep_node(&n.id)) {
            out.nodes.insert(node.id, node.clone());
        }
        for edge in self.edges.values() {
            if keep_edge(edge) && out.contains(&edge.issuer) && out.contains(&edge.subject) {
                out.upsert_edge(*edge).expect("endpoints checked");
            }
        }
        out
    }
}

/// One node per registered entity, one edge per active confirmation.
pub fn build_trust_graph(state: &LedgerState) -> TrustGraph {
    let mut graph = TrustGraph::new();
    graph.height = state.height;
    for (id, account) in &state.accounts {
        if let Some(reg) = account.registration {
            graph.nodes.insert(
                *id,
                NodeInfo {
                    id: *id,
                    name: account.name.clone(),
                    public_key: account.public_key,
                    properties: account.properties.clone(),
                    registration_tx: reg.tx_id,
                    registered_at: reg.height,
                },
            );
        }
    }
    for ((issuer, subject), c) in &state.confirmations {
        graph
            .upsert_edge(TrustEdge {
                issuer: *issuer,
                subject: *subject,
                scope: c.scope,
                since_height: c.since_height,
                tx_id: c.tx_id,
            })
            .expect("ledger only confirms registered entities");
    }
    graph
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrustPath {
    pub vertices: Vec<AccountId>,
    pub scopes: Vec<u8>,
}

impl TrustPath {
    /// Number of edges.
    pub fn len(&self) -> usize {
        self.scopes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scopes.is_empty()
    }

    pub fn source(&self) -> AccountId {
        self.vertices[0]
    }

    pub fn target(&self) -> AccountId {
        *self.vertices.last().expect("paths have at least one vertex")
    }

    pub fn hops(&self) -> impl Iterator<Item = (AccountId, AccountId)> + '_ {
        self.vertices.windows(2).map(|w| (w[0], w[1]))
    }

    /// Builds a path along `vertices`, reading scopes from `graph`.
    pub fn along(graph: &TrustGraph, vertices: &[AccountId]) -> Option<TrustPath> {
        let scopes = vertices
            .windows(2)
            .map(|w| graph.edge(&w[0], &w[1]).map(|e| e.scope))
            .collect::<Option<Vec<_>>>()?;
        Some(TrustPath {
            vertices: vertices.to_vec(),
            scopes,
        })
    }

    /// Human-readable form, e.g. `A -(3)-> B -(1)-> C`.
    pub fn display<'a>(&'a self, graph: &'a TrustGraph) -> impl fmt::Display + 'a {
        PathDisplay { path: self, graph }
    }
}

struct PathDisplay<'a> {
    path: &'a TrustPath,
    graph: &'a TrustGraph,
}

impl fmt::Display for PathDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.graph.display_name(&self.path.vertices[0]))?;
        for (v, scope) in self.path.vertices[1..].iter().zip(&self.path.scopes) {
            write!(f, " -({scope})-> {}", self.graph.display_name(v))?;
        }
        Ok(())
    }
}

/// The scope rule on its own: `scopes[i] >= L - i` for 0-based `i`.
pub fn scope_rule_holds(scopes: &[u8]) -> bool {
    let len = scopes.len();
    scopes.iter().enumerate().all(|(i, &n)| n as usize >= len - i)
}

/// True iff `path` is a simple path of at least one edge whose edges exist in
/// `graph` with the stated scopes and satisfy the scope rule.
pub fn is_valid_path(graph: &TrustGraph, path: &TrustPath) -> bool {
    if path.scopes.is_empty() || path.vertices.len() != path.scopes.len() + 1 {
        return false;
    }
    let mut seen = HashSet::new();
    if !path.vertices.iter().all(|v| seen.insert(*v)) {
        return false;
    }
    let edges_match = path
        .hops()
        .zip(&path.scopes)
        .all(|((a, b), &s)| graph.edge(&a, &b).is_some_and(|e| e.scope == s));
    edges_match && scope_rule_holds(&path.scopes)
}

/// Shortest valid path from `from` to `to`; ties go to the lexicographically
/// smallest vertex-id sequence. `from == to` has no path.
pub fn find_valid_path(
    graph: &TrustGraph,
    from: &AccountId,
    to: &AccountId,
) -> Result<Option<TrustPath>, GraphError> {
    for id in [from, to] {
        if !graph.contains(id) {
            return Err(GraphError::UnknownNode(*id));
        }
    }
    if from == to {
        return Ok(None);
    }

    // ready[r]: vertices with a valid walk of exactly r edges ending at `to`.
    // A shortest valid walk is always a simple path: cutting a cycle out of
    // a valid walk keeps it valid and makes it shorter.
    let max_scope = graph.edges().map(|e| e.scope as usize).max().unwrap_or(0);
    let bound = max_scope.min(graph.node_count() - 1);
    let mut ready: Vec<HashSet<AccountId>> = vec![HashSet::from([*to])];
    let mut length = None;
    for r in 1..=bound {
        let next: HashSet<AccountId> = ready[r - 1]
            .iter()
            .flat_map(|v| graph.in_edges(v))
            .filter(|e| e.scope as usize >= r)
            .map(|e| e.issuer)
            .collect();
        let found = next.contains(from);
        let empty = next.is_empty();
        ready.push(next);
        if found {
            length = Some(r);
            break;
        }
        if empty {
            break;
        }
    }
    let Some(length) = length else {
        return Ok(None);
    };

    let mut vertices = vec![*from];
    let mut scopes = Vec::with_capacity(length);
    let mut current = *from;
    for r in (1..=length).rev() {
        let edge = graph
            .out_edges(&current)
            .find(|e| e.scope as usize >= r && ready[r - 1].contains(&e.subject))
            .expect("ready sets guarantee a continuation");
        vertices.push(edge.subject);
        scopes.push(edge.scope);
        current = edge.subject;
    }
    Ok(Some(TrustPath { vertices, scopes }))
}

/// Every node reachable from `from` over some valid path of at most
/// `max_len` edges.
pub fn valid_target_set(
    graph: &TrustGraph,
    from: &AccountId,
    max_len: usize,
) -> Result<BTreeSet<AccountId>, GraphError> {
    if !graph.contains(from) {
        return Err(GraphError::UnknownNode(*from));
    }
    // Allowance: how many more edges the path walked so far may still take.
    // It only shrinks along a walk, so a max-first search settles each node once.
    let mut best: BTreeMap<AccountId, usize> = BTreeMap::new();
    let mut queue = BinaryHeap::from([(max_len, *from)]);
    best.insert(*from, max_len);
    while let Some((allowance, node)) = queue.pop() {
        if best.get(&node).is_some_and(|&b| b > allowance) || allowance == 0 {
            continue;
        }
        for edge in graph.out_edges(&node) {
            let next = (allowance - 1).min(edge.scope as usize - 1);
            if best.get(&edge.subject).is_none_or(|&b| next > b) {
                best.insert(edge.subject, next);
                queue.push((next, edge.subject));
            }
        }
    }
    best.remove(from);
    Ok(best.into_keys().collect())
}
