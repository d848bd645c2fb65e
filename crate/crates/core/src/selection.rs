//! Partial trust-graph views.
//!
//! A UAV keeps the nodes and edges within `k_out` hops downstream of itself
//! and `k_in` hops upstream. Two parties that hold an outgoing and an incoming
//! view of depth `k` jointly cover every path of length `2k` between them.

use std::collections::{BTreeMap, VecDeque};

use thiserror::Error;

use crate::codec::{CodecError, Decode, Encode, Reader, Writer};
use crate::crypto::AccountId;
use crate::trustgraph::{GraphError, TrustEdge, TrustGraph};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SelectionError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("views are as of different heights ({0} vs {1})")]
    StaleView(u64, u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Outgoing,
    Incoming,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ViewSpec {
    pub owner: AccountId,
    pub k_out: u8,
    pub k_in: u8,
}

impl Encode for ViewSpec {
    fn encode(&self, w: &mut Writer) -> Result<(), CodecError> {
        w.encode(&self.owner.0)?;
        w.u8(self.k_out);
        w.u8(self.k_in);
        Ok(())
    }
}

impl Decode for ViewSpec {
    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(ViewSpec {
            owner: AccountId(r.decode()?),
            k_out: r.u8()?,
            k_in: r.u8()?,
        })
    }
}

/// The part of the trust graph one party stores.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialGraphView {
    pub spec: ViewSpec,
    pub graph: TrustGraph,
    pub as_of_height: u64,
}

impl PartialGraphView {
    pub fn owner(&self) -> AccountId {
        self.spec.owner
    }

    /// Nodes at most `k_out` hops downstream of the owner, owner included.
    pub fn outgoing_nodes(&self) -> Vec<AccountId> {
        distances(
            &self.graph,
            &self.spec.owner,
            self.spec.k_out as usize,
            Direction::Outgoing,
        )
        .into_keys()
        .collect()
    }

    /// Nodes at most `k_in` hops upstream of the owner, owner included.
    pub fn incoming_nodes(&self) -> Vec<AccountId> {
        distances(
            &self.graph,
            &self.spec.owner,
            self.spec.k_in as usize,
            Direction::Incoming,
        )
        .into_keys()
        .collect()
    }
}

fn distances(
    graph: &TrustGraph,
    owner: &AccountId,
    k: usize,
    direction: Direction,
) -> BTreeMap<AccountId, usize> {
    let mut dist = BTreeMap::from([(*owner, 0)]);
    let mut queue = VecDeque::from([*owner]);
    while let Some(u) = queue.pop_front() {
        let d = dist[&u];
        if d == k {
            continue;
        }
        let next: Vec<AccountId> = match direction {
            Direction::Outgoing => graph.out_edges(&u).map(|e| e.subject).collect(),
            Direction::Incoming => graph.in_edges(&u).map(|e| e.issuer).collect(),
        };
        for v in next {
            if let std::collections::btree_map::Entry::Vacant(slot) = dist.entry(v) {
                slot.insert(d + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Nodes within `k` directed hops of `owner` and every edge that can be
/// taken as one of the first `k` hops of a walk from (or to) the owner.
pub fn k_neighborhood(
    graph: &TrustGraph,
    owner: &AccountId,
    k: usize,
    direction: Direction,
) -> Result<TrustGraph, GraphError> {
    if !graph.contains(owner) {
        return Err(GraphError::UnknownNode(*owner));
    }
    let dist = distances(graph, owner, k, direction);
    let near = |id: &AccountId| dist.get(id).is_some_and(|&d| d < k);
    Ok(graph.filtered(
        |id| dist.contains_key(id),
        |e: &TrustEdge| match direction {
            Direction::Outgoing => near(&e.issuer),
            Direction::Incoming => near(&e.subject),
        },
    ))
}

pub fn build_view(graph: &TrustGraph, spec: ViewSpec) -> Result<PartialGraphView, GraphError> {
    let out = k_neighborhood(graph, &spec.owner, spec.k_out as usize, Direction::Outgoing)?;
    let inc = k_neighborhood(graph, &spec.owner, spec.k_in as usize, Direction::Incoming)?;
    Ok(PartialGraphView {
        spec,
        graph: out.merge(&inc)?,
        as_of_height: graph.height(),
    })
}

/// Union of two views taken at the same height.
pub fn merge_views(a: &PartialGraphView, b: &PartialGraphView) -> Result<TrustGraph, SelectionError> {
    if a.as_of_height != b.as_of_height {
        return Err(SelectionError::StaleView(a.as_of_height, b.as_of_height));
    }
    Ok(a.graph.merge(&b.graph)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StorageEstimate {
    pub avg_degree: f64,
    pub depth: u32,
    pub estimated_items: f64,
}

/// Nodes and edges stored by a view with both depths equal to `k` when every
/// node has `avg_degree` neighbours in each direction: `2 n^k`.
pub fn estimate_storage(avg_degree: f64, k: u32) -> StorageEstimate {
    StorageEstimate {
        avg_degree,
        depth: k,
        estimated_items: 2.0 * avg_degree.powi(k as i32),
    }
}

/// Items needed to reach every trusted node without a partner: `n^m`.
pub fn estimate_full_reach(avg_degree: f64, max_scope: u32) -> StorageEstimate {
    StorageEstimate {
        avg_degree,
        depth: max_scope,
        estimated_items: avg_degree.powi(max_scope as i32),
    }
}
