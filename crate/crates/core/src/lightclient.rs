//! UAV-side storage: block headers plus the Merkle-proved transactions that
//! make up the UAV's view of the trust graph.
//!
//! A ground station calls [`make_bundle`] before a mission. The UAV checks
//! the bundle with [`LightClient::from_bundle`], which rebuilds the view from
//! the proved transactions alone. During a session, data from a peer is
//! checked against the locally held headers by [`LightClient::ingest_peer_data`].

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

use crate::codec::{CodecError, Decode, Encode, Reader, Writer};
use crate::crypto::{AccountId, Hash256};
use crate::ledger::{
    merkle_verify, BlockHeader, Chain, LedgerError, MerkleProof, Payload, Transaction, TxType,
};
use crate::selection::{build_view, PartialGraphView, ViewSpec};
use crate::trustgraph::{build_trust_graph, GraphError, NodeInfo, TrustEdge, TrustGraph};

const BUNDLE_MAGIC: &[u8; 8] = b"UAVPKIB1";
const MAX_HEADERS: usize = 1 << 24;
const MAX_TXS: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LightClientError {
    #[error("header chain broken at height {height}")]
    BrokenHeaderChain { height: u64 },
    #[error("genesis header does not match the trusted genesis")]
    GenesisMismatch,
    #[error("inclusion proof for transaction {tx_id:?} does not verify")]
    BadInclusionProof { tx_id: Hash256 },
    #[error("transaction cites height {height}, local tip is {tip}")]
    UnknownHeight { height: u64, tip: u64 },
    #[error("bundle does not induce its declared view: {0}")]
    InconsistentView(&'static str),
    #[error("bundle digest does not match its contents")]
    DigestMismatch,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error("malformed bundle: {0}")]
    Codec(#[from] CodecError),
}

/// Headers from genesis to some tip, linked by parent hashes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeaderChain {
    headers: Vec<BlockHeader>,
}

impl HeaderChain {
    pub fn verify(headers: Vec<BlockHeader>) -> Result<Self, LightClientError> {
        let first = headers
            .first()
            .ok_or(LightClientError::BrokenHeaderChain { height: 0 })?;
        if first.height != 0 || first.parent_hash != Hash256::ZERO {
            return Err(LightClientError::BrokenHeaderChain { height: first.height });
        }
        for pair in headers.windows(2) {
            if pair[1].height != pair[0].height + 1 || pair[1].parent_hash != pair[0].hash() {
                return Err(LightClientError::BrokenHeaderChain {
                    height: pair[1].height,
                });
            }
        }
        Ok(HeaderChain { headers })
    }

    pub fn tip_height(&self) -> u64 {
        self.headers.len() as u64 - 1
    }

    pub fn header(&self, height: u64) -> Option<&BlockHeader> {
        self.headers.get(height as usize)
    }

    pub fn headers(&self) -> &[BlockHeader] {
        &self.headers
    }

    pub fn genesis_hash(&self) -> Hash256 {
        self.headers[0].hash()
    }

    /// Checks `ptx` against the header at its cited height.
    pub fn check(&self, ptx: &ProvisionedTx) -> Result<(), LightClientError> {
        let header = self
            .header(ptx.block_height)
            .ok_or(LightClientError::UnknownHeight {
                height: ptx.block_height,
                tip: self.tip_height(),
            })?;
        if merkle_verify(&header.merkle_root, &ptx.tx.id(), &ptx.proof) {
            Ok(())
        } else {
            Err(LightClientError::BadInclusionProof { tx_id: ptx.tx.id() })
        }
    }
}

/// A committed transaction with the proof of its inclusion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProvisionedTx {
    pub tx: Transaction,
    pub block_height: u64,
    pub proof: MerkleProof,
}

impl ProvisionedTx {
    /// Looks up and proves a committed transaction.
    pub fn from_chain(chain: &Chain, tx_id: &Hash256) -> Option<Self> {
        let (loc, proof) = chain.prove_tx(tx_id)?;
        Some(ProvisionedTx {
            tx: chain.tx(tx_id)?.clone(),
            block_height: loc.height,
            proof,
        })
    }

    /// Position in the ledger, used to order events.
    pub fn position(&self) -> (u64, u64) {
        (self.block_height, self.proof.leaf_index())
    }
}

impl Encode for ProvisionedTx {
    fn encode(&self, w: &mut Writer) -> Result<(), CodecError> {
        w.framed("tx", &self.tx)?;
        w.u64(self.block_height);
        w.encode(&self.proof)
    }
}

impl Decode for ProvisionedTx {
    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(ProvisionedTx {
            tx: r.framed("tx")?,
            block_height: r.u64()?,
            proof: r.decode()?,
        })
    }
}

/// What a ground station loads onto a UAV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bundle {
    pub headers: Vec<BlockHeader>,
    pub txs: Vec<ProvisionedTx>,
    pub view_spec: ViewSpec,
    /// Hash over the encoding of the fields above.
    pub digest: Hash256,
}

impl Bundle {
    pub fn new(headers: Vec<BlockHeader>, txs: Vec<ProvisionedTx>, view_spec: ViewSpec) -> Self {
        let mut bundle = Bundle {
            headers,
            txs,
            view_spec,
            digest: Hash256::ZERO,
        };
        bundle.digest = bundle.compute_digest();
        bundle
    }

    pub fn compute_digest(&self) -> Hash256 {
        let mut w = Writer::new();
        self.encode_content(&mut w)
            .expect("bundle fields within codec limits");
        Hash256::tagged(b"uavpki/bundle/v1", &[&w.into_bytes()])
    }

    fn encode_content(&self, w: &mut Writer) -> Result<(), CodecError> {
        w.seq("headers", &self.headers, MAX_HEADERS)?;
        w.seq("txs", &self.txs, MAX_TXS)?;
        w.encode(&self.view_spec)
    }

    pub fn to_file_bytes(&self) -> Result<Vec<u8>, CodecError> {
        let mut out = BUNDLE_MAGIC.to_vec();
        out.extend(self.to_canonical_bytes()?);
        Ok(out)
    }

    pub fn from_file_bytes(bytes: &[u8]) -> Result<Self, CodecError> {
        let body = bytes.strip_prefix(BUNDLE_MAGIC).ok_or(CodecError::BadMagic)?;
        Bundle::from_canonical_bytes(body)
    }

    pub fn write_file(&self, path: &Path) -> std::io::Result<()> {
        let bytes = self
            .to_file_bytes()
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
        std::fs::write(path, bytes)
    }

    pub fn read_file(path: &Path) -> std::io::Result<Self> {
        Bundle::from_file_bytes(&std::fs::read(path)?)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}

impl Encode for Bundle {
    fn encode(&self, w: &mut Writer) -> Result<(), CodecError> {
        self.encode_content(w)?;
        w.encode(&self.digest)
    }
}

impl Decode for Bundle {
    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(Bundle {
            headers: r.seq("headers", MAX_HEADERS)?,
            txs: r.seq("txs", MAX_TXS)?,
            view_spec: r.decode()?,
            digest: r.decode()?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EdgeEvent {
    Confirm { scope: u8, height: u64, tx_id: Hash256 },
    Revoke,
}

/// Trust-graph knowledge assembled from proved transactions. For every
/// ordered pair only the event at the latest ledger position counts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Fragment {
    nodes: BTreeMap<AccountId, NodeInfo>,
    edges: BTreeMap<(AccountId, AccountId), ((u64, u64), EdgeEvent)>,
}

impl Fragment {
    /// Records one transaction. Types other than registrations,
    /// confirmations and revocations carry no trust information and are
    /// ignored; the return value says whether the transaction was used.
    pub fn apply(&mut self, ptx: &ProvisionedTx) -> bool {
        let Some(sender) = ptx.tx.sender() else {
            return false;
        };
        let position = ptx.position();
        let (pair, event) = match ptx.tx.payload() {
            Payload::RegisterEntity(reg) => {
                self.nodes.insert(
                    sender,
                    NodeInfo {
                        id: sender,
                        name: reg.name.clone(),
                        public_key: reg.public_key,
                        properties: reg.properties.clone(),
                        registration_tx: ptx.tx.id(),
                        registered_at: ptx.block_height,
                    },
                );
                return true;
            }
            Payload::Confirm { subject, scope } => (
                (sender, *subject),
                EdgeEvent::Confirm {
                    scope: *scope,
                    height: ptx.block_height,
                    tx_id: ptx.tx.id(),
                },
            ),
            Payload::Revoke { subject } => ((sender, *subject), EdgeEvent::Revoke),
            _ => return false,
        };
        match self.edges.get(&pair) {
            Some((seen, _)) if *seen >= position => {}
            _ => {
                self.edges.insert(pair, (position, event));
            }
        }
        true
    }

    /// Registered nodes plus every pair whose latest event is a
    /// confirmation between two known nodes.
    pub fn graph(&self, height: u64) -> TrustGraph {
        let mut graph = TrustGraph::new();
        graph.set_height(height);
        for node in self.nodes.values() {
            graph
                .insert_node(node.clone())
                .expect("fragment nodes are unique");
        }
        for (&(issuer, subject), (_, event)) in &self.edges {
            if let EdgeEvent::Confirm { scope, height, tx_id } = *event {
                if graph.contains(&issuer) && graph.contains(&subject) && issuer != subject {
                    graph
                        .upsert_edge(TrustEdge {
                            issuer,
                            subject,
                            scope,
                            since_height: height,
                            tx_id,
                        })
                        .expect("endpoints checked");
                }
            }
        }
        graph
    }

    pub fn is_revoked(&self, issuer: &AccountId, subject: &AccountId) -> bool {
        matches!(self.edges.get(&(*issuer, *subject)), Some((_, EdgeEvent::Revoke)))
    }
}

/// A UAV's verified storage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LightClient {
    headers: HeaderChain,
    fragment: Fragment,
    txs: Vec<ProvisionedTx>,
    view: PartialGraphView,
}

impl LightClient {
    /// Verifies a bundle and rebuilds its view from the proved transactions.
    ///
    /// Checks run in order: header linkage, inclusion proofs, view
    /// consistency, bundle digest.
    pub fn from_bundle(bundle: &Bundle) -> Result<Self, LightClientError> {
        let headers = HeaderChain::verify(bundle.headers.clone())?;
        for ptx in &bundle.txs {
            headers.check(ptx).map_err(|e| match e {
                LightClientError::UnknownHeight { .. } => {
                    LightClientError::BadInclusionProof { tx_id: ptx.tx.id() }
                }
                other => other,
            })?;
        }

        let mut fragment = Fragment::default();
        for ptx in &bundle.txs {
            if !fragment.apply(ptx) {
                return Err(LightClientError::InconsistentView("unexpected transaction type"));
            }
        }
        let graph = fragment.graph(headers.tip_height());
        if !graph.contains(&bundle.view_spec.owner) {
            return Err(LightClientError::InconsistentView("owner is not registered"));
        }
        let view = build_view(&graph, bundle.view_spec)?;
        if view.graph != graph {
            return Err(LightClientError::InconsistentView(
                "transactions reach beyond the declared view",
            ));
        }
        if bundle.compute_digest() != bundle.digest {
            return Err(LightClientError::DigestMismatch);
        }
        Ok(LightClient {
            headers,
            fragment,
            txs: bundle.txs.clone(),
            view,
        })
    }

    /// As [`LightClient::from_bundle`], additionally pinning the genesis header.
    pub fn from_bundle_anchored(bundle: &Bundle, genesis_hash: &Hash256) -> Result<Self, LightClientError> {
        let client = Self::from_bundle(bundle)?;
        if client.headers.genesis_hash() != *genesis_hash {
            return Err(LightClientError::GenesisMismatch);
        }
        Ok(client)
    }

    pub fn headers(&self) -> &HeaderChain {
        &self.headers
    }

    pub fn view(&self) -> &PartialGraphView {
        &self.view
    }

    pub fn owner(&self) -> AccountId {
        self.view.owner()
    }

    pub fn as_of_height(&self) -> u64 {
        self.view.as_of_height
    }

    /// The proved transactions this client holds.
    pub fn provisioned(&self) -> &[ProvisionedTx] {
        &self.txs
    }

    pub fn fragment(&self) -> &Fragment {
        &self.fragment
    }

    /// Checks peer transactions against the local headers and returns the
    /// session graph: local knowledge plus the peer's, latest event winning.
    /// The client itself is not modified.
    pub fn ingest_peer_data(&self, peer_txs: &[ProvisionedTx]) -> Result<TrustGraph, LightClientError> {
        let mut fragment = self.fragment.clone();
        for ptx in peer_txs {
            self.headers.check(ptx)?;
            fragment.apply(ptx);
        }
        Ok(fragment.graph(self.as_of_height()))
    }
}

/// Verifies a bundle and returns the view it carries.
pub fn verify_bundle(bundle: &Bundle) -> Result<PartialGraphView, LightClientError> {
    LightClient::from_bundle(bundle).map(|c| c.view)
}

/// Bundle for `spec` as of the chain tip.
pub fn make_bundle(chain: &Chain, spec: ViewSpec) -> Result<Bundle, LightClientError> {
    make_bundle_at(chain, spec, chain.height())
}

/// Bundle for `spec` as of `height`: the headers up to `height`, the
/// registrations and confirmations that induce the view, and the latest
/// revocation of every pair touching a view node.
pub fn make_bundle_at(chain: &Chain, spec: ViewSpec, height: u64) -> Result<Bundle, LightClientError> {
    let state = if height == chain.height() {
        chain.state().clone()
    } else {
        chain.state_at(height)?
    };
    let view = build_view(&build_trust_graph(&state), spec)?;

    let mut ids: Vec<Hash256> = view
        .graph
        .nodes()
        .map(|n| n.registration_tx)
        .chain(view.graph.edges().map(|e| e.tx_id))
        .collect();
    let mut revocations = BTreeMap::new();
    for (loc, tx) in chain.txs_of_type(TxType::Revoke) {
        if loc.height > height {
            break;
        }
        if let (Some(issuer), Payload::Revoke { subject }) = (tx.sender(), tx.payload()) {
            if view.graph.contains(&issuer) || view.graph.contains(subject) {
                revocations.insert((issuer, *subject), tx.id());
            }
        }
    }
    ids.extend(revocations.into_values());

    let mut txs = ids
        .iter()
        .map(|id| ProvisionedTx::from_chain(chain, id).expect("view transactions are committed"))
        .collect::<Vec<_>>();
    txs.sort_by_key(ProvisionedTx::position);
    let headers = chain.headers()[..=height as usize].to_vec();
    Ok(Bundle::new(headers, txs, spec))
}
