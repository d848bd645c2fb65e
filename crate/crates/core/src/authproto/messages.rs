use crate::codec::{CodecError, Decode, Encode, Reader, Writer};
use crate::crypto::{AccountId, Hash256, Signature};
use crate::lightclient::ProvisionedTx;

const MAX_HASHES: usize = 1 << 16;
const MAX_PATH_TXS: usize = 1 << 16;

/// Step 1, responder to initiator: identity and the registration hashes of
/// every node on the responder's incoming paths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HelloMsg {
    pub responder_id: AccountId,
    /// Sorted, without duplicates.
    pub incoming_node_hashes: Vec<Hash256>,
    pub as_of_height: u64,
}

/// Step 2, initiator to responder: the common nodes whose data is wanted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataRequest {
    /// Sorted, without duplicates.
    pub requested_node_hashes: Vec<Hash256>,
}

/// Step 3, responder to initiator: proved transactions for the requested nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathData {
    pub txs: Vec<ProvisionedTx>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChallengeMsg {
    pub initiator_id: AccountId,
    pub nonce: [u8; 32],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResponseMsg {
    pub signature: Signature,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Message {
    Hello(HelloMsg),
    DataRequest(DataRequest),
    PathData(PathData),
    Challenge(ChallengeMsg),
    Response(ResponseMsg),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MessageKind {
    Hello = 1,
    DataRequest = 2,
    PathData = 3,
    Challenge = 4,
    Response = 5,
}

impl MessageKind {
    pub const ALL: [MessageKind; 5] = [
        MessageKind::Hello,
        MessageKind::DataRequest,
        MessageKind::PathData,
        MessageKind::Challenge,
        MessageKind::Response,
    ];
}

impl Message {
    pub fn kind(&self) -> MessageKind {
        match self {
            Message::Hello(_) => MessageKind::Hello,
            Message::DataRequest(_) => MessageKind::DataRequest,
            Message::PathData(_) => MessageKind::PathData,
            Message::Challenge(_) => MessageKind::Challenge,
            Message::Response(_) => MessageKind::Response,
        }
    }

    /// One tag byte followed by the canonical body.
    pub fn to_wire(&self) -> Vec<u8> {
        self.to_canonical_bytes()
            .expect("protocol messages stay within codec limits")
    }

    pub fn from_wire(bytes: &[u8]) -> Result<Self, CodecError> {
        Message::from_canonical_bytes(bytes)
    }
}

fn write_sorted(w: &mut Writer, field: &'static str, hashes: &[Hash256]) -> Result<(), CodecError> {
    if hashes.windows(2).any(|p| p[0] >= p[1]) {
        return Err(CodecError::NonCanonical(field));
    }
    w.seq(field, hashes, MAX_HASHES)
}

fn read_sorted(r: &mut Reader<'_>, field: &'static str) -> Result<Vec<Hash256>, CodecError> {
    let hashes: Vec<Hash256> = r.seq(field, MAX_HASHES)?;
    if hashes.windows(2).any(|p| p[0] >= p[1]) {
        return Err(CodecError::NonCanonical(field));
    }
    Ok(hashes)
}

impl Encode for Message {
    fn encode(&self, w: &mut Writer) -> Result<(), CodecError> {
        w.u8(self.kind() as u8);
        match self {
            Message::Hello(m) => {
                w.encode(&m.responder_id)?;
                write_sorted(w, "incoming_node_hashes", &m.incoming_node_hashes)?;
                w.u64(m.as_of_height);
            }
            Message::DataRequest(m) => {
                write_sorted(w, "requested_node_hashes", &m.requested_node_hashes)?;
            }
            Message::PathData(m) => w.seq("txs", &m.txs, MAX_PATH_TXS)?,
            Message::Challenge(m) => {
                w.encode(&m.initiator_id)?;
                w.raw(&m.nonce);
            }
            Message::Response(m) => w.encode(&m.signature)?,
        }
        Ok(())
    }
}

impl Decode for Message {
    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(match r.u8()? {
            1 => Message::Hello(HelloMsg {
                responder_id: r.decode()?,
                incoming_node_hashes: read_sorted(r, "incoming_node_hashes")?,
                as_of_height: r.u64()?,
            }),
            2 => Message::DataRequest(DataRequest {
                requested_node_hashes: read_sorted(r, "requested_node_hashes")?,
            }),
            3 => Message::PathData(PathData {
                txs: r.seq("txs", MAX_PATH_TXS)?,
            }),
            4 => Message::Challenge(ChallengeMsg {
                initiator_id: r.decode()?,
                nonce: r.array()?,
            }),
            5 => Message::Response(ResponseMsg {
                signature: r.decode()?,
            }),
            tag => return Err(CodecError::InvalidTag { what: "message", tag }),
        })
    }
}
