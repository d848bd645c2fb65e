use std::collections::BTreeMap;

use crate::codec::{self, read_string_map, write_string_map, CodecError, Decode, Encode, Reader, Writer};
use crate::crypto::{AccountId, Hash256, KeyPair, PublicKey, Signature};

pub const MAX_NAME_LEN: usize = 256;
pub const MAX_PROPERTIES: usize = 16;
pub const MAX_PROPERTY_LEN: usize = 256;

const SIGNING_DOMAIN: &[u8] = b"uavpki/tx/v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TxType {
    Coinbase = 0,
    Transfer = 1,
    RegisterEntity = 2,
    Confirm = 3,
    Revoke = 4,
    Checkpoint = 5,
}

impl TxType {
    fn from_tag(tag: u8) -> codec::Result<Self> {
        Ok(match tag {
            0 => TxType::Coinbase,
            1 => TxType::Transfer,
            2 => TxType::RegisterEntity,
            3 => TxType::Confirm,
            4 => TxType::Revoke,
            5 => TxType::Checkpoint,
            tag => return Err(CodecError::InvalidTag { what: "tx type", tag }),
        })
    }
}

/// Binds a name, a public key and optional descriptive properties
/// (entity type, model, responsible authority, ...) to a new account.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisterEntity {
    pub name: String,
    pub public_key: PublicKey,
    pub properties: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Payload {
    /// Block reward; `height` keeps coinbase ids unique per block.
    Coinbase {
        height: u64,
    },
    Transfer {
        to: AccountId,
        amount: u64,
    },
    RegisterEntity(RegisterEntity),
    /// Sender vouches for `subject`'s key binding, accepting trust paths of
    /// at most `scope` edges that start with this edge.
    Confirm {
        subject: AccountId,
        scope: u8,
    },
    Revoke {
        subject: AccountId,
    },
    Checkpoint {
        at_height: u64,
        at_block: Hash256,
        state_digest: Hash256,
    },
}

impl Payload {
    pub fn tx_type(&self) -> TxType {
        match self {
            Payload::Coinbase { .. } => TxType::Coinbase,
            Payload::Transfer { .. } => TxType::Transfer,
            Payload::RegisterEntity(_) => TxType::RegisterEntity,
            Payload::Confirm { .. } => TxType::Confirm,
            Payload::Revoke { .. } => TxType::Revoke,
            Payload::Checkpoint { .. } => TxType::Checkpoint,
        }
    }

    pub fn register(
        name: impl Into<String>,
        public_key: PublicKey,
        properties: BTreeMap<String, String>,
    ) -> Self {
        Payload::RegisterEntity(RegisterEntity {
            name: name.into(),
            public_key,
            properties,
        })
    }

    fn encode_body(&self, w: &mut Writer) -> codec::Result<()> {
        match self {
            Payload::Coinbase { height } => w.u64(*height),
            Payload::Transfer { to, amount } => {
                to.encode(w)?;
                w.u64(*amount);
            }
            Payload::RegisterEntity(reg) => {
                w.str("name", &reg.name, MAX_NAME_LEN)?;
                reg.public_key.encode(w)?;
                write_string_map(w, "properties", &reg.properties, MAX_PROPERTIES, MAX_PROPERTY_LEN)?;
            }
            Payload::Confirm { subject, scope } => {
                subject.encode(w)?;
                w.u8(*scope);
            }
            Payload::Revoke { subject } => subject.encode(w)?,
            Payload::Checkpoint {
                at_height,
                at_block,
                state_digest,
            } => {
                w.u64(*at_height);
                at_block.encode(w)?;
                state_digest.encode(w)?;
            }
        }
        Ok(())
    }

    fn decode_body(ty: TxType, r: &mut Reader<'_>) -> codec::Result<Self> {
        Ok(match ty {
            TxType::Coinbase => Payload::Coinbase { height: r.u64()? },
            TxType::Transfer => Payload::Transfer {
                to: r.decode()?,
                amount: r.u64()?,
            },
            TxType::RegisterEntity => Payload::RegisterEntity(RegisterEntity {
                name: r.string("name", MAX_NAME_LEN)?,
                public_key: r.decode()?,
                properties: read_string_map(r, "properties", MAX_PROPERTIES, MAX_PROPERTY_LEN)?,
            }),
            TxType::Confirm => Payload::Confirm {
                subject: r.decode()?,
                scope: r.u8()?,
            },
            TxType::Revoke => Payload::Revoke { subject: r.decode()? },
            TxType::Checkpoint => Payload::Checkpoint {
                at_height: r.u64()?,
                at_block: r.decode()?,
                state_digest: r.decode()?,
            },
        })
    }
}

/// A ledger transaction.
///
/// Fields are private so that every value in existence has passed the size
/// and shape checks of the canonical encoding; the id is computed once at
/// construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transaction {
    sender: Option<AccountId>,
    nonce: u64,
    payload: Payload,
    signature: Option<Signature>,
    id: Hash256,
}

impl Transaction {
    pub fn coinbase(height: u64) -> Self {
        Self::from_parts(None, 0, Payload::Coinbase { height }, None).expect("coinbase is always well-formed")
    }

    /// Builds and signs a transaction from `key`'s account.
    pub fn signed(key: &KeyPair, nonce: u64, payload: Payload) -> Result<Self, CodecError> {
        let sender = Some(key.account_id());
        let message = signing_message(sender.as_ref(), nonce, &payload)?;
        let signature = Some(key.sign(&message));
        Self::from_parts(sender, nonce, payload, signature)
    }

    /// Assembles a transaction from raw parts, checking only its shape.
    /// The signature is not verified here; ledger application does that.
    pub fn from_parts(
        sender: Option<AccountId>,
        nonce: u64,
        payload: Payload,
        signature: Option<Signature>,
    ) -> Result<Self, CodecError> {
        let coinbase = payload.tx_type() == TxType::Coinbase;
        if coinbase && (sender.is_some() || signature.is_some() || nonce != 0) {
            return Err(CodecError::NonCanonical(
                "coinbase carries no sender, nonce or signature",
            ));
        }
        if !coinbase && (sender.is_none() || signature.is_none()) {
            return Err(CodecError::Incomplete("sender and signature are required"));
        }
        let mut tx = Transaction {
            sender,
            nonce,
            payload,
            signature,
            id: Hash256::ZERO,
        };
        let mut w = Writer::new();
        tx.encode_full(&mut w)?;
        tx.id = Hash256::digest(&w.into_bytes());
        Ok(tx)
    }

    pub fn id(&self) -> Hash256 {
        self.id
    }

    pub fn tx_type(&self) -> TxType {
        self.payload.tx_type()
    }

    pub fn sender(&self) -> Option<AccountId> {
        self.sender
    }

    pub fn nonce(&self) -> u64 {
        self.nonce
    }

    pub fn payload(&self) -> &Payload {
        &self.payload
    }

    pub fn signature(&self) -> Option<&Signature> {
        self.signature.as_ref()
    }

    /// The exact bytes covered by the signature.
    pub fn signing_message(&self) -> Vec<u8> {
        signing_message(self.sender.as_ref(), self.nonce, &self.payload).expect("validated at construction")
    }

    pub fn verify_signature(&self, key: &PublicKey) -> bool {
        self.signature
            .as_ref()
            .is_some_and(|sig| key.verify(&self.signing_message(), sig))
    }

    fn encode_full(&self, w: &mut Writer) -> codec::Result<()> {
        encode_unsigned(w, self.sender.as_ref(), self.nonce, &self.payload)?;
        w.option(self.signature.as_ref())
    }
}

fn encode_unsigned(
    w: &mut Writer,
    sender: Option<&AccountId>,
    nonce: u64,
    payload: &Payload,
) -> codec::Result<()> {
    w.u8(payload.tx_type() as u8);
    w.option(sender)?;
    w.u64(nonce);
    payload.encode_body(w)
}

fn signing_message(sender: Option<&AccountId>, nonce: u64, payload: &Payload) -> codec::Result<Vec<u8>> {
    let mut w = Writer::new();
    w.raw(SIGNING_DOMAIN);
    encode_unsigned(&mut w, sender, nonce, payload)?;
    Ok(w.into_bytes())
}

impl Encode for Transaction {
    fn encode(&self, w: &mut Writer) -> codec::Result<()> {
        self.encode_full(w)
    }
}

impl Decode for Transaction {
    fn decode(r: &mut Reader<'_>) -> codec::Result<Self> {
        let ty = TxType::from_tag(r.u8()?)?;
        let sender = r.option()?;
        let nonce = r.u64()?;
        let payload = Payload::decode_body(ty, r)?;
        let signature = r.option()?;
        Transaction::from_parts(sender, nonce, payload, signature)
    }
}
