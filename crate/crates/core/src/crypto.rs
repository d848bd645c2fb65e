//! Hashes, account identifiers and Ed25519 keys.

use std::fmt;
use std::str::FromStr;

use ed25519_dalek::{Signer, SigningKey, VerifyingKey};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::codec::{self, Decode, Encode, Reader, Writer};

/// A SHA-256 digest.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Hash256(pub [u8; 32]);

impl Hash256 {
    pub const ZERO: Hash256 = Hash256([0u8; 32]);
    pub const MAX: Hash256 = Hash256([0xff; 32]);

    pub fn digest(data: &[u8]) -> Self {
        Hash256(Sha256::digest(data).into())
    }

    /// Hashes a domain tag followed by each part, with no separators between parts.
    pub fn tagged(tag: &[u8], parts: &[&[u8]]) -> Self {
        let mut h = Sha256::new();
        h.update(tag);
        for p in parts {
            h.update(p);
        }
        Hash256(h.finalize().into())
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn short(&self) -> String {
        hex::encode(&self.0[..4])
    }
}

impl fmt::Debug for Hash256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Hash256({})", self.short())
    }
}

impl fmt::Display for Hash256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("expected 64 hex characters")]
pub struct ParseHashError;

impl FromStr for Hash256 {
    type Err = ParseHashError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = [0u8; 32];
        hex::decode_to_slice(s, &mut out).map_err(|_| ParseHashError)?;
        Ok(Hash256(out))
    }
}

impl Encode for Hash256 {
    fn encode(&self, w: &mut Writer) -> codec::Result<()> {
        w.raw(&self.0);
        Ok(())
    }
}

impl Decode for Hash256 {
    fn decode(r: &mut Reader<'_>) -> codec::Result<Self> {
        Ok(Hash256(r.array()?))
    }
}

impl Serialize for Hash256 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Hash256 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Account identifier: the SHA-256 of the account's registration public key.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AccountId(pub Hash256);

impl AccountId {
    pub const MIN: AccountId = AccountId(Hash256::ZERO);
    pub const MAX: AccountId = AccountId(Hash256::MAX);

    pub fn from_public_key(key: &PublicKey) -> Self {
        AccountId(Hash256::digest(&key.0))
    }

    pub fn short(&self) -> String {
        self.0.short()
    }
}

impl fmt::Debug for AccountId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AccountId({})", self.0.short())
    }
}

impl fmt::Display for AccountId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl FromStr for AccountId {
    type Err = ParseHashError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse().map(AccountId)
    }
}

impl Encode for AccountId {
    fn encode(&self, w: &mut Writer) -> codec::Result<()> {
        self.0.encode(w)
    }
}

impl Decode for AccountId {
    fn decode(r: &mut Reader<'_>) -> codec::Result<Self> {
        Ok(AccountId(r.decode()?))
    }
}

/// Ed25519 verification key bytes.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PublicKey(pub [u8; 32]);

impl PublicKey {
    pub fn account_id(&self) -> AccountId {
        AccountId::from_public_key(self)
    }

    /// Strict Ed25519 verification. Malformed keys never verify.
    pub fn verify(&self, message: &[u8], signature: &Signature) -> bool {
        let Ok(key) = VerifyingKey::from_bytes(&self.0) else {
            return false;
        };
        let sig = ed25519_dalek::Signature::from_bytes(&signature.0);
        key.verify_strict(message, &sig).is_ok()
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Debug for PublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PublicKey({})", hex::encode(&self.0[..4]))
    }
}

impl FromStr for PublicKey {
    type Err = ParseHashError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = [0u8; 32];
        hex::decode_to_slice(s, &mut out).map_err(|_| ParseHashError)?;
        Ok(PublicKey(out))
    }
}

impl Encode for PublicKey {
    fn encode(&self, w: &mut Writer) -> codec::Result<()> {
        w.raw(&self.0);
        Ok(())
    }
}

impl Decode for PublicKey {
    fn decode(r: &mut Reader<'_>) -> codec::Result<Self> {
        Ok(PublicKey(r.array()?))
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub struct Signature(pub [u8; 64]);

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Signature({}..)", hex::encode(&self.0[..4]))
    }
}

impl Encode for Signature {
    fn encode(&self, w: &mut Writer) -> codec::Result<()> {
        w.raw(&self.0);
        Ok(())
    }
}

impl Decode for Signature {
    fn decode(r: &mut Reader<'_>) -> codec::Result<Self> {
        Ok(Signature(r.array()?))
    }
}

/// An Ed25519 signing key.
#[derive(Clone)]
pub struct KeyPair {
    signing: SigningKey,
}

impl KeyPair {
    pub fn from_seed(seed: [u8; 32]) -> Self {
        Self {
            signing: SigningKey::from_bytes(&seed),
        }
    }

    /// Deterministic key derived from a text label.
    ///
    /// Anyone who knows the label can sign for the key. Meant for fixtures,
    /// simulations and examples only.
    pub fn from_label(label: &str) -> Self {
        Self::from_seed(Hash256::tagged(b"uavpki/label-key/v1", &[label.as_bytes()]).0)
    }

    pub fn generate<R: rand::RngCore + rand::CryptoRng>(rng: &mut R) -> Self {
        let mut seed = [0u8; 32];
        rng.fill_bytes(&mut seed);
        Self::from_seed(seed)
    }

    pub fn public_key(&self) -> PublicKey {
        PublicKey(self.signing.verifying_key().to_bytes())
    }

    pub fn account_id(&self) -> AccountId {
        self.public_key().account_id()
    }

    pub fn sign(&self, message: &[u8]) -> Signature {
        Signature(self.signing.sign(message).to_bytes())
    }
}

impl fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KeyPair")
            .field("public", &self.public_key())
            .finish_non_exhaustive()
    }
}
