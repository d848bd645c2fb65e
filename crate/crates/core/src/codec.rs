//! Canonical binary encoding.
//!
//! Every value that is hashed, signed or written to disk goes through this
//! module. The rules are fixed: integers are fixed-width big-endian, byte
//! strings and UTF-8 strings carry a `u32` length prefix, optional values a
//! `0`/`1` presence byte, and collections a `u32` element count. Decoding is
//! strict, so for every accepted byte string `encode(decode(b)) == b`.

use std::collections::BTreeMap;

use thiserror::Error;

/// Upper bound on any single length prefix we are willing to allocate for.
pub const MAX_FIELD_LEN: usize = 16 * 1024 * 1024;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("field `{field}` is {len} bytes, limit is {max}")]
    Oversize {
        field: &'static str,
        len: usize,
        max: usize,
    },
    #[error("value is structurally incomplete: {0}")]
    Incomplete(&'static str),
    #[error("unexpected end of input")]
    UnexpectedEof,
    #[error("{0} trailing bytes after value")]
    TrailingBytes(usize),
    #[error("invalid tag {tag} for {what}")]
    InvalidTag { what: &'static str, tag: u8 },
    #[error("invalid utf-8 in string")]
    InvalidUtf8,
    #[error("non-canonical encoding: {0}")]
    NonCanonical(&'static str),
    #[error("bad magic header")]
    BadMagic,
}

pub type Result<T> = std::result::Result<T, CodecError>;

#[derive(Debug, Default, Clone)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn bool(&mut self, v: bool) {
        self.buf.push(u8::from(v));
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_be_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_be_bytes());
    }

    pub fn raw(&mut self, bytes: &[u8]) {
        self.buf.extend_from_slice(bytes);
    }

    pub fn len_prefix(&mut self, field: &'static str, len: usize, max: usize) -> Result<()> {
        if len > max {
            return Err(CodecError::Oversize { field, len, max });
        }
        self.u32(len as u32);
        Ok(())
    }

    pub fn bytes(&mut self, field: &'static str, bytes: &[u8], max: usize) -> Result<()> {
        self.len_prefix(field, bytes.len(), max)?;
        self.raw(bytes);
        Ok(())
    }

    pub fn str(&mut self, field: &'static str, s: &str, max: usize) -> Result<()> {
        self.bytes(field, s.as_bytes(), max)
    }

    pub fn encode<T: Encode + ?Sized>(&mut self, value: &T) -> Result<()> {
        value.encode(self)
    }

    pub fn option<T: Encode>(&mut self, value: Option<&T>) -> Result<()> {
        match value {
            None => {
                self.u8(0);
                Ok(())
            }
            Some(v) => {
                self.u8(1);
                v.encode(self)
            }
        }
    }

    pub fn seq<T: Encode>(&mut self, field: &'static str, items: &[T], max: usize) -> Result<()> {
        self.len_prefix(field, items.len(), max)?;
        items.iter().try_for_each(|item| item.encode(self))
    }

    /// Writes a nested value behind its own `u32` length prefix.
    pub fn framed<T: Encode + ?Sized>(&mut self, field: &'static str, value: &T) -> Result<()> {
        let inner = value.to_canonical_bytes()?;
        self.bytes(field, &inner, MAX_FIELD_LEN)
    }
}

#[derive(Debug, Clone)]
pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn is_empty(&self) -> bool {
        self.remaining() == 0
    }

    pub fn finish(&self) -> Result<()> {
        match self.remaining() {
            0 => Ok(()),
            n => Err(CodecError::TrailingBytes(n)),
        }
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(CodecError::UnexpectedEof);
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut out = [0u8; N];
        out.copy_from_slice(self.take(N)?);
        Ok(out)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn bool(&mut self) -> Result<bool> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            tag => Err(CodecError::InvalidTag { what: "bool", tag }),
        }
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_be_bytes(self.array()?))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_be_bytes(self.array()?))
    }

    pub fn len_prefix(&mut self, field: &'static str, max: usize) -> Result<usize> {
        let len = self.u32()? as usize;
        if len > max {
            return Err(CodecError::Oversize { field, len, max });
        }
        Ok(len)
    }

    pub fn bytes(&mut self, field: &'static str, max: usize) -> Result<&'a [u8]> {
        let len = self.len_prefix(field, max)?;
        self.take(len)
    }

    pub fn string(&mut self, field: &'static str, max: usize) -> Result<String> {
        let raw = self.bytes(field, max)?;
        std::str::from_utf8(raw)
            .map(str::to_owned)
            .map_err(|_| CodecError::InvalidUtf8)
    }

    pub fn decode<T: Decode>(&mut self) -> Result<T> {
        T::decode(self)
    }

    pub fn option<T: Decode>(&mut self) -> Result<Option<T>> {
        match self.u8()? {
            0 => Ok(None),
            1 => Ok(Some(T::decode(self)?)),
            tag => Err(CodecError::InvalidTag { what: "option", tag }),
        }
    }

    pub fn seq<T: Decode>(&mut self, field: &'static str, max: usize) -> Result<Vec<T>> {
        let len = self.len_prefix(field, max)?;
        // Each element takes at least one byte; refuse counts the input cannot hold.
        if len > self.remaining() {
            return Err(CodecError::UnexpectedEof);
        }
        (0..len).map(|_| T::decode(self)).collect()
    }

    pub fn framed<T: Decode>(&mut self, field: &'static str) -> Result<T> {
        let inner = self.bytes(field, MAX_FIELD_LEN)?;
        T::from_canonical_bytes(inner)
    }
}

pub trait Encode {
    fn encode(&self, w: &mut Writer) -> Result<()>;

    fn to_canonical_bytes(&self) -> Result<Vec<u8>> {
        let mut w = Writer::new();
        self.encode(&mut w)?;
        Ok(w.into_bytes())
    }
}

pub trait Decode: Sized {
    fn decode(r: &mut Reader<'_>) -> Result<Self>;

    /// Decodes a complete value, rejecting trailing bytes.
    fn from_canonical_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        let value = Self::decode(&mut r)?;
        r.finish()?;
        Ok(value)
    }
}

impl Encode for u8 {
    fn encode(&self, w: &mut Writer) -> Result<()> {
        w.u8(*self);
        Ok(())
    }
}

impl Decode for u8 {
    fn decode(r: &mut Reader<'_>) -> Result<Self> {
        r.u8()
    }
}

impl Encode for u64 {
    fn encode(&self, w: &mut Writer) -> Result<()> {
        w.u64(*self);
        Ok(())
    }
}

impl Decode for u64 {
    fn decode(r: &mut Reader<'_>) -> Result<Self> {
        r.u64()
    }
}

/// Sorted string map with bounded key/value sizes. Decoding requires keys
/// in strictly increasing order so the encoding stays canonical.
pub fn write_string_map(
    w: &mut Writer,
    field: &'static str,
    map: &BTreeMap<String, String>,
    max_entries: usize,
    max_len: usize,
) -> Result<()> {
    w.len_prefix(field, map.len(), max_entries)?;
    for (k, v) in map {
        w.str(field, k, max_len)?;
        w.str(field, v, max_len)?;
    }
    Ok(())
}

pub fn read_string_map(
    r: &mut Reader<'_>,
    field: &'static str,
    max_entries: usize,
    max_len: usize,
) -> Result<BTreeMap<String, String>> {
    let len = r.len_prefix(field, max_entries)?;
    let mut out = BTreeMap::new();
    let mut last: Option<String> = None;
    for _ in 0..len {
        let k = r.string(field, max_len)?;
        let v = r.string(field, max_len)?;
        if last.as_ref().is_some_and(|prev| prev >= &k) {
            return Err(CodecError::NonCanonical("map keys must be strictly increasing"));
        }
        last = Some(k.clone());
        out.insert(k, v);
    }
    Ok(out)
}

/// Splits a byte stream of `u32`-length-prefixed records.
pub fn read_records(bytes: &[u8]) -> Result<Vec<&[u8]>> {
    let mut r = Reader::new(bytes);
    let mut out = Vec::new();
    while !r.is_empty() {
        out.push(r.bytes("record", MAX_FIELD_LEN)?);
    }
    Ok(out)
}

pub fn write_record(out: &mut Vec<u8>, record: &[u8]) -> Result<()> {
    let mut w = Writer::new();
    w.bytes("record", record, MAX_FIELD_LEN)?;
    out.extend_from_slice(&w.into_bytes());
    Ok(())
}
