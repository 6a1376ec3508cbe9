//! Canonical binary encoding.
//!
//! Every value that is hashed or persisted goes through this codec, so two
//! equal values always produce identical bytes and vice versa.
//!
//! | value                  | encoding                                        |
//! |------------------------|-------------------------------------------------|
//! | `u64` / `i64`          | 8 bytes, big-endian (two's complement for i64)  |
//! | `u32` (lengths only)   | 4 bytes, big-endian                             |
//! | string                 | u32 byte length, then UTF-8 bytes               |
//! | sequence               | u32 element count, then each element            |
//! | `Digest256`            | 32 raw bytes, no prefix                         |
//! | enum variant           | 1-byte tag, then the variant's fields           |
//! | struct                 | fields in declared order, no separators         |
//!
//! Decoding is strict: unknown tags, invalid UTF-8, short input and trailing
//! bytes are all errors, which keeps `encode(decode(b)) == b` for every
//! accepted `b`.

use thiserror::Error;

use crate::digest::{hash_bytes, Digest256};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("unexpected end of input: need {need} bytes at offset {offset}")]
    UnexpectedEof { offset: usize, need: usize },
    #[error("invalid tag {tag:#04x} for {type_name}")]
    InvalidTag { tag: u8, type_name: &'static str },
    #[error("invalid UTF-8 in string at offset {0}")]
    InvalidUtf8(usize),
    #[error("{0} trailing bytes after value")]
    TrailingBytes(usize),
    #[error("invalid value for {0}")]
    InvalidValue(&'static str),
}

/// Byte sink for canonical encoding.
#[derive(Debug, Default, Clone)]
pub struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn i64(&mut self, v: i64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn u32(&mut self, v: u32) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn tag(&mut self, t: u8) -> &mut Self {
        self.buf.push(t);
        self
    }

    pub fn str(&mut self, s: &str) -> &mut Self {
        self.u32(len_u32(s.len()));
        self.buf.extend_from_slice(s.as_bytes());
        self
    }

    pub fn digest(&mut self, d: &Digest256) -> &mut Self {
        self.buf.extend_from_slice(d.as_bytes());
        self
    }

    pub fn seq<T: Encode>(&mut self, items: &[T]) -> &mut Self {
        self.u32(len_u32(items.len()));
        for it in items {
            it.encode(self);
        }
        self
    }

    pub fn value<T: Encode + ?Sized>(&mut self, v: &T) -> &mut Self {
        v.encode(self);
        self
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }
}

fn len_u32(n: usize) -> u32 {
    u32::try_from(n).expect("length exceeds u32 range")
}

/// Cursor over canonical bytes.
#[derive(Debug)]
pub struct Decoder<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Decoder<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Decoder { buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        if self.buf.len() - self.pos < n {
            return Err(CodecError::UnexpectedEof {
                offset: self.pos,
                need: n,
            });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn u64(&mut self) -> Result<u64, CodecError> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn i64(&mut self) -> Result<i64, CodecError> {
        Ok(i64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn u32(&mut self) -> Result<u32, CodecError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn tag(&mut self) -> Result<u8, CodecError> {
        Ok(self.take(1)?[0])
    }

    pub fn string(&mut self) -> Result<String, CodecError> {
        let n = self.u32()? as usize;
        let at = self.pos;
        let raw = self.take(n)?;
        std::str::from_utf8(raw)
            .map(str::to_owned)
            .map_err(|_| CodecError::InvalidUtf8(at))
    }

    pub fn digest(&mut self) -> Result<Digest256, CodecError> {
        Ok(Digest256(self.take(32)?.try_into().unwrap()))
    }

    pub fn seq<T: Decode>(&mut self) -> Result<Vec<T>, CodecError> {
        let n = self.u32()? as usize;
        // Each element takes at least one byte; refuse counts the input cannot hold.
        if n > self.remaining() {
            return Err(CodecError::UnexpectedEof {
                offset: self.pos,
                need: n,
            });
        }
        (0..n).map(|_| T::decode(self)).collect()
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn finish(self) -> Result<(), CodecError> {
        match self.remaining() {
            0 => Ok(()),
            n => Err(CodecError::TrailingBytes(n)),
        }
    }
}

pub trait Encode {
    fn encode(&self, enc: &mut Encoder);
}

pub trait Decode: Sized {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, CodecError>;
}

/// Canonical bytes of `value`.
pub fn canonical_encode<T: Encode + ?Sized>(value: &T) -> Vec<u8> {
    let mut e = Encoder::new();
    value.encode(&mut e);
    e.into_bytes()
}

/// Decodes a complete value; trailing bytes are an error.
pub fn canonical_decode<T: Decode>(bytes: &[u8]) -> Result<T, CodecError> {
    let mut d = Decoder::new(bytes);
    let v = T::decode(&mut d)?;
    d.finish()?;
    Ok(v)
}

/// `hash_bytes(canonical_encode(value))`.
pub fn digest_of<T: Encode + ?Sized>(value: &T) -> Digest256 {
    hash_bytes(&canonical_encode(value))
}

impl Encode for u64 {
    fn encode(&self, enc: &mut Encoder) {
        enc.u64(*self);
    }
}

impl Decode for u64 {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        dec.u64()
    }
}

impl Encode for i64 {
    fn encode(&self, enc: &mut Encoder) {
        enc.i64(*self);
    }
}

impl Decode for i64 {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        dec.i64()
    }
}

impl Encode for str {
    fn encode(&self, enc: &mut Encoder) {
        enc.str(self);
    }
}

impl Encode for String {
    fn encode(&self, enc: &mut Encoder) {
        enc.str(self);
    }
}

impl Decode for String {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        dec.string()
    }
}

impl Encode for Digest256 {
    fn encode(&self, enc: &mut Encoder) {
        enc.digest(self);
    }
}

impl Decode for Digest256 {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        dec.digest()
    }
}

impl<T: Encode> Encode for Vec<T> {
    fn encode(&self, enc: &mut Encoder) {
        enc.seq(self);
    }
}

impl<T: Decode> Decode for Vec<T> {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        dec.seq()
    }
}

impl<A: Encode, B: Encode> Encode for (A, B) {
    fn encode(&self, enc: &mut Encoder) {
        self.0.encode(enc);
        self.1.encode(enc);
    }
}

impl<A: Decode, B: Decode> Decode for (A, B) {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        Ok((A::decode(dec)?, B::decode(dec)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_u64_is_eight_zero_bytes() {
        assert_eq!(canonical_encode(&0u64), vec![0u8; 8]);
    }

    #[test]
    fn empty_string_is_bare_length_prefix() {
        assert_eq!(canonical_encode(""), vec![0, 0, 0, 0]);
    }

    #[test]
    fn integers_are_big_endian() {
        assert_eq!(canonical_encode(&0x0102u64), vec![0, 0, 0, 0, 0, 0, 1, 2]);
        assert_eq!(canonical_encode(&-1i64), vec![0xff; 8]);
    }

    #[test]
    fn strings_and_sequences_are_prefixed() {
        let v = vec!["ab".to_string(), String::new()];
        assert_eq!(
            canonical_encode(&v),
            vec![0, 0, 0, 2, 0, 0, 0, 2, b'a', b'b', 0, 0, 0, 0]
        );
    }

    #[test]
    fn strict_decoding() {
        assert_eq!(
            canonical_decode::<u64>(&[0; 9]),
            Err(CodecError::TrailingBytes(1))
        );
        assert!(matches!(
            canonical_decode::<u64>(&[0; 7]),
            Err(CodecError::UnexpectedEof { .. })
        ));
        assert_eq!(
            canonical_decode::<String>(&[0, 0, 0, 1, 0xff]),
            Err(CodecError::InvalidUtf8(4))
        );
        // Count larger than the remaining input.
        assert!(canonical_decode::<Vec<u64>>(&[0xff, 0xff, 0xff, 0xff]).is_err());
    }

    #[test]
    fn pair_round_trip() {
        let p = ("node".to_string(), 7u64);
        assert_eq!(canonical_decode::<(String, u64)>(&canonical_encode(&p)).unwrap(), p);
    }
}
