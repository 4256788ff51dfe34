//! Canonical byte encoding.
//!
//! Every encoded object starts with [`FORMAT_VERSION`] and a one-byte kind.
//! Variable-length fields are prefixed with their length as a little-endian
//! `u32`; integers are little-endian and fixed width. A public key plus a
//! signature always occupies one zero-padded [`CREDENTIAL_SIZE`] slot, so
//! encoded sizes do not depend on the signature backend.

use super::digest::{Digest, DigestError};
use super::keys::{PublicKey, Signature, SignatureScheme, MAX_SIGNATURE_LEN};

pub const FORMAT_VERSION: u8 = 0x01;

/// Bytes taken by one public key and signature pair in every encoding.
pub const CREDENTIAL_SIZE: usize = 459;

/// Size of the fixed-width `u32` count or length prefix.
pub const PREFIX_SIZE: usize = 4;

pub fn credential_size() -> usize {
    CREDENTIAL_SIZE
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CodecError {
    #[error("unexpected end of input")]
    Truncated,
    #[error("unsupported format version {0:#04x}")]
    Version(u8),
    #[error("expected object kind {expected:?}, found {found:?}")]
    Kind { expected: char, found: char },
    #[error("unknown signature scheme tag {0}")]
    Scheme(u8),
    #[error("signature of {0} bytes does not fit a credential slot")]
    SignatureTooLong(usize),
    #[error("bad digest: {0}")]
    Digest(#[from] DigestError),
    #[error("{0} trailing bytes")]
    Trailing(usize),
    #[error("invalid flag byte {0}")]
    Flag(u8),
}

#[derive(Default)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new(kind: u8) -> Self {
        Writer { buf: vec![FORMAT_VERSION, kind] }
    }

    pub fn bytes(&mut self, data: &[u8]) -> &mut Self {
        self.u32(data.len() as u32);
        self.buf.extend_from_slice(data);
        self
    }

    pub fn raw(&mut self, data: &[u8]) -> &mut Self {
        self.buf.extend_from_slice(data);
        self
    }

    pub fn u8(&mut self, v: u8) -> &mut Self {
        self.buf.push(v);
        self
    }

    pub fn u32(&mut self, v: u32) -> &mut Self {
        self.buf.extend_from_slice(&v.to_le_bytes());
        self
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_le_bytes());
        self
    }

    pub fn digest(&mut self, d: &Digest) -> &mut Self {
        self.bytes(d.as_str().as_bytes())
    }

    pub fn opt_digest(&mut self, d: Option<&Digest>) -> &mut Self {
        match d {
            None => self.u8(0),
            Some(d) => self.u8(1).digest(d),
        }
    }

    pub fn public_key(&mut self, pk: &PublicKey) -> &mut Self {
        self.raw(&pk.to_bytes())
    }

    /// `[scheme u8][key 32][sig_len u8][sig][zero padding]`, exactly
    /// [`CREDENTIAL_SIZE`] bytes.
    pub fn credential(&mut self, pk: &PublicKey, sig: &Signature) -> &mut Self {
        let start = self.buf.len();
        let sig = sig.as_bytes();
        let sig_len = sig.len().min(MAX_CREDENTIAL_SIG);
        self.public_key(pk);
        self.u8(sig_len as u8);
        self.raw(&sig[..sig_len]);
        self.buf.resize(start + CREDENTIAL_SIZE, 0);
        self
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

/// Signatures longer than this are truncated on encode and fail to verify.
const MAX_CREDENTIAL_SIG: usize = 255;

const _: () = assert!(1 + 32 + 1 + MAX_CREDENTIAL_SIG <= CREDENTIAL_SIZE);
const _: () = assert!(MAX_SIGNATURE_LEN <= MAX_CREDENTIAL_SIG);

pub struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(data: &'a [u8], kind: u8) -> Result<Self, CodecError> {
        let mut r = Reader { data, pos: 0 };
        let version = r.u8()?;
        if version != FORMAT_VERSION {
            return Err(CodecError::Version(version));
        }
        let found = r.u8()?;
        if found != kind {
            return Err(CodecError::Kind { expected: kind as char, found: found as char });
        }
        Ok(r)
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        let end = self.pos.checked_add(n).ok_or(CodecError::Truncated)?;
        let slice = self.data.get(self.pos..end).ok_or(CodecError::Truncated)?;
        self.pos = end;
        Ok(slice)
    }

    pub fn u8(&mut self) -> Result<u8, CodecError> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32, CodecError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64, CodecError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn bytes(&mut self) -> Result<&'a [u8], CodecError> {
        let len = self.u32()? as usize;
        self.take(len)
    }

    pub fn digest(&mut self) -> Result<Digest, CodecError> {
        let raw = self.bytes()?;
        let s = std::str::from_utf8(raw).map_err(|_| CodecError::Digest(DigestError::BadSymbol(0xff, 0)))?;
        Ok(Digest::parse(s)?)
    }

    pub fn opt_digest(&mut self) -> Result<Option<Digest>, CodecError> {
        match self.u8()? {
            0 => Ok(None),
            1 => Ok(Some(self.digest()?)),
            f => Err(CodecError::Flag(f)),
        }
    }

    pub fn public_key(&mut self) -> Result<PublicKey, CodecError> {
        let tag = self.u8()?;
        let scheme = SignatureScheme::from_tag(tag).ok_or(CodecError::Scheme(tag))?;
        let bytes: [u8; 32] = self.take(32)?.try_into().unwrap();
        Ok(PublicKey::new(scheme, bytes))
    }

    pub fn credential(&mut self) -> Result<(PublicKey, Signature), CodecError> {
        let slot = self.take(CREDENTIAL_SIZE)?;
        let mut inner = Reader { data: slot, pos: 0 };
        let pk = inner.public_key()?;
        let len = inner.u8()? as usize;
        let sig = inner.take(len)?.to_vec();
        Ok((pk, Signature::from_bytes(sig)))
    }

    pub fn finish(self) -> Result<(), CodecError> {
        match self.data.len() - self.pos {
            0 => Ok(()),
            n => Err(CodecError::Trailing(n)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn credential_slot_is_fixed_width() {
        let pk = PublicKey::new(SignatureScheme::Simulated, [7; 32]);
        for sig_len in [0, 32, 64] {
            let mut w = Writer::new(b'X');
            w.credential(&pk, &Signature::from_bytes(vec![9; sig_len]));
            let buf = w.finish();
            assert_eq!(buf.len(), 2 + CREDENTIAL_SIZE);
            let mut r = Reader::new(&buf, b'X').unwrap();
            let (pk2, sig) = r.credential().unwrap();
            assert_eq!(pk2, pk);
            assert_eq!(sig.as_bytes().len(), sig_len);
            r.finish().unwrap();
        }
    }

    #[test]
    fn reader_rejects_bad_headers() {
        assert_eq!(Reader::new(&[], b'T').err(), Some(CodecError::Truncated));
        assert_eq!(Reader::new(&[2, b'T'], b'T').err(), Some(CodecError::Version(2)));
        assert!(matches!(Reader::new(&[1, b'B'], b'T'), Err(CodecError::Kind { .. })));
    }

    #[test]
    fn truncated_length_prefix() {
        let mut r = Reader::new(&[1, b'X', 10, 0, 0, 0, 1, 2], b'X').unwrap();
        assert_eq!(r.bytes(), Err(CodecError::Truncated));
    }
}
