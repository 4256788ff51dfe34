use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest as _, Sha256};

use super::alphabet::{base62_digits, Symbol};

/// Symbols per digest for every protocol object.
pub const DIGEST_LEN: usize = 32;

/// Longest digest a SHA-256 output can fill without repeating information.
pub const MAX_DIGEST_LEN: usize = 43;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DigestError {
    #[error("digest must not be empty")]
    Empty,
    #[error("digest longer than {MAX_DIGEST_LEN} symbols")]
    TooLong,
    #[error("byte {0:#04x} at position {1} is not in the base-62 alphabet")]
    BadSymbol(u8, usize),
}

/// A fixed-length string over the base-62 alphabet.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Digest(Box<str>);

impl Digest {
    pub fn parse(s: &str) -> Result<Self, DigestError> {
        if s.is_empty() {
            return Err(DigestError::Empty);
        }
        if s.len() > MAX_DIGEST_LEN {
            return Err(DigestError::TooLong);
        }
        for (i, b) in s.bytes().enumerate() {
            if Symbol::from_ascii(b).is_none() {
                return Err(DigestError::BadSymbol(b, i));
            }
        }
        Ok(Digest(s.into()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn symbols(&self) -> impl Iterator<Item = Symbol> + '_ {
        self.0.bytes().map(|b| Symbol::from_ascii(b).expect("digest holds alphabet symbols"))
    }

    /// Most significant character: the first symbol.
    pub fn msch(&self) -> Symbol {
        msch(self)
    }
}

/// Hash `content` into a [`DIGEST_LEN`]-symbol digest.
pub fn digest(content: &[u8]) -> Digest {
    digest_with_len(content, DIGEST_LEN)
}

/// SHA-256 of `content`, re-encoded as `len` base-62 symbols (`1..=43`).
///
/// Symbols are the low-order base-62 digits of the hash, so each is
/// uniform up to a bias below 2^-60.
pub fn digest_with_len(content: &[u8], len: usize) -> Digest {
    assert!((1..=MAX_DIGEST_LEN).contains(&len), "digest length {len} outside 1..={MAX_DIGEST_LEN}");
    let hash: [u8; 32] = Sha256::digest(content).into();
    let digits = base62_digits(&hash, len);
    Digest(String::from_utf8(digits).expect("alphabet is ASCII").into())
}

pub fn msch(d: &Digest) -> Symbol {
    Symbol::from_ascii(d.0.as_bytes()[0]).expect("digest holds alphabet symbols")
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", self.0)
    }
}

impl Serialize for Digest {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Digest {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Digest::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn deterministic_and_distinct() {
        assert_eq!(digest(b"x"), digest(b"x"));
        assert_ne!(digest(b"a"), digest(b"b"));
    }

    #[test]
    fn fixed_length_over_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let len = rng.gen_range(0..300);
            let bytes: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
            let d = digest(&bytes);
            assert_eq!(d.len(), 32);
            assert!(d.symbols().count() == 32);
        }
    }

    #[test]
    fn msch_is_first_symbol() {
        let d = Digest::parse("K23HQ").unwrap();
        assert_eq!(msch(&d).as_char(), 'K');
        assert_eq!(Digest::parse("0abc").unwrap().msch().as_char(), '0');
    }

    #[test]
    fn parse_rejects_bad_input() {
        assert_eq!(Digest::parse(""), Err(DigestError::Empty));
        assert_eq!(Digest::parse("ab-c"), Err(DigestError::BadSymbol(b'-', 2)));
        assert_eq!(Digest::parse(&"a".repeat(44)), Err(DigestError::TooLong));
    }

    #[test]
    fn custom_lengths() {
        for len in [1, 5, 32, 43] {
            assert_eq!(digest_with_len(b"abc", len).len(), len);
        }
        // Prefix property: shorter digests are prefixes of longer ones.
        let long = digest_with_len(b"abc", 43);
        assert!(long.as_str().starts_with(digest(b"abc").as_str()));
    }
}
