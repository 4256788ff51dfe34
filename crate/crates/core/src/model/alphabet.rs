//! The 62-symbol alphabet every digest is written in.

use std::fmt;

/// Symbols in canonical order: digits, lowercase, uppercase.
pub const ALPHABET: &[u8; 62] = b"0123456789abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ";

pub const ALPHABET_LEN: usize = 62;

/// One symbol of the alphabet. Ordering follows alphabet position, not ASCII.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Symbol(u8);

impl Symbol {
    /// Returns `None` for bytes outside the alphabet.
    pub fn from_ascii(byte: u8) -> Option<Self> {
        index_of(byte).map(|_| Symbol(byte))
    }

    /// Panics if `index >= 62`.
    pub fn from_index(index: usize) -> Self {
        Symbol(ALPHABET[index])
    }

    pub fn index(self) -> usize {
        // Always valid: construction goes through the alphabet.
        index_of(self.0).expect("symbol outside alphabet")
    }

    pub fn as_char(self) -> char {
        self.0 as char
    }

    pub fn as_byte(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = Symbol> {
        ALPHABET.iter().map(|&b| Symbol(b))
    }
}

impl TryFrom<char> for Symbol {
    type Error = char;

    fn try_from(c: char) -> Result<Self, char> {
        if c.is_ascii() {
            Symbol::from_ascii(c as u8).ok_or(c)
        } else {
            Err(c)
        }
    }
}

impl PartialOrd for Symbol {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Symbol {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.index().cmp(&other.index())
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "'{}'", self.as_char())
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

fn index_of(byte: u8) -> Option<usize> {
    match byte {
        b'0'..=b'9' => Some((byte - b'0') as usize),
        b'a'..=b'z' => Some(10 + (byte - b'a') as usize),
        b'A'..=b'Z' => Some(36 + (byte - b'A') as usize),
        _ => None,
    }
}

/// Writes the 256-bit big-endian integer `value` as `len` base-62 symbols,
/// least significant digit first. `len` of 43 or more encodes the value
/// without loss.
pub(crate) fn base62_digits(value: &[u8; 32], len: usize) -> Vec<u8> {
    let mut limbs = [0u64; 4];
    for (i, chunk) in value.chunks_exact(8).enumerate() {
        limbs[i] = u64::from_be_bytes(chunk.try_into().unwrap());
    }
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        let mut rem: u128 = 0;
        for limb in limbs.iter_mut() {
            let cur = (rem << 64) | *limb as u128;
            *limb = (cur / 62) as u64;
            rem = cur % 62;
        }
        out.push(ALPHABET[rem as usize]);
    }
    out
}
