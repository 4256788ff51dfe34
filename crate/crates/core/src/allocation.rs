//! Weight Dictionary, Key Weight Metric, and Validation Range allocation.
//!
//! Each symbol has a weight (`a–z → 0–25`, `A–Z → 26–51`, `0–9 → 52–61`).
//! The KWM of a digest sums a final weight per position: the symbol's weight
//! on its first occurrence, attenuated by `0.2^r` when the symbol already
//! occurred `r` times earlier in the digest. Validators are ranked by the
//! KWM of `digest(pk)`, highest first, and the alphabet is cut into
//! contiguous ranges in that order. The first validator absorbs the
//! remainder of `62 mod N`.
//!
//! KWM values are exact rationals; `0.2^r` is `1/5^r`.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt::{self, Write as _};

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::model::{digest, Digest, PublicKey, Symbol, ALPHABET_LEN};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AllocError {
    #[error("no validators to allocate")]
    Empty,
    #[error("{0} validators exceed the 62-symbol alphabet")]
    TooMany(usize),
    #[error("duplicate validator {0:?}")]
    Duplicate(PublicKey),
    #[error("explicit ranges do not form an ordered exact cover of the alphabet")]
    NotACover,
    #[error("{count} neighbours requested on a ring of {ring}")]
    RingTooSmall { count: usize, ring: usize },
    #[error("ring position {0} out of range")]
    BadPosition(usize),
}

/// Symbol to weight table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightDictionary {
    weights: [u32; ALPHABET_LEN],
}

impl Default for WeightDictionary {
    fn default() -> Self {
        let mut weights = [0u32; ALPHABET_LEN];
        for sym in Symbol::all() {
            let c = sym.as_byte();
            weights[sym.index()] = match c {
                b'a'..=b'z' => (c - b'a') as u32,
                b'A'..=b'Z' => 26 + (c - b'A') as u32,
                b'0'..=b'9' => 52 + (c - b'0') as u32,
                _ => unreachable!(),
            };
        }
        WeightDictionary { weights }
    }
}

impl WeightDictionary {
    /// `weights` must be a permutation of `0..62`, indexed by alphabet
    /// position.
    pub fn from_weights(weights: [u32; ALPHABET_LEN]) -> Option<Self> {
        let mut seen = [false; ALPHABET_LEN];
        for &w in &weights {
            let slot = seen.get_mut(w as usize)?;
            if *slot {
                return None;
            }
            *slot = true;
        }
        Some(WeightDictionary { weights })
    }

    pub fn weight(&self, sym: Symbol) -> u32 {
        self.weights[sym.index()]
    }
}

pub fn char_weight(wd: &WeightDictionary, sym: Symbol) -> u32 {
    wd.weight(sym)
}

/// Exact KWM value.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct KwmValue(Ratio<u128>);

impl KwmValue {
    pub fn zero() -> Self {
        KwmValue(Ratio::zero())
    }

    pub fn as_ratio(&self) -> &Ratio<u128> {
        &self.0
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Decimal rendering truncated to `places` fractional digits.
    pub fn to_decimal_string(&self, places: usize) -> String {
        let (num, den) = (*self.0.numer(), *self.0.denom());
        let mut s = (num / den).to_string();
        let mut rem = num % den;
        if places > 0 {
            s.push('.');
            for _ in 0..places {
                rem *= 10;
                s.push(char::from(b'0' + (rem / den) as u8));
                rem %= den;
            }
        }
        s
    }
}

impl fmt::Debug for KwmValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Kwm({})", self.0)
    }
}

impl fmt::Display for KwmValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal_string(10))
    }
}

impl Serialize for KwmValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// `w(α)` when `r == 0`, else `w(α)·0.2^r`.
pub fn final_weight(wd: &WeightDictionary, sym: Symbol, r: u32) -> Ratio<u128> {
    Ratio::new(wd.weight(sym) as u128, 5u128.pow(r))
}

/// Sum of final weights, where `r` at each position counts earlier
/// occurrences of the same symbol.
pub fn kwm(wd: &WeightDictionary, d: &Digest) -> KwmValue {
    // Common denominator 5^(len-1) keeps the sum in integers.
    let top = (d.len() - 1) as u32;
    let mut seen = [0u32; ALPHABET_LEN];
    let mut numer: u128 = 0;
    for sym in d.symbols() {
        let r = seen[sym.index()];
        seen[sym.index()] += 1;
        numer += wd.weight(sym) as u128 * 5u128.pow(top - r);
    }
    KwmValue(Ratio::new(numer, 5u128.pow(top)))
}

/// A validator with its ranking inputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RankedValidator {
    #[serde(serialize_with = "ser_pk")]
    pub pk: PublicKey,
    pub digest: Digest,
    pub kwm: KwmValue,
}

fn ser_pk<S: serde::Serializer>(pk: &PublicKey, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&pk.display())
}

/// Compare digests symbol by symbol in alphabet order.
pub fn cmp_alphabetic(a: &Digest, b: &Digest) -> Ordering {
    a.symbols().cmp(b.symbols())
}

/// Descending KWM of `digest(pk)`; ties go to the alphabetically smaller
/// digest.
pub fn order_validators(wd: &WeightDictionary, pks: &[PublicKey]) -> Result<Vec<RankedValidator>, AllocError> {
    let mut seen = HashSet::with_capacity(pks.len());
    for pk in pks {
        if !seen.insert(*pk) {
            return Err(AllocError::Duplicate(*pk));
        }
    }
    let mut ranked: Vec<RankedValidator> = pks
        .iter()
        .map(|pk| {
            let d = digest(&pk.to_bytes());
            RankedValidator { pk: *pk, kwm: kwm(wd, &d), digest: d }
        })
        .collect();
    ranked.sort_by(|a, b| b.kwm.cmp(&a.kwm).then_with(|| cmp_alphabetic(&a.digest, &b.digest)));
    Ok(ranked)
}

/// Inclusive span of alphabet positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ValidationRange {
    pub start: u8,
    pub end: u8,
}

impl ValidationRange {
    pub fn contains(&self, sym: Symbol) -> bool {
        let i = sym.index() as u8;
        self.start <= i && i <= self.end
    }

    pub fn len(&self) -> usize {
        (self.end - self.start) as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn start_symbol(&self) -> Symbol {
        Symbol::from_index(self.start as usize)
    }

    pub fn end_symbol(&self) -> Symbol {
        Symbol::from_index(self.end as usize)
    }
}

/// Range sizes for `n` validators: `floor(62/n)` each, with `62 mod n`
/// extra on the first.
pub fn range_sizes(n: usize) -> Result<Vec<usize>, AllocError> {
    if n == 0 {
        return Err(AllocError::Empty);
    }
    if n > ALPHABET_LEN {
        return Err(AllocError::TooMany(n));
    }
    let base = ALPHABET_LEN / n;
    let mut sizes = vec![base; n];
    sizes[0] += ALPHABET_LEN % n;
    Ok(sizes)
}

/// Finalized validator ordering and range partition. Ring position `i`
/// owns `ranges[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RangeAllocation {
    validators: Vec<RankedValidator>,
    ranges: Vec<ValidationRange>,
    owner: [u8; ALPHABET_LEN],
}

impl RangeAllocation {
    pub fn len(&self) -> usize {
        self.validators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.validators.is_empty()
    }

    pub fn validators(&self) -> &[RankedValidator] {
        &self.validators
    }

    pub fn validator(&self, pos: usize) -> &RankedValidator {
        &self.validators[pos]
    }

    pub fn pk(&self, pos: usize) -> PublicKey {
        self.validators[pos].pk
    }

    pub fn ranges(&self) -> &[ValidationRange] {
        &self.ranges
    }

    pub fn range(&self, pos: usize) -> ValidationRange {
        self.ranges[pos]
    }

    pub fn position_of(&self, pk: &PublicKey) -> Option<usize> {
        self.validators.iter().position(|v| &v.pk == pk)
    }

    /// Ring position whose range contains `sym`.
    pub fn range_of(&self, sym: Symbol) -> usize {
        self.owner[sym.index()] as usize
    }

    pub fn owner_of(&self, sym: Symbol) -> PublicKey {
        self.pk(self.range_of(sym))
    }

    pub fn dht(&self) -> Dht<'_> {
        Dht { alloc: self }
    }

    /// Ranges given explicitly, in ring order. They must be contiguous,
    /// ascending, and cover the alphabet exactly.
    pub fn from_explicit(validators: Vec<RankedValidator>, ranges: Vec<ValidationRange>) -> Result<Self, AllocError> {
        if validators.is_empty() {
            return Err(AllocError::Empty);
        }
        if validators.len() != ranges.len() || validators.len() > ALPHABET_LEN {
            return Err(AllocError::NotACover);
        }
        let mut next = 0usize;
        for r in &ranges {
            if r.start as usize != next || r.end < r.start {
                return Err(AllocError::NotACover);
            }
            next = r.end as usize + 1;
        }
        if next != ALPHABET_LEN {
            return Err(AllocError::NotACover);
        }
        let mut seen = HashSet::new();
        for v in &validators {
            if !seen.insert(v.pk) {
                return Err(AllocError::Duplicate(v.pk));
            }
        }
        let mut owner = [0u8; ALPHABET_LEN];
        for (pos, r) in ranges.iter().enumerate() {
            for slot in &mut owner[r.start as usize..=r.end as usize] {
                *slot = pos as u8;
            }
        }
        Ok(RangeAllocation { validators, ranges, owner })
    }

    /// Human-readable table: position, validator, KWM, range bounds.
    pub fn to_table(&self) -> String {
        let mut out = String::from("pos\tvalidator\tkwm\tstart\tend\tsize\n");
        for (i, (v, r)) in self.validators.iter().zip(&self.ranges).enumerate() {
            let _ = writeln!(
                out,
                "{i}\t{}\t{}\t{}\t{}\t{}",
                v.pk.display(),
                v.kwm,
                r.start_symbol(),
                r.end_symbol(),
                r.len()
            );
        }
        out
    }
}

/// Partition the alphabet over `ordered` validators (highest KWM first).
pub fn allocate_ranges(ordered: Vec<RankedValidator>) -> Result<RangeAllocation, AllocError> {
    let sizes = range_sizes(ordered.len())?;
    let mut ranges = Vec::with_capacity(sizes.len());
    let mut start = 0usize;
    for size in sizes {
        ranges.push(ValidationRange { start: start as u8, end: (start + size - 1) as u8 });
        start += size;
    }
    RangeAllocation::from_explicit(ordered, ranges)
}

/// Order and allocate in one step.
pub fn allocate(wd: &WeightDictionary, pks: &[PublicKey]) -> Result<RangeAllocation, AllocError> {
    allocate_ranges(order_validators(wd, pks)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Successors,
    Predecessors,
}

/// Ring view over an allocation, in allocation order.
#[derive(Clone, Copy)]
pub struct Dht<'a> {
    alloc: &'a RangeAllocation,
}

impl Dht<'_> {
    pub fn len(&self) -> usize {
        self.alloc.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alloc.is_empty()
    }

    pub fn successor(&self, pos: usize) -> usize {
        (pos + 1) % self.len()
    }

    pub fn predecessor(&self, pos: usize) -> usize {
        (pos + self.len() - 1) % self.len()
    }

    /// Ring position `offset` steps after `pos` (negative steps go back).
    pub fn step(&self, pos: usize, offset: isize) -> usize {
        let n = self.len() as isize;
        (((pos as isize + offset) % n + n) % n) as usize
    }

    /// The `count` positions immediately after (or before) `pos`, nearest
    /// first.
    pub fn neighbors(&self, pos: usize, count: usize, direction: Direction) -> Result<Vec<usize>, AllocError> {
        if pos >= self.len() {
            return Err(AllocError::BadPosition(pos));
        }
        if count >= self.len() {
            return Err(AllocError::RingTooSmall { count, ring: self.len() });
        }
        let sign = match direction {
            Direction::Successors => 1,
            Direction::Predecessors => -1,
        };
        Ok((1..=count as isize).map(|k| self.step(pos, sign * k)).collect())
    }
}

pub fn neighbors(dht: &Dht<'_>, pos: usize, count: usize, direction: Direction) -> Result<Vec<usize>, AllocError> {
    dht.neighbors(pos, count, direction)
}
