//! Validator and verifier set selection, item verification, and block
//! endorsement.
//!
//! A transaction goes to the validator set of its digest: the range owner
//! of the digest's first symbol plus `n` ring neighbours on each side. A
//! block goes to the verifier set of its digest with `m` neighbours per
//! side. The two sets must not share members, so when the verifier
//! candidate set touches the validator set its main node is moved
//! [`verifier_offset`] positions past the validator main.

use std::collections::{BTreeSet, HashSet};

use serde::Serialize;

use crate::allocation::{Direction, RangeAllocation};
use crate::model::{Block, Digest, Endorsement, Keypair, PublicKey, Transaction};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParamError {
    #[error("n must be at least 1")]
    ZeroValidatorWing,
    #[error("n = {n} exceeds N/4 for N = {validators}")]
    WingTooLarge { n: usize, validators: usize },
    #[error("inadmissible set sizes: need N > {bound} so validator and verifier sets stay disjoint (N = {validators}, n = {n}, m = {m})")]
    Inadmissible { n: usize, m: usize, validators: usize, bound: usize },
    #[error("parameters are for {expected} validators but the allocation has {actual}")]
    SizeMismatch { expected: usize, actual: usize },
}

/// Wing sizes `n` (validators) and `m` (verifiers) for a ring of `N`
/// validators. Only admissible combinations can be constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SetParams {
    n: usize,
    m: usize,
    validators: usize,
}

impl SetParams {
    pub fn new(n: usize, m: usize, validators: usize) -> Result<Self, ParamError> {
        if n == 0 {
            return Err(ParamError::ZeroValidatorWing);
        }
        let bound = admissibility_bound(n, m);
        if validators <= bound {
            return Err(ParamError::Inadmissible { n, m, validators, bound });
        }
        if 4 * n > validators {
            return Err(ParamError::WingTooLarge { n, validators });
        }
        Ok(SetParams { n, m, validators })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn validators(&self) -> usize {
        self.validators
    }

    pub fn validator_set_size(&self) -> usize {
        2 * self.n + 1
    }

    pub fn verifier_set_size(&self) -> usize {
        2 * self.m + 1
    }

    fn check(&self, alloc: &RangeAllocation) -> Result<(), ParamError> {
        if alloc.len() != self.validators {
            return Err(ParamError::SizeMismatch { expected: self.validators, actual: alloc.len() });
        }
        Ok(())
    }
}

/// `N` must exceed this for relocated sets to stay disjoint.
pub fn admissibility_bound(n: usize, m: usize) -> usize {
    if n > m {
        3 * n + m
    } else {
        3 * n + 2 * m
    }
}

/// Ring distance from the validator main to a relocated verifier main.
pub fn verifier_offset(params: &SetParams) -> usize {
    if params.n > params.m {
        2 * params.n
    } else {
        2 * params.n + params.m
    }
}

/// A main ring position and its wings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RingSet {
    pub main: usize,
    /// Nearest first.
    pub successors: Vec<usize>,
    /// Nearest first.
    pub predecessors: Vec<usize>,
    /// Verifier sets only: the main was moved off the candidate.
    pub relocated: bool,
}

pub type ValidatorSet = RingSet;
pub type VerifierSet = RingSet;

impl RingSet {
    fn around(alloc: &RangeAllocation, main: usize, wing: usize) -> Self {
        let dht = alloc.dht();
        // wing < N is guaranteed by SetParams admissibility.
        RingSet {
            main,
            successors: dht.neighbors(main, wing, Direction::Successors).expect("admissible"),
            predecessors: dht.neighbors(main, wing, Direction::Predecessors).expect("admissible"),
            relocated: false,
        }
    }

    /// Main first, then successors, then predecessors.
    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        std::iter::once(self.main).chain(self.successors.iter().copied()).chain(self.predecessors.iter().copied())
    }

    pub fn len(&self) -> usize {
        1 + self.successors.len() + self.predecessors.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, pos: usize) -> bool {
        self.members().any(|p| p == pos)
    }

    pub fn intersects(&self, other: &RingSet) -> bool {
        self.members().any(|p| other.contains(p))
    }

    pub fn public_keys(&self, alloc: &RangeAllocation) -> Vec<PublicKey> {
        self.members().map(|p| alloc.pk(p)).collect()
    }
}

pub fn select_validator_set(
    d: &Digest,
    alloc: &RangeAllocation,
    params: &SetParams,
) -> Result<ValidatorSet, ParamError> {
    params.check(alloc)?;
    Ok(RingSet::around(alloc, alloc.range_of(d.msch()), params.n))
}

pub fn select_verifier_set(
    block_digest: &Digest,
    alloc: &RangeAllocation,
    params: &SetParams,
    vset: &ValidatorSet,
) -> Result<VerifierSet, ParamError> {
    params.check(alloc)?;
    let candidate = RingSet::around(alloc, alloc.range_of(block_digest.msch()), params.m);
    if !candidate.intersects(vset) {
        return Ok(candidate);
    }
    let main = alloc.dht().step(vset.main, verifier_offset(params) as isize);
    let mut relocated = RingSet::around(alloc, main, params.m);
    relocated.relocated = true;
    Ok(relocated)
}

/// Verifier set for a block: the validator set is taken around the block
/// digest's range owner, which is the generator for well-formed blocks.
pub fn verifier_set_for_block(
    block_digest: &Digest,
    alloc: &RangeAllocation,
    params: &SetParams,
) -> Result<(ValidatorSet, VerifierSet), ParamError> {
    let vset = select_validator_set(block_digest, alloc, params)?;
    let verifiers = select_verifier_set(block_digest, alloc, params, &vset)?;
    Ok((vset, verifiers))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureReason {
    BadSignature,
    MissingPreviousTx,
    RangeMismatch,
    BadEndorsement,
}

impl FailureReason {
    pub fn code(self) -> &'static str {
        match self {
            FailureReason::BadSignature => "bad-signature",
            FailureReason::MissingPreviousTx => "missing-previous-tx",
            FailureReason::RangeMismatch => "range-mismatch",
            FailureReason::BadEndorsement => "bad-endorsement",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VerificationOutcome {
    Valid,
    Invalid(FailureReason),
}

impl VerificationOutcome {
    pub fn is_valid(self) -> bool {
        matches!(self, VerificationOutcome::Valid)
    }

    pub fn reason(self) -> Option<FailureReason> {
        match self {
            VerificationOutcome::Valid => None,
            VerificationOutcome::Invalid(r) => Some(r),
        }
    }
}

/// Read-only snapshot of committed transaction ids.
pub trait LedgerView {
    fn contains_tx(&self, id: &Digest) -> bool;
}

impl LedgerView for HashSet<Digest> {
    fn contains_tx(&self, id: &Digest) -> bool {
        self.contains(id)
    }
}

impl LedgerView for BTreeSet<Digest> {
    fn contains_tx(&self, id: &Digest) -> bool {
        self.contains(id)
    }
}

/// An empty history.
pub struct NoHistory;

impl LedgerView for NoHistory {
    fn contains_tx(&self, _: &Digest) -> bool {
        false
    }
}

/// Signature check, then the previous-transaction link if there is one.
pub fn verify_transaction(tx: &Transaction, view: &dyn LedgerView) -> VerificationOutcome {
    verify_tx_with(tx, |id| view.contains_tx(id))
}

fn verify_tx_with(tx: &Transaction, known: impl Fn(&Digest) -> bool) -> VerificationOutcome {
    if !tx.signature_valid() {
        return VerificationOutcome::Invalid(FailureReason::BadSignature);
    }
    match tx.previous() {
        Some(prev) if !known(prev) => VerificationOutcome::Invalid(FailureReason::MissingPreviousTx),
        _ => VerificationOutcome::Valid,
    }
}

/// Header signature, range ownership of the block digest, then every
/// transaction. Reports the first failure. A transaction may link to an
/// earlier one in the same block.
pub fn verify_block(block: &Block, alloc: &RangeAllocation, view: &dyn LedgerView) -> VerificationOutcome {
    if !block.header_signature_valid() || !block.tx_root_valid() {
        return VerificationOutcome::Invalid(FailureReason::BadSignature);
    }
    if alloc.owner_of(block.digest().msch()) != *block.generator() {
        return VerificationOutcome::Invalid(FailureReason::RangeMismatch);
    }
    let mut earlier: HashSet<&Digest> = HashSet::new();
    for tx in block.transactions() {
        let outcome = verify_tx_with(tx, |id| earlier.contains(id) || view.contains_tx(id));
        if !outcome.is_valid() {
            return outcome;
        }
        earlier.insert(tx.id());
    }
    VerificationOutcome::Valid
}

/// Exactly one valid endorsement from every member of the block's verifier
/// set, and nothing else.
pub fn verify_endorsements(block: &Block, alloc: &RangeAllocation, params: &SetParams) -> VerificationOutcome {
    let bad = VerificationOutcome::Invalid(FailureReason::BadEndorsement);
    let Ok((_, verifiers)) = verifier_set_for_block(block.digest(), alloc, params) else {
        return bad;
    };
    let expected: BTreeSet<PublicKey> = verifiers.public_keys(alloc).into_iter().collect();
    let mut seen = BTreeSet::new();
    for e in block.endorsements() {
        if !expected.contains(&e.verifier) || !seen.insert(e.verifier) || !e.verify(block.digest()) {
            return bad;
        }
    }
    if seen.len() != expected.len() {
        return bad;
    }
    VerificationOutcome::Valid
}

/// One verifier's answer for a block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemberVerdict {
    pub verifier: PublicKey,
    pub outcome: VerificationOutcome,
    pub endorsement: Option<Endorsement>,
}

/// Verify `block` as a verifier and sign its digest if it checks out.
pub fn endorse(keys: &Keypair, block: &Block, alloc: &RangeAllocation, view: &dyn LedgerView) -> MemberVerdict {
    let outcome = verify_block(block, alloc, view);
    MemberVerdict {
        verifier: keys.public(),
        outcome,
        endorsement: outcome.is_valid().then(|| Endorsement::sign(keys, block.digest())),
    }
}

/// Why the main verifier refused to assemble.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("block {block} not endorsed: {} member(s) rejected it", rejecting.len())]
pub struct Rejection {
    pub block: Digest,
    /// Members that answered invalid, with their reasons.
    pub rejecting: Vec<(PublicKey, FailureReason)>,
    /// Set members that never answered.
    pub missing: Vec<PublicKey>,
}

/// Attach every member's endorsement, in set order. Fails closed: any
/// rejection or missing answer aborts assembly.
pub fn assemble(block: &Block, verifier_pks: &[PublicKey], verdicts: &[MemberVerdict]) -> Result<Block, Rejection> {
    let mut rejecting = Vec::new();
    let mut missing = Vec::new();
    let mut endorsements = Vec::with_capacity(verifier_pks.len());
    for pk in verifier_pks {
        match verdicts.iter().find(|v| &v.verifier == pk) {
            None => missing.push(*pk),
            Some(v) => match (&v.outcome, &v.endorsement) {
                (VerificationOutcome::Valid, Some(e)) => endorsements.push(e.clone()),
                (VerificationOutcome::Invalid(r), _) => rejecting.push((*pk, *r)),
                (VerificationOutcome::Valid, None) => rejecting.push((*pk, FailureReason::BadEndorsement)),
            },
        }
    }
    if !rejecting.is_empty() || !missing.is_empty() {
        return Err(Rejection { block: block.digest().clone(), rejecting, missing });
    }
    Ok(block.without_endorsements().with_endorsements(endorsements))
}

/// Every member verifies and endorses; the result carries `2m+1`
/// endorsements or the assembly is refused.
pub fn endorse_and_assemble(
    block: &Block,
    members: &[&Keypair],
    alloc: &RangeAllocation,
    view: &dyn LedgerView,
) -> Result<Block, Rejection> {
    let verdicts: Vec<MemberVerdict> = members.iter().map(|k| endorse(k, block, alloc, view)).collect();
    let pks: Vec<PublicKey> = members.iter().map(|k| k.public()).collect();
    assemble(block, &pks, &verdicts)
}
