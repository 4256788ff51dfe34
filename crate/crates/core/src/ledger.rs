//! Per-validator ledgers, the interest-registration contract, pending pools,
//! and audits.

use std::collections::{BTreeSet, HashSet};

use indexmap::IndexMap;
use serde::Serialize;

use crate::allocation::{allocate, AllocError, RangeAllocation, ValidationRange, WeightDictionary};
use crate::model::codec::{Reader, Writer};
use crate::model::{digest, Block, CodecError, Digest, Keypair, PublicKey, Transaction};
use crate::net::Micros;
use crate::verification::{
    verify_block, verify_endorsements, FailureReason, LedgerView, SetParams, VerificationOutcome,
};

/// Fixed deployment parameters written into the first block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeploymentParams {
    /// Registration window length.
    pub gamma: Micros,
    /// Consensus period length.
    pub epoch_length: Micros,
    pub n: usize,
    pub m: usize,
    pub block_size: usize,
    /// Traffic fee per block, as a decimal string.
    pub traffic_fee: String,
}

/// The chain's first block. Its digest identifies the deployment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenesisBlock {
    params: DeploymentParams,
    digest: Digest,
}

impl GenesisBlock {
    pub fn new(params: DeploymentParams) -> Self {
        let mut w = Writer::new(b'G');
        w.u64(params.gamma)
            .u64(params.epoch_length)
            .u32(params.n as u32)
            .u32(params.m as u32)
            .u32(params.block_size as u32)
            .bytes(params.traffic_fee.as_bytes());
        let digest = digest(&w.finish());
        GenesisBlock { params, digest }
    }

    pub fn params(&self) -> &DeploymentParams {
        &self.params
    }

    pub fn digest(&self) -> &Digest {
        &self.digest
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum Registration {
    #[error("registration after the window closed")]
    Late,
    #[error("already registered")]
    Duplicate,
    #[error("barred from this period")]
    Excluded,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VrdError {
    #[error("registration window still open until {0} us")]
    WindowOpen(Micros),
    #[error("no validator registered during the window")]
    NoRegistrations,
    #[error("allocation already finalized for this period")]
    AlreadyFinalized,
    #[error(transparent)]
    Allocation(#[from] AllocError),
}

/// Validation Range Distributor state for one consensus period.
#[derive(Debug, Clone)]
pub struct Vrd {
    window_start: Micros,
    window_end: Micros,
    barred: BTreeSet<PublicKey>,
    registrations: IndexMap<PublicKey, Micros>,
    allocation: Option<RangeAllocation>,
}

impl Vrd {
    /// Open a window `[start, start + gamma]`. `barred` keys are refused.
    pub fn open(start: Micros, gamma: Micros, barred: BTreeSet<PublicKey>) -> Self {
        Vrd { window_start: start, window_end: start + gamma, barred, registrations: IndexMap::new(), allocation: None }
    }

    pub fn window_end(&self) -> Micros {
        self.window_end
    }

    pub fn registrations(&self) -> impl Iterator<Item = (&PublicKey, &Micros)> {
        self.registrations.iter()
    }

    pub fn register_interest(&mut self, pk: PublicKey, now: Micros) -> Result<(), Registration> {
        if now > self.window_end || now < self.window_start || self.allocation.is_some() {
            return Err(Registration::Late);
        }
        if self.barred.contains(&pk) {
            return Err(Registration::Excluded);
        }
        if self.registrations.contains_key(&pk) {
            return Err(Registration::Duplicate);
        }
        self.registrations.insert(pk, now);
        Ok(())
    }

    pub fn finalize_allocation(&mut self, wd: &WeightDictionary, now: Micros) -> Result<&RangeAllocation, VrdError> {
        if self.allocation.is_some() {
            return Err(VrdError::AlreadyFinalized);
        }
        if now < self.window_end {
            return Err(VrdError::WindowOpen(self.window_end));
        }
        if self.registrations.is_empty() {
            return Err(VrdError::NoRegistrations);
        }
        let pks: Vec<PublicKey> = self.registrations.keys().copied().collect();
        Ok(self.allocation.insert(allocate(wd, &pks)?))
    }

    pub fn allocation(&self) -> Option<&RangeAllocation> {
        self.allocation.as_ref()
    }
}

/// Verified transactions waiting for one validator's next block.
#[derive(Debug, Clone)]
pub struct PendingPool {
    range: ValidationRange,
    txs: IndexMap<Digest, Transaction>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum PoolError {
    #[error("transaction digest outside the validator's range")]
    OutOfRange,
    #[error("transaction failed verification: {0:?}")]
    Unverified(FailureReason),
    #[error("transaction already pending")]
    Duplicate,
}

impl PendingPool {
    pub fn new(range: ValidationRange) -> Self {
        PendingPool { range, txs: IndexMap::new() }
    }

    pub fn admit(&mut self, tx: Transaction, outcome: VerificationOutcome) -> Result<(), PoolError> {
        if let VerificationOutcome::Invalid(r) = outcome {
            return Err(PoolError::Unverified(r));
        }
        self.admit_unchecked(tx)
    }

    /// Skip the verdict; only the range rule is enforced. Colluding
    /// validators use this.
    pub fn admit_unchecked(&mut self, tx: Transaction) -> Result<(), PoolError> {
        if !self.range.contains(tx.id().msch()) {
            return Err(PoolError::OutOfRange);
        }
        if self.txs.contains_key(tx.id()) {
            return Err(PoolError::Duplicate);
        }
        self.txs.insert(tx.id().clone(), tx);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.txs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.txs.is_empty()
    }

    pub fn contains(&self, id: &Digest) -> bool {
        self.txs.contains_key(id)
    }

    fn take(&mut self, count: usize) -> Vec<Transaction> {
        let count = count.min(self.txs.len());
        self.txs.drain(..count).map(|(_, tx)| tx).collect()
    }
}

/// Cut a block of exactly `block_size` pending transactions in arrival
/// order, chained to `head` and sealed into `range`. `None` if the pool is
/// short or sealing fails.
pub fn commit_transactions(
    keys: &Keypair,
    head: Option<&Digest>,
    pool: &mut PendingPool,
    block_size: usize,
    epoch: u32,
) -> Option<Block> {
    if block_size == 0 || pool.len() < block_size {
        return None;
    }
    seal_from_pool(keys, head, pool, block_size, epoch)
}

/// Commit whatever is pending, up to `block_size`. Used to drain the pool
/// at the end of a period.
pub fn flush_pool(
    keys: &Keypair,
    head: Option<&Digest>,
    pool: &mut PendingPool,
    block_size: usize,
    epoch: u32,
) -> Option<Block> {
    if pool.is_empty() {
        return None;
    }
    seal_from_pool(keys, head, pool, block_size.max(1), epoch)
}

fn seal_from_pool(
    keys: &Keypair,
    head: Option<&Digest>,
    pool: &mut PendingPool,
    count: usize,
    epoch: u32,
) -> Option<Block> {
    let range = pool.range;
    let txs = pool.take(count);
    Block::seal(keys, head.cloned(), epoch, txs, |d| range.contains(d.msch()))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AppendError {
    #[error("block generator is not the ledger owner")]
    WrongOwner,
    #[error("block is already in the ledger")]
    Duplicate,
    #[error("block does not extend the ledger head")]
    BrokenChain,
    #[error("block digest outside the owner's range")]
    OutOfRange,
    #[error("endorsements missing or invalid")]
    Endorsements,
}

/// One validator's chain of endorsed blocks.
#[derive(Debug, Clone)]
pub struct Ledger {
    owner: PublicKey,
    blocks: Vec<Block>,
    block_ids: HashSet<Digest>,
    tx_ids: HashSet<Digest>,
}

impl Ledger {
    pub fn new(owner: PublicKey) -> Self {
        Ledger { owner, blocks: Vec::new(), block_ids: HashSet::new(), tx_ids: HashSet::new() }
    }

    pub fn owner(&self) -> &PublicKey {
        &self.owner
    }

    pub fn head(&self) -> Option<&Digest> {
        self.blocks.last().map(|b| b.digest())
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Blocks committed during `epoch`.
    pub fn ledger_length(&self, epoch: u32) -> u64 {
        self.blocks.iter().filter(|b| b.header().epoch == epoch).count() as u64
    }

    pub fn tx_count(&self) -> usize {
        self.tx_ids.len()
    }

    /// Appends only a fully endorsed block that extends the head. The
    /// contents are trusted to the endorsers.
    pub fn append_block(
        &mut self,
        block: Block,
        alloc: &RangeAllocation,
        params: &SetParams,
    ) -> Result<(), AppendError> {
        if block.generator() != &self.owner {
            return Err(AppendError::WrongOwner);
        }
        if self.block_ids.contains(block.digest()) {
            return Err(AppendError::Duplicate);
        }
        if block.previous() != self.head() {
            return Err(AppendError::BrokenChain);
        }
        if alloc.owner_of(block.digest().msch()) != self.owner {
            return Err(AppendError::OutOfRange);
        }
        if !verify_endorsements(&block, alloc, params).is_valid() {
            return Err(AppendError::Endorsements);
        }
        self.block_ids.insert(block.digest().clone());
        self.tx_ids.extend(block.transactions().iter().map(|t| t.id().clone()));
        self.blocks.push(block);
        Ok(())
    }

    /// Every block links to its predecessor and starts in `range`.
    pub fn chain_intact(&self, range: ValidationRange) -> bool {
        let mut prev: Option<&Digest> = None;
        for b in &self.blocks {
            if b.previous() != prev || !range.contains(b.digest().msch()) {
                return false;
            }
            prev = Some(b.digest());
        }
        true
    }

    /// `digest<TAB>generator<TAB>tx_count<TAB>endorsers` per block.
    pub fn export(&self) -> String {
        self.blocks.iter().map(export_line).collect()
    }
}

impl LedgerView for Ledger {
    fn contains_tx(&self, id: &Digest) -> bool {
        self.tx_ids.contains(id)
    }
}

pub fn export_line(b: &Block) -> String {
    let endorsers: Vec<String> = b.endorsements().iter().map(|e| e.verifier.display()).collect();
    format!("{}\t{}\t{}\t{}\n", b.digest(), b.generator().display(), b.transactions().len(), endorsers.join(","))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ItemKind {
    Transaction,
    Block,
}

/// Accusation carried as the payload of a broadcast transaction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MisbehaviorReport {
    pub item: Digest,
    pub kind: ItemKind,
    pub reason: FailureReason,
    pub reporter: PublicKey,
    /// Generator or sender first, then any endorsers.
    pub accused: Vec<PublicKey>,
}

impl MisbehaviorReport {
    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new(b'M');
        w.digest(&self.item)
            .u8(match self.kind {
                ItemKind::Transaction => 0,
                ItemKind::Block => 1,
            })
            .u8(self.reason as u8)
            .public_key(&self.reporter)
            .u32(self.accused.len() as u32);
        for pk in &self.accused {
            w.public_key(pk);
        }
        w.finish()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, CodecError> {
        let mut r = Reader::new(bytes, b'M')?;
        let item = r.digest()?;
        let kind = match r.u8()? {
            0 => ItemKind::Transaction,
            1 => ItemKind::Block,
            f => return Err(CodecError::Flag(f)),
        };
        let reason = match r.u8()? {
            0 => FailureReason::BadSignature,
            1 => FailureReason::MissingPreviousTx,
            2 => FailureReason::RangeMismatch,
            3 => FailureReason::BadEndorsement,
            f => return Err(CodecError::Flag(f)),
        };
        let reporter = r.public_key()?;
        let n = r.u32()? as usize;
        let mut accused = Vec::with_capacity(n.min(256));
        for _ in 0..n {
            accused.push(r.public_key()?);
        }
        r.finish()?;
        Ok(MisbehaviorReport { item, kind, reason, reporter, accused })
    }

    /// Wrap as a transaction signed by the reporter.
    pub fn to_transaction(&self, reporter: &Keypair) -> Transaction {
        Transaction::new_signed(reporter, self.encode(), None)
    }

    pub fn from_transaction(tx: &Transaction) -> Option<Self> {
        let report = Self::decode(tx.payload()).ok()?;
        (report.reporter == *tx.sender() && tx.signature_valid()).then_some(report)
    }
}

/// Re-verify a block anyone can see. An invalid block yields a report
/// naming its generator and every endorser.
pub fn audit_block(
    auditor: &PublicKey,
    block: &Block,
    alloc: &RangeAllocation,
    view: &dyn LedgerView,
) -> (VerificationOutcome, Option<MisbehaviorReport>) {
    let outcome = verify_block(block, alloc, view);
    let report = outcome.reason().map(|reason| MisbehaviorReport {
        item: block.digest().clone(),
        kind: ItemKind::Block,
        reason,
        reporter: *auditor,
        accused: std::iter::once(*block.generator()).chain(block.endorsements().iter().map(|e| e.verifier)).collect(),
    });
    (outcome, report)
}
