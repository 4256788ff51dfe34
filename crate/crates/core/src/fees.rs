//! Traffic management fees and their settlement.
//!
//! Each validator owes `TF * ledger_length` for a period, where
//! `ledger_length` counts the blocks it committed. The accounting actor
//! pays everything it received out to the backbone nodes in equal shares
//! and bars validators that paid short until they clear the difference.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rust_decimal::{Decimal, RoundingStrategy};
use serde::Serialize;

use crate::model::PublicKey;
use crate::net::{BackboneId, Micros};

/// Payout shares are cut to this many decimal places.
pub const PAYOUT_SCALE: u32 = 6;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FeeError {
    #[error("traffic fee must be non-negative, got {0}")]
    NegativeFee(Decimal),
    #[error("epoch length must be positive")]
    ZeroEpoch,
    #[error("no backbone nodes to pay")]
    NoBackbone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FeeParams {
    tf: Decimal,
    epoch_length: Micros,
}

impl FeeParams {
    pub fn new(tf: Decimal, epoch_length: Micros) -> Result<Self, FeeError> {
        if tf.is_sign_negative() && !tf.is_zero() {
            return Err(FeeError::NegativeFee(tf));
        }
        if epoch_length == 0 {
            return Err(FeeError::ZeroEpoch);
        }
        Ok(FeeParams { tf, epoch_length })
    }

    pub fn tf(&self) -> Decimal {
        self.tf
    }

    pub fn epoch_length(&self) -> Micros {
        self.epoch_length
    }
}

pub fn compute_tmf(tf: Decimal, ledger_length: u64) -> Decimal {
    tf * Decimal::from(ledger_length)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Payment {
    pub payer: PublicKey,
    pub amount: Decimal,
    pub epoch: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidatorAccount {
    pub tmf: Decimal,
    /// Arrears carried in from earlier periods.
    pub carried: Decimal,
    pub paid: Decimal,
}

impl ValidatorAccount {
    pub fn expected(&self) -> Decimal {
        self.tmf + self.carried
    }

    pub fn shortfall(&self) -> Decimal {
        (self.expected() - self.paid).max(Decimal::ZERO)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum RejectedPayment {
    UnknownPayer(Payment),
    Negative(Payment),
    WrongEpoch(Payment),
}

/// Outcome of one settlement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Settlement {
    pub epoch: u32,
    pub accounts: BTreeMap<PublicKey, ValidatorAccount>,
    pub payouts: BTreeMap<BackboneId, Decimal>,
    /// Validators still owing after this settlement.
    pub penalties: BTreeSet<PublicKey>,
    /// Newly penalized validators; each is announced network-wide.
    pub notices: Vec<PublicKey>,
    pub rejected: Vec<RejectedPayment>,
    pub received: Decimal,
}

impl Settlement {
    pub fn paid_out(&self) -> Decimal {
        self.payouts.values().copied().sum()
    }

    /// Human-readable block for the run log.
    pub fn report(&self) -> String {
        let mut out = format!("settlement epoch {}\n", self.epoch);
        for (pk, a) in &self.accounts {
            let _ = writeln!(out, "validator {} expected {} paid {}", pk.short(), a.expected(), a.paid);
        }
        for (bn, amt) in &self.payouts {
            let _ = writeln!(out, "backbone {bn} payout {amt}");
        }
        let pen: Vec<String> = self.penalties.iter().map(|p| p.short()).collect();
        let _ = writeln!(out, "penalties [{}]", pen.join(","));
        out
    }
}

/// Traffic Accounting actor state.
#[derive(Debug, Clone, Default)]
pub struct TaState {
    arrears: BTreeMap<PublicKey, Decimal>,
    history: Vec<Settlement>,
}

impl TaState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Validators barred from registering until they pay.
    pub fn penalized(&self) -> BTreeSet<PublicKey> {
        self.arrears.keys().copied().collect()
    }

    pub fn arrears(&self, pk: &PublicKey) -> Decimal {
        self.arrears.get(pk).copied().unwrap_or_default()
    }

    pub fn history(&self) -> &[Settlement] {
        &self.history
    }

    /// Settle `epoch`. `ledger_lengths` lists every validator active in the
    /// period; validators with arrears may pay even if inactive.
    pub fn settle_epoch(
        &mut self,
        params: &FeeParams,
        epoch: u32,
        payments: &[Payment],
        ledger_lengths: &BTreeMap<PublicKey, u64>,
        backbone: &[BackboneId],
    ) -> Result<&Settlement, FeeError> {
        if backbone.is_empty() {
            return Err(FeeError::NoBackbone);
        }
        let mut accounts: BTreeMap<PublicKey, ValidatorAccount> = ledger_lengths
            .iter()
            .map(|(pk, &len)| {
                (
                    *pk,
                    ValidatorAccount {
                        tmf: compute_tmf(params.tf, len),
                        carried: self.arrears(pk),
                        paid: Decimal::ZERO,
                    },
                )
            })
            .collect();
        for (pk, &owed) in &self.arrears {
            accounts.entry(*pk).or_insert(ValidatorAccount { tmf: Decimal::ZERO, carried: owed, paid: Decimal::ZERO });
        }

        let mut rejected = Vec::new();
        let mut received = Decimal::ZERO;
        for p in payments {
            if p.epoch != epoch {
                rejected.push(RejectedPayment::WrongEpoch(p.clone()));
            } else if p.amount.is_sign_negative() && !p.amount.is_zero() {
                rejected.push(RejectedPayment::Negative(p.clone()));
            } else if let Some(acct) = accounts.get_mut(&p.payer) {
                acct.paid += p.amount;
                received += p.amount;
            } else {
                log::warn!("payment from unknown validator {}", p.payer.short());
                rejected.push(RejectedPayment::UnknownPayer(p.clone()));
            }
        }

        let before = self.penalized();
        self.arrears.clear();
        for (pk, a) in &accounts {
            let short = a.shortfall();
            if short > Decimal::ZERO {
                self.arrears.insert(*pk, short);
            }
        }
        let penalties = self.penalized();
        let notices = penalties.difference(&before).copied().collect();

        let mut ids = backbone.to_vec();
        ids.sort_unstable();
        ids.dedup();
        let share =
            (received / Decimal::from(ids.len())).round_dp_with_strategy(PAYOUT_SCALE, RoundingStrategy::ToZero);
        let mut payouts: BTreeMap<BackboneId, Decimal> = ids.iter().map(|&b| (b, share)).collect();
        let remainder = received - share * Decimal::from(ids.len());
        *payouts.get_mut(&ids[0]).unwrap() += remainder;

        self.history.push(Settlement { epoch, accounts, payouts, penalties, notices, rejected, received });
        Ok(self.history.last().unwrap())
    }
}
