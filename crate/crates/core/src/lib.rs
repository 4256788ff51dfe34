//! Hash-directed verification and backbone multicast for IoT blockchains.
//!
//! Transactions and blocks are not flooded. A backbone of resourceful nodes
//! routes each item to a small set of validators or verifiers picked from
//! the item's own digest: the first symbol of the digest names a validator
//! through the range allocation, and its ring neighbours complete the set.
//!
//! The crate is layered bottom-up:
//!
//! - [`model`]: digests over a 62-symbol alphabet, keys, transactions, blocks.
//! - [`allocation`]: weight dictionary, KWM ranking, range partition, ring.
//! - [`verification`]: validator/verifier set selection and item checks.
//! - [`net`]: backbone topology, routing tables, joins, route updates,
//!   multicast, and neighbour monitoring.
//! - [`ledger`]: per-validator ledgers, range registration, audits.
//! - [`fees`]: traffic management fees and settlement.
//! - [`sim`]: a deterministic discrete-event simulator comparing the scheme
//!   with a flooding baseline, plus attack injection and metrics.

pub mod allocation;
pub mod fees;
pub mod ledger;
pub mod model;
pub mod net;
pub mod sim;
pub mod verification;

pub use allocation::{RangeAllocation, WeightDictionary};
pub use model::{digest, Block, Digest, Keypair, PublicKey, Transaction};
pub use verification::SetParams;
