//! Identities, digests, signatures, transactions and blocks.

pub mod alphabet;
pub mod block;
pub mod codec;
pub mod digest;
pub mod keys;
pub mod tx;

pub use alphabet::{Symbol, ALPHABET, ALPHABET_LEN};
pub use block::{Block, BlockHeader, Endorsement};
pub use codec::{credential_size, CodecError, CREDENTIAL_SIZE};
pub use digest::{digest, digest_with_len, msch, Digest, DigestError, DIGEST_LEN};
pub use keys::{sign, verify_signature, Keypair, PublicKey, Signature, SignatureScheme};
pub use tx::Transaction;
