//! Identities and signatures.
//!
//! Two backends share one interface. [`SignatureScheme::Ed25519`] is a real
//! asymmetric scheme. [`SignatureScheme::Simulated`] derives the public key
//! from a secret seed and tags messages with a keyed SHA-256; it checks
//! key/message binding but is not unforgeable, and exists so large simulated
//! populations run fast. Byte accounting is identical for both (see
//! [`CREDENTIAL_SIZE`](super::codec::CREDENTIAL_SIZE)).

use std::fmt;

use ed25519_dalek::{Signer, SigningKey, Verifier, VerifyingKey};
use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};

use super::alphabet::base62_digits;

/// Characters in a public key's display form.
pub const PK_DISPLAY_LEN: usize = 43;

/// Largest signature either backend produces.
pub const MAX_SIGNATURE_LEN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignatureScheme {
    Ed25519,
    Simulated,
}

impl SignatureScheme {
    pub(crate) fn tag(self) -> u8 {
        match self {
            SignatureScheme::Ed25519 => 1,
            SignatureScheme::Simulated => 2,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            1 => Some(SignatureScheme::Ed25519),
            2 => Some(SignatureScheme::Simulated),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PublicKey {
    scheme: SignatureScheme,
    bytes: [u8; 32],
}

impl PublicKey {
    pub fn new(scheme: SignatureScheme, bytes: [u8; 32]) -> Self {
        PublicKey { scheme, bytes }
    }

    pub fn scheme(&self) -> SignatureScheme {
        self.scheme
    }

    pub fn bytes(&self) -> &[u8; 32] {
        &self.bytes
    }

    /// Scheme tag followed by the key bytes; what gets hashed for KWM.
    pub fn to_bytes(&self) -> [u8; 33] {
        let mut out = [0u8; 33];
        out[0] = self.scheme.tag();
        out[1..].copy_from_slice(&self.bytes);
        out
    }

    /// Base-62 rendering of the key bytes, [`PK_DISPLAY_LEN`] characters.
    pub fn display(&self) -> String {
        String::from_utf8(base62_digits(&self.bytes, PK_DISPLAY_LEN)).expect("ASCII")
    }

    /// First eight display characters, for logs.
    pub fn short(&self) -> String {
        self.display()[..8].to_string()
    }
}

impl fmt::Display for PublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display())
    }
}

impl Serialize for PublicKey {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.display())
    }
}

impl fmt::Debug for PublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PublicKey({})", self.short())
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Signature(Vec<u8>);

impl Signature {
    /// Arbitrary bytes; used by the codec and by adversaries forging tags.
    pub fn from_bytes(bytes: Vec<u8>) -> Self {
        Signature(bytes)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Signature({} bytes)", self.0.len())
    }
}

#[derive(Clone)]
enum Secret {
    Ed25519(Box<SigningKey>),
    Simulated,
}

#[derive(Clone)]
pub struct Keypair {
    public: PublicKey,
    secret: Secret,
}

impl Keypair {
    pub fn generate<R: RngCore + CryptoRng>(scheme: SignatureScheme, rng: &mut R) -> Self {
        match scheme {
            SignatureScheme::Ed25519 => {
                let sk = SigningKey::generate(rng);
                let public = PublicKey::new(scheme, sk.verifying_key().to_bytes());
                Keypair { public, secret: Secret::Ed25519(Box::new(sk)) }
            }
            SignatureScheme::Simulated => {
                let mut seed = [0u8; 32];
                rng.fill_bytes(&mut seed);
                let public = PublicKey::new(scheme, sim_public(&seed));
                Keypair { public, secret: Secret::Simulated }
            }
        }
    }

    pub fn public(&self) -> PublicKey {
        self.public
    }

    pub fn sign(&self, message: &[u8]) -> Signature {
        match &self.secret {
            Secret::Ed25519(sk) => Signature(sk.sign(message).to_bytes().to_vec()),
            Secret::Simulated => Signature(sim_tag(&self.public.bytes, message).to_vec()),
        }
    }
}

impl fmt::Debug for Keypair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Keypair").field("public", &self.public).finish_non_exhaustive()
    }
}

/// Sign with `keys`. Free-function form of [`Keypair::sign`].
pub fn sign(keys: &Keypair, message: &[u8]) -> Signature {
    keys.sign(message)
}

/// Never panics; malformed signatures verify as `false`.
pub fn verify_signature(pk: &PublicKey, message: &[u8], sig: &Signature) -> bool {
    match pk.scheme {
        SignatureScheme::Ed25519 => {
            let Ok(vk) = VerifyingKey::from_bytes(&pk.bytes) else {
                return false;
            };
            let Ok(bytes) = <[u8; 64]>::try_from(sig.0.as_slice()) else {
                return false;
            };
            vk.verify(message, &ed25519_dalek::Signature::from_bytes(&bytes)).is_ok()
        }
        SignatureScheme::Simulated => sig.0.as_slice() == sim_tag(&pk.bytes, message),
    }
}

fn sim_public(seed: &[u8; 32]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"vericom/sim-pk");
    h.update(seed);
    h.finalize().into()
}

fn sim_tag(pk: &[u8; 32], message: &[u8]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"vericom/sim-sig");
    h.update(pk);
    h.update(message);
    h.finalize().into()
}
