use super::codec::{CodecError, Reader, Writer};
use super::digest::{digest, Digest};
use super::keys::{verify_signature, Keypair, PublicKey, Signature};

const KIND: u8 = b'T';
const SIGNING_KIND: u8 = b't';

/// A signed transaction. `id` is the digest of the canonical encoding,
/// which covers every other field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transaction {
    id: Digest,
    sender: PublicKey,
    payload: Vec<u8>,
    previous: Option<Digest>,
    signature: Signature,
    encoded_len: usize,
}

impl Transaction {
    pub fn new_signed(keys: &Keypair, payload: Vec<u8>, previous: Option<Digest>) -> Self {
        let sender = keys.public();
        let signature = keys.sign(&Self::signing_bytes(&sender, &payload, previous.as_ref()));
        Self::from_parts(sender, payload, previous, signature)
    }

    /// Assemble without signing. Nothing checks that `signature` is valid.
    pub fn from_parts(sender: PublicKey, payload: Vec<u8>, previous: Option<Digest>, signature: Signature) -> Self {
        let mut tx =
            Transaction { id: Digest::parse("0").unwrap(), sender, payload, previous, signature, encoded_len: 0 };
        let bytes = tx.encode();
        tx.encoded_len = bytes.len();
        tx.id = digest(&bytes);
        tx
    }

    pub fn signing_bytes(sender: &PublicKey, payload: &[u8], previous: Option<&Digest>) -> Vec<u8> {
        let mut w = Writer::new(SIGNING_KIND);
        w.public_key(sender).bytes(payload).opt_digest(previous);
        w.finish()
    }

    pub fn id(&self) -> &Digest {
        &self.id
    }

    pub fn sender(&self) -> &PublicKey {
        &self.sender
    }

    pub fn payload(&self) -> &[u8] {
        &self.payload
    }

    pub fn previous(&self) -> Option<&Digest> {
        self.previous.as_ref()
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn signature_valid(&self) -> bool {
        let msg = Self::signing_bytes(&self.sender, &self.payload, self.previous.as_ref());
        verify_signature(&self.sender, &msg, &self.signature)
    }

    /// `[ver][b'T'][payload][previous][credential(sender, signature)]`
    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new(KIND);
        w.bytes(&self.payload).opt_digest(self.previous.as_ref()).credential(&self.sender, &self.signature);
        w.finish()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, CodecError> {
        let mut r = Reader::new(bytes, KIND)?;
        let tx = Self::read_body(&mut r)?;
        r.finish()?;
        Ok(tx)
    }

    fn read_body(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        let payload = r.bytes()?.to_vec();
        let previous = r.opt_digest()?;
        let (sender, signature) = r.credential()?;
        Ok(Self::from_parts(sender, payload, previous, signature))
    }

    /// Length of [`encode`](Self::encode) without re-encoding.
    pub fn wire_size(&self) -> usize {
        self.encoded_len
    }
}

/// Encoded transaction size for a given payload length and no previous link.
pub fn transaction_size(payload_len: usize) -> usize {
    2 + 4 + payload_len + 1 + super::codec::CREDENTIAL_SIZE
}
