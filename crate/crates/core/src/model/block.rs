use super::codec::{CodecError, Reader, Writer, CREDENTIAL_SIZE};
use super::digest::{digest, Digest};
use super::keys::{verify_signature, Keypair, PublicKey, Signature};
use super::tx::Transaction;

const KIND: u8 = b'B';
const HEADER_KIND: u8 = b'H';
const GENERATOR_DOMAIN: &[u8] = b"vericom/block-header";
const ENDORSE_DOMAIN: &[u8] = b"vericom/endorse";

/// Seal attempts before giving up on landing a digest in range.
pub const MAX_SEAL_ATTEMPTS: u64 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockHeader {
    pub generator: PublicKey,
    pub previous: Option<Digest>,
    pub epoch: u32,
    pub nonce: u64,
    /// Digest over the ordered transaction ids.
    pub tx_root: Digest,
}

impl BlockHeader {
    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new(HEADER_KIND);
        w.public_key(&self.generator)
            .opt_digest(self.previous.as_ref())
            .u32(self.epoch)
            .u64(self.nonce)
            .digest(&self.tx_root);
        w.finish()
    }

    fn decode(bytes: &[u8]) -> Result<Self, CodecError> {
        let mut r = Reader::new(bytes, HEADER_KIND)?;
        let header = BlockHeader {
            generator: r.public_key()?,
            previous: r.opt_digest()?,
            epoch: r.u32()?,
            nonce: r.u64()?,
            tx_root: r.digest()?,
        };
        r.finish()?;
        Ok(header)
    }

    pub fn digest(&self) -> Digest {
        digest(&self.encode())
    }
}

pub fn tx_root(txs: &[Transaction]) -> Digest {
    let mut w = Writer::new(b'R');
    w.u32(txs.len() as u32);
    for tx in txs {
        w.digest(tx.id());
    }
    digest(&w.finish())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Endorsement {
    pub verifier: PublicKey,
    pub signature: Signature,
}

impl Endorsement {
    pub fn sign(keys: &Keypair, block_digest: &Digest) -> Self {
        Endorsement { verifier: keys.public(), signature: keys.sign(&endorse_message(block_digest)) }
    }

    pub fn verify(&self, block_digest: &Digest) -> bool {
        verify_signature(&self.verifier, &endorse_message(block_digest), &self.signature)
    }
}

fn endorse_message(d: &Digest) -> Vec<u8> {
    [ENDORSE_DOMAIN, d.as_str().as_bytes()].concat()
}

fn generator_message(d: &Digest) -> Vec<u8> {
    [GENERATOR_DOMAIN, d.as_str().as_bytes()].concat()
}

/// A block of transactions from one generator's ledger.
///
/// The block digest covers the header only; the header commits to the
/// transactions through `tx_root`. Signature and endorsements sign the
/// digest and are therefore outside it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    header: BlockHeader,
    digest: Digest,
    transactions: Vec<Transaction>,
    signature: Signature,
    endorsements: Vec<Endorsement>,
}

impl Block {
    /// Build and sign a block, bumping the nonce until `accept` holds for the
    /// digest. Returns `None` after [`MAX_SEAL_ATTEMPTS`] misses.
    pub fn seal(
        keys: &Keypair,
        previous: Option<Digest>,
        epoch: u32,
        transactions: Vec<Transaction>,
        accept: impl Fn(&Digest) -> bool,
    ) -> Option<Self> {
        let mut header =
            BlockHeader { generator: keys.public(), previous, epoch, nonce: 0, tx_root: tx_root(&transactions) };
        for nonce in 0..MAX_SEAL_ATTEMPTS {
            header.nonce = nonce;
            let d = header.digest();
            if accept(&d) {
                let signature = keys.sign(&generator_message(&d));
                return Some(Block { header, digest: d, transactions, signature, endorsements: Vec::new() });
            }
        }
        None
    }

    /// Assemble from parts without checking anything.
    pub fn from_parts(
        header: BlockHeader,
        transactions: Vec<Transaction>,
        signature: Signature,
        endorsements: Vec<Endorsement>,
    ) -> Self {
        let digest = header.digest();
        Block { header, digest, transactions, signature, endorsements }
    }

    pub fn header(&self) -> &BlockHeader {
        &self.header
    }

    pub fn digest(&self) -> &Digest {
        &self.digest
    }

    pub fn generator(&self) -> &PublicKey {
        &self.header.generator
    }

    pub fn previous(&self) -> Option<&Digest> {
        self.header.previous.as_ref()
    }

    pub fn transactions(&self) -> &[Transaction] {
        &self.transactions
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn endorsements(&self) -> &[Endorsement] {
        &self.endorsements
    }

    pub fn header_signature_valid(&self) -> bool {
        verify_signature(&self.header.generator, &generator_message(&self.digest), &self.signature)
    }

    /// `tx_root` agrees with the carried transactions.
    pub fn tx_root_valid(&self) -> bool {
        tx_root(&self.transactions) == self.header.tx_root
    }

    pub fn with_endorsements(mut self, endorsements: Vec<Endorsement>) -> Self {
        self.endorsements = endorsements;
        self
    }

    pub fn without_endorsements(&self) -> Self {
        Block { endorsements: Vec::new(), ..self.clone() }
    }

    /// `[ver][b'B'][header][n_tx u32][tx...][credential(generator)][n_end u32][credential...]`
    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new(KIND);
        w.bytes(&self.header.encode());
        w.u32(self.transactions.len() as u32);
        for tx in &self.transactions {
            w.bytes(&tx.encode());
        }
        w.credential(&self.header.generator, &self.signature);
        w.u32(self.endorsements.len() as u32);
        for e in &self.endorsements {
            w.credential(&e.verifier, &e.signature);
        }
        w.finish()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, CodecError> {
        let mut r = Reader::new(bytes, KIND)?;
        let header = BlockHeader::decode(r.bytes()?)?;
        let n = r.u32()? as usize;
        let mut transactions = Vec::with_capacity(n.min(1 << 16));
        for _ in 0..n {
            transactions.push(Transaction::decode(r.bytes()?)?);
        }
        let (_, signature) = r.credential()?;
        let n = r.u32()? as usize;
        let mut endorsements = Vec::with_capacity(n.min(1 << 10));
        for _ in 0..n {
            let (verifier, signature) = r.credential()?;
            endorsements.push(Endorsement { verifier, signature });
        }
        r.finish()?;
        Ok(Block::from_parts(header, transactions, signature, endorsements))
    }

    /// Encoded length, computed without encoding.
    pub fn wire_size(&self) -> usize {
        let header_len = self.header.encode().len();
        2 + 4
            + header_len
            + 4
            + self.transactions.iter().map(|t| 4 + t.wire_size()).sum::<usize>()
            + CREDENTIAL_SIZE
            + 4
            + CREDENTIAL_SIZE * self.endorsements.len()
    }
}
