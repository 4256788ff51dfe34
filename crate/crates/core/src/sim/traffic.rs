use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;

use super::config::ScenarioConfig;
use super::topology::stream;
use crate::model::{Keypair, PublicKey, Transaction};

/// Node keys and the transaction stream. Both modes draw the same senders
/// and payloads for the same seed.
pub struct Traffic {
    keys: Vec<Keypair>,
    rng: ChaCha8Rng,
    payload_bytes: usize,
}

impl Traffic {
    pub fn new(cfg: &ScenarioConfig) -> Self {
        let mut krng = stream(cfg.seed, "keys");
        let keys = (0..cfg.num_iot_nodes).map(|_| Keypair::generate(cfg.signature, &mut krng)).collect();
        Traffic { keys, rng: stream(cfg.seed, "traffic"), payload_bytes: cfg.payload_bytes }
    }

    pub fn keys(&self, node: u32) -> &Keypair {
        &self.keys[node as usize]
    }

    pub fn pk(&self, node: u32) -> PublicKey {
        self.keys[node as usize].public()
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Next sender and its signed transaction.
    pub fn next_tx(&mut self) -> (u32, Transaction) {
        let sender = self.rng.gen_range(0..self.keys.len()) as u32;
        let mut payload = vec![0u8; self.payload_bytes];
        self.rng.fill_bytes(&mut payload);
        (sender, Transaction::new_signed(&self.keys[sender as usize], payload, None))
    }
}
