//! Seeded topologies and delays.
//!
//! Per-node and per-pair values are hashed from `(seed, purpose, ids)` so a
//! node's links and delays do not depend on how many nodes exist. A
//! 20-node backbone is the first 20 nodes of a 50-node one.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest as _, Sha256};

use super::config::{ms, ScenarioConfig, TopologyKind};
use crate::net::{build_backbone, BackboneGraph, BackboneId, LinkSpec, Micros, NetError, NodeSpec};

fn hash64(seed: u64, purpose: &str, a: u64, b: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(purpose.as_bytes());
    h.update(a.to_le_bytes());
    h.update(b.to_le_bytes());
    u64::from_le_bytes(h.finalize()[..8].try_into().unwrap())
}

/// Uniform in `[0, 1)`.
pub fn unit(seed: u64, purpose: &str, a: u64, b: u64) -> f64 {
    (hash64(seed, purpose, a, b) >> 11) as f64 / (1u64 << 53) as f64
}

/// Independent RNG stream for one purpose.
pub fn stream(seed: u64, purpose: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(hash64(seed, purpose, 0, 0))
}

pub fn backbone_links(kind: TopologyKind, count: usize, delay: Micros, seed: u64) -> Vec<LinkSpec> {
    let link = |a: usize, b: usize| LinkSpec { a: a as BackboneId, b: b as BackboneId, delay };
    match kind {
        TopologyKind::Chain => (1..count).map(|k| link(k - 1, k)).collect(),
        TopologyKind::Star => (1..count).map(|k| link(0, k)).collect(),
        TopologyKind::RandomConnected => {
            // Each node links to two distinct earlier nodes (one for node 1).
            let mut links = Vec::new();
            for k in 1..count {
                let p1 = (unit(seed, "bb-parent", k as u64, 0) * k as f64) as usize;
                links.push(link(p1, k));
                if k >= 2 {
                    let mut p2 = (unit(seed, "bb-parent", k as u64, 1) * (k - 1) as f64) as usize;
                    if p2 >= p1 {
                        p2 += 1;
                    }
                    links.push(link(p2, k));
                }
            }
            links
        }
    }
}

pub fn scenario_backbone(cfg: &ScenarioConfig) -> Result<BackboneGraph, NetError> {
    let nodes: Vec<NodeSpec> =
        (0..cfg.num_backbone).map(|id| NodeSpec { id: id as BackboneId, capacity: cfg.backbone_capacity }).collect();
    let links = backbone_links(cfg.topology.kind, cfg.num_backbone, ms(cfg.topology.link_delay_ms), cfg.seed);
    build_backbone(&nodes, &links)
}

/// One-way delay between IoT node `node` and backbone node `bn`: a per-node
/// base in `[0.75, 1.25)` of the configured mean plus a small per-pair term.
pub fn access_delay(cfg: &ScenarioConfig, node: u32, bn: BackboneId) -> Micros {
    let mean = cfg.access_delay_ms;
    let base = mean * (0.75 + 0.5 * unit(cfg.seed, "access", u64::from(node), 0));
    let jitter = mean * 0.15 * unit(cfg.seed, "access-pair", u64::from(node), u64::from(bn));
    ms(base + jitter)
}

/// Neighbours per side in the baseline overlay ring.
pub fn overlay_degree(n: usize) -> usize {
    if n < 3 {
        return 1;
    }
    let k = ((n as f64).log2() / 2.0).ceil() as usize;
    k.clamp(1, (n - 1) / 2)
}

/// Baseline peer overlay: a ring lattice over a seeded permutation where
/// every node links to its `overlay_degree(n)` nearest ring neighbours on
/// each side.
pub fn baseline_overlay(n: usize, mean_delay_ms: f64, seed: u64) -> Result<BackboneGraph, NetError> {
    let nodes: Vec<NodeSpec> = (0..n).map(|id| NodeSpec { id: id as BackboneId, capacity: 0 }).collect();
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut stream(seed, "overlay"));
    let k = overlay_degree(n);
    let mut links = Vec::new();
    if n == 2 {
        links.push((0, 1));
    } else if n > 2 {
        for i in 0..n {
            for j in 1..=k {
                let (a, b) = (perm[i], perm[(i + j) % n]);
                links.push((a.min(b), a.max(b)));
            }
        }
    }
    links.sort_unstable();
    links.dedup();
    let specs: Vec<LinkSpec> = links
        .into_iter()
        .map(|(a, b)| LinkSpec {
            a: a as BackboneId,
            b: b as BackboneId,
            delay: ms(mean_delay_ms * (0.75 + 0.5 * unit(seed, "overlay-link", a as u64, b as u64))),
        })
        .collect();
    build_backbone(&nodes, &specs)
}
