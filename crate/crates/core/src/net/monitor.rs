use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::graph::{BackboneGraph, BackboneId};
use super::multicast::Observation;

/// Counts gathered by a monitor group about one backbone node in one window.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct MonitorRecord {
    pub monitored: BackboneId,
    pub window: u64,
    /// Items that arrived from a monitor and had to go further.
    pub transit_in: u64,
    pub forwarded: u64,
}

impl MonitorRecord {
    pub fn suspicious(&self) -> bool {
        self.forwarded < self.transit_in
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Suspicion {
    pub monitored: BackboneId,
    pub window: u64,
    pub monitors: Vec<BackboneId>,
    pub record: MonitorRecord,
}

/// Up to `group_size` random neighbours of every node watch it during
/// `window`. A neighbour sees everything crossing its own link.
pub fn assign_monitors(
    graph: &BackboneGraph,
    group_size: usize,
    window: u64,
    seed: u64,
) -> BTreeMap<BackboneId, Vec<BackboneId>> {
    let mut out = BTreeMap::new();
    for id in graph.ids() {
        let mut rng =
            ChaCha8Rng::seed_from_u64(seed ^ window.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ (u64::from(id) << 32));
        let neighbors: Vec<BackboneId> = graph.neighbors(id).map(|(n, _)| n).collect();
        let mut chosen: Vec<BackboneId> = neighbors.choose_multiple(&mut rng, group_size).copied().collect();
        chosen.sort_unstable();
        out.insert(id, chosen);
    }
    out
}

/// Per-window observation counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonitorBoard {
    pub window: u64,
    groups: BTreeMap<BackboneId, Vec<BackboneId>>,
    records: BTreeMap<BackboneId, MonitorRecord>,
}

impl MonitorBoard {
    pub fn new(graph: &BackboneGraph, group_size: usize, window: u64, seed: u64) -> Self {
        MonitorBoard { window, groups: assign_monitors(graph, group_size, window, seed), records: BTreeMap::new() }
    }

    pub fn monitors_of(&self, bn: BackboneId) -> &[BackboneId] {
        self.groups.get(&bn).map_or(&[], |v| v.as_slice())
    }

    /// Count an observation if one of the node's monitors sent it the item.
    pub fn observe(&mut self, obs: &Observation) {
        if !obs.transit || !self.monitors_of(obs.bn).contains(&obs.from) {
            return;
        }
        let rec = self.records.entry(obs.bn).or_insert(MonitorRecord {
            monitored: obs.bn,
            window: self.window,
            ..Default::default()
        });
        rec.transit_in += 1;
        if obs.forwarded {
            rec.forwarded += 1;
        }
    }

    pub fn records(&self) -> impl Iterator<Item = &MonitorRecord> {
        self.records.values()
    }
}

/// Close a window: every node that forwarded less than it took in.
pub fn monitor_and_detect(board: &MonitorBoard) -> Vec<Suspicion> {
    board
        .records()
        .filter(|r| r.suspicious())
        .map(|r| Suspicion {
            monitored: r.monitored,
            window: r.window,
            monitors: board.monitors_of(r.monitored).to_vec(),
            record: *r,
        })
        .collect()
}
