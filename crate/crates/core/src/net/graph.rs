use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use serde::{Deserialize, Serialize};

use super::NetError;

pub type BackboneId = u32;

/// Simulated time and delays, in microseconds.
pub type Micros = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: BackboneId,
    /// Maximum number of attached IoT nodes.
    pub capacity: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkSpec {
    pub a: BackboneId,
    pub b: BackboneId,
    pub delay: Micros,
}

/// Undirected backbone topology with per-link delays.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackboneGraph {
    capacity: BTreeMap<BackboneId, usize>,
    adj: BTreeMap<BackboneId, BTreeMap<BackboneId, Micros>>,
}

/// Single-source shortest paths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShortestPaths {
    pub source: BackboneId,
    pub dist: BTreeMap<BackboneId, Micros>,
    pub hops: BTreeMap<BackboneId, u32>,
    /// First hop out of `source` on the chosen path; `source` maps to itself.
    pub first_hop: BTreeMap<BackboneId, BackboneId>,
}

pub fn build_backbone(nodes: &[NodeSpec], links: &[LinkSpec]) -> Result<BackboneGraph, NetError> {
    if nodes.is_empty() {
        return Err(NetError::EmptyBackbone);
    }
    let mut capacity = BTreeMap::new();
    let mut adj: BTreeMap<BackboneId, BTreeMap<BackboneId, Micros>> = BTreeMap::new();
    for n in nodes {
        if capacity.insert(n.id, n.capacity).is_some() {
            return Err(NetError::DuplicateNode(n.id));
        }
        adj.insert(n.id, BTreeMap::new());
    }
    for l in links {
        if l.a == l.b {
            return Err(NetError::SelfLoop(l.a));
        }
        for end in [l.a, l.b] {
            if !capacity.contains_key(&end) {
                return Err(NetError::UnknownNode(end));
            }
        }
        adj.get_mut(&l.a).unwrap().insert(l.b, l.delay);
        adj.get_mut(&l.b).unwrap().insert(l.a, l.delay);
    }
    let g = BackboneGraph { capacity, adj };
    g.check_connected()?;
    Ok(g)
}

impl BackboneGraph {
    fn check_connected(&self) -> Result<(), NetError> {
        let start = *self.adj.keys().next().ok_or(NetError::EmptyBackbone)?;
        let mut seen = BTreeSet::from([start]);
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            for &v in self.adj[&u].keys() {
                if seen.insert(v) {
                    stack.push(v);
                }
            }
        }
        if seen.len() != self.adj.len() {
            let missing = self.adj.keys().find(|k| !seen.contains(k)).copied().unwrap();
            return Err(NetError::Disconnected(missing));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = BackboneId> + '_ {
        self.adj.keys().copied()
    }

    pub fn contains(&self, id: BackboneId) -> bool {
        self.adj.contains_key(&id)
    }

    pub fn capacity(&self, id: BackboneId) -> usize {
        self.capacity.get(&id).copied().unwrap_or(0)
    }

    pub fn neighbors(&self, id: BackboneId) -> impl Iterator<Item = (BackboneId, Micros)> + '_ {
        self.adj.get(&id).into_iter().flat_map(|m| m.iter().map(|(&k, &d)| (k, d)))
    }

    pub fn degree(&self, id: BackboneId) -> usize {
        self.adj.get(&id).map_or(0, |m| m.len())
    }

    pub fn link_delay(&self, a: BackboneId, b: BackboneId) -> Option<Micros> {
        self.adj.get(&a)?.get(&b).copied()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.values().map(|m| m.len()).sum::<usize>() / 2
    }

    pub fn links(&self) -> Vec<LinkSpec> {
        let mut out = Vec::new();
        for (&a, m) in &self.adj {
            for (&b, &delay) in m {
                if a < b {
                    out.push(LinkSpec { a, b, delay });
                }
            }
        }
        out
    }

    pub fn node_specs(&self) -> Vec<NodeSpec> {
        self.capacity.iter().map(|(&id, &capacity)| NodeSpec { id, capacity }).collect()
    }

    /// Dijkstra over `(delay, first hop)`: among equal-delay paths the one
    /// leaving `source` through the lowest neighbour id wins.
    pub fn shortest_paths(&self, source: BackboneId) -> ShortestPaths {
        let mut dist = BTreeMap::new();
        let mut hops = BTreeMap::new();
        let mut first_hop = BTreeMap::new();
        let mut heap = BinaryHeap::new();
        heap.push(Reverse((0u64, source, 0u32, source)));
        while let Some(Reverse((d, fh, h, u))) = heap.pop() {
            if dist.contains_key(&u) {
                continue;
            }
            dist.insert(u, d);
            hops.insert(u, h);
            first_hop.insert(u, fh);
            for (v, w) in self.neighbors(u) {
                if !dist.contains_key(&v) {
                    let fh_v = if u == source { v } else { fh };
                    heap.push(Reverse((d + w, fh_v, h + 1, v)));
                }
            }
        }
        ShortestPaths { source, dist, hops, first_hop }
    }

    pub fn all_pairs(&self) -> BTreeMap<BackboneId, ShortestPaths> {
        self.ids().map(|s| (s, self.shortest_paths(s))).collect()
    }

    /// Longest shortest path, in hops.
    pub fn diameter_hops(&self) -> u32 {
        self.ids().map(|s| self.shortest_paths(s).hops.values().copied().max().unwrap_or(0)).max().unwrap_or(0)
    }

    /// Link transmissions needed to flood one item from any node with
    /// duplicate suppression: every node forwards once on every link except
    /// the one it first heard the item on.
    pub fn flood_transmissions(&self) -> usize {
        2 * self.edge_count() - (self.len() - 1)
    }
}

/// Drop `excluded` nodes. The neighbours of each removed node are chained
/// together in id order with the delay they had through it, so removing a
/// hub does not split the network.
pub fn reconstruct_backbone(graph: &BackboneGraph, excluded: &BTreeSet<BackboneId>) -> Result<BackboneGraph, NetError> {
    let mut adj = graph.adj.clone();
    let mut capacity = graph.capacity.clone();
    for &x in excluded {
        let Some(around) = adj.remove(&x) else {
            return Err(NetError::UnknownNode(x));
        };
        capacity.remove(&x);
        for m in adj.values_mut() {
            m.remove(&x);
        }
        let kept: Vec<(BackboneId, Micros)> = around.into_iter().filter(|(k, _)| adj.contains_key(k)).collect();
        for pair in kept.windows(2) {
            let (a, da) = pair[0];
            let (b, db) = pair[1];
            let bridged = da + db;
            let cur = adj[&a].get(&b).copied();
            if cur.is_none_or(|c| c > bridged) {
                adj.get_mut(&a).unwrap().insert(b, bridged);
                adj.get_mut(&b).unwrap().insert(a, bridged);
            }
        }
    }
    let g = BackboneGraph { capacity, adj };
    g.check_connected()?;
    Ok(g)
}
