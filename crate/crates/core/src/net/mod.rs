//! The backbone network: topology, joins, routing tables, route updates,
//! hash-directed multicast and neighbour monitoring.
//!
//! [`Network`] owns the mutable state. Each backbone node routes from its
//! own view: its live attachments plus the last route update heard from
//! every other node. Views only change on [`Network::rui_tick`], so a node
//! that moves is unreachable until the next tick.

use std::collections::{BTreeMap, BTreeSet};

pub mod graph;
pub mod join;
pub mod monitor;
pub mod multicast;
pub mod routing;
pub mod rui;

pub use graph::{build_backbone, reconstruct_backbone, BackboneGraph, BackboneId, LinkSpec, Micros, NodeSpec};
pub use join::{join_network, process_join, Attachment, Attachments, JoinOutcome, JoinRequest, JoinResponse, Role};
pub use monitor::{monitor_and_detect, MonitorBoard, MonitorRecord, Suspicion};
pub use multicast::{route_multicast, Delivery, MulticastPlan};
pub use routing::{RoutingTable, BACKBONE_ENTRY_BYTES, PK_ENTRY_BYTES};
pub use rui::{apply_route_update, emit_route_update, RemoteView, RouteUpdate, RuiState};

use crate::model::PublicKey;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NetError {
    #[error("backbone has no nodes")]
    EmptyBackbone,
    #[error("backbone node {0} declared twice")]
    DuplicateNode(BackboneId),
    #[error("link references unknown backbone node {0}")]
    UnknownNode(BackboneId),
    #[error("self-loop on backbone node {0}")]
    SelfLoop(BackboneId),
    #[error("backbone is disconnected: node {0} is unreachable")]
    Disconnected(BackboneId),
}

/// Arrival of a backbone-wide broadcast.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BroadcastPlan {
    pub arrival: BTreeMap<BackboneId, Micros>,
    pub transmissions: usize,
}

#[derive(Debug, Clone)]
pub struct Network {
    graph: BackboneGraph,
    attachments: Attachments,
    rui: BTreeMap<BackboneId, RuiState>,
    views: BTreeMap<BackboneId, RemoteView>,
    paths: BTreeMap<BackboneId, graph::ShortestPaths>,
    tables: BTreeMap<BackboneId, RoutingTable>,
    rui_messages: u64,
}

impl Network {
    pub fn new(graph: BackboneGraph) -> Self {
        let mut net = Network {
            rui: graph.ids().map(|b| (b, RuiState::default())).collect(),
            views: graph.ids().map(|b| (b, RemoteView::default())).collect(),
            paths: graph.all_pairs(),
            graph,
            attachments: Attachments::new(),
            tables: BTreeMap::new(),
            rui_messages: 0,
        };
        net.rebuild_tables();
        net
    }

    pub fn graph(&self) -> &BackboneGraph {
        &self.graph
    }

    pub fn attachments(&self) -> &Attachments {
        &self.attachments
    }

    pub fn tables(&self) -> &BTreeMap<BackboneId, RoutingTable> {
        &self.tables
    }

    pub fn table(&self, bn: BackboneId) -> Option<&RoutingTable> {
        self.tables.get(&bn)
    }

    /// Route updates sent so far, counted once per emitting node.
    pub fn rui_messages(&self) -> u64 {
        self.rui_messages
    }

    pub fn distance(&self, a: BackboneId, b: BackboneId) -> Option<Micros> {
        self.paths.get(&a)?.dist.get(&b).copied()
    }

    pub fn join(&mut self, req: JoinRequest, delays: &[(BackboneId, Micros)]) -> JoinOutcome {
        let out = join_network(&self.graph, &mut self.attachments, req, delays);
        self.rebuild_tables();
        out
    }

    pub fn leave(&mut self, pk: &PublicKey) -> Option<Attachment> {
        let a = self.attachments.detach(pk);
        self.rebuild_tables();
        a
    }

    /// Swap in a registry changed elsewhere; local views update at once,
    /// remote views wait for the next tick.
    pub fn replace_attachments(&mut self, attachments: Attachments) {
        self.attachments = attachments;
        self.rebuild_tables();
    }

    /// One route-update interval: every node whose attached list changed
    /// announces it and every other node applies it.
    pub fn rui_tick(&mut self) -> Vec<RouteUpdate> {
        let mut updates = Vec::new();
        for (&bn, state) in self.rui.iter_mut() {
            if let Some(u) = emit_route_update(state, bn, self.attachments.attached_to(bn)) {
                updates.push(u);
            }
        }
        for u in &updates {
            for (&bn, view) in self.views.iter_mut() {
                if bn != u.origin {
                    apply_route_update(view, u);
                }
            }
        }
        self.rui_messages += updates.len() as u64;
        if !updates.is_empty() {
            self.rebuild_tables();
        }
        updates
    }

    fn rebuild_tables(&mut self) {
        self.tables = self
            .graph
            .ids()
            .map(|bn| {
                let own = (bn, self.attachments.attached_to(bn));
                let remote = self.views[&bn].iter().filter(|(o, _)| *o != bn && self.graph.contains(*o));
                (bn, RoutingTable::build(&self.paths[&bn], std::iter::once(own).chain(remote)))
            })
            .collect();
    }

    pub fn multicast(&self, origin: BackboneId, dests: &[PublicKey], droppers: &BTreeSet<BackboneId>) -> MulticastPlan {
        route_multicast(&self.graph, &self.tables, &self.attachments, origin, dests, droppers)
    }

    /// Flood over the backbone with duplicate suppression.
    pub fn broadcast(&self, origin: BackboneId) -> BroadcastPlan {
        BroadcastPlan { arrival: self.paths[&origin].dist.clone(), transmissions: self.graph.flood_transmissions() }
    }

    /// Remove `excluded` nodes, bridge around them, and return the nodes that
    /// were attached to them. Callers rejoin the orphans; remote views are
    /// purged of the removed nodes immediately.
    pub fn reconstruct(&mut self, excluded: &BTreeSet<BackboneId>) -> Result<Vec<(PublicKey, Role)>, NetError> {
        let graph = reconstruct_backbone(&self.graph, excluded)?;
        let mut orphans = Vec::new();
        for &x in excluded {
            orphans.extend(self.attachments.evict(x));
            self.rui.remove(&x);
            self.views.remove(&x);
        }
        for v in self.views.values_mut() {
            for &x in excluded {
                v.forget(x);
            }
        }
        self.graph = graph;
        self.paths = self.graph.all_pairs();
        self.rebuild_tables();
        Ok(orphans)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SignatureScheme;

    fn pk(i: u8) -> PublicKey {
        PublicKey::new(SignatureScheme::Simulated, [i; 32])
    }

    /// The four-node example: BN.1 links to BN.2 and BN.4, BN.2 to BN.3.
    fn example() -> Network {
        let nodes: Vec<NodeSpec> = (1..=4).map(|id| NodeSpec { id, capacity: 4 }).collect();
        let links = [
            LinkSpec { a: 1, b: 2, delay: 1000 },
            LinkSpec { a: 2, b: 3, delay: 1000 },
            LinkSpec { a: 1, b: 4, delay: 1000 },
            LinkSpec { a: 3, b: 4, delay: 5000 },
        ];
        let mut net = Network::new(build_backbone(&nodes, &links).unwrap());
        for (v, bn) in [(2u8, 2u32), (3, 3), (4, 4)] {
            net.join(JoinRequest { pk: pk(v), role: Role::Validator }, &[(bn, 1)]);
        }
        net.join(JoinRequest { pk: pk(1), role: Role::Member }, &[(1, 1)]);
        net.rui_tick();
        net
    }

    #[test]
    fn example_table() {
        let net = example();
        let t = net.table(1).unwrap();
        assert_eq!(t.next_hop(&pk(4)), Some(4));
        assert_eq!(t.next_hop(&pk(2)), Some(2));
        assert_eq!(t.next_hop(&pk(3)), Some(2));
        assert_eq!(t.next_hop(&pk(1)), None);
        let dump = t.dump(|p| format!("VN.{}", p.bytes()[0]));
        assert!(dump.contains("VN.3\t2\n"));
    }

    #[test]
    fn quiescent_without_churn() {
        let mut net = example();
        assert!(net.rui_tick().is_empty());
        let before = net.rui_messages();
        net.rui_tick();
        assert_eq!(net.rui_messages(), before);
    }

    #[test]
    fn reattach_triggers_two_updates() {
        let mut net = example();
        net.leave(&pk(3));
        net.join(JoinRequest { pk: pk(3), role: Role::Validator }, &[(4, 1)]);
        let updates = net.rui_tick();
        let origins: Vec<_> = updates.iter().map(|u| u.origin).collect();
        assert_eq!(origins, vec![3, 4]);
        assert_eq!(net.table(1).unwrap().next_hop(&pk(3)), Some(4));
    }

    #[test]
    fn table_size_accounting() {
        let net = example();
        let t = net.table(1).unwrap();
        assert_eq!(t.size_bytes(), 3 * PK_ENTRY_BYTES + 3 * BACKBONE_ENTRY_BYTES);
    }

    #[test]
    fn reconstruct_returns_orphans() {
        let mut net = example();
        let orphans = net.reconstruct(&BTreeSet::from([2])).unwrap();
        assert_eq!(orphans, vec![(pk(2), Role::Validator)]);
        assert!(net.table(1).unwrap().next_hop(&pk(2)).is_none());
        // Bridged 1-3 through the removed node.
        assert_eq!(net.graph().link_delay(1, 3), Some(2000));
    }
}
