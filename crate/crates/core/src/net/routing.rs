use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use super::graph::{BackboneId, Micros, ShortestPaths};
use super::join::Role;
use crate::model::keys::PK_DISPLAY_LEN;
use crate::model::PublicKey;

/// Bytes for a next-hop backbone id.
pub const NEXT_HOP_BYTES: usize = 4;
/// Bytes per destination-PK entry: PK display form plus next hop.
pub const PK_ENTRY_BYTES: usize = PK_DISPLAY_LEN + NEXT_HOP_BYTES;
/// Bytes per backbone-node entry: id, next hop, path cost, last RUI sequence.
pub const BACKBONE_ENTRY_BYTES: usize = 4 + NEXT_HOP_BYTES + 8 + 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Route {
    /// `owner` itself for local delivery.
    pub next_hop: BackboneId,
    /// Backbone node the destination is attached to.
    pub via: BackboneId,
    pub cost: Micros,
}

/// One backbone node's forwarding state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RoutingTable {
    pub owner: BackboneId,
    pk_routes: BTreeMap<PublicKey, Route>,
    backbone: BTreeMap<BackboneId, Route>,
}

impl RoutingTable {
    /// Routes from `paths` (computed at `owner`) to every backbone node and
    /// to every routed PK in `known`, keyed by the node it is attached to.
    pub fn build<'a>(
        paths: &ShortestPaths,
        known: impl IntoIterator<Item = (BackboneId, &'a BTreeMap<PublicKey, Role>)>,
    ) -> Self {
        let owner = paths.source;
        let route_to = |bn: BackboneId| -> Option<Route> {
            Some(Route { next_hop: *paths.first_hop.get(&bn)?, via: bn, cost: paths.dist[&bn] })
        };
        let backbone =
            paths.first_hop.keys().filter(|&&b| b != owner).filter_map(|&b| Some((b, route_to(b)?))).collect();
        let mut pk_routes = BTreeMap::new();
        for (bn, members) in known {
            let Some(r) = route_to(bn) else { continue };
            for (pk, role) in members {
                if role.routed() {
                    pk_routes.insert(*pk, r);
                }
            }
        }
        RoutingTable { owner, pk_routes, backbone }
    }

    pub fn route(&self, pk: &PublicKey) -> Option<&Route> {
        self.pk_routes.get(pk)
    }

    pub fn next_hop(&self, pk: &PublicKey) -> Option<BackboneId> {
        self.pk_routes.get(pk).map(|r| r.next_hop)
    }

    pub fn backbone_route(&self, bn: BackboneId) -> Option<&Route> {
        self.backbone.get(&bn)
    }

    pub fn pk_entries(&self) -> usize {
        self.pk_routes.len()
    }

    pub fn backbone_entries(&self) -> usize {
        self.backbone.len()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&PublicKey, &Route)> {
        self.pk_routes.iter()
    }

    pub fn size_bytes(&self) -> usize {
        self.pk_routes.len() * PK_ENTRY_BYTES + self.backbone.len() * BACKBONE_ENTRY_BYTES
    }

    /// Destination and next hop, one row per PK entry.
    pub fn dump(&self, label: impl Fn(&PublicKey) -> String) -> String {
        let mut out = String::from("destination\tnext_hop\n");
        let mut rows: Vec<(String, BackboneId)> =
            self.pk_routes.iter().map(|(pk, r)| (label(pk), r.next_hop)).collect();
        rows.sort();
        for (dest, hop) in rows {
            let _ = writeln!(out, "{dest}\t{hop}");
        }
        out
    }
}
