use std::collections::BTreeMap;

use serde::Serialize;

use super::graph::{BackboneGraph, BackboneId, Micros};
use crate::model::PublicKey;

/// What an attached IoT node does in the verification layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Validator,
    Auditor,
    Member,
}

impl Role {
    /// Validators and auditors get routing-table entries; plain members are
    /// only reached by backbone broadcast.
    pub fn routed(self) -> bool {
        !matches!(self, Role::Member)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JoinRequest {
    pub pk: PublicKey,
    pub role: Role,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JoinResponse {
    Accept,
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JoinOutcome {
    Attached(BackboneId),
    Isolated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Attachment {
    pub bn: BackboneId,
    pub role: Role,
    /// One-way delay between the node and its backbone node.
    pub access_delay: Micros,
}

/// Which IoT node hangs off which backbone node.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Attachments {
    by_pk: BTreeMap<PublicKey, Attachment>,
    by_bn: BTreeMap<BackboneId, BTreeMap<PublicKey, Role>>,
}

impl Attachments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, pk: &PublicKey) -> Option<&Attachment> {
        self.by_pk.get(pk)
    }

    pub fn attached_to(&self, bn: BackboneId) -> &BTreeMap<PublicKey, Role> {
        static EMPTY: BTreeMap<PublicKey, Role> = BTreeMap::new();
        self.by_bn.get(&bn).unwrap_or(&EMPTY)
    }

    pub fn count(&self, bn: BackboneId) -> usize {
        self.by_bn.get(&bn).map_or(0, |m| m.len())
    }

    pub fn len(&self) -> usize {
        self.by_pk.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_pk.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PublicKey, &Attachment)> {
        self.by_pk.iter()
    }

    fn insert(&mut self, pk: PublicKey, a: Attachment) {
        self.detach(&pk);
        self.by_pk.insert(pk, a);
        self.by_bn.entry(a.bn).or_default().insert(pk, a.role);
    }

    pub fn detach(&mut self, pk: &PublicKey) -> Option<Attachment> {
        let old = self.by_pk.remove(pk)?;
        if let Some(m) = self.by_bn.get_mut(&old.bn) {
            m.remove(pk);
        }
        Some(old)
    }

    /// Remove every attachment to `bn` and return the orphans.
    pub fn evict(&mut self, bn: BackboneId) -> Vec<(PublicKey, Role)> {
        let orphans: Vec<(PublicKey, Role)> = self.by_bn.remove(&bn).unwrap_or_default().into_iter().collect();
        for (pk, _) in &orphans {
            self.by_pk.remove(pk);
        }
        orphans
    }
}

/// A backbone node accepts while it has free capacity.
pub fn process_join(
    graph: &BackboneGraph,
    attachments: &Attachments,
    bn: BackboneId,
    _req: &JoinRequest,
) -> JoinResponse {
    if graph.contains(bn) && attachments.count(bn) < graph.capacity(bn) {
        JoinResponse::Accept
    } else {
        JoinResponse::Reject
    }
}

/// Try backbone nodes in ascending delay order (ties by id) and attach to the
/// first that accepts.
pub fn join_network(
    graph: &BackboneGraph,
    attachments: &mut Attachments,
    req: JoinRequest,
    delays: &[(BackboneId, Micros)],
) -> JoinOutcome {
    let mut order: Vec<(Micros, BackboneId)> = delays.iter().map(|&(b, d)| (d, b)).collect();
    order.sort_unstable();
    for (delay, bn) in order {
        if process_join(graph, attachments, bn, &req) == JoinResponse::Accept {
            attachments.insert(req.pk, Attachment { bn, role: req.role, access_delay: delay });
            return JoinOutcome::Attached(bn);
        }
    }
    attachments.detach(&req.pk);
    JoinOutcome::Isolated
}
