use std::collections::BTreeMap;

use serde::Serialize;

use super::graph::BackboneId;
use super::join::Role;
use crate::model::keys::PK_DISPLAY_LEN;
use crate::model::PublicKey;

/// An attached-node list broadcast by one backbone node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RouteUpdate {
    pub origin: BackboneId,
    pub sequence: u64,
    pub attached: BTreeMap<PublicKey, Role>,
}

impl RouteUpdate {
    pub fn wire_size(&self) -> usize {
        4 + 8 + 4 + self.attached.len() * (PK_DISPLAY_LEN + 1)
    }
}

/// Emission side: what was last announced.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RuiState {
    sequence: u64,
    announced: BTreeMap<PublicKey, Role>,
}

impl RuiState {
    pub fn sequence(&self) -> u64 {
        self.sequence
    }
}

/// Emit only if the attached list differs from the last announcement.
pub fn emit_route_update(
    state: &mut RuiState,
    origin: BackboneId,
    attached: &BTreeMap<PublicKey, Role>,
) -> Option<RouteUpdate> {
    if state.sequence > 0 && state.announced == *attached {
        return None;
    }
    if state.sequence == 0 && attached.is_empty() {
        return None;
    }
    state.sequence += 1;
    state.announced = attached.clone();
    Some(RouteUpdate { origin, sequence: state.sequence, attached: attached.clone() })
}

/// Receiving side: latest list heard from each other backbone node.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RemoteView {
    by_origin: BTreeMap<BackboneId, (u64, BTreeMap<PublicKey, Role>)>,
}

impl RemoteView {
    pub fn get(&self, origin: BackboneId) -> Option<&BTreeMap<PublicKey, Role>> {
        self.by_origin.get(&origin).map(|(_, m)| m)
    }

    pub fn iter(&self) -> impl Iterator<Item = (BackboneId, &BTreeMap<PublicKey, Role>)> {
        self.by_origin.iter().map(|(&b, (_, m))| (b, m))
    }

    pub fn forget(&mut self, origin: BackboneId) {
        self.by_origin.remove(&origin);
    }
}

/// Returns false for a stale or repeated sequence number.
pub fn apply_route_update(view: &mut RemoteView, update: &RouteUpdate) -> bool {
    if let Some((seq, _)) = view.by_origin.get(&update.origin) {
        if *seq >= update.sequence {
            return false;
        }
    }
    view.by_origin.insert(update.origin, (update.sequence, update.attached.clone()));
    true
}
