use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::graph::{BackboneGraph, BackboneId, Micros};
use super::join::Attachments;
use super::routing::RoutingTable;
use crate::model::PublicKey;

/// One destination reached, measured from the origin backbone node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Delivery {
    pub pk: PublicKey,
    pub bn: BackboneId,
    pub delay: Micros,
    pub hops: u32,
}

/// What a backbone node did with one item arriving from a neighbour.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Observation {
    pub bn: BackboneId,
    pub from: BackboneId,
    /// The item still had destinations beyond this node.
    pub transit: bool,
    pub forwarded: bool,
    pub at: Micros,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MulticastPlan {
    pub deliveries: Vec<Delivery>,
    /// Backbone link copies, one per `(from, to)` per item.
    pub transmissions: Vec<(BackboneId, BackboneId)>,
    /// Destinations with no route, and where routing failed.
    pub unroutable: Vec<(BackboneId, PublicKey)>,
    /// Destinations lost at a dropping node.
    pub dropped: Vec<(BackboneId, PublicKey)>,
    pub observations: Vec<Observation>,
}

/// Split destinations at one node: local deliveries, copies per next hop,
/// and destinations the table cannot place.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ForwardStep {
    pub local: Vec<PublicKey>,
    pub next: BTreeMap<BackboneId, Vec<PublicKey>>,
    pub missing: Vec<PublicKey>,
}

pub fn forward_step(table: &RoutingTable, attachments: &Attachments, dests: &[PublicKey]) -> ForwardStep {
    let mut step = ForwardStep::default();
    for pk in dests {
        match table.next_hop(pk) {
            Some(h) if h == table.owner => {
                if attachments.get(pk).is_some_and(|a| a.bn == table.owner) {
                    step.local.push(*pk);
                } else {
                    step.missing.push(*pk);
                }
            }
            Some(h) => step.next.entry(h).or_default().push(*pk),
            None => step.missing.push(*pk),
        }
    }
    step
}

/// Forward one item hop by hop from `origin`. Destinations that share a
/// next hop share one copy on that link. Nodes in `droppers` discard every
/// item they would have to forward.
pub fn route_multicast(
    graph: &BackboneGraph,
    tables: &BTreeMap<BackboneId, RoutingTable>,
    attachments: &Attachments,
    origin: BackboneId,
    dests: &[PublicKey],
    droppers: &BTreeSet<BackboneId>,
) -> MulticastPlan {
    let mut plan = MulticastPlan::default();
    let mut unique: Vec<PublicKey> = dests.to_vec();
    unique.sort();
    unique.dedup();
    let mut queue = VecDeque::from([(origin, None::<BackboneId>, 0u64, 0u32, unique)]);
    let hop_limit = graph.len() as u32;
    while let Some((at, from, t, hops, pks)) = queue.pop_front() {
        let Some(table) = tables.get(&at) else {
            plan.unroutable.extend(pks.iter().map(|p| (at, *p)));
            continue;
        };
        let step = forward_step(table, attachments, &pks);
        plan.unroutable.extend(step.missing.iter().map(|p| (at, *p)));
        for pk in &step.local {
            plan.deliveries.push(Delivery { pk: *pk, bn: at, delay: t, hops });
        }
        let transit = !step.next.is_empty();
        let dropping = transit && droppers.contains(&at);
        if let Some(from) = from {
            plan.observations.push(Observation { bn: at, from, transit, forwarded: transit && !dropping, at: t });
        }
        for (nh, group) in step.next {
            if dropping || hops >= hop_limit {
                plan.dropped.extend(group.iter().map(|p| (at, *p)));
                continue;
            }
            let Some(d) = graph.link_delay(at, nh) else {
                plan.unroutable.extend(group.iter().map(|p| (at, *p)));
                continue;
            };
            plan.transmissions.push((at, nh));
            queue.push_back((nh, Some(at), t + d, hops + 1, group));
        }
    }
    plan
}
