use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use vericom::model::{PublicKey, SignatureScheme};
use vericom::net::{build_backbone, BackboneId, JoinRequest, LinkSpec, Network, NodeSpec, Role};

/// Connected graph: a random spanning tree plus extra random edges.
fn graph_strategy() -> impl Strategy<Value = (usize, Vec<LinkSpec>)> {
    (2usize..12).prop_flat_map(|n| {
        let tree = prop::collection::vec((any::<prop::sample::Index>(), 1u64..20), n - 1);
        let extra = prop::collection::vec((0..n, 0..n, 1u64..20), 0..n);
        (Just(n), tree, extra).prop_map(|(n, tree, extra)| {
            let mut links = Vec::new();
            let mut seen = BTreeSet::new();
            for (k, (parent, delay)) in tree.into_iter().enumerate() {
                let child = k + 1;
                let p = parent.index(child);
                seen.insert((p, child));
                links.push(LinkSpec { a: p as BackboneId, b: child as BackboneId, delay: delay * 100 });
            }
            for (a, b, delay) in extra {
                let key = (a.min(b), a.max(b));
                if a != b && seen.insert(key) {
                    links.push(LinkSpec { a: key.0 as BackboneId, b: key.1 as BackboneId, delay: delay * 100 });
                }
            }
            (n, links)
        })
    })
}

fn floyd_warshall(n: usize, links: &[LinkSpec]) -> Vec<Vec<u64>> {
    let mut d = vec![vec![u64::MAX / 4; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0;
    }
    for l in links {
        let (a, b) = (l.a as usize, l.b as usize);
        d[a][b] = d[a][b].min(l.delay);
        d[b][a] = d[b][a].min(l.delay);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

fn pk(i: usize) -> PublicKey {
    let mut b = [0u8; 32];
    b[..8].copy_from_slice(&(i as u64).to_le_bytes());
    PublicKey::new(SignatureScheme::Simulated, b)
}

fn nodes(n: usize, capacity: usize) -> Vec<NodeSpec> {
    (0..n).map(|id| NodeSpec { id: id as BackboneId, capacity }).collect()
}

proptest! {
    #[test]
    fn shortest_paths_match_floyd_warshall((n, links) in graph_strategy()) {
        let g = build_backbone(&nodes(n, 4), &links).unwrap();
        let fw = floyd_warshall(n, &links);
        for (src, row) in fw.iter().enumerate() {
            let sp = g.shortest_paths(src as BackboneId);
            for (dst, &want) in row.iter().enumerate() {
                prop_assert_eq!(sp.dist[&(dst as BackboneId)], want);
            }
        }
    }

    /// Every destination gets exactly one copy at its shortest-path delay,
    /// and the multicast never uses more link copies than a flood.
    #[test]
    fn multicast_delivery((n, links) in graph_strategy(), homes in prop::collection::vec(any::<prop::sample::Index>(), 1..10), origin in any::<prop::sample::Index>()) {
        let g = build_backbone(&nodes(n, 16), &links).unwrap();
        let fw = floyd_warshall(n, &links);
        let mut net = Network::new(g);
        let mut home = BTreeMap::new();
        for (i, h) in homes.iter().enumerate() {
            let bn = h.index(n) as BackboneId;
            net.join(JoinRequest { pk: pk(i), role: Role::Validator }, &[(bn, 1)]);
            home.insert(pk(i), bn);
        }
        net.rui_tick();
        let origin = origin.index(n) as BackboneId;
        let dests: Vec<PublicKey> = home.keys().copied().collect();
        let plan = net.multicast(origin, &dests, &BTreeSet::new());
        prop_assert!(plan.unroutable.is_empty());
        prop_assert!(plan.dropped.is_empty());
        let mut got: Vec<PublicKey> = plan.deliveries.iter().map(|d| d.pk).collect();
        got.sort();
        prop_assert_eq!(&got, &dests);
        for d in &plan.deliveries {
            prop_assert_eq!(d.bn, home[&d.pk]);
            prop_assert_eq!(d.delay, fw[origin as usize][d.bn as usize]);
        }
        prop_assert!(plan.transmissions.len() <= net.broadcast(origin).transmissions);
    }

    #[test]
    fn quiescent_without_churn((n, links) in graph_strategy(), homes in prop::collection::vec(any::<prop::sample::Index>(), 0..10)) {
        let mut net = Network::new(build_backbone(&nodes(n, 16), &links).unwrap());
        for (i, h) in homes.iter().enumerate() {
            net.join(JoinRequest { pk: pk(i), role: Role::Auditor }, &[(h.index(n) as BackboneId, 1)]);
        }
        net.rui_tick();
        prop_assert!(net.rui_tick().is_empty());
    }

    #[test]
    fn capacity_respected(cap in 1usize..4, count in 1usize..30) {
        let links = [LinkSpec { a: 0, b: 1, delay: 1000 }, LinkSpec { a: 1, b: 2, delay: 1000 }];
        let mut net = Network::new(build_backbone(&nodes(3, cap), &links).unwrap());
        for i in 0..count {
            net.join(JoinRequest { pk: pk(i), role: Role::Member }, &[(0, 1), (1, 2), (2, 3)]);
            for bn in 0..3 {
                prop_assert!(net.attachments().count(bn) <= cap);
            }
        }
        prop_assert_eq!(net.attachments().len(), count.min(3 * cap));
    }
}
