//! Id-independent relabelling of nets, so that isomorphic nets dump to
//! byte-identical text.

use std::collections::{BTreeMap, VecDeque};

use crate::net::{EdgeMsg, Net, NodeId};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Port {
    outgoing: bool,
    own_slot: u32,
    other_slot: u32,
    weight: String,
}

fn port(e: &EdgeMsg, outgoing: bool) -> Port {
    let (own_slot, other_slot) = if outgoing {
        (e.source_slot.0, e.target_slot.0)
    } else {
        (e.target_slot.0, e.source_slot.0)
    };
    Port {
        outgoing,
        own_slot,
        other_slot,
        weight: e.weight.to_string(),
    }
}

/// Relabels every node `t:0:0` in BFS order from the border.
pub fn canonicalize(net: &Net) -> Net {
    let mut incident: BTreeMap<NodeId, Vec<(Port, NodeId)>> = BTreeMap::new();
    for e in &net.edges {
        incident.entry(e.source).or_default().push((port(e, true), e.target));
        incident.entry(e.target).or_default().push((port(e, false), e.source));
    }
    let signature = |v: NodeId| -> Vec<Port> {
        let mut s: Vec<Port> = incident
            .get(&v)
            .map(|es| es.iter().map(|(p, _)| p.clone()).collect())
            .unwrap_or_default();
        s.sort();
        s
    };

    let mut label: BTreeMap<NodeId, u32> = BTreeMap::new();
    let mut queue = VecDeque::new();
    for &b in &net.border {
        let l = label.len() as u32;
        label.entry(b).or_insert(l);
        queue.push_back(b);
    }
    let mut rest: Vec<(Vec<Port>, NodeId)> = net
        .inner
        .iter()
        .map(|&v| (signature(v), v))
        .collect();
    rest.sort();
    let mut rest = rest.into_iter();
    loop {
        while let Some(v) = queue.pop_front() {
            let mut ns: Vec<(Port, u32, Vec<Port>, NodeId)> = incident
                .get(&v)
                .into_iter()
                .flatten()
                .map(|(p, w)| {
                    let l = label.get(w).copied().unwrap_or(u32::MAX);
                    (p.clone(), l, signature(*w), *w)
                })
                .collect();
            // the id is last and only matters once everything else ties
            ns.sort_by(|a, b| (&a.0, a.1, &a.2).cmp(&(&b.0, b.1, &b.2)));
            for (_, _, _, w) in ns {
                if !label.contains_key(&w) {
                    label.insert(w, label.len() as u32);
                    queue.push_back(w);
                }
            }
        }
        // components that never touch the border
        match rest.by_ref().find(|(_, v)| !label.contains_key(v)) {
            Some((_, v)) => {
                label.insert(v, label.len() as u32);
                queue.push_back(v);
            }
            None => break,
        }
    }

    let map = |v: &NodeId| NodeId::new(label[v], 0, 0);
    let mut out = Net {
        border: net.border.iter().map(map).collect(),
        inner: net.inner.iter().map(map).collect(),
        edges: net
            .edges
            .iter()
            .map(|e| EdgeMsg {
                source: map(&e.source),
                target: map(&e.target),
                adoption: None,
                ..e.clone()
            })
            .collect(),
    };
    out.sort_edges();
    out
}

pub fn canonical_dump(net: &Net) -> String {
    canonicalize(net).dump()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::translate::translate_src;

    fn shuffle_ids(net: &Net, salt: u32) -> Net {
        let f = |v: NodeId| {
            if net.is_border(v) {
                v
            } else {
                NodeId::new(v.timestamp.wrapping_mul(7919) ^ salt, 3, 1)
            }
        };
        let mut out = Net {
            border: net.border.clone(),
            inner: net.inner.iter().map(|&v| f(v)).collect(),
            edges: net
                .edges
                .iter()
                .rev()
                .map(|e| EdgeMsg {
                    source: f(e.source),
                    target: f(e.target),
                    ..e.clone()
                })
                .collect(),
        };
        out.close_nodes();
        out
    }

    #[test]
    fn renaming_does_not_change_the_dump() {
        let net = translate_src("(2)(2)", &[]).unwrap().net;
        let a = canonical_dump(&net);
        assert_eq!(a, canonical_dump(&shuffle_ids(&net, 0x55)));
        assert_eq!(a, canonical_dump(&shuffle_ids(&net, 0x1234)));
    }

    #[test]
    fn different_nets_differ() {
        let a = translate_src("2", &[]).unwrap().net;
        let b = translate_src("3", &[]).unwrap().net;
        assert_ne!(canonical_dump(&a), canonical_dump(&b));
    }

    #[test]
    fn empty_net_dumps_header_only() {
        assert_eq!(canonical_dump(&Net::default()).trim(), crate::net::DUMP_HEADER);
    }
}
