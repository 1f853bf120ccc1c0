use std::collections::{BTreeMap, BTreeSet};

use crate::algebra::{fin_product_zero, Reducer};
use crate::net::{Net, NodeId};

use super::ex::path_star_word;

const SQUARE_LEN: usize = 4;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidityReport {
    /// Some node on each directed cycle found.
    pub cycles: Vec<NodeId>,
    /// Coincident edge triples (edge indices) whose `fin` product is nonzero.
    pub split_violations: Vec<[usize; 3]>,
    /// Closed straight paths `φ` of length at most 4 with `φφ ≠ 0`.
    pub square_violations: Vec<Vec<(usize, bool)>>,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.cycles.is_empty() && self.split_violations.is_empty() && self.square_violations.is_empty()
    }
}

fn coincident(net: &Net) -> BTreeMap<NodeId, Vec<usize>> {
    let mut by_target: BTreeMap<NodeId, Vec<usize>> = BTreeMap::new();
    for (i, e) in net.edges.iter().enumerate() {
        by_target.entry(e.target).or_default().push(i);
    }
    by_target
}

fn find_cycles(net: &Net) -> Vec<NodeId> {
    let mut succ: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    for e in &net.edges {
        succ.entry(e.source).or_default().push(e.target);
    }
    // 0 unvisited, 1 on stack, 2 done
    let mut state: BTreeMap<NodeId, u8> = BTreeMap::new();
    let mut found = Vec::new();
    for start in net.nodes() {
        if state.get(&start).copied().unwrap_or(0) != 0 {
            continue;
        }
        let mut stack: Vec<(NodeId, usize)> = vec![(start, 0)];
        state.insert(start, 1);
        while let Some((v, i)) = stack.pop() {
            let next = succ.get(&v).and_then(|s| s.get(i)).copied();
            match next {
                Some(w) => {
                    stack.push((v, i + 1));
                    match state.get(&w).copied().unwrap_or(0) {
                        0 => {
                            state.insert(w, 1);
                            stack.push((w, 0));
                        }
                        1 => found.push(w),
                        _ => {}
                    }
                }
                None => {
                    state.insert(v, 2);
                }
            }
        }
    }
    found
}

fn squares(net: &Net, out: &mut Vec<Vec<(usize, bool)>>) {
    let mut adj: BTreeMap<NodeId, Vec<(usize, bool)>> = BTreeMap::new();
    for (i, e) in net.edges.iter().enumerate() {
        adj.entry(e.source).or_default().push((i, true));
        adj.entry(e.target).or_default().push((i, false));
    }
    fn go(
        net: &Net,
        adj: &BTreeMap<NodeId, Vec<(usize, bool)>>,
        start: NodeId,
        at: NodeId,
        path: &mut Vec<(usize, bool)>,
        out: &mut Vec<Vec<(usize, bool)>>,
    ) {
        for &(e, fwd) in adj.get(&at).into_iter().flatten() {
            if path.last().is_some_and(|&(p, _)| p == e) {
                continue;
            }
            let edge = &net.edges[e];
            let to = if fwd { edge.target } else { edge.source };
            path.push((e, fwd));
            if to == start {
                // φφ must itself be straight at the seam
                let seam_ok = path[0].0 != e || path[0].1 == fwd;
                if seam_ok {
                    let word = path_star_word(net, path);
                    let mut r = Reducer::default();
                    if r.push_word(&word) && r.push_word(&word) {
                        out.push(path.clone());
                    }
                }
            } else if path.len() < SQUARE_LEN {
                go(net, adj, start, to, path, out);
            }
            path.pop();
        }
    }
    for v in net.nodes() {
        go(net, &adj, v, v, &mut Vec::new(), out);
    }
}

/// Acyclicity, splitness on coincident triples, and square-freeness on
/// short closed paths.
pub fn check_net_validity(net: &Net) -> ValidityReport {
    let mut report = ValidityReport {
        cycles: find_cycles(net),
        ..ValidityReport::default()
    };
    for es in coincident(net).values() {
        for a in 0..es.len() {
            for b in a + 1..es.len() {
                for c in b + 1..es.len() {
                    let ms = [es[a], es[b], es[c]].map(|i| net.edges[i].weight.clone());
                    if !fin_product_zero(&ms) {
                        report.split_violations.push([es[a], es[b], es[c]]);
                    }
                }
            }
        }
    }
    squares(net, &mut report.square_violations);
    report
}

/// True when no two edges filed under the same slot of a node are
/// composable. Pairs on different slots are composed when the second one
/// arrives, so only same-slot pairs could break the invariant.
pub fn classify_semifull(net: &Net, combusted: &[bool]) -> bool {
    let mut by_slot: BTreeMap<(NodeId, u32), Vec<usize>> = BTreeMap::new();
    for (i, e) in net.edges.iter().enumerate() {
        if combusted.get(i).copied().unwrap_or(true) {
            by_slot.entry((e.target, e.target_slot.0)).or_default().push(i);
        }
    }
    by_slot.values().all(|es| {
        let seen: BTreeSet<usize> = es.iter().copied().collect();
        seen.iter().all(|&a| {
            seen.range(a + 1..).all(|&b| {
                fin_product_zero(&[net.edges[a].weight.clone(), net.edges[b].weight.clone()])
            })
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{EdgeMsg, Slot};

    fn id(t: u32) -> NodeId {
        NodeId::new(t, 0, 0)
    }

    fn edge(s: u32, t: u32, w: &str) -> EdgeMsg {
        EdgeMsg {
            source: id(s),
            target: id(t),
            weight: w.parse().unwrap(),
            target_slot: Slot(0),
            source_slot: Slot(0),
            adoption: None,
        }
    }

    fn net(edges: Vec<EdgeMsg>) -> Net {
        let mut n = Net {
            border: vec![id(0)],
            edges,
            ..Net::default()
        };
        n.close_nodes();
        n
    }

    #[test]
    fn empty_net_is_valid() {
        assert!(check_net_validity(&Net::default()).is_valid());
        assert!(classify_semifull(&Net::default(), &[]));
    }

    #[test]
    fn unit_triple_breaks_splitness() {
        let n = net(vec![edge(1, 0, "1"), edge(2, 0, "1"), edge(3, 0, "1")]);
        assert_eq!(check_net_validity(&n).split_violations, vec![[0, 1, 2]]);
    }

    #[test]
    fn ppq_triple_is_split() {
        let n = net(vec![edge(1, 0, "p"), edge(2, 0, "p"), edge(3, 0, "q")]);
        assert!(check_net_validity(&n).split_violations.is_empty());
    }

    #[test]
    fn cycles_are_reported() {
        let n = net(vec![edge(0, 1, "p"), edge(1, 2, "q"), edge(2, 0, "p")]);
        assert!(!check_net_validity(&n).cycles.is_empty());
    }

    #[test]
    fn unit_square_is_reported() {
        // 0 -1-> 1 and 0 -1-> 1 again: the closed path has weight 1
        let n = net(vec![edge(0, 1, "1"), edge(0, 1, "1")]);
        assert!(!check_net_validity(&n).square_violations.is_empty());
        let n = net(vec![edge(0, 1, "p"), edge(0, 1, "q")]);
        assert!(check_net_validity(&n).square_violations.is_empty());
    }
}
