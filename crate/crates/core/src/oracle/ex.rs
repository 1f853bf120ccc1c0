use std::collections::BTreeMap;
use std::fmt;

use crate::algebra::{Letter, MixedWord, NormalWord, Reducer, StableResult};
use crate::net::{EdgeMsg, Net, NodeId};

use super::OracleError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExLimits {
    pub max_edges: usize,
    pub max_path_len: usize,
}

impl Default for ExLimits {
    fn default() -> Self {
        ExLimits {
            max_edges: 200,
            max_path_len: 256,
        }
    }
}

/// Multiset of path weights between border nodes.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExecutionFormula(pub BTreeMap<StableResult, usize>);

impl ExecutionFormula {
    pub fn total(&self) -> usize {
        self.0.values().sum()
    }
}

impl fmt::Display for ExecutionFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (w, n) in &self.0 {
            writeln!(f, "{n} {w}")?;
        }
        Ok(())
    }
}

struct Walk<'a> {
    edges: &'a [EdgeMsg],
    combusted: &'a [bool],
    adj: BTreeMap<NodeId, Vec<(usize, bool)>>,
    rank: BTreeMap<NodeId, usize>,
    limits: ExLimits,
    out: ExecutionFormula,
}

impl Walk<'_> {
    fn dfs(
        &mut self,
        start: usize,
        at: NodeId,
        last: Option<(usize, bool)>,
        r: &Reducer,
        len: usize,
    ) -> Result<(), OracleError> {
        if len >= self.limits.max_path_len {
            return Err(OracleError::SizeBound {
                what: "straight path length",
                limit: self.limits.max_path_len,
            });
        }
        let steps = self.adj.get(&at).cloned().unwrap_or_default();
        for (e, forward) in steps {
            if let Some((prev, prev_forward)) = last {
                if prev == e {
                    continue;
                }
                // two combusted edges meeting head to head were already composed
                if prev_forward && !forward && self.combusted[prev] && self.combusted[e] {
                    continue;
                }
            }
            let edge = &self.edges[e];
            // the walk accumulates the star of the path weight
            let word = if forward {
                edge.weight.starred()
            } else {
                edge.weight.to_word()
            };
            let mut next = r.clone();
            if !next.push_word(&word.0) {
                continue;
            }
            let to = if forward { edge.target } else { edge.source };
            match self.rank.get(&to) {
                Some(&j) => {
                    if start <= j {
                        let w = match NormalWord::Word(MixedWord(next.into_letters())).to_stable()? {
                            StableResult::Stable(x, y) => StableResult::Stable(y, x),
                            StableResult::Zero => continue,
                        };
                        *self.out.0.entry(w).or_default() += 1;
                    }
                }
                None => self.dfs(start, to, Some((e, forward)), &next, len + 1)?,
            }
        }
        Ok(())
    }
}

/// Enumerates straight paths from border node `i` to border node `j`,
/// `i <= j` in rank order, and collects their nonzero weights.
///
/// `combusted` flags edges that have already been composed with each
/// other at their target; a path may not turn around between two of them.
/// Pass an empty slice to treat every edge as fresh.
pub fn execution_formula(
    net: &Net,
    combusted: &[bool],
    limits: ExLimits,
) -> Result<ExecutionFormula, OracleError> {
    if net.edges.len() > limits.max_edges {
        return Err(OracleError::SizeBound {
            what: "edge count",
            limit: limits.max_edges,
        });
    }
    let fresh = vec![false; net.edges.len()];
    let combusted = if combusted.is_empty() { &fresh[..] } else { combusted };
    assert_eq!(combusted.len(), net.edges.len());
    let mut adj: BTreeMap<NodeId, Vec<(usize, bool)>> = BTreeMap::new();
    for (i, e) in net.edges.iter().enumerate() {
        adj.entry(e.source).or_default().push((i, true));
        adj.entry(e.target).or_default().push((i, false));
    }
    let mut walk = Walk {
        edges: &net.edges,
        combusted,
        adj,
        rank: net.border.iter().enumerate().map(|(i, &b)| (b, i)).collect(),
        limits,
        out: ExecutionFormula::default(),
    };
    for (i, &b) in net.border.iter().enumerate() {
        walk.dfs(i, b, None, &Reducer::default(), 0)?;
    }
    Ok(walk.out)
}

/// Letters of the star of a path weight, as walked by `execution_formula`.
pub(crate) fn path_star_word(net: &Net, path: &[(usize, bool)]) -> Vec<Letter> {
    let mut out = Vec::new();
    for &(e, forward) in path {
        let w = &net.edges[e].weight;
        out.extend(if forward { w.starred().0 } else { w.to_word().0 });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Monomial;
    use crate::net::Slot;

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

    fn net(border: &[u32], edges: Vec<EdgeMsg>) -> Net {
        let mut n = Net {
            border: border.iter().map(|&t| id(t)).collect(),
            edges,
            ..Net::default()
        };
        n.close_nodes();
        n
    }

    #[test]
    fn single_unit_edge() {
        let n = net(&[0, 1], vec![edge(0, 1, "1")]);
        let ex = execution_formula(&n, &[], ExLimits::default()).unwrap();
        let one = Monomial::one();
        assert_eq!(ex.0, BTreeMap::from([(StableResult::Stable(one.clone(), one), 1)]));
    }

    #[test]
    fn orientation_and_weight() {
        // 0 <-q- 2 -p-> 1 : from 0 the path is p·q⋆
        let n = net(&[0, 1], vec![edge(2, 0, "q"), edge(2, 1, "p")]);
        let ex = execution_formula(&n, &[], ExLimits::default()).unwrap();
        let expected = StableResult::Stable("p".parse().unwrap(), "q".parse().unwrap());
        assert_eq!(ex.0, BTreeMap::from([(expected, 1)]));
    }

    #[test]
    fn orthogonal_valley_vanishes() {
        // 0 -q-> 2 <-p- 1 : q⋆ between them... path weight p⋆q = 0
        let n = net(&[0, 1], vec![edge(0, 2, "q"), edge(1, 2, "p")]);
        let ex = execution_formula(&n, &[], ExLimits::default()).unwrap();
        assert_eq!(ex.total(), 0);
    }

    #[test]
    fn one_step_preserves_formula() {
        // 0 -!1:p-> 2 <-w(0,2)- 1 versus the new node from the engine example
        let before = net(&[0, 1], vec![edge(0, 2, "!1:p"), edge(1, 2, "w(0,2)")]);
        let after = net(
            &[0, 1],
            vec![
                edge(0, 2, "!1:p"),
                edge(1, 2, "w(0,2)"),
                edge(3, 0, "w(0,2)"),
                edge(3, 1, "!2:p"),
            ],
        );
        let a = execution_formula(&before, &[], ExLimits::default()).unwrap();
        let b = execution_formula(&after, &[true, true, false, false], ExLimits::default()).unwrap();
        assert_eq!(a.total(), 1);
        assert_eq!(a, b);
    }

    #[test]
    fn edge_bound() {
        let n = net(&[0, 1], vec![edge(0, 1, "1"); 3]);
        let lim = ExLimits {
            max_edges: 2,
            ..ExLimits::default()
        };
        assert!(matches!(
            execution_formula(&n, &[], lim),
            Err(OracleError::SizeBound { .. })
        ));
    }
}
