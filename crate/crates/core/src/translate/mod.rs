//! Front-end: terms to leveled sharing graphs to initial directed nets.

mod parse;
mod term;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::algebra::{bang, mul, Atom, Monomial};
use crate::net::{EdgeMsg, Net, NodeId, NodeRecord, Payload, Slot};

pub use parse::{parse, ParseError};
pub use term::Term;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TranslateError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("unbound variable `{0}` (declare it with --free)")]
    Unbound(String),
}

pub type Wire = usize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Premise {
    pub name: u32,
    pub lift: u32,
    pub wire: Wire,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NodeKind {
    /// `aux = [body, variable]`
    Lambda,
    /// principal is the function wire; `aux = [result, argument]`
    Apply,
    /// principal faces the binder
    Mux { premises: Vec<Premise> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SharingNode {
    pub kind: NodeKind,
    pub level: u32,
    pub principal: Wire,
    pub aux: Vec<Wire>,
}

#[derive(Clone, Debug, Default)]
pub struct SharingGraph {
    pub wires: usize,
    pub nodes: Vec<SharingNode>,
    pub root: Wire,
    /// Free variables in declaration order, with the wire each one is bound at.
    pub free: Vec<(String, Wire)>,
}

impl SharingGraph {
    pub fn muxes(&self) -> impl Iterator<Item = &SharingNode> {
        self.nodes
            .iter()
            .filter(|n| matches!(n.kind, NodeKind::Mux { .. }))
    }
}

struct Builder {
    g: SharingGraph,
    next_name: u32,
    // variable name -> stack of (binder level, mux node index)
    scope: HashMap<String, Vec<(u32, usize)>>,
}

impl Builder {
    fn wire(&mut self) -> Wire {
        self.g.wires += 1;
        self.g.wires - 1
    }

    fn mux(&mut self, level: u32, principal: Wire) -> usize {
        self.g.nodes.push(SharingNode {
            kind: NodeKind::Mux { premises: Vec::new() },
            level,
            principal,
            aux: Vec::new(),
        });
        self.g.nodes.len() - 1
    }

    fn build(&mut self, t: &Term, level: u32, out: Wire) -> Result<(), TranslateError> {
        match t {
            Term::Var(x) => {
                let &(binder, mux) = self
                    .scope
                    .get(x)
                    .and_then(|s| s.last())
                    .ok_or_else(|| TranslateError::Unbound(x.clone()))?;
                let name = self.next_name;
                self.next_name += 1;
                let node = &mut self.g.nodes[mux];
                node.aux.push(out);
                if let NodeKind::Mux { premises } = &mut node.kind {
                    premises.push(Premise {
                        name,
                        lift: level - binder,
                        wire: out,
                    });
                }
            }
            Term::Abs(x, body) => {
                let body_w = self.wire();
                let var_w = self.wire();
                self.g.nodes.push(SharingNode {
                    kind: NodeKind::Lambda,
                    level,
                    principal: out,
                    aux: vec![body_w, var_w],
                });
                let mux = self.mux(level, var_w);
                self.scope.entry(x.clone()).or_default().push((level, mux));
                self.build(body, level, body_w)?;
                self.scope.get_mut(x).map(Vec::pop);
            }
            Term::App(f, a) => {
                let fun_w = self.wire();
                let arg_w = self.wire();
                self.g.nodes.push(SharingNode {
                    kind: NodeKind::Apply,
                    level,
                    principal: fun_w,
                    aux: vec![out, arg_w],
                });
                self.build(f, level, fun_w)?;
                self.build(a, level + 1, arg_w)?;
            }
        }
        Ok(())
    }
}

/// Levels: the root is at 0, an argument sits one level below its application,
/// an abstraction body stays at the abstraction's level. Every bound variable
/// gets one mux at its binder's level with one premise per occurrence.
pub fn to_sharing_graph(t: &Term, free: &[String]) -> Result<SharingGraph, TranslateError> {
    let mut b = Builder {
        g: SharingGraph::default(),
        next_name: 0,
        scope: HashMap::new(),
    };
    let root = b.wire();
    b.g.root = root;
    for x in free {
        if b.scope.contains_key(x) {
            continue;
        }
        let w = b.wire();
        let mux = b.mux(0, w);
        b.scope.entry(x.clone()).or_default().push((0, mux));
        b.g.free.push((x.clone(), w));
    }
    b.build(t, 0, root)?;
    Ok(b.g)
}

#[derive(Clone, Debug)]
struct RawEdge {
    src: Wire,
    dst: Wire,
    weight: Monomial,
}

fn at_level(a: Atom, level: u32) -> Monomial {
    bang(&Monomial::atom(a), level)
}

/// Edges before amalgamation, oriented from auxiliary ports to principal ports.
fn emit(g: &SharingGraph) -> Vec<RawEdge> {
    let mut used_vars = BTreeSet::new();
    for n in g.muxes() {
        if !n.aux.is_empty() {
            used_vars.insert(n.principal);
        }
    }
    let mut edges = Vec::new();
    let mut push = |src, dst, weight| edges.push(RawEdge { src, dst, weight });
    for n in &g.nodes {
        match &n.kind {
            NodeKind::Lambda => {
                push(n.aux[0], n.principal, at_level(Atom::q(0), n.level));
                if used_vars.contains(&n.aux[1]) {
                    push(n.aux[1], n.principal, at_level(Atom::p(0), n.level));
                }
            }
            NodeKind::Apply => {
                push(n.aux[0], n.principal, at_level(Atom::q(0), n.level));
                push(n.aux[1], n.principal, at_level(Atom::p(0), n.level));
            }
            NodeKind::Mux { premises } => {
                for pr in premises {
                    push(
                        pr.wire,
                        n.principal,
                        at_level(Atom::w(pr.name, pr.lift, 0), n.level),
                    );
                }
            }
        }
    }
    edges
}

// Contracts every non-border node with at least one in-edge and exactly one
// out-edge β: each in-edge α is replaced by an edge to tgt(β) weighted β·α.
fn amalgamate(edges: Vec<RawEdge>, wires: usize, border: &BTreeSet<Wire>) -> Vec<RawEdge> {
    let mut edges: Vec<Option<RawEdge>> = edges.into_iter().map(Some).collect();
    let mut ins: Vec<Vec<usize>> = vec![Vec::new(); wires];
    let mut outs: Vec<Vec<usize>> = vec![Vec::new(); wires];
    for (i, e) in edges.iter().enumerate() {
        let e = e.as_ref().unwrap();
        outs[e.src].push(i);
        ins[e.dst].push(i);
    }
    let mut changed = true;
    while changed {
        changed = false;
        for v in 0..wires {
            if border.contains(&v) || outs[v].len() != 1 || ins[v].is_empty() {
                continue;
            }
            let beta = edges[outs[v][0]].take().unwrap();
            outs[v].clear();
            ins[beta.dst].retain(|&i| edges[i].is_some());
            for ai in std::mem::take(&mut ins[v]) {
                let alpha = edges[ai].take().unwrap();
                outs[alpha.src].retain(|&i| i != ai);
                let i = edges.len();
                edges.push(Some(RawEdge {
                    src: alpha.src,
                    dst: beta.dst,
                    weight: mul(&beta.weight, &alpha.weight),
                }));
                outs[alpha.src].push(i);
                ins[beta.dst].push(i);
            }
            changed = true;
        }
    }
    edges.into_iter().flatten().collect()
}

/// The net handed to the runtime, with what bootstrap needs per node.
#[derive(Clone, Debug, Default)]
pub struct InitialNet {
    pub net: Net,
    /// Number of out-slots used for EOT accounting (1 for sinks).
    pub eot_slots: BTreeMap<NodeId, u32>,
}

impl InitialNet {
    pub fn records(&self) -> Vec<NodeRecord> {
        self.net
            .nodes()
            .into_iter()
            .map(|id| NodeRecord::initial(id, self.eot_slots[&id], self.net.is_border(id)))
            .collect()
    }

    /// Sinks never hear back through an out-edge, so they are seeded directly.
    pub fn eot_seeds(&self) -> Vec<Payload> {
        let mut outdeg: BTreeMap<NodeId, u32> = BTreeMap::new();
        for e in &self.net.edges {
            *outdeg.entry(e.source).or_default() += 1;
        }
        self.net
            .inner
            .iter()
            .filter(|id| !outdeg.contains_key(id))
            .map(|&id| Payload::Eot {
                target: id,
                slot: Slot(0),
                token: None,
            })
            .collect()
    }
}

pub fn to_dvr_net(g: &SharingGraph) -> InitialNet {
    let mut border_wires = vec![g.root];
    border_wires.extend(g.free.iter().map(|(_, w)| *w));
    let border_set: BTreeSet<Wire> = border_wires.iter().copied().collect();
    let edges = amalgamate(emit(g), g.wires, &border_set);

    // number border nodes first, then the rest by wire order
    let mut used: BTreeSet<Wire> = BTreeSet::new();
    for e in &edges {
        used.insert(e.src);
        used.insert(e.dst);
    }
    let mut order = border_wires.clone();
    order.extend(used.iter().filter(|w| !border_set.contains(w)));
    let ids: HashMap<Wire, NodeId> = order
        .iter()
        .enumerate()
        .map(|(i, &w)| (w, NodeId::new(i as u32, 0, 0)))
        .collect();

    let mut out_deg: HashMap<Wire, u32> = HashMap::new();
    for e in &edges {
        *out_deg.entry(e.src).or_default() += 1;
    }
    let mut next_out: HashMap<Wire, u32> = HashMap::new();
    let mut next_in: HashMap<Wire, u32> = HashMap::new();
    let mut msgs = Vec::with_capacity(edges.len());
    for e in &edges {
        let os = next_out.entry(e.src).or_insert(0);
        let source_slot = Slot(*os);
        *os += 1;
        let first_in = out_deg.get(&e.dst).copied().unwrap_or(0).max(1);
        let is = next_in.entry(e.dst).or_insert(first_in);
        let target_slot = Slot(*is);
        *is += 1;
        msgs.push(EdgeMsg {
            source: ids[&e.src],
            target: ids[&e.dst],
            weight: e.weight.clone(),
            target_slot,
            source_slot,
            adoption: None,
        });
    }

    let net = Net {
        border: border_wires.iter().map(|w| ids[w]).collect(),
        inner: order[border_wires.len()..].iter().map(|w| ids[w]).collect(),
        edges: msgs,
    };
    let eot_slots = order
        .iter()
        .map(|w| (ids[w], out_deg.get(w).copied().unwrap_or(0).max(1)))
        .collect();
    InitialNet { net, eot_slots }
}

pub fn translate(t: &Term, free: &[String]) -> Result<InitialNet, TranslateError> {
    Ok(to_dvr_net(&to_sharing_graph(t, free)?))
}

pub fn translate_src(src: &str, free: &[String]) -> Result<InitialNet, TranslateError> {
    translate(&parse(src)?, free)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn premises(g: &SharingGraph) -> Vec<Vec<(u32, u32)>> {
        g.muxes()
            .map(|n| match &n.kind {
                NodeKind::Mux { premises } => premises.iter().map(|p| (p.name, p.lift)).collect(),
                _ => unreachable!(),
            })
            .collect()
    }

    #[test]
    fn levels_and_lifts() {
        let t = parse(r"(\f \x (f)(f)x) \x x").unwrap();
        let g = to_sharing_graph(&t, &[]).unwrap();
        // f occurs at levels 0 and 1, x at level 2, the argument's x at its own level
        assert_eq!(premises(&g), vec![vec![(0, 0), (1, 1)], vec![(2, 2)], vec![(3, 0)]]);
        let g = to_sharing_graph(&parse(r"\f \x x").unwrap(), &[]).unwrap();
        assert_eq!(premises(&g), vec![vec![], vec![(0, 0)]]);
    }

    #[test]
    fn identity_net() {
        let net = translate_src(r"\x x", &[]).unwrap().net;
        assert_eq!(net.border.len(), 1);
        assert_eq!(net.inner.len(), 1);
        let mut ws: Vec<String> = net.edges.iter().map(|e| e.weight.to_string()).collect();
        ws.sort();
        assert_eq!(ws, vec!["p.w(0,0)", "q"]);
    }

    #[test]
    fn unbound_and_free() {
        assert_eq!(
            translate_src("x", &[]).unwrap_err(),
            TranslateError::Unbound("x".into())
        );
        let init = translate_src("x y", &["x".into(), "y".into()]).unwrap();
        assert_eq!(init.net.border.len(), 3);
    }

    #[test]
    fn erasers_emit_nothing() {
        let init = translate_src(r"\f \x x", &[]).unwrap();
        let mut ws: Vec<String> = init.net.edges.iter().map(|e| e.weight.to_string()).collect();
        ws.sort();
        assert_eq!(ws, vec!["q.p.w(0,0)", "q.q"]);
        assert_eq!(init.eot_seeds().len(), 0);
    }

    #[test]
    fn slots_are_distinct_per_node() {
        let init = translate_src("(2)(2)", &[]).unwrap();
        let mut seen = BTreeSet::new();
        for e in &init.net.edges {
            assert!(seen.insert((e.target, e.target_slot)));
            assert!(seen.insert((e.source, e.source_slot)));
        }
    }
}
