//! Net data model: node identities, edge messages, per-node storage with
//! slot classification, EOT accounting, and the textual dump format.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rustc_hash::{FxHashMap, FxHashSet};
use smallvec::SmallVec;
use thiserror::Error;

use crate::algebra::{AlgebraError, Monomial, Weight};

pub type WorkerId = u16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetError {
    #[error("node {0} was already removed")]
    AccessAfterRemoval(NodeId),
    #[error("node {node} got more EOTs than expected on slot {slot}")]
    EotOverflow { node: NodeId, slot: Slot },
    #[error("net dump line {line}: {reason}")]
    Dump { line: usize, reason: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId {
    pub timestamp: u32,
    pub creator: WorkerId,
    pub host: WorkerId,
}

impl NodeId {
    pub const fn new(timestamp: u32, creator: WorkerId, host: WorkerId) -> Self {
        NodeId {
            timestamp,
            creator,
            host,
        }
    }

    /// Store key; the host is not part of a node's identity.
    pub fn key(self) -> u64 {
        (u64::from(self.creator) << 32) | u64::from(self.timestamp)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.timestamp, self.creator, self.host)
    }
}

impl FromStr for NodeId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut it = s.split(':');
        let mut next = |what: &str| {
            it.next()
                .ok_or_else(|| format!("node id `{s}` lacks {what}"))?
                .parse::<u64>()
                .map_err(|_| format!("bad {what} in node id `{s}`"))
        };
        let t = next("timestamp")?;
        let c = next("creator")?;
        let h = next("host")?;
        if it.next().is_some() {
            return Err(format!("trailing fields in node id `{s}`"));
        }
        Ok(NodeId::new(
            u32::try_from(t).map_err(|_| "timestamp out of range".to_string())?,
            WorkerId::try_from(c).map_err(|_| "creator out of range".to_string())?,
            WorkerId::try_from(h).map_err(|_| "host out of range".to_string())?,
        ))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Slot(pub u32);

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Identifies one rerouted edge for EOT bookkeeping at the node that adopted it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AdoptToken(pub u64);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeMsg {
    pub source: NodeId,
    pub target: NodeId,
    pub weight: Monomial,
    /// Classification at the target.
    pub target_slot: Slot,
    /// The out-slot this edge occupies at its source.
    pub source_slot: Slot,
    /// Set on rerouted edges; echoed back in the EOT for this edge.
    pub adoption: Option<AdoptToken>,
}

/// Everything that travels between workers and is processed in queue order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Payload {
    Edge(EdgeMsg),
    Eot {
        target: NodeId,
        slot: Slot,
        token: Option<AdoptToken>,
    },
    OutDegreeInc {
        target: NodeId,
        slot: Slot,
        token: AdoptToken,
    },
}

impl Payload {
    pub fn target(&self) -> NodeId {
        match self {
            Payload::Edge(e) => e.target,
            Payload::Eot { target, .. } | Payload::OutDegreeInc { target, .. } => *target,
        }
    }

    pub fn is_edge(&self) -> bool {
        matches!(self, Payload::Edge(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct SlotAccount {
    slot: Slot,
    expected: u32,
    received: u32,
    // +1 per adoption announced, -1 per EOT of an adopted edge; zero entries dropped
    adoptions: SmallVec<[(AdoptToken, i32); 1]>,
}

impl SlotAccount {
    fn new(slot: Slot, expected: u32) -> Self {
        SlotAccount {
            slot,
            expected,
            received: 0,
            adoptions: SmallVec::new(),
        }
    }

    fn settle(&mut self, token: AdoptToken, delta: i32) {
        match self.adoptions.iter().position(|(t, _)| *t == token) {
            Some(i) => {
                self.adoptions[i].1 += delta;
                if self.adoptions[i].1 == 0 {
                    self.adoptions.swap_remove(i);
                }
            }
            None => self.adoptions.push((token, delta)),
        }
    }

    fn done(&self) -> bool {
        self.received == self.expected && self.adoptions.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeRecord {
    pub id: NodeId,
    pub combusted: Vec<EdgeMsg>,
    pub is_border: bool,
    eot: SmallVec<[SlotAccount; 2]>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RemovalDecision {
    KeepAlive,
    /// One EOT per stored in-edge, addressed to its source.
    Remove(Vec<Payload>),
}

impl NodeRecord {
    /// A node created by a composition: two out-slots, one EOT expected on each.
    pub fn fresh(id: NodeId) -> Self {
        NodeRecord {
            id,
            combusted: Vec::new(),
            is_border: false,
            eot: [SlotAccount::new(Slot(0), 1), SlotAccount::new(Slot(1), 1)]
                .into_iter()
                .collect(),
        }
    }

    /// A translation-time node whose out-slots are `0..eot_slots`.
    pub fn initial(id: NodeId, eot_slots: u32, is_border: bool) -> Self {
        NodeRecord {
            id,
            combusted: Vec::new(),
            is_border,
            eot: (0..eot_slots).map(|s| SlotAccount::new(Slot(s), 1)).collect(),
        }
    }

    pub fn add_combusted(&mut self, e: EdgeMsg) {
        debug_assert_eq!(e.target, self.id);
        self.combusted.push(e);
    }

    pub fn opposite_slots(&self, slot: Slot) -> impl Iterator<Item = &EdgeMsg> {
        self.combusted.iter().filter(move |e| e.target_slot != slot)
    }

    pub fn slot_edges(&self, slot: Slot) -> impl Iterator<Item = &EdgeMsg> {
        self.combusted.iter().filter(move |e| e.target_slot == slot)
    }

    fn account(&mut self, slot: Slot) -> &mut SlotAccount {
        match self.eot.iter().position(|a| a.slot == slot) {
            Some(i) => &mut self.eot[i],
            None => {
                // an out-slot that has only ever carried adopted edges
                self.eot.push(SlotAccount::new(slot, 0));
                self.eot.last_mut().unwrap()
            }
        }
    }

    pub fn eot_expected(&self, slot: Slot) -> u32 {
        self.eot
            .iter()
            .find(|a| a.slot == slot)
            .map(|a| a.expected + a.adoptions.iter().filter(|(_, d)| *d > 0).count() as u32)
            .unwrap_or(0)
    }

    pub fn record_inc(&mut self, slot: Slot, token: AdoptToken) {
        self.account(slot).settle(token, 1);
    }

    pub fn record_eot(
        &mut self,
        slot: Slot,
        token: Option<AdoptToken>,
    ) -> Result<RemovalDecision, NetError> {
        debug_assert!(!self.is_border);
        let id = self.id;
        let acc = self.account(slot);
        match token {
            Some(t) => acc.settle(t, -1),
            None => {
                if acc.received == acc.expected {
                    return Err(NetError::EotOverflow { node: id, slot });
                }
                acc.received += 1;
            }
        }
        if !self.eot.iter().all(SlotAccount::done) {
            return Ok(RemovalDecision::KeepAlive);
        }
        let eots = self
            .combusted
            .iter()
            .map(|e| Payload::Eot {
                target: e.source,
                slot: e.source_slot,
                token: e.adoption,
            })
            .collect();
        Ok(RemovalDecision::Remove(eots))
    }
}

/// Per-worker node table with tombstones for removed ids.
#[derive(Debug, Default)]
pub struct NodeStore {
    live: FxHashMap<u64, NodeRecord>,
    removed: FxHashSet<u64>,
}

impl NodeStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, rec: NodeRecord) {
        self.live.insert(rec.id.key(), rec);
    }

    pub fn lookup_or_create(&mut self, id: NodeId) -> Result<&mut NodeRecord, NetError> {
        let key = id.key();
        if self.removed.contains(&key) {
            return Err(NetError::AccessAfterRemoval(id));
        }
        Ok(self.live.entry(key).or_insert_with(|| NodeRecord::fresh(id)))
    }

    pub fn get(&self, id: NodeId) -> Option<&NodeRecord> {
        self.live.get(&id.key())
    }

    pub fn remove(&mut self, id: NodeId) -> Option<NodeRecord> {
        let key = id.key();
        self.removed.insert(key);
        self.live.remove(&key)
    }

    pub fn is_removed(&self, id: NodeId) -> bool {
        self.removed.contains(&id.key())
    }

    pub fn len(&self) -> usize {
        self.live.len()
    }

    pub fn is_empty(&self) -> bool {
        self.live.is_empty()
    }

    pub fn removed_count(&self) -> usize {
        self.removed.len()
    }

    pub fn records(&self) -> impl Iterator<Item = &NodeRecord> {
        self.live.values()
    }

    pub fn into_records(self) -> impl Iterator<Item = NodeRecord> {
        self.live.into_values()
    }
}

/// A static net: what translation produces and what reduction leaves behind.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Net {
    /// Border nodes in rank order (root first).
    pub border: Vec<NodeId>,
    pub inner: BTreeSet<NodeId>,
    pub edges: Vec<EdgeMsg>,
}

pub const DUMP_HEADER: &str = "pelcr-net 1";

impl Net {
    pub fn is_border(&self, id: NodeId) -> bool {
        self.border.contains(&id)
    }

    /// All nodes, border first in rank order, then inner nodes by id.
    pub fn nodes(&self) -> Vec<NodeId> {
        let mut v = self.border.clone();
        v.extend(self.inner.iter().copied());
        v
    }

    pub fn node_count(&self) -> usize {
        self.border.len() + self.inner.len()
    }

    /// Adds edge endpoints that are not yet listed as nodes.
    pub fn close_nodes(&mut self) {
        let border: BTreeSet<NodeId> = self.border.iter().copied().collect();
        for e in &self.edges {
            for id in [e.source, e.target] {
                if !border.contains(&id) {
                    self.inner.insert(id);
                }
            }
        }
    }

    pub fn sort_edges(&mut self) {
        self.edges.sort_by_cached_key(edge_line);
    }

    /// Nodes with a directed path to some border node, and the edges among them.
    pub fn border_restriction(&self) -> Net {
        let mut preds: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for e in &self.edges {
            preds.entry(e.target).or_default().push(e.source);
        }
        let mut seen: BTreeSet<NodeId> = self.border.iter().copied().collect();
        let mut stack: Vec<NodeId> = self.border.clone();
        while let Some(v) = stack.pop() {
            for &u in preds.get(&v).into_iter().flatten() {
                if seen.insert(u) {
                    stack.push(u);
                }
            }
        }
        let mut out = Net {
            border: self.border.clone(),
            inner: self
                .inner
                .iter()
                .copied()
                .filter(|id| seen.contains(id))
                .collect(),
            edges: self
                .edges
                .iter()
                .filter(|e| seen.contains(&e.target))
                .cloned()
                .collect(),
        };
        out.sort_edges();
        out
    }

    pub fn dump(&self) -> String {
        let mut lines = vec![DUMP_HEADER.to_string()];
        for id in &self.border {
            lines.push(format!("node {id} border"));
        }
        for id in &self.inner {
            lines.push(format!("node {id} inner"));
        }
        let mut edges: Vec<String> = self.edges.iter().map(edge_line).collect();
        edges.sort();
        lines.extend(edges);
        let mut s = lines.join("\n");
        s.push('\n');
        s
    }

    pub fn parse_dump(text: &str) -> Result<Net, NetError> {
        let mut net = Net::default();
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, DUMP_HEADER)) => {}
            _ => {
                return Err(NetError::Dump {
                    line: 1,
                    reason: format!("expected header `{DUMP_HEADER}`"),
                })
            }
        }
        for (i, line) in lines {
            let err = |reason: String| NetError::Dump { line: i + 1, reason };
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields.as_slice() {
                [] => {}
                ["node", id, kind] => {
                    let id: NodeId = id.parse().map_err(err)?;
                    match *kind {
                        "border" => net.border.push(id),
                        "inner" => {
                            net.inner.insert(id);
                        }
                        k => return Err(err(format!("unknown node kind `{k}`"))),
                    }
                }
                ["edge", src, dst, w, ts, os] => {
                    let slot = |s: &str, p: char| -> Result<Slot, String> {
                        s.strip_prefix(p)
                            .and_then(|n| n.parse().ok())
                            .map(Slot)
                            .ok_or_else(|| format!("bad slot `{s}`"))
                    };
                    let weight = match w.parse::<Weight>() {
                        Ok(Weight::Pos(m)) => m,
                        Ok(Weight::Zero) => return Err(err("zero edge weight".into())),
                        Err(AlgebraError::BadWeight { reason, .. }) => return Err(err(reason)),
                        Err(e) => return Err(err(e.to_string())),
                    };
                    net.edges.push(EdgeMsg {
                        source: src.parse().map_err(err)?,
                        target: dst.parse().map_err(err)?,
                        weight,
                        target_slot: slot(ts, 's').map_err(err)?,
                        source_slot: slot(os, 'o').map_err(err)?,
                        adoption: None,
                    });
                }
                _ => return Err(err(format!("unrecognized line `{line}`"))),
            }
        }
        net.close_nodes();
        net.sort_edges();
        Ok(net)
    }
}

pub fn edge_line(e: &EdgeMsg) -> String {
    format!(
        "edge {} {} {} s{} o{}",
        e.source, e.target, e.weight, e.target_slot, e.source_slot
    )
}
