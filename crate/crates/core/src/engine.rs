//! Half-combustion kernel: one incoming edge is composed against every
//! combusted edge at its target, then filed as combusted itself.

use thiserror::Error;

use crate::algebra::{star_mul, AlgebraError, StableResult};
use crate::net::{
    AdoptToken, EdgeMsg, NetError, NodeId, NodeStore, Payload, RemovalDecision, Slot, WorkerId,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Net(#[from] NetError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EngineOptions {
    /// Replace a residual of weight 1 by rerouting its partner.
    pub opt_one: bool,
    /// Skip compositions between edges of the same slot.
    pub slot_skip: bool,
    /// Track EOTs and remove nodes cut off from the border.
    pub gc: bool,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            opt_one: true,
            slot_skip: true,
            gc: true,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EngineStats {
    pub edges_processed: u64,
    pub compositions: u64,
    pub null: u64,
    pub nodes_created: u64,
    pub reroutes: u64,
    pub nodes_removed: u64,
    /// Same-slot compositions performed with skipping disabled.
    pub same_slot_checked: u64,
    /// ...of which did not vanish.
    pub same_slot_nonzero: u64,
}

impl EngineStats {
    pub fn merge(&mut self, o: &EngineStats) {
        self.edges_processed += o.edges_processed;
        self.compositions += o.compositions;
        self.null += o.null;
        self.nodes_created += o.nodes_created;
        self.reroutes += o.reroutes;
        self.nodes_removed += o.nodes_removed;
        self.same_slot_checked += o.same_slot_checked;
        self.same_slot_nonzero += o.same_slot_nonzero;
    }
}

pub trait HostChooser {
    fn choose_host(&mut self) -> WorkerId;
}

/// Always picks the same worker.
pub struct FixedHost(pub WorkerId);

impl HostChooser for FixedHost {
    fn choose_host(&mut self) -> WorkerId {
        self.0
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ComposeOutcome {
    Null,
    NewNode {
        id: NodeId,
        /// Residual flowing back to the source of the higher-slot edge (out-slot 0).
        to_alpha_source: EdgeMsg,
        /// Residual flowing back to the source of the lower-slot edge (out-slot 1).
        to_beta_source: EdgeMsg,
    },
    Rerouted {
        edge: EdgeMsg,
        adopt: Option<Payload>,
    },
}

pub struct Engine {
    worker: WorkerId,
    next_timestamp: u32,
    next_token: u64,
    opts: EngineOptions,
    pub stats: EngineStats,
}

impl Engine {
    /// `first_timestamp` must clear every id already handed out by `worker`.
    pub fn new(worker: WorkerId, first_timestamp: u32, opts: EngineOptions) -> Self {
        Engine {
            worker,
            next_timestamp: first_timestamp,
            next_token: 0,
            opts,
            stats: EngineStats::default(),
        }
    }

    pub fn options(&self) -> EngineOptions {
        self.opts
    }

    fn fresh_id(&mut self, host: WorkerId) -> NodeId {
        let id = NodeId::new(self.next_timestamp, self.worker, host);
        self.next_timestamp += 1;
        id
    }

    fn fresh_token(&mut self) -> AdoptToken {
        let t = AdoptToken((u64::from(self.worker) << 48) | self.next_token);
        self.next_token += 1;
        t
    }

    /// Handles one queued item; emissions are appended to `out`.
    pub fn process(
        &mut self,
        p: Payload,
        store: &mut NodeStore,
        hosts: &mut dyn HostChooser,
        out: &mut Vec<Payload>,
    ) -> Result<(), EngineError> {
        match p {
            Payload::Edge(m) => self.process_edge(m, store, hosts, out),
            Payload::Eot { target, slot, token } => {
                if !self.opts.gc {
                    return Ok(());
                }
                let rec = store.lookup_or_create(target)?;
                if rec.is_border {
                    return Ok(());
                }
                if let RemovalDecision::Remove(eots) = rec.record_eot(slot, token)? {
                    out.extend(eots);
                    store.remove(target);
                    self.stats.nodes_removed += 1;
                }
                Ok(())
            }
            Payload::OutDegreeInc { target, slot, token } => {
                let rec = store.lookup_or_create(target)?;
                if !rec.is_border {
                    rec.record_inc(slot, token);
                }
                Ok(())
            }
        }
    }

    pub fn process_edge(
        &mut self,
        m: EdgeMsg,
        store: &mut NodeStore,
        hosts: &mut dyn HostChooser,
        out: &mut Vec<Payload>,
    ) -> Result<(), EngineError> {
        debug_assert!(!m.weight.is_empty() || m.source != m.target);
        self.stats.edges_processed += 1;
        let rec = store.lookup_or_create(m.target)?;
        for e in &rec.combusted {
            let same = e.target_slot == m.target_slot;
            if same && self.opts.slot_skip {
                continue;
            }
            let outcome = self.compose(&m, e, hosts)?;
            if same {
                self.stats.same_slot_checked += 1;
                if outcome != ComposeOutcome::Null {
                    self.stats.same_slot_nonzero += 1;
                }
            }
            match outcome {
                ComposeOutcome::Null => {}
                ComposeOutcome::NewNode {
                    to_alpha_source,
                    to_beta_source,
                    ..
                } => {
                    out.push(Payload::Edge(to_alpha_source));
                    out.push(Payload::Edge(to_beta_source));
                }
                ComposeOutcome::Rerouted { edge, adopt } => {
                    // the announcement must leave before anything that could end the edge
                    out.extend(adopt);
                    out.push(Payload::Edge(edge));
                }
            }
        }
        rec.add_combusted(m);
        Ok(())
    }

    /// One directed virtual reduction step on two coincident edges.
    ///
    /// The edge with the lower target slot plays β and the other α, so the
    /// outcome does not depend on which of the two arrived first.
    pub fn compose(
        &mut self,
        incoming: &EdgeMsg,
        combusted: &EdgeMsg,
        hosts: &mut dyn HostChooser,
    ) -> Result<ComposeOutcome, AlgebraError> {
        debug_assert_eq!(incoming.target, combusted.target);
        self.stats.compositions += 1;
        let (alpha, beta) = if incoming.target_slot >= combusted.target_slot {
            (incoming, combusted)
        } else {
            (combusted, incoming)
        };
        let (a, b) = match star_mul(&beta.weight, &alpha.weight)? {
            StableResult::Zero => {
                self.stats.null += 1;
                return Ok(ComposeOutcome::Null);
            }
            StableResult::Stable(a, b) => (a, b),
        };
        if self.opts.opt_one && (b.is_one() || a.is_one()) {
            self.stats.reroutes += 1;
            // keep the edge whose residual is not 1, moved onto the other source
            let (from, to, weight) = if b.is_one() {
                (alpha, beta, a)
            } else {
                (beta, alpha, b)
            };
            let token = self.opts.gc.then(|| self.fresh_token());
            let adopt = token.map(|token| Payload::OutDegreeInc {
                target: from.source,
                slot: from.source_slot,
                token,
            });
            let edge = EdgeMsg {
                source: from.source,
                target: to.source,
                weight,
                target_slot: to.source_slot,
                source_slot: from.source_slot,
                adoption: token,
            };
            return Ok(ComposeOutcome::Rerouted { edge, adopt });
        }
        let id = self.fresh_id(hosts.choose_host());
        self.stats.nodes_created += 1;
        Ok(ComposeOutcome::NewNode {
            id,
            to_alpha_source: EdgeMsg {
                source: id,
                target: alpha.source,
                weight: b,
                target_slot: alpha.source_slot,
                source_slot: Slot(0),
                adoption: None,
            },
            to_beta_source: EdgeMsg {
                source: id,
                target: beta.source,
                weight: a,
                target_slot: beta.source_slot,
                source_slot: Slot(1),
                adoption: None,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(t: u32) -> NodeId {
        NodeId::new(t, 0, 0)
    }

    fn edge(src: u32, dst: u32, w: &str, ts: u32, os: u32) -> EdgeMsg {
        EdgeMsg {
            source: id(src),
            target: id(dst),
            weight: w.parse().unwrap(),
            target_slot: Slot(ts),
            source_slot: Slot(os),
            adoption: None,
        }
    }

    fn engine() -> Engine {
        Engine::new(0, 100, EngineOptions::default())
    }

    #[test]
    fn orthogonal_pair_vanishes() {
        let out = engine()
            .compose(&edge(1, 9, "q", 1, 0), &edge(2, 9, "p", 0, 0), &mut FixedHost(0))
            .unwrap();
        assert_eq!(out, ComposeOutcome::Null);
    }

    #[test]
    fn residual_of_one_reroutes() {
        // p⋆·p·q = q, and the residual toward the p.q source is 1
        let m = edge(1, 9, "p.q", 1, 0);
        let e = edge(2, 9, "p", 0, 3);
        match engine().compose(&m, &e, &mut FixedHost(0)).unwrap() {
            ComposeOutcome::Rerouted { edge, adopt } => {
                assert_eq!(edge.source, id(1));
                assert_eq!(edge.target, id(2));
                assert_eq!(edge.weight.to_string(), "q");
                assert_eq!(edge.target_slot, Slot(3));
                assert_eq!(edge.source_slot, Slot(0));
                assert!(matches!(adopt, Some(Payload::OutDegreeInc { target, .. }) if target == id(1)));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn new_node_residuals() {
        let m = edge(1, 9, "!1:p", 1, 0);
        let e = edge(2, 9, "w(0,2)", 0, 0);
        match engine().compose(&m, &e, &mut FixedHost(3)).unwrap() {
            ComposeOutcome::NewNode {
                id: n,
                to_alpha_source,
                to_beta_source,
            } => {
                assert_eq!(n, NodeId::new(100, 0, 3));
                assert_eq!(to_alpha_source.target, id(1));
                assert_eq!(to_alpha_source.weight.to_string(), "w(0,2)");
                assert_eq!(to_alpha_source.source_slot, Slot(0));
                assert_eq!(to_beta_source.target, id(2));
                assert_eq!(to_beta_source.weight.to_string(), "!2:p");
                assert_eq!(to_beta_source.source_slot, Slot(1));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn arrival_order_does_not_matter() {
        let x = edge(1, 9, "!1:p", 1, 0);
        let y = edge(2, 9, "w(0,2)", 0, 0);
        let a = engine().compose(&x, &y, &mut FixedHost(0)).unwrap();
        let b = engine().compose(&y, &x, &mut FixedHost(0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn delayed_creation_and_slot_skip() {
        let mut store = NodeStore::new();
        let mut eng = engine();
        let mut out = Vec::new();
        eng.process_edge(edge(1, 9, "p", 0, 0), &mut store, &mut FixedHost(0), &mut out)
            .unwrap();
        eng.process_edge(edge(2, 9, "p", 0, 0), &mut store, &mut FixedHost(0), &mut out)
            .unwrap();
        assert_eq!(eng.stats.compositions, 0);
        assert_eq!(store.get(id(9)).unwrap().combusted.len(), 2);
        eng.process_edge(edge(3, 9, "q", 1, 0), &mut store, &mut FixedHost(0), &mut out)
            .unwrap();
        assert_eq!(eng.stats.compositions, 2);
        assert!(out.is_empty());
    }
}
