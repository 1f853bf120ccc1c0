//! Multi-worker execution of the half-combustion engine.
//!
//! Workers are threads joined by unbounded FIFO channels. Worker 0 also
//! bootstraps the initial net and detects termination.

mod aggregation;

use std::collections::VecDeque;
use std::thread;
use std::time::{Duration, Instant};

use crossbeam_channel::{unbounded, Receiver, Sender};
use thiserror::Error;

pub use aggregation::{AggPolicy, AggregationBuffer, FlushDecision};

use crate::engine::{Engine, EngineError, EngineOptions, EngineStats, HostChooser};
use crate::net::{EdgeMsg, Net, NodeId, NodeRecord, NodeStore, Payload, WorkerId};
use crate::translate::InitialNet;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RuntimeError {
    #[error("worker {worker}: {source}")]
    Engine {
        worker: WorkerId,
        #[source]
        source: EngineError,
    },
    #[error("worker count must be between 1 and {max}, got {got}")]
    Workers { got: usize, max: usize },
    #[error("worker {0} lost its channel")]
    Disconnected(WorkerId),
    #[error("worker {0} panicked")]
    Panicked(WorkerId),
    #[error("aborted after a failure on another worker")]
    Aborted,
}

const MAX_WORKERS: usize = 1024;

#[derive(Clone, Debug, PartialEq)]
pub struct RuntimeConfig {
    pub workers: usize,
    pub agg: AggPolicy,
    pub max_age: u32,
    pub age_cap: u32,
    /// Incoming channel is drained every this many processed items.
    pub drain_every: usize,
    pub rate_window: usize,
    pub engine: EngineOptions,
    pub trace_upm: bool,
}

impl Default for RuntimeConfig {
    fn default() -> Self {
        RuntimeConfig {
            workers: 1,
            agg: AggPolicy::Vab,
            max_age: 4,
            age_cap: 32,
            drain_every: 64,
            rate_window: 16,
            engine: EngineOptions::default(),
            trace_upm: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UpmSample {
    pub micros: u64,
    pub worker: WorkerId,
    pub upm: u64,
}

#[derive(Clone, Debug, Default)]
pub struct WorkerReport {
    pub worker: WorkerId,
    pub stats: EngineStats,
    /// Queue items handled (edges, EOTs and increments).
    pub processed: u64,
    /// Queue items addressed to any worker, this one included.
    pub produced: u64,
    pub payload_sent: u64,
    /// Physical data messages sent to other workers.
    pub messages_sent: u64,
    pub live_nodes: usize,
    pub removed_nodes: usize,
    pub upm_trace: Vec<UpmSample>,
    pub final_max_age: Vec<u32>,
    /// Termination probes started (master only).
    pub probes: u64,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub net: Net,
    pub workers: Vec<WorkerReport>,
    pub elapsed: Duration,
    pub probes: u64,
}

impl RunOutcome {
    pub fn stats(&self) -> EngineStats {
        let mut s = EngineStats::default();
        for w in &self.workers {
            s.merge(&w.stats);
        }
        s
    }

    /// Payload items per physical message; 1 when nothing crossed workers.
    pub fn average_aggregation(&self) -> f64 {
        let items: u64 = self.workers.iter().map(|w| w.payload_sent).sum();
        let msgs: u64 = self.workers.iter().map(|w| w.messages_sent).sum();
        if msgs == 0 {
            1.0
        } else {
            items as f64 / msgs as f64
        }
    }
}

fn bootstrap(initial: &InitialNet, gc: bool) -> (NodeStore, VecDeque<Payload>) {
    let mut store = NodeStore::new();
    for rec in initial.records() {
        store.insert(rec);
    }
    let mut queue: VecDeque<Payload> = initial.net.edges.iter().cloned().map(Payload::Edge).collect();
    if gc {
        queue.extend(initial.eot_seeds());
    }
    (store, queue)
}

fn first_timestamp(initial: &InitialNet) -> u32 {
    initial
        .net
        .nodes()
        .iter()
        .map(|id| id.timestamp + 1)
        .max()
        .unwrap_or(0)
}

/// Assembles what is left: every live record and the edges it has combusted.
pub fn collect_net(border: &[NodeId], records: impl IntoIterator<Item = NodeRecord>) -> Net {
    let mut net = Net {
        border: border.to_vec(),
        ..Net::default()
    };
    for rec in records {
        if !rec.is_border {
            net.inner.insert(rec.id);
        }
        net.edges.extend(rec.combusted);
    }
    net.close_nodes();
    net.sort_edges();
    net
}

/// Single-threaded, fully deterministic driver. Useful for checking
/// invariants after every step.
pub struct Stepper {
    engine: Engine,
    store: NodeStore,
    queue: VecDeque<Payload>,
    border: Vec<NodeId>,
    scratch: Vec<Payload>,
    pub steps: u64,
}

impl Stepper {
    pub fn new(initial: &InitialNet, opts: EngineOptions) -> Self {
        let (store, queue) = bootstrap(initial, opts.gc);
        Stepper {
            engine: Engine::new(0, first_timestamp(initial), opts),
            store,
            queue,
            border: initial.net.border.clone(),
            scratch: Vec::new(),
            steps: 0,
        }
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    pub fn stats(&self) -> EngineStats {
        self.engine.stats
    }

    /// Processes one queued item; `false` once the queue is empty.
    pub fn step(&mut self) -> Result<bool, EngineError> {
        let Some(p) = self.queue.pop_front() else {
            return Ok(false);
        };
        self.engine
            .process(p, &mut self.store, &mut LocalHost, &mut self.scratch)?;
        self.queue.extend(self.scratch.drain(..));
        self.steps += 1;
        Ok(true)
    }

    /// Runs until quiescence or until `max_steps` items have been handled.
    pub fn run(&mut self, max_steps: u64) -> Result<bool, EngineError> {
        while self.steps < max_steps {
            if !self.step()? {
                return Ok(true);
            }
        }
        Ok(self.queue.is_empty())
    }

    /// Combusted edges so far, each flagged `true`, plus queued edges flagged `false`.
    pub fn snapshot(&self) -> (Net, Vec<bool>) {
        let mut net = Net {
            border: self.border.clone(),
            ..Net::default()
        };
        let mut flags = Vec::new();
        let mut recs: Vec<&NodeRecord> = self.store.records().collect();
        recs.sort_by_key(|r| r.id);
        for rec in recs {
            if !rec.is_border {
                net.inner.insert(rec.id);
            }
            for e in &rec.combusted {
                net.edges.push(e.clone());
                flags.push(true);
            }
        }
        for p in &self.queue {
            if let Payload::Edge(e) = p {
                net.edges.push(e.clone());
                flags.push(false);
            }
        }
        net.close_nodes();
        (net, flags)
    }

    pub fn finish(self) -> Net {
        collect_net(&self.border, self.store.into_records())
    }
}

struct LocalHost;

impl HostChooser for LocalHost {
    fn choose_host(&mut self) -> WorkerId {
        0
    }
}

/// Round robin that only hands work to a worker that looks less loaded.
struct RoundRobin<'a> {
    me: WorkerId,
    cursor: &'a mut usize,
    view: &'a [u64],
    mine: u64,
}

impl HostChooser for RoundRobin<'_> {
    fn choose_host(&mut self) -> WorkerId {
        let n = self.view.len();
        *self.cursor = (*self.cursor + 1) % n;
        let c = *self.cursor;
        if c != usize::from(self.me) && self.view[c] < self.mine {
            c as WorkerId
        } else {
            self.me
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Counters {
    processed: u64,
    produced_for: Vec<u64>,
}

enum Packet {
    Data {
        from: WorkerId,
        upm: u64,
        items: Vec<Payload>,
    },
    Status {
        from: WorkerId,
        upm: u64,
        epoch: Option<u64>,
        counters: Counters,
    },
    Probe(u64),
    Terminate,
    Abort,
}

struct Probe {
    epoch: u64,
    snapshot: Vec<Counters>,
    answered: Vec<bool>,
    spoiled: bool,
}

struct Worker {
    me: WorkerId,
    n: usize,
    cfg: RuntimeConfig,
    engine: Engine,
    store: NodeStore,
    queue: VecDeque<Payload>,
    scratch: Vec<Payload>,
    rx: Receiver<Packet>,
    tx: Vec<Sender<Packet>>,
    buffers: Vec<AggregationBuffer>,
    upm: u64,
    upm_view: Vec<u64>,
    cursor: usize,
    counters: Counters,
    last_status: Option<Counters>,
    pending_probe: Option<u64>,
    // master only
    views: Vec<Counters>,
    probe: Option<Probe>,
    next_epoch: u64,
    terminated: bool,
    report: WorkerReport,
    started: Instant,
}

impl Worker {
    fn new(
        me: WorkerId,
        cfg: &RuntimeConfig,
        rx: Receiver<Packet>,
        tx: Vec<Sender<Packet>>,
        started: Instant,
    ) -> Self {
        let n = tx.len();
        let zero = Counters {
            processed: 0,
            produced_for: vec![0; n],
        };
        Worker {
            me,
            n,
            cfg: cfg.clone(),
            engine: Engine::new(me, 0, cfg.engine),
            store: NodeStore::new(),
            queue: VecDeque::new(),
            scratch: Vec::new(),
            rx,
            tx,
            buffers: (0..n)
                .map(|_| AggregationBuffer::new(cfg.agg, cfg.max_age, cfg.age_cap, cfg.rate_window))
                .collect(),
            upm: 0,
            upm_view: vec![0; n],
            cursor: usize::from(me),
            counters: zero.clone(),
            last_status: None,
            pending_probe: None,
            views: vec![zero; n],
            probe: None,
            next_epoch: 0,
            terminated: false,
            report: WorkerReport {
                worker: me,
                ..WorkerReport::default()
            },
            started,
        }
    }

    fn is_master(&self) -> bool {
        self.me == 0
    }

    fn enqueue(&mut self, p: Payload) {
        if p.is_edge() {
            self.upm += 1;
        }
        self.queue.push_back(p);
    }

    fn route(&mut self, p: Payload) {
        let dest = usize::from(p.target().host);
        self.counters.produced_for[dest] += 1;
        if dest == usize::from(self.me) {
            self.enqueue(p);
        } else if self.buffers[dest].push(p) == FlushDecision::Flush {
            self.flush(dest, false);
        }
    }

    fn flush(&mut self, dest: usize, aged_out: bool) {
        let items = self.buffers[dest].take(aged_out);
        if items.is_empty() {
            return;
        }
        self.report.payload_sent += items.len() as u64;
        self.report.messages_sent += 1;
        // a missing peer only happens during shutdown after a failure
        let _ = self.tx[dest].send(Packet::Data {
            from: self.me,
            upm: self.upm,
            items,
        });
    }

    fn flush_all(&mut self) {
        for d in 0..self.n {
            self.flush(d, false);
        }
    }

    fn tick(&mut self) {
        for d in 0..self.n {
            if self.buffers[d].tick() == FlushDecision::Flush {
                self.flush(d, true);
            }
        }
    }

    fn trace(&mut self) {
        if self.cfg.trace_upm {
            self.report.upm_trace.push(UpmSample {
                micros: self.started.elapsed().as_micros() as u64,
                worker: self.me,
                upm: self.upm,
            });
        }
    }

    fn process_one(&mut self, p: Payload) -> Result<(), RuntimeError> {
        if p.is_edge() {
            self.upm -= 1;
        }
        let mut hosts = RoundRobin {
            me: self.me,
            cursor: &mut self.cursor,
            view: &self.upm_view,
            mine: self.upm,
        };
        self.engine
            .process(p, &mut self.store, &mut hosts, &mut self.scratch)
            .map_err(|source| RuntimeError::Engine {
                worker: self.me,
                source,
            })?;
        self.counters.processed += 1;
        self.report.processed += 1;
        let out = std::mem::take(&mut self.scratch);
        for p in out {
            self.route(p);
        }
        self.tick();
        Ok(())
    }

    fn handle(&mut self, pkt: Packet) -> Result<(), RuntimeError> {
        match pkt {
            Packet::Data { from, upm, items } => {
                self.upm_view[usize::from(from)] = upm;
                for p in items {
                    self.enqueue(p);
                }
            }
            Packet::Status {
                from,
                upm,
                epoch,
                counters,
            } => {
                let j = usize::from(from);
                self.upm_view[j] = upm;
                if let Some(probe) = &mut self.probe {
                    if counters != probe.snapshot[j] {
                        probe.spoiled = true;
                    }
                    if epoch == Some(probe.epoch) {
                        probe.answered[j] = true;
                    }
                }
                self.views[j] = counters;
            }
            Packet::Probe(e) => self.pending_probe = Some(e),
            Packet::Terminate => self.terminated = true,
            Packet::Abort => return Err(RuntimeError::Aborted),
        }
        Ok(())
    }

    fn drain(&mut self) -> Result<(), RuntimeError> {
        while let Ok(pkt) = self.rx.try_recv() {
            self.handle(pkt)?;
        }
        self.trace();
        Ok(())
    }

    fn send_status(&mut self) {
        let epoch = self.pending_probe.take();
        if epoch.is_none() && self.last_status.as_ref() == Some(&self.counters) {
            return;
        }
        self.last_status = Some(self.counters.clone());
        let _ = self.tx[0].send(Packet::Status {
            from: self.me,
            upm: self.upm,
            epoch,
            counters: self.counters.clone(),
        });
    }

    /// Master, idle: decides whether the whole system is quiescent.
    fn check_termination(&mut self) -> bool {
        self.views[0] = self.counters.clone();
        if let Some(probe) = &self.probe {
            if probe.spoiled || probe.snapshot[0] != self.counters {
                self.probe = None;
            } else {
                // wait for the rest of the answers unless all are in
                return probe.answered[1..].iter().all(|&a| a);
            }
        }
        let balanced = (0..self.n).all(|j| {
            let sent: u64 = self.views.iter().map(|c| c.produced_for[j]).sum();
            sent == self.views[j].processed
        });
        if !balanced {
            return false;
        }
        if self.n == 1 {
            return true;
        }
        self.next_epoch += 1;
        let mut answered = vec![false; self.n];
        answered[0] = true;
        self.probe = Some(Probe {
            epoch: self.next_epoch,
            snapshot: self.views.clone(),
            answered,
            spoiled: false,
        });
        for j in 1..self.n {
            let _ = self.tx[j].send(Packet::Probe(self.next_epoch));
        }
        false
    }

    fn run(&mut self) -> Result<(), RuntimeError> {
        let mut since_drain = 0usize;
        loop {
            while let Some(p) = self.queue.pop_front() {
                self.process_one(p)?;
                since_drain += 1;
                if since_drain >= self.cfg.drain_every {
                    since_drain = 0;
                    self.drain()?;
                    if self.terminated {
                        self.trace();
                        return Ok(());
                    }
                }
            }
            self.flush_all();
            if self.is_master() {
                if self.check_termination() {
                    for j in 1..self.n {
                        let _ = self.tx[j].send(Packet::Terminate);
                    }
                    self.trace();
                    return Ok(());
                }
            } else {
                self.send_status();
            }
            let pkt = self
                .rx
                .recv()
                .map_err(|_| RuntimeError::Disconnected(self.me))?;
            self.handle(pkt)?;
            self.drain()?;
            if self.terminated {
                return Ok(());
            }
        }
    }

    fn abort_peers(&self) {
        for (j, tx) in self.tx.iter().enumerate() {
            if j != usize::from(self.me) {
                let _ = tx.send(Packet::Abort);
            }
        }
    }

    fn finish(mut self) -> (WorkerReport, Vec<NodeRecord>) {
        self.report.stats = self.engine.stats;
        self.report.live_nodes = self.store.len();
        self.report.removed_nodes = self.store.removed_count();
        self.report.final_max_age = self.buffers.iter().map(|b| b.max_age).collect();
        self.report.probes = self.next_epoch;
        self.report.produced = self.counters.produced_for.iter().sum();
        (self.report, self.store.into_records().collect())
    }
}

/// Reduces `initial` to quiescence on `cfg.workers` threads.
pub fn run(initial: &InitialNet, cfg: &RuntimeConfig) -> Result<RunOutcome, RuntimeError> {
    let n = cfg.workers;
    if n == 0 || n > MAX_WORKERS {
        return Err(RuntimeError::Workers {
            got: n,
            max: MAX_WORKERS,
        });
    }
    let (txs, rxs): (Vec<_>, Vec<_>) = (0..n).map(|_| unbounded::<Packet>()).unzip();
    let started = Instant::now();
    let results = thread::scope(|s| {
        let handles: Vec<_> = rxs
            .into_iter()
            .enumerate()
            .map(|(i, rx)| {
                let tx = txs.clone();
                let me = i as WorkerId;
                s.spawn(move || {
                    let mut w = Worker::new(me, cfg, rx, tx, started);
                    if me == 0 {
                        let (store, queue) = bootstrap(initial, cfg.engine.gc);
                        w.engine = Engine::new(0, first_timestamp(initial), cfg.engine);
                        w.store = store;
                        // the initial items count as produced by the master for itself
                        w.counters.produced_for[0] += queue.len() as u64;
                        for p in queue {
                            w.enqueue(p);
                        }
                    }
                    match w.run() {
                        Ok(()) => Ok(w.finish()),
                        Err(e) => {
                            w.abort_peers();
                            Err(e)
                        }
                    }
                })
            })
            .collect();
        handles
            .into_iter()
            .enumerate()
            .map(|(i, h)| h.join().unwrap_or(Err(RuntimeError::Panicked(i as WorkerId))))
            .collect::<Vec<_>>()
    });
    let elapsed = started.elapsed();

    let mut reports = Vec::with_capacity(n);
    let mut records = Vec::new();
    let mut first_err = None;
    for r in results {
        match r {
            Ok((rep, recs)) => {
                reports.push(rep);
                records.extend(recs);
            }
            // report the root cause, not the knock-on aborts
            Err(RuntimeError::Aborted) => {
                first_err.get_or_insert(RuntimeError::Aborted);
            }
            Err(e) => {
                if matches!(first_err, None | Some(RuntimeError::Aborted)) {
                    first_err = Some(e);
                }
            }
        }
    }
    if let Some(e) = first_err {
        return Err(e);
    }
    let probes = reports.iter().map(|r| r.probes).sum();
    Ok(RunOutcome {
        net: collect_net(&initial.net.border, records),
        workers: reports,
        elapsed,
        probes,
    })
}

/// Edges of `net` with an endpoint that is not listed as a node.
pub fn dangling_edges(net: &Net) -> Vec<&EdgeMsg> {
    let nodes: std::collections::BTreeSet<NodeId> = net.nodes().into_iter().collect();
    net.edges
        .iter()
        .filter(|e| !nodes.contains(&e.source) || !nodes.contains(&e.target))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::translate::translate_src;

    fn cfg(workers: usize) -> RuntimeConfig {
        RuntimeConfig {
            workers,
            ..RuntimeConfig::default()
        }
    }

    #[test]
    fn stepper_and_threads_agree_on_two_identity() {
        let init = translate_src(r"(\f \x (f)(f)x) \x x", &[]).unwrap();
        let mut st = Stepper::new(&init, EngineOptions::default());
        assert!(st.run(u64::MAX).unwrap());
        let seq = st.finish();
        for n in [1, 2, 3] {
            let out = run(&init, &cfg(n)).unwrap();
            assert_eq!(out.net.edges.len(), seq.edges.len(), "workers={n}");
        }
    }

    #[test]
    fn zero_workers_rejected() {
        let init = translate_src(r"\x x", &[]).unwrap();
        assert!(matches!(run(&init, &cfg(0)), Err(RuntimeError::Workers { .. })));
    }

    #[test]
    fn more_workers_than_work_terminates() {
        let init = translate_src(r"\x x", &[]).unwrap();
        let out = run(&init, &cfg(8)).unwrap();
        assert_eq!(out.workers.len(), 8);
    }
}
