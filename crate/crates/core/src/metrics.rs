//! End-to-end runs and what gets measured about them.

use std::fmt::Write as _;
use std::time::Duration;

use crate::engine::EngineStats;
use crate::net::Net;
use crate::runtime::{self, RunOutcome, RuntimeConfig, UpmSample, WorkerReport};
use crate::translate::{translate_src, InitialNet};
use crate::Error;

#[derive(Clone, Debug)]
pub struct RunReport {
    pub workers: usize,
    pub wall: Duration,
    pub initial_nodes: usize,
    pub initial_edges: usize,
    pub stats: EngineStats,
    pub final_nodes: usize,
    pub final_edges: usize,
    pub payload_sent: u64,
    pub messages_sent: u64,
    pub processed: u64,
    /// Payload items per physical message.
    pub aas: f64,
    pub probes: u64,
    pub per_worker: Vec<WorkerReport>,
}

impl RunReport {
    pub fn new(init: &InitialNet, out: &RunOutcome) -> Self {
        RunReport {
            workers: out.workers.len(),
            wall: out.elapsed,
            initial_nodes: init.net.node_count(),
            initial_edges: init.net.edges.len(),
            stats: out.stats(),
            final_nodes: out.net.node_count(),
            final_edges: out.net.edges.len(),
            payload_sent: out.workers.iter().map(|w| w.payload_sent).sum(),
            messages_sent: out.workers.iter().map(|w| w.messages_sent).sum(),
            processed: out.workers.iter().map(|w| w.processed).sum(),
            aas: out.average_aggregation(),
            probes: out.probes,
            per_worker: out.workers.clone(),
        }
    }

    pub fn aas_times_workers(&self) -> f64 {
        self.aas * self.workers as f64
    }

    /// `key,value` rows.
    pub fn to_csv(&self) -> String {
        let s = &self.stats;
        let rows: [(&str, String); 17] = [
            ("workers", self.workers.to_string()),
            ("wall_seconds", format!("{:.6}", self.wall.as_secs_f64())),
            ("initial_nodes", self.initial_nodes.to_string()),
            ("initial_edges", self.initial_edges.to_string()),
            ("edges_processed", s.edges_processed.to_string()),
            ("compositions", s.compositions.to_string()),
            ("null_compositions", s.null.to_string()),
            ("nodes_created", s.nodes_created.to_string()),
            ("reroutes", s.reroutes.to_string()),
            ("nodes_removed", s.nodes_removed.to_string()),
            ("final_nodes", self.final_nodes.to_string()),
            ("final_edges", self.final_edges.to_string()),
            ("items_processed", self.processed.to_string()),
            ("payload_sent", self.payload_sent.to_string()),
            ("messages_sent", self.messages_sent.to_string()),
            ("aas", format!("{:.4}", self.aas)),
            ("termination_probes", self.probes.to_string()),
        ];
        let mut out = String::from("key,value\n");
        for (k, v) in rows {
            let _ = writeln!(out, "{k},{v}");
        }
        out.push_str(&format!("aas_x_workers,{:.4}\n", self.aas_times_workers()));
        for w in &self.per_worker {
            let _ = writeln!(out, "worker{}_processed,{}", w.worker, w.processed);
            let _ = writeln!(out, "worker{}_messages_sent,{}", w.worker, w.messages_sent);
        }
        out
    }
}

pub fn upm_csv(trace: &[UpmSample]) -> String {
    let mut out = String::from("time_ms,worker,upm\n");
    for s in trace {
        let _ = writeln!(out, "{:.3},{},{}", s.micros as f64 / 1000.0, s.worker, s.upm);
    }
    out
}

pub fn merged_trace(out: &RunOutcome) -> Vec<UpmSample> {
    let mut v: Vec<UpmSample> = out
        .workers
        .iter()
        .flat_map(|w| w.upm_trace.iter().copied())
        .collect();
    v.sort_by_key(|s| (s.micros, s.worker));
    v
}

pub struct Run {
    pub initial: InitialNet,
    pub outcome: RunOutcome,
    pub report: RunReport,
}

impl Run {
    pub fn net(&self) -> &Net {
        &self.outcome.net
    }
}

/// Parse, translate and reduce `src`.
pub fn run_source(src: &str, free: &[String], cfg: &RuntimeConfig) -> Result<Run, Error> {
    let initial = translate_src(src, free)?;
    let outcome = runtime::run(&initial, cfg)?;
    let report = RunReport::new(&initial, &outcome);
    Ok(Run {
        initial,
        outcome,
        report,
    })
}

#[derive(Clone, Debug)]
pub struct SpeedupRow {
    pub workers: usize,
    pub wall: Duration,
    pub speedup: f64,
    pub aas: f64,
}

/// Runs `src` once per worker count after one discarded warm-up run.
pub fn speedup(
    src: &str,
    free: &[String],
    base: &RuntimeConfig,
    counts: &[usize],
) -> Result<Vec<SpeedupRow>, Error> {
    let initial = translate_src(src, free)?;
    runtime::run(&initial, base)?;
    let mut rows = Vec::new();
    let mut t1 = None;
    for &n in counts {
        let cfg = RuntimeConfig {
            workers: n,
            ..base.clone()
        };
        let out = runtime::run(&initial, &cfg)?;
        let wall = out.elapsed;
        let base_t = *t1.get_or_insert(wall);
        rows.push(SpeedupRow {
            workers: n,
            wall,
            speedup: base_t.as_secs_f64() / wall.as_secs_f64().max(1e-9),
            aas: out.average_aggregation(),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_counts_add_up() {
        let run = run_source("(2)(2)", &[], &RuntimeConfig::default()).unwrap();
        let r = &run.report;
        assert!(r.stats.nodes_created > 0);
        assert_eq!(r.processed, r.per_worker[0].processed);
        assert_eq!(r.aas, 1.0);
        let csv = r.to_csv();
        assert!(csv.starts_with("key,value\n"));
        assert!(csv.contains("nodes_created,"));
    }

    #[test]
    fn trace_csv_shape() {
        let cfg = RuntimeConfig {
            trace_upm: true,
            drain_every: 4,
            ..RuntimeConfig::default()
        };
        let run = run_source("(2)(2)", &[], &cfg).unwrap();
        let trace = merged_trace(&run.outcome);
        assert!(!trace.is_empty());
        assert_eq!(trace.last().unwrap().upm, 0);
        assert!(upm_csv(&trace).starts_with("time_ms,worker,upm\n"));
    }
}
