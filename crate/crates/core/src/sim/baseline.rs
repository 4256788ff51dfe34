//! Flooding baseline: every transaction and block goes to every node over
//! a peer overlay and every node verifies it.
//!
//! Flooding with duplicate suppression is deterministic given the overlay,
//! so it is computed directly instead of event by event: each node forwards
//! an item once to every neighbour except the one it first heard it from,
//! and the first copy arrives along the shortest path.

use std::collections::BTreeMap;

use super::config::{ms, ScenarioConfig};
use super::log::EventLog;
use super::metrics::MetricsReport;
use super::topology::baseline_overlay;
use super::traffic::Traffic;
use super::{RunOutput, SimError};
use crate::model::{Block, Transaction};
use crate::net::graph::ShortestPaths;
use crate::net::BackboneGraph;

struct Flood<'a> {
    overlay: &'a BackboneGraph,
    paths: BTreeMap<u32, ShortestPaths>,
    receipts: u64,
    nodes: u64,
}

impl Flood<'_> {
    fn paths_from(&mut self, src: u32) -> &ShortestPaths {
        self.paths.entry(src).or_insert_with(|| self.overlay.shortest_paths(src))
    }

    /// Account one flooded item. Returns per-node first-arrival delays.
    fn send(&mut self, report: &mut MetricsReport, src: u32, size: usize) -> Vec<u64> {
        report.packet_bytes_iot += self.receipts * size as u64;
        report.verify_ops += self.nodes;
        self.paths_from(src).dist.iter().filter(|(&n, _)| n != src).map(|(_, &d)| d).collect()
    }
}

pub fn run_baseline(cfg: &ScenarioConfig, log_events: bool) -> Result<RunOutput, SimError> {
    cfg.validate()?;
    let n = cfg.num_iot_nodes;
    let overlay = baseline_overlay(n, cfg.access_delay_ms, cfg.seed)?;
    let mut traffic = Traffic::new(cfg);
    let mut log = EventLog::new(log_events);
    let mut report = MetricsReport {
        mode: cfg.mode.as_str().into(),
        num_iot_nodes: n,
        num_backbone: 0,
        validators: n,
        n: cfg.n,
        m: cfg.m,
        seed: cfg.seed,
        ..Default::default()
    };
    let mut flood = Flood {
        overlay: &overlay,
        paths: BTreeMap::new(),
        receipts: if n > 1 { overlay.flood_transmissions() as u64 } else { 0 },
        nodes: n as u64,
    };
    let interval = ms(cfg.tx_interval_ms);
    let mut now = 0;
    let mut generator = 0usize;
    for epoch in 1..=cfg.epochs {
        let mut pending: Vec<Transaction> = Vec::new();
        for _ in 0..cfg.tx_count {
            now += interval;
            let (sender, tx) = traffic.next_tx();
            log.record(now, format_args!("iot:{sender}"), "tx-flood", tx.id());
            for d in flood.send(&mut report, sender, tx.wire_size()) {
                report.delay.record(d);
            }
            report.injected_txs += 1;
            pending.push(tx);
            if pending.len() == cfg.block_size {
                flood_block(
                    cfg,
                    &mut traffic,
                    &mut flood,
                    &mut report,
                    &mut log,
                    &mut generator,
                    epoch,
                    &mut pending,
                    now,
                );
            }
        }
        if !pending.is_empty() {
            flood_block(cfg, &mut traffic, &mut flood, &mut report, &mut log, &mut generator, epoch, &mut pending, now);
        }
    }
    report.verify_time_ms = report.verify_ops as f64 * cfg.verify_cost_ms;
    Ok(RunOutput { report, log, ledger: String::new() })
}

#[allow(clippy::too_many_arguments)]
fn flood_block(
    cfg: &ScenarioConfig,
    traffic: &mut Traffic,
    flood: &mut Flood<'_>,
    report: &mut MetricsReport,
    log: &mut EventLog,
    generator: &mut usize,
    epoch: u32,
    pending: &mut Vec<Transaction>,
    now: u64,
) {
    let g = *generator % cfg.num_iot_nodes;
    *generator += 1;
    let txs = std::mem::take(pending);
    let count = txs.len() as u64;
    let block = Block::seal(traffic.keys(g as u32), None, epoch, txs, |_| true).expect("unconstrained seal");
    log.record(now, format_args!("iot:{g}"), "block-flood", block.digest());
    flood.send(report, g as u32, block.wire_size());
    report.blocks += 1;
    report.committed_txs += count;
}
