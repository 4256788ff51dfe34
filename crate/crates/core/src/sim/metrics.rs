use std::io;

use serde::Serialize;

use crate::model::PublicKey;
use crate::net::{BackboneId, Micros};

/// Column order of the results CSV.
pub const CSV_HEADER: [&str; 17] = [
    "mode",
    "N",
    "backbone_count",
    "validators",
    "n",
    "m",
    "seed",
    "packet_bytes_iot",
    "packet_bytes_backbone",
    "verify_ops",
    "verify_time_ms",
    "mean_delay_ms",
    "max_delay_ms",
    "routing_table_bytes",
    "attack",
    "detected",
    "detection_time_ms",
];

/// Running delay statistics; keeps no samples.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct DelayStats {
    pub count: u64,
    pub sum: u128,
    pub max: Micros,
}

impl DelayStats {
    pub fn record(&mut self, d: Micros) {
        self.count += 1;
        self.sum += u128::from(d);
        self.max = self.max.max(d);
    }

    pub fn mean_ms(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum as f64 / self.count as f64 / 1000.0
        }
    }

    pub fn max_ms(&self) -> f64 {
        self.max as f64 / 1000.0
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AttackOutcome {
    pub kind: String,
    pub detected: bool,
    pub detection_time: Option<Micros>,
    /// Nodes named in accepted misbehaviour reports.
    pub excluded: Vec<PublicKey>,
    pub reports: u64,
    /// The attacker's block.
    pub fake_block: Option<String>,
    /// When the fake block first went out to validators and auditors.
    pub fake_block_broadcast: Option<Micros>,
    pub aborted_assemblies: u64,
    /// Dropping: flagged backbone nodes and the window they were caught in.
    pub flagged: Vec<BackboneId>,
    pub flagged_window: Option<u64>,
    pub first_drop: Option<Micros>,
    pub reconstructed_at: Option<Micros>,
    /// A transaction sent after reconstruction reached its full validator set.
    pub delivery_resumed: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EpochSummary {
    pub epoch: u32,
    pub validators: Vec<PublicKey>,
    pub barred: Vec<PublicKey>,
    pub committed_txs: u64,
    pub blocks: u64,
    pub settlement: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MetricsReport {
    pub mode: String,
    pub num_iot_nodes: usize,
    pub num_backbone: usize,
    pub validators: usize,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    /// Bytes received by IoT nodes.
    pub packet_bytes_iot: u64,
    /// Bytes carried on backbone links.
    pub packet_bytes_backbone: u64,
    pub verify_ops: u64,
    pub audit_ops: u64,
    pub verify_time_ms: f64,
    pub delay: DelayStats,
    pub routing_table_bytes: u64,
    pub injected_txs: u64,
    pub committed_txs: u64,
    /// Blocks produced (Vericom) or flooded (baseline).
    pub blocks: u64,
    pub reports: u64,
    pub rui_updates: u64,
    pub isolated: u64,
    pub unroutable: u64,
    pub dropped: u64,
    pub append_failures: u64,
    pub attack: Option<AttackOutcome>,
    pub epochs: Vec<EpochSummary>,
}

/// One results row, already formatted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CsvRow {
    pub mode: String,
    #[serde(rename = "N")]
    pub n_nodes: usize,
    pub backbone_count: usize,
    pub validators: usize,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub packet_bytes_iot: u64,
    pub packet_bytes_backbone: u64,
    pub verify_ops: u64,
    pub verify_time_ms: String,
    pub mean_delay_ms: String,
    pub max_delay_ms: String,
    pub routing_table_bytes: u64,
    pub attack: String,
    pub detected: bool,
    pub detection_time_ms: String,
}

fn f3(v: f64) -> String {
    format!("{v:.3}")
}

impl MetricsReport {
    pub fn mean_delay_ms(&self) -> f64 {
        self.delay.mean_ms()
    }

    pub fn max_delay_ms(&self) -> f64 {
        self.delay.max_ms()
    }

    pub fn csv_row(&self) -> CsvRow {
        let attack = self.attack.as_ref();
        CsvRow {
            mode: self.mode.clone(),
            n_nodes: self.num_iot_nodes,
            backbone_count: self.num_backbone,
            validators: self.validators,
            n: self.n,
            m: self.m,
            seed: self.seed,
            packet_bytes_iot: self.packet_bytes_iot,
            packet_bytes_backbone: self.packet_bytes_backbone,
            verify_ops: self.verify_ops,
            verify_time_ms: f3(self.verify_time_ms),
            mean_delay_ms: f3(self.mean_delay_ms()),
            max_delay_ms: f3(self.max_delay_ms()),
            routing_table_bytes: self.routing_table_bytes,
            attack: attack.map_or("none".into(), |a| a.kind.clone()),
            detected: attack.is_some_and(|a| a.detected),
            detection_time_ms: attack.and_then(|a| a.detection_time).map_or(String::new(), |t| f3(t as f64 / 1000.0)),
        }
    }
}

/// Header plus one row per report.
pub fn write_csv<W: io::Write>(out: W, rows: &[CsvRow]) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(rows: &[CsvRow]) -> String {
    let mut buf = Vec::new();
    write_csv(&mut buf, rows).expect("in-memory write");
    String::from_utf8(buf).expect("UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_matches_row_fields() {
        let text = csv_string(&[MetricsReport::default().csv_row()]);
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
        let row = lines.next().unwrap();
        assert_eq!(row.split(',').count(), CSV_HEADER.len());
        assert!(row.contains(",0.000,"));
    }

    #[test]
    fn delay_stats() {
        let mut d = DelayStats::default();
        d.record(1000);
        d.record(3000);
        assert_eq!(d.mean_ms(), 2.0);
        assert_eq!(d.max_ms(), 3.0);
    }
}
