//! Configuration loading, single runs and parameter sweeps.
//!
//! A scenario file is TOML whose keys are the fields of
//! [`ScenarioConfig`]; every key is optional. A sweep file has a `[sweep]`
//! table and an optional `[base]` table holding a scenario.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;

use vericom::sim::metrics::csv_string;
use vericom::sim::{
    measure_routing_table, run_with_log, ConfigError, CsvRow, MetricsReport, Mode, RunOutput, ScenarioConfig, SimError,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Invalid { path: PathBuf, source: ConfigError },
    #[error("cannot write to output directory {path}: {source}")]
    Output { path: PathBuf, source: std::io::Error },
    #[error("run failed: {0}")]
    Sim(#[from] SimError),
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Read { path: path.into(), source })
}

fn parse<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> Result<T, CliError> {
    toml::from_str(text).map_err(|e| CliError::Parse { path: path.into(), message: e.to_string() })
}

/// Parses and validates a scenario file.
pub fn load_config(path: &Path) -> Result<ScenarioConfig, CliError> {
    let cfg: ScenarioConfig = parse(path, &read(path)?)?;
    cfg.validate().map_err(|source| CliError::Invalid { path: path.into(), source })?;
    Ok(cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    NumIotNodes,
    NumBackbone,
    NumValidators,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Measure {
    /// Full simulation runs.
    #[default]
    Run,
    /// Routing-table size only, with validators attached to the backbone.
    /// Allows more than 62 validators.
    RoutingTable,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub parameter: SweepParam,
    pub values: Vec<usize>,
    /// Defaults to the base scenario's mode.
    #[serde(default)]
    pub modes: Vec<Mode>,
    /// Repetition `r` runs with seed `base.seed + r`.
    #[serde(default = "one")]
    pub repetitions: u64,
    #[serde(default)]
    pub measure: Measure,
}

fn one() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default)]
    pub base: ScenarioConfig,
    pub sweep: Sweep,
}

impl SweepSpec {
    /// Every config of the sweep in output order: value, then mode, then
    /// repetition.
    pub fn expand(&self) -> Vec<ScenarioConfig> {
        let modes = if self.sweep.modes.is_empty() { vec![self.base.mode] } else { self.sweep.modes.clone() };
        let mut out = Vec::new();
        for &v in &self.sweep.values {
            for &mode in &modes {
                for r in 0..self.sweep.repetitions {
                    let mut c = self.base.clone();
                    c.mode = mode;
                    c.seed = self.base.seed.wrapping_add(r);
                    match self.sweep.parameter {
                        SweepParam::NumIotNodes => c.num_iot_nodes = v,
                        SweepParam::NumBackbone => c.num_backbone = v,
                        SweepParam::NumValidators => c.num_validators = v,
                    }
                    out.push(c);
                }
            }
        }
        out
    }
}

pub fn load_sweep(path: &Path) -> Result<SweepSpec, CliError> {
    let spec: SweepSpec = parse(path, &read(path)?)?;
    let invalid = |source| CliError::Invalid { path: path.into(), source };
    if spec.sweep.values.is_empty() {
        return Err(invalid(ConfigError { key: "sweep.values", message: "is empty".into() }));
    }
    if spec.sweep.repetitions == 0 {
        return Err(invalid(ConfigError { key: "sweep.repetitions", message: "must be at least 1".into() }));
    }
    if spec.sweep.measure == Measure::RoutingTable {
        if spec.sweep.parameter != SweepParam::NumValidators {
            return Err(invalid(ConfigError {
                key: "sweep.parameter",
                message: "routing-table sweeps vary num_validators".into(),
            }));
        }
        return Ok(spec);
    }
    for c in spec.expand() {
        c.validate().map_err(invalid)?;
    }
    Ok(spec)
}

fn routing_row(c: &ScenarioConfig) -> Result<CsvRow, SimError> {
    let bytes = measure_routing_table(c.num_validators, c.num_backbone, c.seed)?;
    let report = MetricsReport {
        mode: "routing-table".into(),
        num_iot_nodes: c.num_validators + 1,
        num_backbone: c.num_backbone,
        validators: c.num_validators,
        n: c.n,
        m: c.m,
        seed: c.seed,
        routing_table_bytes: bytes,
        ..Default::default()
    };
    Ok(report.csv_row())
}

/// Runs every config of the sweep in parallel. Rows come back in
/// [`SweepSpec::expand`] order.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<CsvRow>, SimError> {
    let configs = spec.expand();
    configs
        .par_iter()
        .map(|c| {
            log::info!(
                "{} N={} backbone={} V={} seed={}",
                c.mode.as_str(),
                c.num_iot_nodes,
                c.num_backbone,
                c.num_validators,
                c.seed
            );
            match spec.sweep.measure {
                Measure::Run => run_with_log(c, false).map(|o| o.report.csv_row()),
                Measure::RoutingTable => routing_row(c),
            }
        })
        .collect()
}

/// Creates `dir` if needed and checks that files can be written there.
pub fn prepare_out_dir(dir: &Path) -> Result<(), CliError> {
    let err = |source| CliError::Output { path: dir.into(), source };
    fs::create_dir_all(dir).map_err(err)?;
    let probe = dir.join(".write-test");
    fs::File::create(&probe).and_then(|mut f| f.write_all(b"")).map_err(err)?;
    fs::remove_file(&probe).map_err(err)
}

fn write(dir: &Path, name: &str, body: &str) -> Result<(), CliError> {
    fs::write(dir.join(name), body).map_err(|source| CliError::Output { path: dir.into(), source })
}

pub fn summary(out: &RunOutput) -> String {
    let r = &out.report;
    let mut s = format!(
        "mode {}\nnodes {} backbone {} validators {} n {} m {} seed {}\n\
         injected {} committed {} blocks {}\n\
         iot bytes {} backbone bytes {}\n\
         verify ops {} audit ops {} verify time {:.3} ms\n\
         delay mean {:.3} ms max {:.3} ms\n\
         routing table {} B, route updates {}\n\
         reports {} dropped {} unroutable {} isolated {}\n",
        r.mode,
        r.num_iot_nodes,
        r.num_backbone,
        r.validators,
        r.n,
        r.m,
        r.seed,
        r.injected_txs,
        r.committed_txs,
        r.blocks,
        r.packet_bytes_iot,
        r.packet_bytes_backbone,
        r.verify_ops,
        r.audit_ops,
        r.verify_time_ms,
        r.mean_delay_ms(),
        r.max_delay_ms(),
        r.routing_table_bytes,
        r.rui_updates,
        r.reports,
        r.dropped,
        r.unroutable,
        r.isolated,
    );
    for e in &r.epochs {
        s += &format!(
            "period {}: {} validators, {} barred, {} txs in {} blocks\n",
            e.epoch,
            e.validators.len(),
            e.barred.len(),
            e.committed_txs,
            e.blocks,
        );
        for line in e.settlement.lines().filter(|l| !l.is_empty()) {
            s += &format!("  {line}\n");
        }
    }
    if let Some(a) = &r.attack {
        s += &format!("attack {}: detected {}", a.kind, a.detected);
        if let Some(t) = a.detection_time {
            s += &format!(" at {:.3} ms", t as f64 / 1000.0);
        }
        s += &format!(", {} excluded, {} aborted assemblies", a.excluded.len(), a.aborted_assemblies);
        if !a.flagged.is_empty() {
            s += &format!(", flagged backbone {:?} in window {:?}", a.flagged, a.flagged_window);
        }
        s += "\n";
    }
    s
}

/// Runs one scenario and writes `results.csv`, `events.log`, `ledger.tsv`
/// and `summary.txt` into `dir`.
pub fn run_to_dir(cfg: &ScenarioConfig, dir: &Path) -> Result<RunOutput, CliError> {
    prepare_out_dir(dir)?;
    let out = run_with_log(cfg, true)?;
    write(dir, "results.csv", &csv_string(&[out.report.csv_row()]))?;
    write(dir, "events.log", out.log.as_str())?;
    write(dir, "ledger.tsv", &out.ledger)?;
    write(dir, "summary.txt", &summary(&out))?;
    Ok(out)
}

/// Runs a sweep and writes `sweep.csv` into `dir`.
pub fn sweep_to_dir(spec: &SweepSpec, dir: &Path) -> Result<Vec<CsvRow>, CliError> {
    prepare_out_dir(dir)?;
    let rows = run_sweep(spec)?;
    write(dir, "sweep.csv", &csv_string(&rows))?;
    Ok(rows)
}
