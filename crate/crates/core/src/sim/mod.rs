//! Scenario runner for both the two-layer protocol and the flooding
//! baseline, plus the CSV metrics both produce.

pub mod baseline;
pub mod config;
pub mod engine;
pub mod log;
pub mod metrics;
pub mod queue;
pub mod topology;
pub mod traffic;

pub use config::{AttackKind, Collusion, ConfigError, Mode, ScenarioConfig, TopologyKind, TrustMode};
pub use metrics::{write_csv, AttackOutcome, CsvRow, DelayStats, MetricsReport, CSV_HEADER};

use crate::allocation::AllocError;
use crate::ledger::VrdError;
use crate::model::SignatureScheme;
use crate::net::{JoinRequest, Micros, NetError, Network, Role};
use crate::verification::ParamError;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("network: {0}")]
    Net(#[from] NetError),
    #[error("allocation: {0}")]
    Vrd(#[from] VrdError),
    #[error("allocation: {0}")]
    Alloc(#[from] AllocError),
    #[error("set sizes: {0}")]
    Params(#[from] ParamError),
    #[error("fees: {0}")]
    Fees(String),
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: MetricsReport,
    pub log: log::EventLog,
    /// One line per committed block, per validator ledger.
    pub ledger: String,
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunOutput, SimError> {
    run_with_log(cfg, false)
}

/// Like [`run_scenario`] but also records the event log.
pub fn run_with_log(cfg: &ScenarioConfig, log_events: bool) -> Result<RunOutput, SimError> {
    match cfg.mode {
        Mode::Vericom => engine::run_vericom(cfg, log_events),
        Mode::Baseline => baseline::run_baseline(cfg, log_events),
    }
}

/// Largest routing table when `validators` validators and one auditor are
/// attached to a backbone of `backbone` nodes. Works past the 62-validator
/// limit of range allocation because no ranges are involved.
pub fn measure_routing_table(validators: usize, backbone: usize, seed: u64) -> Result<u64, SimError> {
    let cfg = ScenarioConfig {
        num_backbone: backbone,
        num_iot_nodes: validators + 1,
        backbone_capacity: validators + 1,
        seed,
        ..Default::default()
    };
    let mut net = Network::new(topology::scenario_backbone(&cfg)?);
    let mut rng = topology::stream(seed, "keys");
    for node in 0..=validators as u32 {
        let pk = crate::model::Keypair::generate(SignatureScheme::Simulated, &mut rng).public();
        let role = if (node as usize) < validators { Role::Validator } else { Role::Auditor };
        let delays: Vec<(u32, Micros)> =
            net.graph().ids().map(|b| (b, topology::access_delay(&cfg, node, b))).collect();
        net.join(JoinRequest { pk, role }, &delays);
    }
    net.rui_tick();
    Ok(net.tables().values().map(|t| t.size_bytes() as u64).max().unwrap_or(0))
}
