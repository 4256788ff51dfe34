//! Scenario configuration. Every key has a default; [`ScenarioConfig::validate`]
//! names the offending key on failure.

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use crate::model::SignatureScheme;
use crate::net::Micros;
use crate::verification::SetParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Vericom,
    Baseline,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Vericom => "vericom",
            Mode::Baseline => "baseline",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TopologyKind {
    RandomConnected,
    Chain,
    Star,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TopologySpec {
    pub kind: TopologyKind,
    pub link_delay_ms: f64,
}

impl Default for TopologySpec {
    fn default() -> Self {
        TopologySpec { kind: TopologyKind::RandomConnected, link_delay_ms: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrustMode {
    Trusted,
    Untrusted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonitorSpec {
    /// Neighbours watching each backbone node per window.
    pub group_size: usize,
    pub window_ms: f64,
}

impl Default for MonitorSpec {
    fn default() -> Self {
        MonitorSpec { group_size: 2, window_ms: 50.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackKind {
    None,
    FalseVerification,
    FakeTransaction,
    Dropping,
}

impl AttackKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AttackKind::None => "none",
            AttackKind::FalseVerification => "false-verification",
            AttackKind::FakeTransaction => "fake-transaction",
            AttackKind::Dropping => "dropping",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Collusion {
    /// One malicious member; the rest of the set is honest.
    Minority,
    /// Every member of the relevant sets is malicious.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttackSpec {
    pub kind: AttackKind,
    pub collusion: Collusion,
    /// IoT node ids for the verification attacks, backbone ids for
    /// dropping. Chosen automatically when empty.
    pub adversaries: Vec<u32>,
    pub drop_rate: f64,
    /// Index of the transaction slot the attack replaces.
    pub at_tx: usize,
}

impl Default for AttackSpec {
    fn default() -> Self {
        AttackSpec {
            kind: AttackKind::None,
            collusion: Collusion::Minority,
            adversaries: Vec::new(),
            drop_rate: 1.0,
            at_tx: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeeSpec {
    /// Validator node ids that pay nothing in the first period and clear
    /// their arrears in the next.
    pub underpayers: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub mode: Mode,
    pub num_iot_nodes: usize,
    pub num_backbone: usize,
    pub topology: TopologySpec,
    /// Maximum IoT nodes per backbone node.
    pub backbone_capacity: usize,
    pub num_validators: usize,
    pub n: usize,
    pub m: usize,
    /// Transactions per block.
    pub block_size: usize,
    /// Transactions injected per period.
    pub tx_count: i64,
    pub payload_bytes: usize,
    pub tx_interval_ms: f64,
    pub tf: Decimal,
    pub epochs: u32,
    pub gamma_ms: f64,
    pub rui_period_ms: f64,
    pub trust_mode: TrustMode,
    pub monitor: MonitorSpec,
    /// Mean one-way delay between an IoT node and a backbone node.
    pub access_delay_ms: f64,
    pub verify_cost_ms: f64,
    pub auditors: usize,
    pub signature: SignatureScheme,
    pub attack: AttackSpec,
    pub fees: FeeSpec,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            mode: Mode::Vericom,
            num_iot_nodes: 50,
            num_backbone: 20,
            topology: TopologySpec::default(),
            backbone_capacity: 16,
            num_validators: 10,
            n: 1,
            m: 1,
            block_size: 10,
            tx_count: 1000,
            payload_bytes: 558,
            tx_interval_ms: 1.0,
            tf: Decimal::new(5, 1),
            epochs: 1,
            gamma_ms: 10.0,
            rui_period_ms: 50.0,
            trust_mode: TrustMode::Trusted,
            monitor: MonitorSpec::default(),
            access_delay_ms: 2.0,
            verify_cost_ms: 0.1,
            auditors: 1,
            signature: SignatureScheme::Simulated,
            attack: AttackSpec::default(),
            fees: FeeSpec::default(),
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid `{key}`: {message}")]
pub struct ConfigError {
    pub key: &'static str,
    pub message: String,
}

fn bad(key: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError { key, message: message.into() }
}

pub fn ms(v: f64) -> Micros {
    (v * 1000.0).round() as Micros
}

fn positive(key: &'static str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(bad(key, format!("must be a positive number, got {v}")))
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.tx_count <= 0 {
            return Err(bad("tx_count", format!("must be positive, got {}", self.tx_count)));
        }
        if self.num_iot_nodes == 0 {
            return Err(bad("num_iot_nodes", "must be at least 1"));
        }
        if self.block_size == 0 {
            return Err(bad("block_size", "must be at least 1"));
        }
        if self.epochs == 0 {
            return Err(bad("epochs", "must be at least 1"));
        }
        positive("tx_interval_ms", self.tx_interval_ms)?;
        positive("access_delay_ms", self.access_delay_ms)?;
        positive("topology.link_delay_ms", self.topology.link_delay_ms)?;
        if !(self.verify_cost_ms.is_finite() && self.verify_cost_ms >= 0.0) {
            return Err(bad("verify_cost_ms", "must be non-negative"));
        }
        if self.tf.is_sign_negative() && !self.tf.is_zero() {
            return Err(bad("tf", "must be non-negative"));
        }
        if self.mode == Mode::Baseline {
            return Ok(());
        }

        if self.num_backbone == 0 {
            return Err(bad("num_backbone", "must be at least 1"));
        }
        positive("gamma_ms", self.gamma_ms)?;
        positive("rui_period_ms", self.rui_period_ms)?;
        if self.num_validators == 0 || self.num_validators > 62 {
            return Err(bad("num_validators", format!("must be in 1..=62, got {}", self.num_validators)));
        }
        if self.num_validators > self.num_iot_nodes {
            return Err(bad("num_validators", "exceeds num_iot_nodes"));
        }
        if self.auditors > self.num_iot_nodes {
            return Err(bad("auditors", "exceeds num_iot_nodes"));
        }
        SetParams::new(self.n, self.m, self.num_validators).map_err(|e| bad("n", e.to_string()))?;
        if let Some(&u) = self.fees.underpayers.iter().find(|&&u| u as usize >= self.num_validators) {
            return Err(bad("fees.underpayers", format!("node {u} is not a validator")));
        }

        let a = &self.attack;
        match a.kind {
            AttackKind::None => {}
            AttackKind::Dropping => {
                if self.trust_mode != TrustMode::Untrusted {
                    return Err(bad("attack.kind", "dropping requires trust_mode = \"untrusted\""));
                }
                if let Some(&x) = a.adversaries.iter().find(|&&x| x as usize >= self.num_backbone) {
                    return Err(bad("attack.adversaries", format!("backbone node {x} does not exist")));
                }
                if !(0.0..=1.0).contains(&a.drop_rate) || a.drop_rate == 0.0 {
                    return Err(bad("attack.drop_rate", "must be in (0, 1]"));
                }
            }
            AttackKind::FalseVerification | AttackKind::FakeTransaction => {
                if let Some(&x) = a.adversaries.iter().find(|&&x| x as usize >= self.num_iot_nodes) {
                    return Err(bad("attack.adversaries", format!("IoT node {x} does not exist")));
                }
                if let Some(&x) = a.adversaries.iter().find(|&&x| x as usize >= self.num_validators) {
                    return Err(bad("attack.adversaries", format!("IoT node {x} is not a validator")));
                }
            }
        }
        if a.kind != AttackKind::None && a.at_tx as i64 >= self.tx_count {
            return Err(bad("attack.at_tx", "beyond tx_count"));
        }
        if self.trust_mode == TrustMode::Untrusted {
            positive("monitor.window_ms", self.monitor.window_ms)?;
            if self.monitor.group_size == 0 {
                return Err(bad("monitor.group_size", "must be at least 1"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_valid() {
        assert_eq!(ScenarioConfig::default().validate(), Ok(()));
    }

    #[test]
    fn admissibility_named() {
        let c = ScenarioConfig { n: 3, m: 3, ..Default::default() };
        let e = c.validate().unwrap_err();
        assert_eq!(e.key, "n");
    }

    #[test]
    fn negative_tx_count() {
        let c = ScenarioConfig { tx_count: -5, ..Default::default() };
        assert_eq!(c.validate().unwrap_err().key, "tx_count");
    }

    #[test]
    fn dropping_needs_untrusted() {
        let mut c = ScenarioConfig::default();
        c.attack.kind = AttackKind::Dropping;
        assert_eq!(c.validate().unwrap_err().key, "attack.kind");
        c.trust_mode = TrustMode::Untrusted;
        c.attack.adversaries = vec![99];
        assert_eq!(c.validate().unwrap_err().key, "attack.adversaries");
    }
}
