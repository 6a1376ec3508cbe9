//! TOML run configuration. Every section mirrors a module, all keys are
//! optional, and unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::benchmark::{BenchConfig, SubmitPattern};
use crate::contract::ContractConfig;
use crate::devices::{FaultKind, FaultSpec};
use crate::ids::{NodeId, Ticks};
use crate::ledger::LedgerParams;
use crate::simnet::{LatencyModel, LinkLatency, NetConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultEntry {
    pub device: NodeId,
    /// `stuck-at:<v>`, `drift:<per-sample>`, `noise-burst:<mult>` or `dropout:<p>`.
    pub kind: String,
    pub onset: Ticks,
}

impl FaultEntry {
    pub fn spec(&self) -> Result<FaultSpec, String> {
        let kind: FaultKind = self.kind.parse()?;
        let spec = FaultSpec::new(kind, self.onset);
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DevicesSection {
    pub count: usize,
    /// Overrides every device's sample period when set.
    pub sample_period: Option<Ticks>,
    pub faults: Vec<FaultEntry>,
}

impl Default for DevicesSection {
    fn default() -> Self {
        DevicesSection {
            count: 4,
            sample_period: None,
            faults: Vec::new(),
        }
    }
}

/// Network settings; the simulator seed is derived from the top-level seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetSection {
    pub latency: LatencyModel,
    pub links: Vec<LinkLatency>,
    pub loss_probability: f64,
}

impl Default for NetSection {
    fn default() -> Self {
        let n = NetConfig::default();
        NetSection {
            latency: n.latency,
            links: n.links,
            loss_probability: n.loss_probability,
        }
    }
}

impl NetSection {
    pub fn with_seed(&self, seed: u64) -> NetConfig {
        NetConfig {
            latency: self.latency.clone(),
            links: self.links.clone(),
            loss_probability: self.loss_probability,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LedgerSection {
    pub validators: Vec<NodeId>,
    pub block_interval: Ticks,
    pub max_block_txs: usize,
}

impl Default for LedgerSection {
    fn default() -> Self {
        let p = LedgerParams::default();
        LedgerSection {
            validators: vec![NodeId::new("hospital-1")],
            block_interval: p.block_interval,
            max_block_txs: p.max_block_txs,
        }
    }
}

impl LedgerSection {
    pub fn params(&self) -> LedgerParams {
        LedgerParams {
            block_interval: self.block_interval,
            max_block_txs: self.max_block_txs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecordsSection {
    pub storage_nodes: usize,
    pub replication_factor: usize,
    pub doctors: usize,
}

impl Default for RecordsSection {
    fn default() -> Self {
        RecordsSection {
            storage_nodes: 3,
            replication_factor: 3,
            doctors: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    /// Last tick at which devices sample.
    pub duration: Ticks,
    /// Keep the dispatch log lines, not only their digest.
    pub trace: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            duration: 600_000,
            trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSection {
    pub device_count: usize,
    pub batch_sizes: Vec<u64>,
    pub trials: usize,
    pub submit_interval: Ticks,
    pub pattern: SubmitPattern,
    pub cv_bound: f64,
    pub r2_min: f64,
}

impl Default for BenchSection {
    fn default() -> Self {
        let b = BenchConfig::default();
        BenchSection {
            device_count: b.device_count,
            batch_sizes: b.batch_sizes,
            trials: b.trials,
            submit_interval: b.submit_interval,
            pattern: b.pattern,
            cv_bound: b.cv_bound,
            r2_min: b.r2_min,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub devices: DevicesSection,
    pub net: NetSection,
    pub ledger: LedgerSection,
    pub contract: ContractConfig,
    pub records: RecordsSection,
    pub run: RunSection,
    pub bench: BenchSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            devices: DevicesSection::default(),
            net: NetSection::default(),
            ledger: LedgerSection::default(),
            contract: ContractConfig::default(),
            records: RecordsSection::default(),
            run: RunSection::default(),
            bench: BenchSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate().map_err(ConfigError::Invalid)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        RunConfig::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.devices.count == 0 {
            return Err("devices.count must be at least 1".into());
        }
        if self.devices.sample_period == Some(0) {
            return Err("devices.sample_period must be positive".into());
        }
        for f in &self.devices.faults {
            f.spec().map_err(|e| format!("devices.faults {}: {e}", f.device))?;
            if !self.device_ids().contains(&f.device) {
                return Err(format!("devices.faults: no device named {}", f.device));
            }
        }
        self.net.with_seed(0).validate().map_err(|e| format!("net: {e}"))?;
        if self.ledger.validators.is_empty() {
            return Err("ledger.validators must not be empty".into());
        }
        self.ledger.params().validate().map_err(|e| format!("ledger: {e}"))?;
        self.contract.detector()?;
        self.contract.plausibility()?;
        let r = &self.records;
        if r.replication_factor == 0 || r.replication_factor > r.storage_nodes {
            return Err(format!(
                "records.replication_factor must be in 1..={}, got {}",
                r.storage_nodes, r.replication_factor
            ));
        }
        if self.run.duration == 0 {
            return Err("run.duration must be positive".into());
        }
        self.bench_config().validate()
    }

    /// `device-1` .. `device-n`.
    pub fn device_ids(&self) -> Vec<NodeId> {
        (1..=self.devices.count)
            .map(|i| NodeId::new(format!("device-{i}")))
            .collect()
    }

    pub fn bench_config(&self) -> BenchConfig {
        let b = &self.bench;
        BenchConfig {
            device_count: b.device_count,
            batch_sizes: b.batch_sizes.clone(),
            seed: self.seed,
            net: self.net.with_seed(self.seed),
            ledger: self.ledger.params(),
            trials: b.trials,
            submit_interval: b.submit_interval,
            pattern: b.pattern,
            cv_bound: b.cv_bound,
            r2_min: b.r2_min,
        }
    }
}
