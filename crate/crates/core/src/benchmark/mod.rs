//! Processing-time, delay and throughput harness in simulated time.
//!
//! For each batch size `N` every device submits `N` telemetry transactions
//! through the simulated network to the gateway validator. Per device and
//! trial:
//!
//! * processing time = last commit time - first submit time
//! * average delay = mean of (block timestamp - submit time)
//! * throughput = `N` / processing time (from the trial-averaged time)
//!
//! Trials run in parallel; each owns its chain and network, so the report
//! depends only on the config.

mod checks;
mod emit;
mod reference;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use checks::{
    check_parity, check_scaling, coefficient_of_variation, fit_line, mean_std, CheckError, LineFit,
    ParityOutcome, ScalingOutcome, Table,
};
pub use emit::{emit_tables, table_csv, DELAY_CSV, PROCESSING_CSV, REPORT_JSON};
pub use reference::{
    reference_delay_table, reference_processing_table, ReferenceValues, REFERENCE_AVERAGE_DELAY_S,
    REFERENCE_BATCH_SIZES, REFERENCE_PROCESSING_TIME_S,
};

use crate::contract::{Contract, Identity, Role};
use crate::devices::{default_fleet, derive_seed, DeviceSim};
use crate::ids::{NodeId, Ticks, TICKS_PER_SECOND};
use crate::ledger::{Chain, LedgerError, LedgerParams, Transaction, TxKind};
use crate::scenario::Driver;
use crate::simnet::{NetConfig, Sim, SimError};

/// How devices hand their batch to the network.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubmitPattern {
    /// One transaction every `submit_interval` ticks, starting at one interval.
    #[default]
    Periodic,
    /// All `N` transactions at t = 0.
    Burst,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchConfig {
    pub device_count: usize,
    pub batch_sizes: Vec<u64>,
    pub seed: u64,
    pub net: NetConfig,
    pub ledger: LedgerParams,
    pub trials: usize,
    pub submit_interval: Ticks,
    pub pattern: SubmitPattern,
    pub cv_bound: f64,
    pub r2_min: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            device_count: 4,
            batch_sizes: vec![50, 100, 150, 200],
            seed: 42,
            net: NetConfig::default(),
            ledger: LedgerParams::default(),
            trials: 5,
            submit_interval: 400,
            pattern: SubmitPattern::Periodic,
            cv_bound: 0.15,
            r2_min: 0.9,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.device_count == 0 {
            return Err("bench.device_count must be at least 1".into());
        }
        if self.batch_sizes.is_empty() {
            return Err("bench.batch_sizes must not be empty".into());
        }
        if self.batch_sizes.contains(&0) {
            return Err("bench.batch_sizes must be positive".into());
        }
        if self.batch_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err("bench.batch_sizes must be strictly ascending".into());
        }
        if self.trials == 0 {
            return Err("bench.trials must be at least 1".into());
        }
        if self.submit_interval == 0 {
            return Err("bench.submit_interval must be positive".into());
        }
        if !(self.cv_bound.is_finite() && self.cv_bound >= 0.0) {
            return Err("bench.cv_bound must be a non-negative number".into());
        }
        if !(0.0..=1.0).contains(&self.r2_min) {
            return Err("bench.r2_min must lie in [0, 1]".into());
        }
        self.net.validate().map_err(|e| format!("net: {e}"))?;
        self.ledger.validate().map_err(|e| format!("ledger: {e}"))
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid bench config: {0}")]
    Config(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}

/// Raw result of one device in one trial of one batch size. Times in ticks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeviceTrial {
    pub device_id: NodeId,
    pub batch_size: u64,
    pub trial: usize,
    pub committed: u64,
    pub first_submit: Option<Ticks>,
    pub last_commit: Option<Ticks>,
    pub delay_sum: Ticks,
    pub delay_min: Option<Ticks>,
    pub delay_max: Option<Ticks>,
}

impl DeviceTrial {
    pub fn processing_ticks(&self) -> Option<Ticks> {
        Some(self.last_commit? - self.first_submit?)
    }

    pub fn average_delay_ticks(&self) -> Option<f64> {
        (self.committed > 0).then(|| self.delay_sum as f64 / self.committed as f64)
    }
}

fn bench_chain(cfg: &BenchConfig, fleet: &[crate::devices::DeviceProfile]) -> Result<Chain, LedgerError> {
    let mut contract = Contract::default();
    for d in fleet {
        contract.register(Identity::new(d.device_id.clone(), Role::Device));
        contract.register(Identity::new(d.patient_id.as_str(), Role::Patient));
    }
    Chain::with_contract(&[NodeId::new("hospital-1")], 0, cfg.ledger, contract)
}

/// One trial at batch size `n`. Returns no rows for `n == 0`.
pub fn run_batch(cfg: &BenchConfig, n: u64, trial: usize) -> Result<Vec<DeviceTrial>, BenchError> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut fleet = default_fleet(cfg.device_count, derive_seed(cfg.seed, trial as u64));
    for d in &mut fleet {
        d.sample_period = cfg.submit_interval;
    }
    let mut chain = bench_chain(cfg, &fleet)?;
    let net = NetConfig {
        seed: derive_seed(cfg.net.seed, trial as u64),
        ..cfg.net.clone()
    };
    let mut sim: Sim<Transaction> = Sim::new(&net)?;
    let horizon = match cfg.pattern {
        SubmitPattern::Periodic => n * cfg.submit_interval,
        SubmitPattern::Burst => 0,
    };
    {
        let mut driver = Driver::new(&mut chain, &mut sim, NodeId::new("hospital-1"), horizon);
        for p in &fleet {
            let dev = DeviceSim::new(p.clone(), None);
            match cfg.pattern {
                SubmitPattern::Periodic => driver.add_periodic(&mut sim, dev, Some(n))?,
                SubmitPattern::Burst => driver.add_burst(&mut sim, dev, n)?,
            }
        }
        driver.run(&mut sim)?;
    }

    let mut out: BTreeMap<NodeId, DeviceTrial> = fleet
        .iter()
        .map(|p| {
            let row = DeviceTrial {
                device_id: p.device_id.clone(),
                batch_size: n,
                trial,
                committed: 0,
                first_submit: None,
                last_commit: None,
                delay_sum: 0,
                delay_min: None,
                delay_max: None,
            };
            (p.device_id.clone(), row)
        })
        .collect();
    for b in chain.blocks() {
        for tx in &b.txs {
            if !matches!(tx.kind, TxKind::Telemetry(_)) {
                continue;
            }
            let Some(row) = out.get_mut(&tx.submitter) else {
                continue;
            };
            let delay = b.timestamp - tx.submit_time;
            row.committed += 1;
            row.first_submit = Some(row.first_submit.map_or(tx.submit_time, |t| t.min(tx.submit_time)));
            row.last_commit = Some(row.last_commit.map_or(b.timestamp, |t| t.max(b.timestamp)));
            row.delay_sum += delay;
            row.delay_min = Some(row.delay_min.map_or(delay, |d| d.min(delay)));
            row.delay_max = Some(row.delay_max.map_or(delay, |d| d.max(delay)));
        }
    }
    Ok(out.into_values().collect())
}

/// Trial-averaged figures for one device at one batch size, in seconds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviceBatchStats {
    pub device_id: NodeId,
    pub batch_size: u64,
    pub trials: usize,
    pub committed: u64,
    pub processing_time_s: f64,
    pub average_delay_s: f64,
    /// `batch_size / processing_time_s`; absent when the time is zero.
    pub throughput_tps: Option<f64>,
    pub min_delay_s: f64,
    pub max_delay_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spread {
    pub mean: f64,
    pub std: f64,
    pub cv: f64,
}

impl Spread {
    fn of(xs: &[f64]) -> Spread {
        let (mean, std) = mean_std(xs);
        Spread {
            mean,
            std,
            cv: coefficient_of_variation(xs),
        }
    }
}

/// Cross-device dispersion at one batch size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchDispersion {
    pub batch_size: u64,
    pub processing_time_s: Spread,
    pub average_delay_s: Spread,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub devices: Vec<NodeId>,
    /// Ordered by batch size, then device.
    pub rows: Vec<DeviceBatchStats>,
    pub dispersion: Vec<BatchDispersion>,
    pub parity: Option<ParityOutcome>,
    pub scaling: Option<ScalingOutcome>,
    pub reference: ReferenceValues,
}

fn secs(t: f64) -> f64 {
    t / TICKS_PER_SECOND as f64
}

fn aggregate(trials: &[&DeviceTrial]) -> DeviceBatchStats {
    let first = trials[0];
    let proc: Vec<f64> = trials.iter().filter_map(|t| t.processing_ticks()).map(|t| t as f64).collect();
    let delay: Vec<f64> = trials.iter().filter_map(|t| t.average_delay_ticks()).collect();
    let mean = |xs: &[f64]| if xs.is_empty() { 0.0 } else { mean_std(xs).0 };
    let processing_time_s = secs(mean(&proc));
    DeviceBatchStats {
        device_id: first.device_id.clone(),
        batch_size: first.batch_size,
        trials: trials.len(),
        committed: trials.iter().map(|t| t.committed).sum(),
        processing_time_s,
        average_delay_s: secs(mean(&delay)),
        throughput_tps: (processing_time_s > 0.0).then(|| first.batch_size as f64 / processing_time_s),
        min_delay_s: secs(trials.iter().filter_map(|t| t.delay_min).min().unwrap_or(0) as f64),
        max_delay_s: secs(trials.iter().filter_map(|t| t.delay_max).max().unwrap_or(0) as f64),
    }
}

impl BenchReport {
    fn table(&self, pick: impl Fn(&DeviceBatchStats) -> f64) -> Table {
        let batch_sizes = self.config.batch_sizes.clone();
        let values = batch_sizes
            .iter()
            .map(|&n| {
                self.devices
                    .iter()
                    .map(|d| {
                        self.rows
                            .iter()
                            .find(|r| r.batch_size == n && &r.device_id == d)
                            .map_or(0.0, &pick)
                    })
                    .collect()
            })
            .collect();
        let columns = (1..=self.devices.len()).map(|d| format!("device_{d}")).collect();
        Table::new(batch_sizes, columns, values)
    }

    pub fn processing_table(&self) -> Table {
        self.table(|r| r.processing_time_s)
    }

    pub fn delay_table(&self) -> Table {
        self.table(|r| r.average_delay_s)
    }

    /// Both checks ran and passed.
    pub fn passed(&self) -> bool {
        self.parity.as_ref().is_some_and(|p| p.pass) && self.scaling.as_ref().is_some_and(|s| s.pass)
    }
}

/// Runs every `(batch size, trial)` pair and aggregates per device. The
/// parity check (on average delay) and the scaling check (on processing
/// time) are filled in when their preconditions hold.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchReport, BenchError> {
    cfg.validate().map_err(BenchError::Config)?;
    let jobs: Vec<(u64, usize)> = cfg
        .batch_sizes
        .iter()
        .flat_map(|&n| (0..cfg.trials).map(move |t| (n, t)))
        .collect();
    let results: Vec<Vec<DeviceTrial>> = jobs
        .par_iter()
        .map(|&(n, t)| run_batch(cfg, n, t))
        .collect::<Result<_, _>>()?;

    let devices: Vec<NodeId> = default_fleet(cfg.device_count, 0)
        .into_iter()
        .map(|p| p.device_id)
        .collect();
    let mut rows = Vec::new();
    let mut dispersion = Vec::new();
    for &n in &cfg.batch_sizes {
        let mut batch_rows = Vec::new();
        for d in &devices {
            let trials: Vec<&DeviceTrial> = results
                .iter()
                .flatten()
                .filter(|r| r.batch_size == n && &r.device_id == d)
                .collect();
            batch_rows.push(aggregate(&trials));
        }
        let proc: Vec<f64> = batch_rows.iter().map(|r| r.processing_time_s).collect();
        let delay: Vec<f64> = batch_rows.iter().map(|r| r.average_delay_s).collect();
        dispersion.push(BatchDispersion {
            batch_size: n,
            processing_time_s: Spread::of(&proc),
            average_delay_s: Spread::of(&delay),
        });
        rows.extend(batch_rows);
    }
    let mut report = BenchReport {
        config: cfg.clone(),
        devices,
        rows,
        dispersion,
        parity: None,
        scaling: None,
        reference: ReferenceValues::new(),
    };
    report.parity = check_parity(&report.delay_table(), cfg.cv_bound).ok();
    report.scaling = check_scaling(&report.processing_table(), cfg.r2_min).ok();
    Ok(report)
}
