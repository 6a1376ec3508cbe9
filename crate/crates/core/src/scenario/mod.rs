//! End-to-end seeded runs: device fleet, telemetry over the simulated
//! network, ledger, then patient records anchored and replicated.

mod driver;

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

pub use driver::Driver;

use crate::config::RunConfig;
use crate::contract::{Contract, FlagEvent, Identity, Role};
use crate::devices::{
    default_fleet, derive_seed, run_readings, DeviceProfile, DeviceSim, FaultSpec, TelemetryReading,
};
use crate::digest::Digest256;
use crate::ids::{NodeId, Ticks};
use crate::ledger::{Chain, LedgerError, Transaction, TxKind};
use crate::records::{PatientRecord, RecordAnchor, RecordError, RecordStore};
use crate::simnet::{Sim, SimError, SimStats};

/// Seed-stream indices handed to [`derive_seed`]; device streams use
/// `0..count`.
const NET_STREAM: u64 = 1 << 32;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("no device named {0}")]
    UnknownDevice(NodeId),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Records(#[from] RecordError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Everything an end-to-end run leaves behind.
pub struct RunOutcome {
    pub chain: Chain,
    pub store: RecordStore,
    pub stats: SimStats,
    pub trace_digest: Digest256,
    pub trace: Option<Vec<String>>,
    pub anchors: Vec<RecordAnchor>,
    pub fleet: Vec<DeviceProfile>,
    /// Fault applied to each faulted device.
    pub faults: BTreeMap<NodeId, FaultSpec>,
    /// Telemetry horizon the devices sampled up to.
    pub duration: Ticks,
}

/// Serializable digest of a run, printed by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub seed: u64,
    pub blocks: usize,
    pub committed_txs: usize,
    pub rejected_txs: usize,
    pub flagged: Vec<NodeId>,
    pub flag_events: Vec<FlagEvent>,
    pub records: Vec<RecordAnchor>,
    pub net: SimStats,
    pub state_root: Digest256,
    pub trace_digest: Digest256,
}

impl RunOutcome {
    pub fn state_root(&self) -> Digest256 {
        self.chain.state_root()
    }

    /// Every reading the fleet produced, faults applied, ordered by
    /// timestamp then device. Rejected readings are included.
    pub fn device_readings(&self) -> Vec<TelemetryReading> {
        let mut all: Vec<TelemetryReading> = self
            .fleet
            .iter()
            .flat_map(|p| run_readings(p, self.faults.get(&p.device_id).copied(), self.duration))
            .collect();
        all.sort_by(|a, b| (a.timestamp, &a.device_id).cmp(&(b.timestamp, &b.device_id)));
        all
    }

    pub fn flagged(&self) -> Vec<NodeId> {
        self.chain.contract().flag_malfunctions()
    }

    pub fn summary(&self, seed: u64) -> RunSummary {
        RunSummary {
            seed,
            blocks: self.chain.len(),
            committed_txs: self.chain.committed_tx_count(),
            rejected_txs: self.chain.audit_log().len(),
            flagged: self.flagged(),
            flag_events: self.chain.contract().flag_events().to_vec(),
            records: self.anchors.clone(),
            net: self.stats,
            state_root: self.state_root(),
            trace_digest: self.trace_digest,
        }
    }
}

/// Synthetic medical record for the `i`-th patient (1-based).
pub fn synthetic_record(i: usize) -> PatientRecord {
    const HISTORY: [&[&str]; 4] = [
        &["hypertension"],
        &["type 2 diabetes", "obesity"],
        &["asthma"],
        &["atrial fibrillation", "hypertension"],
    ];
    const MEDICINES: [&[&str]; 4] = [
        &["lisinopril"],
        &["metformin"],
        &["salbutamol", "budesonide"],
        &["apixaban", "bisoprolol"],
    ];
    let k = (i + HISTORY.len() - 1) % HISTORY.len();
    PatientRecord {
        patient_id: format!("patient-{i}"),
        patient_name: format!("Patient {i}"),
        disease_history: HISTORY[k].iter().map(|s| s.to_string()).collect(),
        medicines_prescribed: MEDICINES[k].iter().map(|s| s.to_string()).collect(),
    }
}

/// The configured fleet with the device seeds derived from `cfg.seed`.
pub fn fleet_for(cfg: &RunConfig) -> Vec<DeviceProfile> {
    let mut fleet = default_fleet(cfg.devices.count, cfg.seed);
    if let Some(p) = cfg.devices.sample_period {
        for d in &mut fleet {
            d.sample_period = p;
        }
    }
    fleet
}

/// A chain whose contract knows every hospital, device, patient and doctor
/// of the deployment described by `cfg`.
pub fn deployment_chain(cfg: &RunConfig, fleet: &[DeviceProfile]) -> Result<Chain, ScenarioError> {
    let mut contract = Contract::from_config(&cfg.contract).map_err(ScenarioError::Config)?;
    for d in fleet {
        contract.register(Identity::new(d.device_id.clone(), Role::Device));
        contract.register(Identity::new(d.patient_id.as_str(), Role::Patient));
    }
    for j in 1..=cfg.records.doctors {
        contract.register(Identity::new(format!("doctor-{j}"), Role::Doctor));
    }
    Ok(Chain::with_contract(
        &cfg.ledger.validators,
        0,
        cfg.ledger.params(),
        contract,
    )?)
}

/// Runs the deployment described by `cfg`, with `faults` added to the ones
/// listed in the config (later entries win for the same device).
///
/// Telemetry flows for `run.duration` ticks and drains. Then the hospital
/// stores one record per patient, and `patient-1` grants `doctor-1` access
/// when both exist.
pub fn run_scenario(cfg: &RunConfig, faults: &[(NodeId, FaultSpec)]) -> Result<RunOutcome, ScenarioError> {
    cfg.validate().map_err(ScenarioError::Config)?;
    let fleet = fleet_for(cfg);
    let mut fault_map: BTreeMap<NodeId, FaultSpec> = BTreeMap::new();
    for f in &cfg.devices.faults {
        fault_map.insert(f.device.clone(), f.spec().map_err(ScenarioError::Config)?);
    }
    for (d, f) in faults {
        if !fleet.iter().any(|p| &p.device_id == d) {
            return Err(ScenarioError::UnknownDevice(d.clone()));
        }
        f.validate().map_err(ScenarioError::Config)?;
        fault_map.insert(d.clone(), *f);
    }

    let mut chain = deployment_chain(cfg, &fleet)?;
    let hospital = cfg.ledger.validators[0].clone();
    let mut sim: Sim<Transaction> = Sim::new(&cfg.net.with_seed(derive_seed(cfg.seed, NET_STREAM)))?;
    if cfg.run.trace {
        sim.enable_trace();
    }
    let stats = {
        let mut driver = Driver::new(&mut chain, &mut sim, hospital.clone(), cfg.run.duration);
        for p in &fleet {
            let dev = DeviceSim::new(p.clone(), fault_map.get(&p.device_id).copied());
            driver.add_periodic(&mut sim, dev, None)?;
        }
        driver.run(&mut sim)?
    };

    let mut store = RecordStore::with_node_count(cfg.records.storage_nodes, cfg.records.replication_factor)?;
    let now: Ticks = sim.now().max(chain.head().timestamp);
    let mut anchors = Vec::new();
    for i in 1..=fleet.len() {
        anchors.push(store.put_record(&mut chain, &hospital, &synthetic_record(i), now)?);
    }
    if cfg.records.doctors > 0 {
        let patient = NodeId::new("patient-1");
        let grant = Transaction::new(
            TxKind::AccessGrant {
                patient_id: patient.to_string(),
                grantee_id: NodeId::new("doctor-1"),
            },
            patient.clone(),
            now,
            chain.next_nonce(&patient),
        );
        chain.submit(grant)?;
        chain.seal_pending(now);
    }

    Ok(RunOutcome {
        chain,
        store,
        stats,
        trace_digest: sim.trace_digest(),
        trace: sim.take_trace_lines(),
        anchors,
        fleet,
        faults: fault_map,
        duration: cfg.run.duration,
    })
}
