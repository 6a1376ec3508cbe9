//! Admission policy for every ledger transaction, access control, and
//! malfunction localization for telemetry devices.
//!
//! [`Contract::evaluate`] is pure: it returns a [`Verdict`] together with the
//! state delta, and [`Contract::apply`] commits the delta. The ledger owns
//! the contract and calls both for every submission.

mod access;
mod health;
mod identity;
mod vitals;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use access::{check_access, AccessTable};
pub use health::{div_round, DetectorParams, HealthStatus, SampleOutcome, VitalModel, PPM};
pub use identity::{Identity, Registry, Role};
pub use vitals::{validate_vitals, PlausibilityBounds, UnsupportedVitalKind};

use crate::devices::{to_milli, TelemetryReading, VitalKind};
use crate::ids::{NodeId, Ticks};
use crate::ledger::{Transaction, TxKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    Plausibility,
    AccessDenied,
    UnknownIdentity,
    Malformed,
}

impl RejectReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::Plausibility => "plausibility",
            RejectReason::AccessDenied => "access-denied",
            RejectReason::UnknownIdentity => "unknown-identity",
            RejectReason::Malformed => "malformed",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Accept,
    Reject(RejectReason),
}

impl Verdict {
    pub fn is_accept(self) -> bool {
        self == Verdict::Accept
    }
}

/// Emitted the first time a (device, vital) stream becomes flagged.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlagEvent {
    pub device_id: NodeId,
    pub vital_kind: VitalKind,
    pub sample_index: u64,
    pub reading_time: Ticks,
    pub value_milli: i64,
}

/// Health model update carried by an evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HealthDelta {
    pub key: (NodeId, VitalKind),
    pub model: VitalModel,
    pub outcome: SampleOutcome,
    pub flag: Option<FlagEvent>,
}

/// Result of [`Contract::evaluate`]: the verdict plus the state it implies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evaluation {
    pub verdict: Verdict,
    pub health: Option<HealthDelta>,
}

/// `[contract]` section of the run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContractConfig {
    pub alpha: f64,
    pub k: f64,
    pub consecutive: u32,
    pub warmup: u64,
    pub reference_alpha: f64,
    pub variance_floor: f64,
    /// Inclusive bounds per vital kind in physical units; missing kinds
    /// keep their defaults.
    pub bounds: BTreeMap<VitalKind, [f64; 2]>,
}

impl Default for ContractConfig {
    fn default() -> Self {
        let d = DetectorParams::default();
        ContractConfig {
            alpha: d.alpha_ppm as f64 / PPM as f64,
            k: d.k_milli as f64 / 1000.0,
            consecutive: d.consecutive,
            warmup: d.warmup,
            reference_alpha: d.reference_alpha_ppm as f64 / PPM as f64,
            variance_floor: d.variance_floor_ppm as f64 / PPM as f64,
            bounds: BTreeMap::new(),
        }
    }
}

impl ContractConfig {
    pub fn detector(&self) -> Result<DetectorParams, String> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v <= 1.0 {
                Ok((v * PPM as f64).round() as i64)
            } else {
                Err(format!("contract.{name} must be in (0, 1], got {v}"))
            }
        };
        if !(self.k.is_finite() && self.k > 0.0 && self.k <= 1000.0) {
            return Err(format!("contract.k must be in (0, 1000], got {}", self.k));
        }
        if self.consecutive == 0 {
            return Err("contract.consecutive must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.variance_floor) {
            return Err(format!(
                "contract.variance_floor must be in [0, 1), got {}",
                self.variance_floor
            ));
        }
        let floor = (self.variance_floor * PPM as f64).round() as i64;
        Ok(DetectorParams {
            alpha_ppm: unit("alpha", self.alpha)?,
            k_milli: (self.k * 1000.0).round() as i64,
            consecutive: self.consecutive,
            warmup: self.warmup,
            reference_alpha_ppm: unit("reference_alpha", self.reference_alpha)?,
            variance_floor_ppm: floor,
        })
    }

    pub fn plausibility(&self) -> Result<PlausibilityBounds, String> {
        let mut b = PlausibilityBounds::default();
        for (&kind, &[lo, hi]) in &self.bounds {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(format!("contract.bounds.{kind}: need lo <= hi, got [{lo}, {hi}]"));
            }
            b.set(kind, to_milli(lo), to_milli(hi));
        }
        Ok(b)
    }
}

/// Policy engine state: identities, committed grants, device health.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contract {
    params: DetectorParams,
    bounds: PlausibilityBounds,
    registry: Registry,
    access: AccessTable,
    health: BTreeMap<(NodeId, VitalKind), VitalModel>,
    flag_events: Vec<FlagEvent>,
}

impl Default for Contract {
    fn default() -> Self {
        Contract::new(DetectorParams::default(), PlausibilityBounds::default())
    }
}

impl Contract {
    pub fn new(params: DetectorParams, bounds: PlausibilityBounds) -> Self {
        Contract {
            params,
            bounds,
            registry: Registry::new(),
            access: AccessTable::new(),
            health: BTreeMap::new(),
            flag_events: Vec::new(),
        }
    }

    pub fn from_config(cfg: &ContractConfig) -> Result<Self, String> {
        Ok(Contract::new(cfg.detector()?, cfg.plausibility()?))
    }

    pub fn register(&mut self, identity: Identity) -> bool {
        self.registry.register(identity)
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn access_table(&self) -> &AccessTable {
        &self.access
    }

    pub fn params(&self) -> &DetectorParams {
        &self.params
    }

    pub fn bounds(&self) -> &PlausibilityBounds {
        &self.bounds
    }

    pub fn health(&self) -> &BTreeMap<(NodeId, VitalKind), VitalModel> {
        &self.health
    }

    pub fn device_model(&self, device: &NodeId, kind: VitalKind) -> Option<&VitalModel> {
        self.health.get(&(device.clone(), kind))
    }

    pub fn flag_events(&self) -> &[FlagEvent] {
        &self.flag_events
    }

    /// Decides on `tx` without changing any state.
    pub fn evaluate(&self, tx: &Transaction) -> Evaluation {
        let reject = |r| Evaluation {
            verdict: Verdict::Reject(r),
            health: None,
        };
        let Some(role) = self.registry.role_of(&tx.submitter) else {
            return reject(RejectReason::UnknownIdentity);
        };
        match &tx.kind {
            TxKind::Telemetry(reading) => {
                if role != Role::Device {
                    return reject(RejectReason::AccessDenied);
                }
                if reading.device_id != tx.submitter || reading.patient_id.is_empty() {
                    return reject(RejectReason::Malformed);
                }
                let Ok(plausible) = self.bounds.validate(reading) else {
                    return reject(RejectReason::Malformed);
                };
                let health = self.health_delta(reading, plausible);
                Evaluation {
                    verdict: if plausible {
                        Verdict::Accept
                    } else {
                        Verdict::Reject(RejectReason::Plausibility)
                    },
                    health: Some(health),
                }
            }
            TxKind::RecordAnchor {
                record_id,
                replica_locations,
                ..
            } => {
                if role != Role::Hospital {
                    return reject(RejectReason::AccessDenied);
                }
                if record_id.is_empty() || replica_locations.is_empty() {
                    return reject(RejectReason::Malformed);
                }
                Evaluation {
                    verdict: Verdict::Accept,
                    health: None,
                }
            }
            TxKind::AccessGrant {
                patient_id,
                grantee_id,
            }
            | TxKind::AccessRevoke {
                patient_id,
                grantee_id,
            } => {
                let owner = role == Role::Patient && tx.submitter.as_str() == patient_id;
                if !(owner || role == Role::Hospital) {
                    return reject(RejectReason::AccessDenied);
                }
                if self.registry.role_of(grantee_id).is_none() {
                    return reject(RejectReason::Malformed);
                }
                Evaluation {
                    verdict: Verdict::Accept,
                    health: None,
                }
            }
        }
    }

    fn health_delta(&self, reading: &TelemetryReading, plausible: bool) -> HealthDelta {
        let key = (reading.device_id.clone(), reading.vital_kind);
        let prev = self.health.get(&key).cloned().unwrap_or_default();
        let (model, outcome) = prev.observe(reading.value, plausible, &self.params);
        let flag = outcome.newly_flagged.then(|| FlagEvent {
            device_id: reading.device_id.clone(),
            vital_kind: reading.vital_kind,
            sample_index: prev.samples_seen,
            reading_time: reading.timestamp,
            value_milli: reading.value,
        });
        HealthDelta {
            key,
            model,
            outcome,
            flag,
        }
    }

    /// Commits the state implied by an evaluation and returns its verdict.
    pub fn apply(&mut self, eval: Evaluation) -> Verdict {
        if let Some(h) = eval.health {
            if let Some(f) = h.flag {
                self.flag_events.push(f);
            }
            self.health.insert(h.key, h.model);
        }
        eval.verdict
    }

    /// `evaluate` followed by `apply`.
    pub fn admit(&mut self, tx: &Transaction) -> Verdict {
        let e = self.evaluate(tx);
        self.apply(e)
    }

    /// Applies the effects of a transaction once it is committed in a block.
    pub fn on_commit(&mut self, tx: &Transaction) {
        match &tx.kind {
            TxKind::AccessGrant {
                patient_id,
                grantee_id,
            } => self.access.grant(patient_id, grantee_id),
            TxKind::AccessRevoke {
                patient_id,
                grantee_id,
            } => self.access.revoke(patient_id, grantee_id),
            _ => {}
        }
    }

    /// Access decision for a registered requester; unregistered ids are denied.
    pub fn check_access(&self, requester: &NodeId, patient_id: &str) -> bool {
        self.registry
            .resolve(requester)
            .is_some_and(|id| check_access(&id, patient_id, &self.access))
    }

    /// Devices with any flagged vital stream, sorted.
    pub fn flag_malfunctions(&self) -> Vec<NodeId> {
        let mut out: Vec<NodeId> = self
            .health
            .iter()
            .filter(|(_, m)| m.status == HealthStatus::Flagged)
            .map(|((d, _), _)| d.clone())
            .collect();
        out.sort();
        out.dedup();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::digest::Digest256;

    fn contract() -> Contract {
        let mut c = Contract::default();
        c.register(Identity::new("hospital-1", Role::Hospital));
        c.register(Identity::new("doctor-1", Role::Doctor));
        c.register(Identity::new("patient-1", Role::Patient));
        c.register(Identity::new("patient-2", Role::Patient));
        c.register(Identity::new("device-1", Role::Device));
        c.register(Identity::new("device-2", Role::Device));
        c
    }

    fn telemetry(dev: &str, kind: VitalKind, v: f64, t: Ticks) -> Transaction {
        Transaction::new(
            TxKind::Telemetry(TelemetryReading {
                device_id: dev.into(),
                patient_id: "patient-1".into(),
                vital_kind: kind,
                value: to_milli(v),
                timestamp: t,
            }),
            dev,
            t,
            t,
        )
    }

    fn anchor(by: &str) -> Transaction {
        Transaction::new(
            TxKind::RecordAnchor {
                record_id: "patient-1".into(),
                payload_digest: Digest256::ZERO,
                replica_locations: vec!["storage-1".into()],
            },
            by,
            0,
            0,
        )
    }

    fn grant(by: &str, patient: &str) -> Transaction {
        Transaction::new(
            TxKind::AccessGrant {
                patient_id: patient.into(),
                grantee_id: "doctor-1".into(),
            },
            by,
            0,
            0,
        )
    }

    #[test]
    fn telemetry_admission() {
        let c = contract();
        let ok = telemetry("device-1", VitalKind::HeartRate, 72.0, 1000);
        assert_eq!(c.evaluate(&ok).verdict, Verdict::Accept);
        let zero = telemetry("device-1", VitalKind::HeartRate, 0.0, 1000);
        assert_eq!(
            c.evaluate(&zero).verdict,
            Verdict::Reject(RejectReason::Plausibility)
        );
        let stranger = telemetry("device-9", VitalKind::HeartRate, 72.0, 1000);
        assert_eq!(
            c.evaluate(&stranger).verdict,
            Verdict::Reject(RejectReason::UnknownIdentity)
        );
        let mut spoofed = ok.clone();
        spoofed.submitter = "device-2".into();
        assert_eq!(
            c.evaluate(&spoofed).verdict,
            Verdict::Reject(RejectReason::Malformed)
        );
        let mut by_hospital = ok;
        by_hospital.submitter = "hospital-1".into();
        assert_eq!(
            c.evaluate(&by_hospital).verdict,
            Verdict::Reject(RejectReason::AccessDenied)
        );
    }

    #[test]
    fn evaluate_is_pure() {
        let c = contract();
        let before = c.clone();
        let e = c.evaluate(&telemetry("device-1", VitalKind::HeartRate, 72.0, 1000));
        assert_eq!(c, before);
        assert!(e.health.is_some());
    }

    #[test]
    fn rejected_telemetry_still_feeds_the_model() {
        let mut c = contract();
        c.admit(&telemetry("device-1", VitalKind::HeartRate, 0.0, 1000));
        let m = c.device_model(&"device-1".into(), VitalKind::HeartRate).unwrap();
        assert_eq!(m.samples_seen, 1);
        assert_eq!(m.consecutive_violations, 1);
    }

    #[test]
    fn anchors_need_a_hospital() {
        let c = contract();
        assert_eq!(c.evaluate(&anchor("hospital-1")).verdict, Verdict::Accept);
        assert_eq!(
            c.evaluate(&anchor("device-1")).verdict,
            Verdict::Reject(RejectReason::AccessDenied)
        );
        assert_eq!(
            c.evaluate(&anchor("doctor-1")).verdict,
            Verdict::Reject(RejectReason::AccessDenied)
        );
    }

    #[test]
    fn grants_need_owner_or_hospital_and_apply_on_commit() {
        let mut c = contract();
        assert!(c.evaluate(&grant("patient-1", "patient-1")).verdict.is_accept());
        assert!(c.evaluate(&grant("hospital-1", "patient-1")).verdict.is_accept());
        assert_eq!(
            c.evaluate(&grant("patient-2", "patient-1")).verdict,
            Verdict::Reject(RejectReason::AccessDenied)
        );
        assert_eq!(
            c.evaluate(&grant("doctor-1", "patient-1")).verdict,
            Verdict::Reject(RejectReason::AccessDenied)
        );
        let g = grant("patient-1", "patient-1");
        assert!(c.admit(&g).is_accept());
        assert!(!c.check_access(&"doctor-1".into(), "patient-1"));
        c.on_commit(&g);
        assert!(c.check_access(&"doctor-1".into(), "patient-1"));
    }

    #[test]
    fn stuck_device_is_localized() {
        let mut c = contract();
        let mut t = 0;
        for _ in 0..50 {
            t += 1000;
            c.admit(&telemetry("device-1", VitalKind::HeartRate, 72.0, t));
            c.admit(&telemetry("device-2", VitalKind::SpO2, 97.0, t));
        }
        assert!(c.flag_malfunctions().is_empty());
        for i in 0..5 {
            t += 1000;
            c.admit(&telemetry("device-1", VitalKind::HeartRate, 0.0, t));
            c.admit(&telemetry("device-2", VitalKind::SpO2, 97.0, t));
            assert_eq!(c.flag_malfunctions().is_empty(), i < 4);
        }
        assert_eq!(c.flag_malfunctions(), vec![NodeId::from("device-1")]);
        assert_eq!(c.flag_events().len(), 1);
        assert_eq!(c.flag_events()[0].sample_index, 54);
    }

    #[test]
    fn config_validation() {
        let mut cfg = ContractConfig::default();
        assert_eq!(cfg.detector().unwrap(), DetectorParams::default());
        cfg.alpha = 1.5;
        assert!(cfg.detector().is_err());
        let mut cfg = ContractConfig::default();
        cfg.bounds.insert(VitalKind::HeartRate, [300.0, 20.0]);
        assert!(cfg.plausibility().is_err());
    }
}
