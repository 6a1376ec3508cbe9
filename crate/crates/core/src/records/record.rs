use serde::{Deserialize, Serialize};

use crate::codec::{CodecError, Decode, Decoder, Encode, Encoder};
use crate::digest::Digest256;
use crate::ids::NodeId;

/// A patient's medical record as held by the hospital layer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatientRecord {
    pub patient_id: String,
    pub patient_name: String,
    pub disease_history: Vec<String>,
    pub medicines_prescribed: Vec<String>,
}

impl Encode for PatientRecord {
    fn encode(&self, enc: &mut Encoder) {
        enc.str(&self.patient_id)
            .str(&self.patient_name)
            .seq(&self.disease_history)
            .seq(&self.medicines_prescribed);
    }
}

impl Decode for PatientRecord {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        Ok(PatientRecord {
            patient_id: dec.string()?,
            patient_name: dec.string()?,
            disease_history: dec.seq()?,
            medicines_prescribed: dec.seq()?,
        })
    }
}

/// The committed on-chain commitment to a record payload.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordAnchor {
    pub record_id: String,
    pub payload_digest: Digest256,
    pub replica_locations: Vec<NodeId>,
    pub anchored_height: u64,
}

/// Result of checking every replica of one record against its anchor.
///
/// `ok` holds when at least one replica matches. Offline replica holders are
/// listed in `unreachable_replicas` and counted neither as checked nor as
/// failing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegrityReport {
    pub ok: bool,
    pub replicas_checked: usize,
    pub replicas_matching: usize,
    pub failing_replicas: Vec<NodeId>,
    pub unreachable_replicas: Vec<NodeId>,
}

/// Characters allowed in record and storage node ids. Both appear in file
/// names when a store is persisted.
pub fn is_safe_id(s: &str) -> bool {
    !s.is_empty()
        && s != "."
        && s != ".."
        && s
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'.' | b'_' | b'-'))
}

/// Record id for the first version of a patient's record (`patient_id`) or
/// a later one (`patient_id@v<n>`).
pub fn record_id_for(patient_id: &str, version: u32) -> String {
    if version <= 1 {
        patient_id.to_string()
    } else {
        format!("{patient_id}@v{version}")
    }
}

/// The patient a record id belongs to.
pub fn patient_of(record_id: &str) -> &str {
    record_id.split_once('@').map_or(record_id, |(p, _)| p)
}

/// Parses a record id into `(patient_id, version)`.
pub fn parse_record_id(record_id: &str) -> Option<(&str, u32)> {
    match record_id.split_once('@') {
        None => is_safe_id(record_id).then_some((record_id, 1)),
        Some((p, v)) => {
            let n: u32 = v.strip_prefix('v')?.parse().ok()?;
            (is_safe_id(p) && n >= 2 && v == format!("v{n}")).then_some((p, n))
        }
    }
}
