use serde::{Deserialize, Serialize};

use crate::codec::{digest_of, CodecError, Decode, Decoder, Encode, Encoder};
use crate::devices::TelemetryReading;
use crate::digest::Digest256;
use crate::ids::{NodeId, Ticks};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TxKind {
    Telemetry(TelemetryReading),
    RecordAnchor {
        record_id: String,
        payload_digest: Digest256,
        replica_locations: Vec<NodeId>,
    },
    AccessGrant {
        patient_id: String,
        grantee_id: NodeId,
    },
    AccessRevoke {
        patient_id: String,
        grantee_id: NodeId,
    },
}

impl TxKind {
    pub fn tag(&self) -> u8 {
        match self {
            TxKind::Telemetry(_) => 0,
            TxKind::RecordAnchor { .. } => 1,
            TxKind::AccessGrant { .. } => 2,
            TxKind::AccessRevoke { .. } => 3,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            TxKind::Telemetry(_) => "telemetry",
            TxKind::RecordAnchor { .. } => "record_anchor",
            TxKind::AccessGrant { .. } => "access_grant",
            TxKind::AccessRevoke { .. } => "access_revoke",
        }
    }
}

impl Encode for TxKind {
    fn encode(&self, enc: &mut Encoder) {
        enc.tag(self.tag());
        match self {
            TxKind::Telemetry(r) => {
                enc.value(r);
            }
            TxKind::RecordAnchor {
                record_id,
                payload_digest,
                replica_locations,
            } => {
                enc.str(record_id).digest(payload_digest).seq(replica_locations);
            }
            TxKind::AccessGrant {
                patient_id,
                grantee_id,
            }
            | TxKind::AccessRevoke {
                patient_id,
                grantee_id,
            } => {
                enc.str(patient_id).value(grantee_id);
            }
        }
    }
}

impl Decode for TxKind {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        match dec.tag()? {
            0 => Ok(TxKind::Telemetry(TelemetryReading::decode(dec)?)),
            1 => Ok(TxKind::RecordAnchor {
                record_id: dec.string()?,
                payload_digest: dec.digest()?,
                replica_locations: dec.seq()?,
            }),
            2 => Ok(TxKind::AccessGrant {
                patient_id: dec.string()?,
                grantee_id: NodeId::decode(dec)?,
            }),
            3 => Ok(TxKind::AccessRevoke {
                patient_id: dec.string()?,
                grantee_id: NodeId::decode(dec)?,
            }),
            tag => Err(CodecError::InvalidTag {
                tag,
                type_name: "TxKind",
            }),
        }
    }
}

/// A signed-off unit of work submitted to the ledger. Encoded as
/// `kind, submitter, submit_time, nonce`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Transaction {
    pub kind: TxKind,
    pub submitter: NodeId,
    pub submit_time: Ticks,
    pub nonce: u64,
}

impl Transaction {
    pub fn new(kind: TxKind, submitter: impl Into<NodeId>, submit_time: Ticks, nonce: u64) -> Self {
        Transaction {
            kind,
            submitter: submitter.into(),
            submit_time,
            nonce,
        }
    }

    /// Merkle leaf for this transaction.
    pub fn digest(&self) -> Digest256 {
        digest_of(self)
    }
}

impl Encode for Transaction {
    fn encode(&self, enc: &mut Encoder) {
        enc.value(&self.kind)
            .value(&self.submitter)
            .u64(self.submit_time)
            .u64(self.nonce);
    }
}

impl Decode for Transaction {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        Ok(Transaction {
            kind: TxKind::decode(dec)?,
            submitter: NodeId::decode(dec)?,
            submit_time: dec.u64()?,
            nonce: dec.u64()?,
        })
    }
}
