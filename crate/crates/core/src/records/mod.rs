//! Patient records replicated over storage nodes, each payload anchored on
//! the ledger by digest.

mod placement;
mod record;
mod store;

pub use placement::{place_replicas, rendezvous_score};
pub use record::{
    is_safe_id, parse_record_id, patient_of, record_id_for, IntegrityReport, PatientRecord,
    RecordAnchor,
};
pub use store::{anchor_of, RecordError, RecordStore};
