use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

use super::placement::place_replicas;
use super::record::{is_safe_id, parse_record_id, patient_of, IntegrityReport, PatientRecord, RecordAnchor};
use crate::codec::{canonical_decode, canonical_encode};
use crate::contract::RejectReason;
use crate::digest::hash_bytes;
use crate::ids::{NodeId, Ticks};
use crate::ledger::{Chain, LedgerError, Transaction, TxKind};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RecordError {
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("need {needed} online storage nodes, {online} available")]
    InsufficientReplicas { needed: usize, online: usize },
    #[error("anchor rejected by policy: {0}")]
    PolicyRejected(RejectReason),
    #[error("record id {0} already exists")]
    DuplicateRecordId(String),
    #[error("access denied")]
    AccessDenied,
    #[error("record {0} not found")]
    NotFound(String),
    #[error("every reachable replica of {0} is corrupt")]
    AllReplicasCorrupt(String),
    #[error("no replica holder of {0} is reachable")]
    AllReplicasUnreachable(String),
    #[error("unknown storage node {0}")]
    UnknownNode(NodeId),
    #[error("ledger error: {0}")]
    Ledger(String),
}

#[derive(Debug, Clone, Default)]
struct StorageNode {
    online: bool,
    replicas: BTreeMap<String, Vec<u8>>,
}

/// Reads the committed anchor for `record_id` back out of the chain.
pub fn anchor_of(chain: &Chain, record_id: &str) -> Option<RecordAnchor> {
    let (at, tx) = chain.anchor(record_id)?;
    match &tx.kind {
        TxKind::RecordAnchor {
            record_id,
            payload_digest,
            replica_locations,
        } => Some(RecordAnchor {
            record_id: record_id.clone(),
            payload_digest: *payload_digest,
            replica_locations: replica_locations.clone(),
            anchored_height: at.height,
        }),
        _ => None,
    }
}

/// Replicated storage for patient records. Every payload is kept as its
/// canonical bytes on `replication_factor` storage nodes; the ledger holds
/// the digest those bytes must match.
///
/// Reads take `&self` and can run from several threads at once. Puts and
/// online/offline toggles take `&mut self`, which serializes them.
#[derive(Debug)]
pub struct RecordStore {
    nodes: BTreeMap<NodeId, StorageNode>,
    replication_factor: usize,
    access_checks: AtomicU64,
    replica_reads: AtomicU64,
}

impl RecordStore {
    /// A store over `nodes`, all online and empty.
    pub fn new(nodes: &[NodeId], replication_factor: usize) -> Result<Self, RecordError> {
        if replication_factor == 0 {
            return Err(RecordError::InvalidRecord(
                "replication factor must be at least 1".into(),
            ));
        }
        let mut map = BTreeMap::new();
        for n in nodes {
            if !is_safe_id(n.as_str()) {
                return Err(RecordError::InvalidRecord(format!("bad storage node id {n}")));
            }
            let fresh = StorageNode {
                online: true,
                replicas: BTreeMap::new(),
            };
            if map.insert(n.clone(), fresh).is_some() {
                return Err(RecordError::InvalidRecord(format!("duplicate storage node {n}")));
            }
        }
        Ok(RecordStore {
            nodes: map,
            replication_factor,
            access_checks: AtomicU64::new(0),
            replica_reads: AtomicU64::new(0),
        })
    }

    /// Nodes named `storage-1` .. `storage-n`.
    pub fn with_node_count(n: usize, replication_factor: usize) -> Result<Self, RecordError> {
        let ids: Vec<NodeId> = (1..=n).map(|i| NodeId::new(format!("storage-{i}"))).collect();
        RecordStore::new(&ids, replication_factor)
    }

    pub fn replication_factor(&self) -> usize {
        self.replication_factor
    }

    pub fn node_ids(&self) -> impl Iterator<Item = &NodeId> {
        self.nodes.keys()
    }

    pub fn is_online(&self, node: &NodeId) -> Option<bool> {
        self.nodes.get(node).map(|n| n.online)
    }

    pub fn online_nodes(&self) -> impl Iterator<Item = &NodeId> {
        self.nodes.iter().filter(|(_, n)| n.online).map(|(id, _)| id)
    }

    /// How many access decisions reads have asked the contract for.
    pub fn access_checks(&self) -> u64 {
        self.access_checks.load(Ordering::Relaxed)
    }

    /// How many replica payloads reads and verifications have loaded.
    pub fn replica_reads(&self) -> u64 {
        self.replica_reads.load(Ordering::Relaxed)
    }

    /// Stores the first version of `record` under its patient id.
    pub fn put_record(
        &mut self,
        chain: &mut Chain,
        submitter: &NodeId,
        record: &PatientRecord,
        now: Ticks,
    ) -> Result<RecordAnchor, RecordError> {
        let id = record.patient_id.clone();
        self.put_record_as(chain, submitter, &id, record, now)
    }

    /// Stores `record` under an explicit id (`patient` or `patient@v<n>`).
    ///
    /// Replicas go to the online nodes with the highest rendezvous score, the
    /// anchor is submitted and blocks are sealed until it is committed.
    pub fn put_record_as(
        &mut self,
        chain: &mut Chain,
        submitter: &NodeId,
        record_id: &str,
        record: &PatientRecord,
        now: Ticks,
    ) -> Result<RecordAnchor, RecordError> {
        let Some((patient, _)) = parse_record_id(record_id) else {
            return Err(RecordError::InvalidRecord(format!("bad record id {record_id:?}")));
        };
        if patient != record.patient_id {
            return Err(RecordError::InvalidRecord(format!(
                "record id {record_id} does not belong to patient {}",
                record.patient_id
            )));
        }
        if chain.has_anchor(record_id)
            || self.nodes.values().any(|n| n.replicas.contains_key(record_id))
        {
            return Err(RecordError::DuplicateRecordId(record_id.to_string()));
        }
        let online: Vec<NodeId> = self.online_nodes().cloned().collect();
        if online.len() < self.replication_factor {
            return Err(RecordError::InsufficientReplicas {
                needed: self.replication_factor,
                online: online.len(),
            });
        }
        let locations = place_replicas(record_id, &online, self.replication_factor);
        let payload = canonical_encode(record);
        let digest = hash_bytes(&payload);
        let tx = Transaction::new(
            TxKind::RecordAnchor {
                record_id: record_id.to_string(),
                payload_digest: digest,
                replica_locations: locations.clone(),
            },
            submitter.clone(),
            now,
            chain.next_nonce(submitter),
        );
        chain.submit(tx).map_err(|e| match e {
            LedgerError::PolicyRejected(r) => RecordError::PolicyRejected(r),
            other => RecordError::Ledger(other.to_string()),
        })?;
        for loc in &locations {
            let node = self.nodes.get_mut(loc).expect("placement only picks known nodes");
            node.replicas.insert(record_id.to_string(), payload.clone());
        }
        chain.seal_pending(now);
        anchor_of(chain, record_id)
            .ok_or_else(|| RecordError::Ledger(format!("anchor for {record_id} not committed")))
    }

    /// Fetches a record for `requester`, skipping offline replica holders.
    pub fn get_record(
        &self,
        chain: &Chain,
        record_id: &str,
        requester: &NodeId,
    ) -> Result<PatientRecord, RecordError> {
        self.get_record_via(chain, record_id, requester, |_| true)
    }

    /// Like [`get_record`](Self::get_record), but replica holders for which
    /// `reachable` is false are treated as offline (for partitioned networks).
    pub fn get_record_via(
        &self,
        chain: &Chain,
        record_id: &str,
        requester: &NodeId,
        reachable: impl Fn(&NodeId) -> bool,
    ) -> Result<PatientRecord, RecordError> {
        self.access_checks.fetch_add(1, Ordering::Relaxed);
        if !chain.contract().check_access(requester, patient_of(record_id)) {
            return Err(RecordError::AccessDenied);
        }
        let anchor =
            anchor_of(chain, record_id).ok_or_else(|| RecordError::NotFound(record_id.into()))?;
        let mut reached = 0usize;
        for loc in &anchor.replica_locations {
            let Some(bytes) = self.read_replica(loc, record_id, &reachable) else {
                continue;
            };
            reached += 1;
            let Some(bytes) = bytes else { continue };
            if hash_bytes(bytes) == anchor.payload_digest {
                if let Ok(rec) = canonical_decode::<PatientRecord>(bytes) {
                    return Ok(rec);
                }
            }
        }
        if reached == 0 {
            Err(RecordError::AllReplicasUnreachable(record_id.into()))
        } else {
            Err(RecordError::AllReplicasCorrupt(record_id.into()))
        }
    }

    /// `None` if the holder is offline or unreachable, `Some(None)` if it is
    /// reachable but has no payload for the record.
    fn read_replica(
        &self,
        node: &NodeId,
        record_id: &str,
        reachable: &impl Fn(&NodeId) -> bool,
    ) -> Option<Option<&Vec<u8>>> {
        let n = self.nodes.get(node)?;
        if !n.online || !reachable(node) {
            return None;
        }
        self.replica_reads.fetch_add(1, Ordering::Relaxed);
        Some(n.replicas.get(record_id))
    }

    /// Checks every replica holder's payload against the on-chain digest.
    pub fn verify_record(&self, chain: &Chain, record_id: &str) -> Result<IntegrityReport, RecordError> {
        self.verify_record_via(chain, record_id, |_| true)
    }

    pub fn verify_record_via(
        &self,
        chain: &Chain,
        record_id: &str,
        reachable: impl Fn(&NodeId) -> bool,
    ) -> Result<IntegrityReport, RecordError> {
        let anchor =
            anchor_of(chain, record_id).ok_or_else(|| RecordError::NotFound(record_id.into()))?;
        let mut report = IntegrityReport {
            ok: false,
            replicas_checked: 0,
            replicas_matching: 0,
            failing_replicas: Vec::new(),
            unreachable_replicas: Vec::new(),
        };
        for loc in &anchor.replica_locations {
            match self.read_replica(loc, record_id, &reachable) {
                None => report.unreachable_replicas.push(loc.clone()),
                Some(bytes) => {
                    report.replicas_checked += 1;
                    if bytes.is_some_and(|b| hash_bytes(b) == anchor.payload_digest) {
                        report.replicas_matching += 1;
                    } else {
                        report.failing_replicas.push(loc.clone());
                    }
                }
            }
        }
        report.ok = report.replicas_matching > 0;
        Ok(report)
    }

    pub fn take_node_offline(&mut self, node: &NodeId) -> Result<(), RecordError> {
        self.set_online(node, false)
    }

    pub fn bring_node_online(&mut self, node: &NodeId) -> Result<(), RecordError> {
        self.set_online(node, true)
    }

    fn set_online(&mut self, node: &NodeId, online: bool) -> Result<(), RecordError> {
        let n = self
            .nodes
            .get_mut(node)
            .ok_or_else(|| RecordError::UnknownNode(node.clone()))?;
        n.online = online;
        Ok(())
    }

    /// Stored payload bytes on one node.
    pub fn replica(&self, node: &NodeId, record_id: &str) -> Option<&[u8]> {
        self.nodes.get(node)?.replicas.get(record_id).map(Vec::as_slice)
    }

    /// Mutable access to stored bytes, for fault injection.
    pub fn replica_mut(&mut self, node: &NodeId, record_id: &str) -> Option<&mut Vec<u8>> {
        self.nodes.get_mut(node)?.replicas.get_mut(record_id)
    }

    /// XORs `mask` into byte `offset` of a replica. Returns false when the
    /// replica does not exist, the offset is out of range or `mask` is zero.
    pub fn corrupt_replica(&mut self, node: &NodeId, record_id: &str, offset: usize, mask: u8) -> bool {
        match self.replica_mut(node, record_id).and_then(|b| b.get_mut(offset)) {
            Some(byte) if mask != 0 => {
                *byte ^= mask;
                true
            }
            _ => false,
        }
    }

    /// Record ids held by any node, sorted.
    pub fn record_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self
            .nodes
            .values()
            .flat_map(|n| n.replicas.keys().cloned())
            .collect();
        ids.sort();
        ids.dedup();
        ids
    }

    /// Writes one file per (node, record): `<dir>/<node>/<record_id>.rec`
    /// holding exactly the canonical payload bytes.
    pub fn save(&self, dir: &Path) -> io::Result<()> {
        for (id, node) in &self.nodes {
            let nd = dir.join(id.as_str());
            fs::create_dir_all(&nd)?;
            for (rid, bytes) in &node.replicas {
                fs::write(nd.join(format!("{rid}.rec")), bytes)?;
            }
        }
        Ok(())
    }

    /// Loads a store written by [`save`](Self::save). Every subdirectory is a
    /// storage node; all nodes start online.
    pub fn load(dir: &Path, replication_factor: usize) -> io::Result<Self> {
        let invalid = |m: String| io::Error::new(io::ErrorKind::InvalidData, m);
        let mut node_dirs = Vec::new();
        for entry in fs::read_dir(dir)? {
            let entry = entry?;
            if entry.file_type()?.is_dir() {
                node_dirs.push(entry.path());
            }
        }
        node_dirs.sort();
        let mut ids = Vec::new();
        for p in &node_dirs {
            let name = p.file_name().and_then(|s| s.to_str()).unwrap_or_default();
            ids.push(NodeId::new(name));
        }
        let mut store =
            RecordStore::new(&ids, replication_factor).map_err(|e| invalid(e.to_string()))?;
        for (id, p) in ids.iter().zip(&node_dirs) {
            let node = store.nodes.get_mut(id).expect("just inserted");
            for entry in fs::read_dir(p)? {
                let path = entry?.path();
                let Some(rid) = path
                    .file_name()
                    .and_then(|s| s.to_str())
                    .and_then(|s| s.strip_suffix(".rec"))
                else {
                    continue;
                };
                if parse_record_id(rid).is_none() {
                    return Err(invalid(format!("bad record file {}", path.display())));
                }
                node.replicas.insert(rid.to_string(), fs::read(&path)?);
            }
        }
        Ok(store)
    }
}
