use medchain_core::codec::canonical_encode;
use medchain_core::contract::{Identity, Role};
use medchain_core::ledger::{Chain, Transaction, TxKind};
use medchain_core::records::{
    patient_of, place_replicas, parse_record_id, record_id_for, PatientRecord, RecordError,
    RecordStore,
};
use medchain_core::{hash_bytes, NodeId};
use sha2::{Digest, Sha256};

fn id(s: &str) -> NodeId {
    NodeId::new(s)
}

fn record(patient: &str, disease: &str) -> PatientRecord {
    PatientRecord {
        patient_id: patient.into(),
        patient_name: format!("Name of {patient}"),
        disease_history: vec![disease.into()],
        medicines_prescribed: vec!["paracetamol".into(), "insulin".into()],
    }
}

fn setup(nodes: usize, r: usize) -> (Chain, RecordStore) {
    let mut chain = Chain::new(&[id("hospital-1")], 0).unwrap();
    let c = chain.contract_mut();
    for (name, role) in [
        ("patient-1", Role::Patient),
        ("patient-2", Role::Patient),
        ("doctor-1", Role::Doctor),
        ("doctor-2", Role::Doctor),
        ("device-1", Role::Device),
    ] {
        c.register(Identity::new(name, role));
    }
    (chain, RecordStore::with_node_count(nodes, r).unwrap())
}

fn grant(chain: &mut Chain, patient: &str, doctor: &str, now: u64) {
    let p = id(patient);
    let tx = Transaction::new(
        TxKind::AccessGrant {
            patient_id: patient.into(),
            grantee_id: id(doctor),
        },
        p.clone(),
        now,
        chain.next_nonce(&p),
    );
    chain.submit(tx).unwrap();
    chain.seal_pending(now);
}

/// Rendezvous placement written straight from its definition.
fn oracle_placement(record_id: &str, nodes: &[NodeId], r: usize) -> Vec<NodeId> {
    let enc = |s: &str| {
        let mut v = (s.len() as u32).to_be_bytes().to_vec();
        v.extend_from_slice(s.as_bytes());
        v
    };
    let mut scored: Vec<(u64, NodeId)> = nodes
        .iter()
        .map(|n| {
            let h = Sha256::new()
                .chain_update(enc(record_id))
                .chain_update(enc(n.as_str()))
                .finalize();
            (u64::from_be_bytes(h[..8].try_into().unwrap()), n.clone())
        })
        .collect();
    scored.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    scored.into_iter().take(r).map(|(_, n)| n).collect()
}

#[test]
fn placement_matches_independent_oracle() {
    for n in 1..=8 {
        let nodes: Vec<NodeId> = (1..=n).map(|i| id(&format!("storage-{i}"))).collect();
        for k in 0..50 {
            let rid = record_id_for(&format!("patient-{k}"), 1 + (k % 3) as u32);
            for r in 1..=n {
                assert_eq!(place_replicas(&rid, &nodes, r), oracle_placement(&rid, &nodes, r));
            }
        }
    }
}

#[test]
fn put_anchors_digest_and_placement() {
    let (mut chain, mut store) = setup(5, 3);
    let rec = record("patient-1", "asthma");
    let a = store.put_record(&mut chain, &id("hospital-1"), &rec, 0).unwrap();
    assert_eq!(a.record_id, "patient-1");
    assert_eq!(a.payload_digest, hash_bytes(&canonical_encode(&rec)));
    let nodes: Vec<NodeId> = store.node_ids().cloned().collect();
    assert_eq!(a.replica_locations, oracle_placement("patient-1", &nodes, 3));
    assert_eq!(a.anchored_height, 1);
    assert_eq!(chain.pending_len(), 0);
    for loc in &a.replica_locations {
        assert_eq!(store.replica(loc, "patient-1").unwrap(), canonical_encode(&rec));
    }
    assert_eq!(store.record_ids(), vec!["patient-1".to_string()]);
    assert!(chain.validate_chain().ok);
}

#[test]
fn role_based_reads() {
    let (mut chain, mut store) = setup(3, 3);
    let h = id("hospital-1");
    let rec = record("patient-1", "asthma");
    store.put_record(&mut chain, &h, &rec, 0).unwrap();
    store.put_record(&mut chain, &h, &record("patient-2", "flu"), 0).unwrap();

    assert_eq!(store.get_record(&chain, "patient-1", &h).unwrap(), rec);
    assert_eq!(store.get_record(&chain, "patient-1", &id("patient-1")).unwrap(), rec);
    for who in ["patient-2", "doctor-1", "device-1", "nobody"] {
        assert_eq!(
            store.get_record(&chain, "patient-1", &id(who)),
            Err(RecordError::AccessDenied),
            "{who}"
        );
    }
    grant(&mut chain, "patient-1", "doctor-1", 5_000);
    assert_eq!(store.get_record(&chain, "patient-1", &id("doctor-1")).unwrap(), rec);
    assert_eq!(store.get_record(&chain, "patient-2", &id("doctor-1")), Err(RecordError::AccessDenied));
    assert_eq!(store.get_record(&chain, "patient-1", &id("doctor-2")), Err(RecordError::AccessDenied));
}

#[test]
fn every_read_passes_the_access_check() {
    let (mut chain, mut store) = setup(3, 3);
    store
        .put_record(&mut chain, &id("hospital-1"), &record("patient-1", "asthma"), 0)
        .unwrap();
    assert_eq!(store.access_checks(), 0);
    let _ = store.get_record(&chain, "patient-1", &id("device-1"));
    assert_eq!((store.access_checks(), store.replica_reads()), (1, 0));
    let _ = store.get_record(&chain, "patient-9", &id("hospital-1"));
    assert_eq!((store.access_checks(), store.replica_reads()), (2, 0));
    store.get_record(&chain, "patient-1", &id("patient-1")).unwrap();
    assert_eq!((store.access_checks(), store.replica_reads()), (3, 1));
}

#[test]
fn corrupt_replicas_are_skipped_and_reported() {
    let (mut chain, mut store) = setup(4, 3);
    let h = id("hospital-1");
    let rec = record("patient-1", "asthma");
    let a = store.put_record(&mut chain, &h, &rec, 0).unwrap();
    let locs = a.replica_locations.clone();

    assert!(store.corrupt_replica(&locs[0], "patient-1", 5, 0xff));
    assert_eq!(store.get_record(&chain, "patient-1", &h).unwrap(), rec);
    let r = store.verify_record(&chain, "patient-1").unwrap();
    assert!(r.ok);
    assert_eq!((r.replicas_checked, r.replicas_matching), (3, 2));
    assert_eq!(r.failing_replicas, vec![locs[0].clone()]);

    for l in &locs[1..] {
        assert!(store.corrupt_replica(l, "patient-1", 0, 1));
    }
    assert_eq!(
        store.get_record(&chain, "patient-1", &h),
        Err(RecordError::AllReplicasCorrupt("patient-1".into()))
    );
    let r = store.verify_record(&chain, "patient-1").unwrap();
    assert!(!r.ok);
    assert_eq!(r.failing_replicas.len(), 3);
    assert!(!store.corrupt_replica(&locs[0], "patient-1", 10_000, 1));
    assert!(!store.corrupt_replica(&locs[0], "patient-1", 0, 0));
}

#[test]
fn offline_holders_and_availability() {
    let (mut chain, mut store) = setup(3, 3);
    let h = id("hospital-1");
    let rec = record("patient-1", "asthma");
    let a = store.put_record(&mut chain, &h, &rec, 0).unwrap();
    let locs = a.replica_locations;
    store.take_node_offline(&locs[0]).unwrap();
    store.take_node_offline(&locs[1]).unwrap();
    assert_eq!(store.get_record(&chain, "patient-1", &h).unwrap(), rec);
    store.take_node_offline(&locs[2]).unwrap();
    assert_eq!(
        store.get_record(&chain, "patient-1", &h),
        Err(RecordError::AllReplicasUnreachable("patient-1".into()))
    );
    let r = store.verify_record(&chain, "patient-1").unwrap();
    assert!(!r.ok);
    assert_eq!(r.replicas_checked, 0);
    assert_eq!(r.unreachable_replicas.len(), 3);
    assert!(r.failing_replicas.is_empty());

    store.bring_node_online(&locs[1]).unwrap();
    let reachable = |n: &NodeId| n != &locs[1];
    assert!(matches!(
        store.get_record_via(&chain, "patient-1", &h, reachable),
        Err(RecordError::AllReplicasUnreachable(_))
    ));
    assert_eq!(store.get_record(&chain, "patient-1", &h).unwrap(), rec);
    assert_eq!(store.take_node_offline(&id("storage-99")), Err(RecordError::UnknownNode(id("storage-99"))));
}

#[test]
fn placement_uses_online_nodes_and_needs_enough_of_them() {
    let (mut chain, mut store) = setup(4, 3);
    let h = id("hospital-1");
    let down = id("storage-2");
    store.take_node_offline(&down).unwrap();
    let a = store.put_record(&mut chain, &h, &record("patient-1", "a"), 0).unwrap();
    assert!(!a.replica_locations.contains(&down));
    store.take_node_offline(&id("storage-1")).unwrap();
    assert_eq!(
        store.put_record(&mut chain, &h, &record("patient-2", "b"), 0),
        Err(RecordError::InsufficientReplicas { needed: 3, online: 2 })
    );
    assert!(!chain.has_anchor("patient-2"));
}

#[test]
fn record_ids_and_versions() {
    let (mut chain, mut store) = setup(3, 2);
    let h = id("hospital-1");
    let v1 = record("patient-1", "asthma");
    let v2 = record("patient-1", "asthma, bronchitis");
    store.put_record(&mut chain, &h, &v1, 0).unwrap();
    assert_eq!(
        store.put_record(&mut chain, &h, &v1, 0),
        Err(RecordError::DuplicateRecordId("patient-1".into()))
    );
    let rid = record_id_for("patient-1", 2);
    assert_eq!(rid, "patient-1@v2");
    store.put_record_as(&mut chain, &h, &rid, &v2, 0).unwrap();
    assert_eq!(store.get_record(&chain, &rid, &id("patient-1")).unwrap(), v2);
    assert_eq!(store.get_record(&chain, &rid, &id("patient-2")), Err(RecordError::AccessDenied));
    assert_eq!(patient_of(&rid), "patient-1");
    assert_eq!(parse_record_id("patient-1@v12"), Some(("patient-1", 12)));
    for bad in ["", "..", "a/b", "p@v1", "p@v02", "p@x2", "p@v"] {
        assert_eq!(parse_record_id(bad), None, "{bad:?}");
    }
    for bad in ["patient-2", "../patient-1", "patient-1@v1"] {
        assert!(matches!(
            store.put_record_as(&mut chain, &h, bad, &v1, 0),
            Err(RecordError::InvalidRecord(_))
        ));
    }
}

#[test]
fn only_hospitals_anchor_records() {
    let (mut chain, mut store) = setup(3, 3);
    assert!(matches!(
        store.put_record(&mut chain, &id("doctor-1"), &record("patient-1", "x"), 0),
        Err(RecordError::PolicyRejected(_))
    ));
    assert!(store.record_ids().is_empty());
}

#[test]
fn persisted_store_reloads() {
    let (mut chain, mut store) = setup(4, 2);
    let h = id("hospital-1");
    for p in ["patient-1", "patient-2"] {
        store.put_record(&mut chain, &h, &record(p, "x"), 0).unwrap();
    }
    let dir = tempfile::tempdir().unwrap();
    store.save(dir.path()).unwrap();
    let loaded = RecordStore::load(dir.path(), 2).unwrap();
    assert_eq!(loaded.record_ids(), store.record_ids());
    for node in store.node_ids() {
        for rid in store.record_ids() {
            assert_eq!(loaded.replica(node, &rid), store.replica(node, &rid));
        }
    }
    assert_eq!(loaded.get_record(&chain, "patient-2", &h).unwrap(), record("patient-2", "x"));
    assert!(loaded.verify_record(&chain, "patient-1").unwrap().ok);
}
