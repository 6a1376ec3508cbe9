use crate::codec::Encoder;
use crate::digest::hash_bytes;
use crate::ids::NodeId;

/// Rendezvous weight of `node` for `record_id`: the first 8 bytes, read
/// big-endian, of the hash of the canonical pair `(record_id, node)`.
pub fn rendezvous_score(record_id: &str, node: &NodeId) -> u64 {
    let mut enc = Encoder::new();
    enc.str(record_id).str(node.as_str());
    let d = hash_bytes(&enc.into_bytes());
    u64::from_be_bytes(d.0[..8].try_into().expect("8 bytes"))
}

/// The `r` nodes with the highest score, best first. Equal scores fall back
/// to ascending node id. Returns fewer than `r` nodes if `nodes` is short.
pub fn place_replicas(record_id: &str, nodes: &[NodeId], r: usize) -> Vec<NodeId> {
    let mut scored: Vec<(u64, &NodeId)> = nodes
        .iter()
        .map(|n| (rendezvous_score(record_id, n), n))
        .collect();
    scored.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    scored.dedup_by(|a, b| a.1 == b.1);
    scored.into_iter().take(r).map(|(_, n)| n.clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nodes(n: usize) -> Vec<NodeId> {
        (1..=n).map(|i| NodeId::new(format!("storage-{i}"))).collect()
    }

    #[test]
    fn placement_ignores_input_order() {
        let mut ns = nodes(7);
        let a = place_replicas("patient-4", &ns, 3);
        ns.reverse();
        assert_eq!(place_replicas("patient-4", &ns, 3), a);
        assert_eq!(a.len(), 3);
    }

    #[test]
    fn removing_an_unchosen_node_keeps_placement() {
        let ns = nodes(6);
        let chosen = place_replicas("patient-9", &ns, 3);
        let rest: Vec<NodeId> = ns.iter().filter(|n| **n != chosen[0]).cloned().collect();
        let unchosen: Vec<NodeId> = ns.iter().filter(|n| !chosen.contains(n)).cloned().collect();
        let without: Vec<NodeId> = ns.iter().filter(|n| **n != unchosen[0]).cloned().collect();
        assert_eq!(place_replicas("patient-9", &without, 3), chosen);
        assert_eq!(place_replicas("patient-9", &rest, 2), chosen[1..].to_vec());
    }
}
