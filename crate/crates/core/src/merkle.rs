//! Binary Merkle aggregation over digests.

use crate::digest::{hash_bytes, hash_concat, Digest256};

/// Root of the binary Merkle tree over `leaves`.
///
/// - no leaves: `hash_bytes(b"")`
/// - one leaf: `hash_bytes(leaf)`
/// - otherwise pairs are hashed as `H(left || right)` level by level, and an
///   odd-width level duplicates its last node.
pub fn merkle_root(leaves: &[Digest256]) -> Digest256 {
    match leaves {
        [] => hash_bytes(b""),
        [only] => hash_bytes(only.as_bytes()),
        _ => {
            let mut level: Vec<Digest256> = leaves.to_vec();
            while level.len() > 1 {
                if level.len() % 2 == 1 {
                    level.push(*level.last().unwrap());
                }
                level = level
                    .chunks_exact(2)
                    .map(|p| hash_concat(&[p[0].as_bytes(), p[1].as_bytes()]))
                    .collect();
            }
            level[0]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf(i: u8) -> Digest256 {
        hash_bytes(&[i])
    }

    #[test]
    fn empty_and_single() {
        assert_eq!(merkle_root(&[]), hash_bytes(b""));
        let d = leaf(1);
        assert_eq!(merkle_root(&[d]), hash_bytes(d.as_bytes()));
    }

    #[test]
    fn three_leaves_duplicate_last() {
        let (a, b, c) = (leaf(0), leaf(1), leaf(2));
        let ab = hash_concat(&[a.as_bytes(), b.as_bytes()]);
        let cc = hash_concat(&[c.as_bytes(), c.as_bytes()]);
        assert_eq!(merkle_root(&[a, b, c]), hash_concat(&[ab.as_bytes(), cc.as_bytes()]));
    }

    #[test]
    fn order_matters() {
        assert_ne!(merkle_root(&[leaf(0), leaf(1)]), merkle_root(&[leaf(1), leaf(0)]));
    }
}
