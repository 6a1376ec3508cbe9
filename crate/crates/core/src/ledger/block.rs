use crate::codec::{canonical_encode, CodecError, Decode, Decoder, Encode, Encoder};
use crate::digest::{hash_bytes, Digest256};
use crate::ids::{NodeId, Ticks};
use crate::merkle::merkle_root;

use super::tx::Transaction;

/// The hashed part of a block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockHeader {
    pub height: u64,
    pub prev_hash: Digest256,
    pub timestamp: Ticks,
    pub tx_root: Digest256,
    pub validator: NodeId,
}

impl BlockHeader {
    pub fn hash(&self) -> Digest256 {
        hash_bytes(&canonical_encode(self))
    }
}

impl Encode for BlockHeader {
    fn encode(&self, enc: &mut Encoder) {
        enc.u64(self.height)
            .digest(&self.prev_hash)
            .u64(self.timestamp)
            .digest(&self.tx_root)
            .value(&self.validator);
    }
}

/// A committed batch of transactions. Encoded as header fields, then the
/// transaction sequence, then `block_hash`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub height: u64,
    pub prev_hash: Digest256,
    pub timestamp: Ticks,
    pub tx_root: Digest256,
    pub validator: NodeId,
    pub txs: Vec<Transaction>,
    pub block_hash: Digest256,
}

impl Block {
    /// Builds a sealed block: computes the tx root and block hash.
    pub fn seal(
        height: u64,
        prev_hash: Digest256,
        timestamp: Ticks,
        validator: NodeId,
        txs: Vec<Transaction>,
    ) -> Block {
        let tx_root = tx_root(&txs);
        let header = BlockHeader {
            height,
            prev_hash,
            timestamp,
            tx_root,
            validator,
        };
        let block_hash = header.hash();
        let BlockHeader { validator, .. } = header;
        Block {
            height,
            prev_hash,
            timestamp,
            tx_root,
            validator,
            txs,
            block_hash,
        }
    }

    pub fn header(&self) -> BlockHeader {
        BlockHeader {
            height: self.height,
            prev_hash: self.prev_hash,
            timestamp: self.timestamp,
            tx_root: self.tx_root,
            validator: self.validator.clone(),
        }
    }
}

pub fn tx_root(txs: &[Transaction]) -> Digest256 {
    let leaves: Vec<Digest256> = txs.iter().map(Transaction::digest).collect();
    merkle_root(&leaves)
}

impl Encode for Block {
    fn encode(&self, enc: &mut Encoder) {
        enc.u64(self.height)
            .digest(&self.prev_hash)
            .u64(self.timestamp)
            .digest(&self.tx_root)
            .value(&self.validator)
            .seq(&self.txs)
            .digest(&self.block_hash);
    }
}

impl Decode for Block {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        Ok(Block {
            height: dec.u64()?,
            prev_hash: dec.digest()?,
            timestamp: dec.u64()?,
            tx_root: dec.digest()?,
            validator: NodeId::decode(dec)?,
            txs: dec.seq()?,
            block_hash: dec.digest()?,
        })
    }
}
