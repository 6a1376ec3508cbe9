use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{digest_of, Encode, Encoder};
use crate::contract::{Contract, Identity, RejectReason, Role, Verdict};
use crate::digest::Digest256;
use crate::ids::{NodeId, Ticks};

use super::block::{tx_root, Block};
use super::tx::{Transaction, TxKind};

/// `[ledger]` section of the run configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LedgerParams {
    /// Ticks between block-formation opportunities.
    pub block_interval: Ticks,
    pub max_block_txs: usize,
}

impl Default for LedgerParams {
    fn default() -> Self {
        LedgerParams {
            block_interval: 1_000,
            max_block_txs: 16,
        }
    }
}

impl LedgerParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.block_interval == 0 {
            return Err("ledger.block_interval must be positive".into());
        }
        if self.max_block_txs == 0 {
            return Err("ledger.max_block_txs must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("validator set is empty")]
    EmptyValidatorSet,
    #[error("validator {0} listed twice")]
    DuplicateValidator(NodeId),
    #[error("invalid ledger parameters: {0}")]
    InvalidParams(String),
    #[error("transaction rejected by policy: {0}")]
    PolicyRejected(RejectReason),
    #[error("nonce {nonce} already used by {submitter}")]
    DuplicateNonce { submitter: NodeId, nonce: u64 },
}

/// Why a submission was refused. Rejections live outside the chain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditReason {
    Policy(RejectReason),
    DuplicateNonce,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEntry {
    /// Position in the sequence of policy evaluations; `None` when the
    /// submission never reached the policy engine.
    pub ordinal: Option<u64>,
    pub reason: AuditReason,
    pub tx: Transaction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChainFault {
    Malformed,
    GenesisInvalid,
    HeightMismatch,
    PrevHashMismatch,
    MerkleMismatch,
    HashMismatch,
    ValidatorMismatch,
    TimestampRegression,
}

impl ChainFault {
    pub fn as_str(self) -> &'static str {
        match self {
            ChainFault::Malformed => "malformed",
            ChainFault::GenesisInvalid => "genesis-invalid",
            ChainFault::HeightMismatch => "height-mismatch",
            ChainFault::PrevHashMismatch => "prev-hash-mismatch",
            ChainFault::MerkleMismatch => "merkle-mismatch",
            ChainFault::HashMismatch => "hash-mismatch",
            ChainFault::ValidatorMismatch => "validator-mismatch",
            ChainFault::TimestampRegression => "timestamp-regression",
        }
    }
}

impl fmt::Display for ChainFault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Result of a full chain check. Failures are data, not errors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainReport {
    pub ok: bool,
    pub blocks_checked: u64,
    pub failing_height: Option<u64>,
    pub fault: Option<ChainFault>,
}

impl ChainReport {
    pub(crate) fn pass(n: u64) -> Self {
        ChainReport {
            ok: true,
            blocks_checked: n,
            failing_height: None,
            fault: None,
        }
    }

    pub(crate) fn fail(height: u64, fault: ChainFault) -> Self {
        ChainReport {
            ok: false,
            blocks_checked: height,
            failing_height: Some(height),
            fault: Some(fault),
        }
    }
}

/// Recomputes every hash, Merkle root and link. `validators`, when given,
/// also checks the round-robin schedule.
pub fn validate_blocks(blocks: &[Block], validators: Option<&[NodeId]>) -> ChainReport {
    if blocks.is_empty() {
        return ChainReport::fail(0, ChainFault::GenesisInvalid);
    }
    for (i, b) in blocks.iter().enumerate() {
        let h = i as u64;
        if b.height != h {
            return ChainReport::fail(h, ChainFault::HeightMismatch);
        }
        if i == 0 {
            if b.prev_hash != Digest256::ZERO || !b.txs.is_empty() {
                return ChainReport::fail(0, ChainFault::GenesisInvalid);
            }
        } else if b.prev_hash != blocks[i - 1].block_hash {
            return ChainReport::fail(h, ChainFault::PrevHashMismatch);
        }
        if tx_root(&b.txs) != b.tx_root {
            return ChainReport::fail(h, ChainFault::MerkleMismatch);
        }
        if b.header().hash() != b.block_hash {
            return ChainReport::fail(h, ChainFault::HashMismatch);
        }
        if let Some(vs) = validators {
            if !vs.is_empty() && b.validator != vs[i % vs.len()] {
                return ChainReport::fail(h, ChainFault::ValidatorMismatch);
            }
        }
        if i > 0 && b.timestamp < blocks[i - 1].timestamp {
            return ChainReport::fail(h, ChainFault::TimestampRegression);
        }
    }
    ChainReport::pass(blocks.len() as u64)
}

/// Where a record anchor was committed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnchorRef {
    pub height: u64,
    pub tx_index: usize,
}

/// The permissioned chain plus its policy engine and admission state.
///
/// Single writer: `submit` and `form_block` take `&mut self`; queries take
/// `&self` and may run concurrently between writes.
#[derive(Debug, Clone)]
pub struct Chain {
    params: LedgerParams,
    validators: Vec<NodeId>,
    blocks: Vec<Block>,
    pending: VecDeque<Transaction>,
    contract: Contract,
    nonces: BTreeMap<NodeId, BTreeSet<u64>>,
    evaluations: u64,
    audit: Vec<AuditEntry>,
    anchors: BTreeMap<String, AnchorRef>,
}

impl Chain {
    /// Chain with the default policy engine and ledger parameters.
    pub fn new(validators: &[NodeId], genesis_time: Ticks) -> Result<Chain, LedgerError> {
        Chain::with_contract(validators, genesis_time, LedgerParams::default(), Contract::default())
    }

    /// Validators are registered as hospitals in `contract` if they are not
    /// registered yet.
    pub fn with_contract(
        validators: &[NodeId],
        genesis_time: Ticks,
        params: LedgerParams,
        mut contract: Contract,
    ) -> Result<Chain, LedgerError> {
        params.validate().map_err(LedgerError::InvalidParams)?;
        let Some(first) = validators.first() else {
            return Err(LedgerError::EmptyValidatorSet);
        };
        let mut seen = BTreeSet::new();
        for v in validators {
            if !seen.insert(v) {
                return Err(LedgerError::DuplicateValidator(v.clone()));
            }
            contract.register(Identity::new(v.clone(), Role::Hospital));
        }
        let genesis = Block::seal(0, Digest256::ZERO, genesis_time, first.clone(), Vec::new());
        Ok(Chain {
            params,
            validators: validators.to_vec(),
            blocks: vec![genesis],
            pending: VecDeque::new(),
            contract,
            nonces: BTreeMap::new(),
            evaluations: 0,
            audit: Vec::new(),
            anchors: BTreeMap::new(),
        })
    }

    pub fn params(&self) -> &LedgerParams {
        &self.params
    }

    pub fn validators(&self) -> &[NodeId] {
        &self.validators
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block(&self, height: u64) -> Option<&Block> {
        self.blocks.get(usize::try_from(height).ok()?)
    }

    pub fn head(&self) -> &Block {
        self.blocks.last().expect("chain always has a genesis block")
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn pending(&self) -> impl ExactSizeIterator<Item = &Transaction> {
        self.pending.iter()
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    pub fn contract(&self) -> &Contract {
        &self.contract
    }

    /// Identity registration and other setup; not for admission decisions.
    pub fn contract_mut(&mut self) -> &mut Contract {
        &mut self.contract
    }

    pub fn audit_log(&self) -> &[AuditEntry] {
        &self.audit
    }

    pub fn committed_tx_count(&self) -> usize {
        self.blocks.iter().map(|b| b.txs.len()).sum()
    }

    /// One past the highest nonce `submitter` has had accepted.
    pub fn next_nonce(&self, submitter: &NodeId) -> u64 {
        self.nonces
            .get(submitter)
            .and_then(|s| s.last())
            .map_or(0, |n| n + 1)
    }

    /// Admits `tx` into the pending queue if its nonce is fresh and the
    /// policy engine accepts it. Refusals are recorded in the audit log.
    pub fn submit(&mut self, tx: Transaction) -> Result<(), LedgerError> {
        if self
            .nonces
            .get(&tx.submitter)
            .is_some_and(|s| s.contains(&tx.nonce))
        {
            let err = LedgerError::DuplicateNonce {
                submitter: tx.submitter.clone(),
                nonce: tx.nonce,
            };
            self.audit.push(AuditEntry {
                ordinal: None,
                reason: AuditReason::DuplicateNonce,
                tx,
            });
            return Err(err);
        }
        let ordinal = self.evaluations;
        self.evaluations += 1;
        match self.contract.admit(&tx) {
            Verdict::Accept => {
                self.nonces
                    .entry(tx.submitter.clone())
                    .or_default()
                    .insert(tx.nonce);
                self.pending.push_back(tx);
                Ok(())
            }
            Verdict::Reject(reason) => {
                self.audit.push(AuditEntry {
                    ordinal: Some(ordinal),
                    reason: AuditReason::Policy(reason),
                    tx,
                });
                Err(LedgerError::PolicyRejected(reason))
            }
        }
    }

    /// Forms a block at `now` if `now` is a block boundary later than the
    /// head, and transactions are pending. Drains up to `max_block_txs` in
    /// FIFO order; the validator rotates by height.
    pub fn form_block(&mut self, now: Ticks) -> Option<&Block> {
        if self.pending.is_empty()
            || !now.is_multiple_of(self.params.block_interval)
            || now <= self.head().timestamp
        {
            return None;
        }
        let take = self.pending.len().min(self.params.max_block_txs);
        let txs: Vec<Transaction> = self.pending.drain(..take).collect();
        let height = self.head().height + 1;
        let validator = self.validators[(height % self.validators.len() as u64) as usize].clone();
        let block = Block::seal(height, self.head().block_hash, now, validator, txs);
        for (i, tx) in block.txs.iter().enumerate() {
            self.contract.on_commit(tx);
            if let TxKind::RecordAnchor { record_id, .. } = &tx.kind {
                self.anchors.entry(record_id.clone()).or_insert(AnchorRef {
                    height,
                    tx_index: i,
                });
            }
        }
        self.blocks.push(block);
        self.blocks.last()
    }

    /// First block boundary strictly after the head and not before `from`.
    pub fn next_boundary(&self, from: Ticks) -> Ticks {
        let bi = self.params.block_interval;
        let floor = from.max(self.head().timestamp + 1);
        floor.div_ceil(bi) * bi
    }

    /// Forms blocks at successive boundaries from `from` until nothing is
    /// pending. Returns the time of the last block formed, if any.
    pub fn seal_pending(&mut self, from: Ticks) -> Option<Ticks> {
        let mut last = None;
        while !self.pending.is_empty() {
            let t = self.next_boundary(from);
            self.form_block(t);
            last = Some(t);
        }
        last
    }

    pub fn validate_chain(&self) -> ChainReport {
        validate_blocks(&self.blocks, Some(&self.validators))
    }

    /// Committed anchor for `record_id`, if any.
    pub fn anchor(&self, record_id: &str) -> Option<(&AnchorRef, &Transaction)> {
        let a = self.anchors.get(record_id)?;
        let tx = &self.blocks[a.height as usize].txs[a.tx_index];
        Some((a, tx))
    }

    /// Whether a record anchor for `record_id` is committed or pending.
    pub fn has_anchor(&self, record_id: &str) -> bool {
        self.anchors.contains_key(record_id)
            || self.pending.iter().any(|tx| {
                matches!(&tx.kind, TxKind::RecordAnchor { record_id: r, .. } if r == record_id)
            })
    }

    /// Digest of (head hash, highest accepted nonce per submitter, access grants).
    pub fn state_root(&self) -> Digest256 {
        digest_of(&StateWitness(self))
    }
}

struct StateWitness<'a>(&'a Chain);

impl Encode for StateWitness<'_> {
    fn encode(&self, enc: &mut Encoder) {
        let c = self.0;
        enc.digest(&c.head().block_hash);
        enc.u32(c.nonces.len() as u32);
        for (who, set) in &c.nonces {
            enc.value(who).u64(set.last().copied().unwrap_or(0));
        }
        enc.value(c.contract.access_table());
    }
}

/// Rebuilds policy state by re-evaluating committed transactions and
/// audited rejections in their original evaluation order, starting from
/// `template` (identities registered, no history). Committed transactions
/// must cover everything that was accepted, i.e. nothing may be pending.
pub fn replay_contract(template: &Contract, blocks: &[Block], audit: &[AuditEntry]) -> Contract {
    let mut c = template.clone();
    let mut rejected: Vec<&AuditEntry> = audit.iter().filter(|a| a.ordinal.is_some()).collect();
    rejected.sort_by_key(|a| a.ordinal);
    let mut rejected = rejected.into_iter().peekable();
    let mut ordinal = 0u64;
    for tx in blocks.iter().flat_map(|b| b.txs.iter()) {
        while let Some(r) = rejected.next_if(|r| r.ordinal == Some(ordinal)) {
            c.admit(&r.tx);
            ordinal += 1;
        }
        c.admit(tx);
        ordinal += 1;
    }
    for r in rejected {
        c.admit(&r.tx);
    }
    for tx in blocks.iter().flat_map(|b| b.txs.iter()) {
        c.on_commit(tx);
    }
    c
}
