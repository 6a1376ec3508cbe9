//! Permissioned hash-linked ledger with rotating proof-of-authority.

mod block;
mod chain;
mod export;
mod tx;

pub use block::{tx_root, Block, BlockHeader};
pub use chain::{
    replay_contract, validate_blocks, AnchorRef, AuditEntry, AuditReason, Chain, ChainFault,
    ChainReport, LedgerError, LedgerParams,
};
pub use export::{export_blocks, import_blocks, verify_export, ImportError};
pub use tx::{Transaction, TxKind};
