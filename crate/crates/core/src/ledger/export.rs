//! Chain files: one hex-encoded canonical block per line, genesis first.

use thiserror::Error;

use crate::codec::{canonical_decode, canonical_encode, CodecError};
use crate::ids::NodeId;

use super::block::Block;
use super::chain::{validate_blocks, ChainFault, ChainReport};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ImportError {
    #[error("line {line}: not valid hex")]
    Hex { line: usize },
    #[error("line {line}: {source}")]
    Codec { line: usize, source: CodecError },
}

impl ImportError {
    /// Zero-based line, which is also the height the line claims to hold.
    pub fn line(&self) -> usize {
        match self {
            ImportError::Hex { line } | ImportError::Codec { line, .. } => *line,
        }
    }
}

pub fn export_blocks(blocks: &[Block]) -> String {
    let mut out = String::new();
    for b in blocks {
        out.push_str(&hex::encode(canonical_encode(b)));
        out.push('\n');
    }
    out
}

pub fn import_blocks(text: &str) -> Result<Vec<Block>, ImportError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(line, l)| {
            let raw = hex::decode(l.trim()).map_err(|_| ImportError::Hex { line })?;
            canonical_decode(&raw).map_err(|source| ImportError::Codec { line, source })
        })
        .collect()
}

/// Decodes and validates a chain file. An undecodable line is reported as
/// a `malformed` fault at that line's height.
pub fn verify_export(text: &str, validators: Option<&[NodeId]>) -> ChainReport {
    match import_blocks(text) {
        Ok(blocks) => validate_blocks(&blocks, validators),
        Err(e) => ChainReport::fail(e.line() as u64, ChainFault::Malformed),
    }
}
