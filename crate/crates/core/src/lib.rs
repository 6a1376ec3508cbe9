//! Deterministic simulator for a medical record system whose telemetry and
//! record anchors are ordered by a permissioned hash-linked ledger.
//!
//! Module map:
//!
//! * [`codec`], [`digest`], [`merkle`]: canonical bytes, SHA-256, Merkle roots
//! * [`ledger`]: blocks, rotating proof-of-authority chain, validation, export
//! * [`contract`]: admission policy, access control, malfunction localization
//! * [`devices`]: sensor simulation and fault injection
//! * [`records`]: replicated patient records anchored on the ledger
//! * [`simnet`]: discrete-event network
//! * [`benchmark`]: processing-time / delay / throughput harness
//! * [`scenario`], [`config`]: end-to-end runs wired from a config file

pub mod benchmark;
pub mod codec;
pub mod config;
pub mod contract;
pub mod devices;
pub mod digest;
pub mod ids;
pub mod ledger;
pub mod merkle;
pub mod records;
pub mod scenario;
pub mod simnet;

pub use digest::{hash_bytes, Digest256};
pub use ids::{NodeId, Ticks};
