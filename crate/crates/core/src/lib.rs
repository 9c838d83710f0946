//! Core data model of the healthcare ledger.
//!
//! * [`codec`] is the canonical encoding every digest and signature is taken over.
//! * [`ledger`] holds blocks, the append-only block store, chain validation and
//!   the versioned world state with its MVCC commit rule.
//! * [`msp`] is the membership service: per-organization certificate
//!   authorities, health cards, the wallet and password login.

pub mod codec;
pub mod crypto;
pub mod digest;
pub mod ledger;
pub mod msp;

pub use digest::Digest256;

/// The single channel this network runs.
pub const CHANNEL: &str = "healthcare";
