//! Blocks, the block store and the versioned world state.

mod block;
mod state;
mod store;
mod tx;

pub use block::{
    compute_block_hash, compute_data_hash, create_genesis_block, Block, BlockHeader, OrdererSignature,
    MAX_BLOCK_BYTES,
};
pub use state::{StateError, Version, VersionedValue, WorldState};
pub use store::{validate_chain, BlockStore, StoreError, ValidationReport};
pub use tx::{
    response_digest, ConfigTransaction, ConsortiumConfig, Endorsement, Envelope, KvRead, KvWrite, Nonce,
    OrdererOrgConfig, OrgConfig, Proposal, Transaction, CONSORTIUM_KEY,
};

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LedgerError {
    #[error("consortium has no organizations")]
    EmptyConsortium,
}
