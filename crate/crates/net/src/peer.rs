use hdlt_core::ledger::{compute_data_hash, Block, BlockStore, Envelope, WorldState, MAX_BLOCK_BYTES};
use hdlt_core::msp::Certificate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Orderer,
    /// Endorses proposals and receives blocks from the orderers.
    Anchor,
    /// Receives blocks from its organization's anchor and re-validates them.
    Gossip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum BlockRejected {
    #[error("block does not link to the local chain tip")]
    Link,
    #[error("data hash does not match the transactions")]
    DataHash,
    #[error("block exceeds the size cap")]
    Oversize,
    #[error("orderer signature missing or invalid")]
    Signature,
    #[error("block carries a malformed or config transaction")]
    Malformed,
    #[error("a different block is already committed at this height")]
    Conflict,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Accepted {
    /// Committed; carries the block with this peer's validity flags.
    Appended(Block),
    /// Already held.
    Duplicate,
    /// Ahead of the local tip; the missing blocks must be pulled first.
    Gap,
}

/// An organization peer holding a chain and the world state built from it.
#[derive(Debug)]
pub struct Peer {
    pub(crate) port: u16,
    pub(crate) org: String,
    pub(crate) kind: NodeKind,
    pub(crate) store: BlockStore,
    pub(crate) state: WorldState,
    pub(crate) rejected: u64,
    pub(crate) next_pull: u64,
    pub(crate) pull_cursor: usize,
}

impl Peer {
    pub(crate) fn new(port: u16, org: String, kind: NodeKind, mut genesis: Block, first_pull: u64) -> Self {
        let mut state = WorldState::new();
        genesis.validity_flags = state.commit_block(&genesis).expect("genesis commits");
        let mut store = BlockStore::in_memory();
        store.append_block(genesis).expect("genesis appends");
        Peer { port, org, kind, store, state, rejected: 0, next_pull: first_pull, pull_cursor: 0 }
    }

    pub fn port(&self) -> u16 {
        self.port
    }

    pub fn org(&self) -> &str {
        &self.org
    }

    pub fn kind(&self) -> NodeKind {
        self.kind
    }

    pub fn height(&self) -> u64 {
        self.store.height()
    }

    pub fn blocks(&self) -> &[Block] {
        self.store.blocks()
    }

    pub fn state(&self) -> &WorldState {
        &self.state
    }

    /// Blocks refused by validation so far.
    pub fn rejected(&self) -> u64 {
        self.rejected
    }

    /// Validate `block` against the local tip and commit it.
    pub fn accept(&mut self, mut block: Block, orderer_root: &Certificate) -> Result<Accepted, BlockRejected> {
        let height = self.height();
        let number = block.header.number;
        if number < height {
            let held = &self.store.blocks()[number as usize];
            return if held.hash() == block.hash() { Ok(Accepted::Duplicate) } else { Err(BlockRejected::Conflict) };
        }
        if number > height {
            return Ok(Accepted::Gap);
        }
        if block.header.prev_hash != self.store.last_hash() {
            return Err(BlockRejected::Link);
        }
        if compute_data_hash(&block.transactions) != block.header.data_hash {
            return Err(BlockRejected::DataHash);
        }
        if !block.orderer_signature.as_ref().is_some_and(|s| s.verify(&block.header, orderer_root)) {
            return Err(BlockRejected::Signature);
        }
        if block
            .transactions
            .iter()
            .any(|t| matches!(t, Envelope::Config(_)) || !t.as_transaction().is_some_and(|tx| tx.is_well_formed()))
        {
            return Err(BlockRejected::Malformed);
        }
        // All-false flags are the longest encoding the stored block can take.
        block.validity_flags = vec![false; block.transactions.len()];
        if block.encoded_len() > MAX_BLOCK_BYTES {
            return Err(BlockRejected::Oversize);
        }
        block.validity_flags = self.state.commit_block(&block).map_err(|_| BlockRejected::Link)?;
        self.store.append_block(block.clone()).map_err(|_| BlockRejected::Link)?;
        Ok(Accepted::Appended(block))
    }
}
