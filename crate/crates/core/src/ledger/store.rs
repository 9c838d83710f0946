use std::fs::{File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::block::{compute_data_hash, Block, MAX_BLOCK_BYTES};
use super::{Envelope, WorldState};
use crate::codec::{from_canonical, to_canonical};
use crate::Digest256;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("expected block {expected}, got {got}")]
    Height { expected: u64, got: u64 },
    #[error("block {number} does not link to the previous block hash")]
    ChainLink { number: u64 },
    #[error("block {number} encodes to {size} bytes, over the {MAX_BLOCK_BYTES} byte cap")]
    Oversize { number: u64, size: usize },
    #[error("block {number} data hash does not match its transactions")]
    DataHash { number: u64 },
    #[error("stored chain is corrupt at height {height}")]
    Corrupt { height: u64 },
    #[error("block store i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// Append-only chain of blocks, optionally persisted as
/// `chain-<channel>.blocks` with big-endian u32 length prefixes.
#[derive(Debug)]
pub struct BlockStore {
    blocks: Vec<Block>,
    file: Option<(PathBuf, File)>,
}

impl BlockStore {
    pub fn in_memory() -> Self {
        BlockStore { blocks: Vec::new(), file: None }
    }

    pub fn path_for(dir: &Path, channel: &str) -> PathBuf {
        dir.join(format!("chain-{channel}.blocks"))
    }

    /// Open or create the chain file, checking every stored record.
    pub fn open(dir: &Path, channel: &str) -> Result<Self, StoreError> {
        std::fs::create_dir_all(dir)?;
        let path = Self::path_for(dir, channel);
        let mut bytes = Vec::new();
        if path.exists() {
            File::open(&path)?.read_to_end(&mut bytes)?;
        }
        let blocks = decode_records(&bytes)?;
        let mut store = BlockStore { blocks: Vec::new(), file: None };
        for block in blocks {
            let height = store.height();
            store.check_append(&block).map_err(|_| StoreError::Corrupt { height })?;
            store.blocks.push(block);
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        store.file = Some((path, file));
        Ok(store)
    }

    pub fn height(&self) -> u64 {
        self.blocks.len() as u64
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn get(&self, number: u64) -> Option<&Block> {
        self.blocks.get(usize::try_from(number).ok()?)
    }

    pub fn last(&self) -> Option<&Block> {
        self.blocks.last()
    }

    pub fn last_hash(&self) -> Digest256 {
        self.blocks.last().map(Block::hash).unwrap_or(Digest256::ZERO)
    }

    pub fn path(&self) -> Option<&Path> {
        self.file.as_ref().map(|(p, _)| p.as_path())
    }

    fn check_append(&self, block: &Block) -> Result<(), StoreError> {
        let number = block.header.number;
        if number != self.height() {
            return Err(StoreError::Height { expected: self.height(), got: number });
        }
        if block.header.prev_hash != self.last_hash() {
            return Err(StoreError::ChainLink { number });
        }
        let size = block.encoded_len();
        if size > MAX_BLOCK_BYTES {
            return Err(StoreError::Oversize { number, size });
        }
        if compute_data_hash(&block.transactions) != block.header.data_hash {
            return Err(StoreError::DataHash { number });
        }
        Ok(())
    }

    /// Validate link, size and data hash, then persist before returning.
    pub fn append_block(&mut self, block: Block) -> Result<(), StoreError> {
        self.check_append(&block)?;
        if let Some((_, file)) = self.file.as_mut() {
            let record = to_canonical(&block);
            let mut buf = Vec::with_capacity(record.len() + 4);
            buf.extend_from_slice(&(record.len() as u32).to_be_bytes());
            buf.extend_from_slice(&record);
            file.write_all(&buf)?;
            file.sync_data()?;
        }
        self.blocks.push(block);
        Ok(())
    }
}

fn decode_records(bytes: &[u8]) -> Result<Vec<Block>, StoreError> {
    let mut blocks = Vec::new();
    let mut rest = bytes;
    while !rest.is_empty() {
        let corrupt = StoreError::Corrupt { height: blocks.len() as u64 };
        if rest.len() < 4 {
            return Err(corrupt);
        }
        let len = u32::from_be_bytes([rest[0], rest[1], rest[2], rest[3]]) as usize;
        let Some(record) = rest.get(4..4 + len) else {
            return Err(corrupt);
        };
        blocks.push(from_canonical::<Block>(record).map_err(|_| corrupt)?);
        rest = &rest[4 + len..];
    }
    Ok(blocks)
}

/// Outcome of walking a chain from genesis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub valid: bool,
    pub first_bad_height: Option<u64>,
    pub reason: Option<String>,
}

impl ValidationReport {
    fn ok() -> Self {
        ValidationReport { valid: true, first_bad_height: None, reason: None }
    }

    fn bad(height: u64, reason: impl Into<String>) -> Self {
        ValidationReport { valid: false, first_bad_height: Some(height), reason: Some(reason.into()) }
    }
}

/// Recheck every block: numbering, hash links, data hashes, size, orderer
/// signatures against the orderer root in genesis, and recorded validity
/// flags against a fresh replay.
pub fn validate_chain(blocks: &[Block]) -> ValidationReport {
    let Some(genesis) = blocks.first() else {
        return ValidationReport::ok();
    };
    let Some(consortium) = genesis.consortium() else {
        return ValidationReport::bad(0, "first block is not a genesis config block");
    };
    let orderer_root = &consortium.orderer_org.root_cert;
    let mut state = WorldState::new();
    let mut prev = Digest256::ZERO;
    for (i, block) in blocks.iter().enumerate() {
        let h = i as u64;
        if block.header.number != h {
            return ValidationReport::bad(h, format!("block number {} at height {h}", block.header.number));
        }
        if block.header.prev_hash != prev {
            return ValidationReport::bad(h, "previous hash mismatch");
        }
        if compute_data_hash(&block.transactions) != block.header.data_hash {
            return ValidationReport::bad(h, "data hash mismatch");
        }
        if block.encoded_len() > MAX_BLOCK_BYTES {
            return ValidationReport::bad(h, "block exceeds size cap");
        }
        if h > 0 {
            match &block.orderer_signature {
                Some(sig) if sig.verify(&block.header, orderer_root) => {}
                Some(_) => return ValidationReport::bad(h, "bad orderer signature"),
                None => return ValidationReport::bad(h, "missing orderer signature"),
            }
            if block.transactions.iter().any(|t| matches!(t, Envelope::Config(_))) {
                return ValidationReport::bad(h, "config transaction after genesis");
            }
            if block.transactions.iter().any(|t| !t.as_transaction().is_some_and(|tx| tx.is_well_formed())) {
                return ValidationReport::bad(h, "malformed transaction");
            }
        }
        let flags = match state.commit_block(block) {
            Ok(f) => f,
            Err(e) => return ValidationReport::bad(h, e.to_string()),
        };
        if !block.validity_flags.is_empty() && block.validity_flags != flags {
            return ValidationReport::bad(h, "validity flags disagree with replay");
        }
        prev = block.hash();
    }
    ValidationReport::ok()
}
