use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Block, Envelope};
use crate::codec::{self, hex_bytes, to_canonical};
use crate::Digest256;

/// Position of the write that produced a value: (block number, tx index).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Version {
    pub block: u64,
    pub tx: u32,
}

impl Version {
    pub fn new(block: u64, tx: u32) -> Self {
        Version { block, tx }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VersionedValue {
    #[serde(with = "hex_bytes")]
    pub value: Vec<u8>,
    pub version: Version,
}

#[derive(Debug, Error)]
pub enum StateError {
    #[error("block {got} cannot be committed at height {expected}")]
    HeightMismatch { expected: u64, got: u64 },
    #[error("snapshot i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("snapshot decode: {0}")]
    Decode(#[from] codec::CodecError),
}

/// Current value of every live key, plus the ids of every transaction that
/// has been committed as valid.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldState {
    height: u64,
    entries: BTreeMap<String, VersionedValue>,
    committed_tx: BTreeSet<Digest256>,
}

impl WorldState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of blocks committed so far.
    pub fn height(&self) -> u64 {
        self.height
    }

    pub fn get(&self, key: &str) -> Option<&VersionedValue> {
        self.entries.get(key)
    }

    pub fn version_of(&self, key: &str) -> Option<Version> {
        self.entries.get(key).map(|v| v.version)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains_tx(&self, tx_id: &Digest256) -> bool {
        self.committed_tx.contains(tx_id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &VersionedValue)> {
        self.entries.iter()
    }

    /// Entries whose key starts with `prefix`, in key order.
    pub fn scan_prefix<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = (&'a String, &'a VersionedValue)> + 'a {
        self.entries
            .range(prefix.to_string()..)
            .take_while(move |(k, _)| k.starts_with(prefix))
    }

    /// Apply a block that already passed append validation.
    ///
    /// A transaction is valid iff it was not committed before and every key it
    /// read still carries the version it read. Invalid transactions write
    /// nothing. Returns one validity flag per transaction.
    pub fn commit_block(&mut self, block: &Block) -> Result<Vec<bool>, StateError> {
        if block.header.number != self.height {
            return Err(StateError::HeightMismatch { expected: self.height, got: block.header.number });
        }
        let mut flags = Vec::with_capacity(block.transactions.len());
        for (index, envelope) in block.transactions.iter().enumerate() {
            let tx_id = envelope.tx_id();
            let valid = !self.committed_tx.contains(&tx_id)
                && envelope
                    .read_set()
                    .iter()
                    .all(|r| self.version_of(&r.key) == r.version);
            if valid {
                if matches!(envelope, Envelope::Endorser(_)) {
                    self.committed_tx.insert(tx_id);
                }
                let version = Version::new(block.header.number, index as u32);
                for w in envelope.write_set() {
                    match &w.value {
                        Some(value) => {
                            self.entries
                                .insert(w.key.clone(), VersionedValue { value: value.clone(), version });
                        }
                        None => {
                            self.entries.remove(&w.key);
                        }
                    }
                }
            }
            flags.push(valid);
        }
        self.height += 1;
        Ok(flags)
    }

    /// Rebuild state by committing `blocks` from genesis.
    pub fn replay<'a>(blocks: impl IntoIterator<Item = &'a Block>) -> Result<WorldState, StateError> {
        let mut state = WorldState::new();
        for b in blocks {
            state.commit_block(b)?;
        }
        Ok(state)
    }

    pub fn encoded(&self) -> Vec<u8> {
        to_canonical(self)
    }

    /// Write `state-<channel>.snap` atomically; the height travels inside the snapshot.
    pub fn save_snapshot(&self, dir: &Path, channel: &str) -> Result<(), StateError> {
        let path = dir.join(format!("state-{channel}.snap"));
        let tmp = dir.join(format!("state-{channel}.snap.tmp"));
        std::fs::write(&tmp, self.encoded())?;
        std::fs::rename(tmp, path)?;
        Ok(())
    }

    pub fn load_snapshot(dir: &Path, channel: &str) -> Result<Option<WorldState>, StateError> {
        let path = dir.join(format!("state-{channel}.snap"));
        if !path.exists() {
            return Ok(None);
        }
        let bytes = std::fs::read(path)?;
        Ok(Some(codec::from_canonical(&bytes)?))
    }
}
