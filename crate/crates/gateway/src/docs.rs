use std::collections::BTreeMap;

use hdlt_core::Digest256;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest document accepted by default: 10 MB.
pub const DEFAULT_DOC_LIMIT: usize = 10 * 1024 * 1024;

/// A photo or scanned certificate kept off the chain. Records on the chain
/// refer to it by digest only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OffChainDoc {
    pub digest: Digest256,
    #[serde(skip)]
    pub content: Vec<u8>,
    pub media_type: String,
    pub size_bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DocError {
    #[error("NotFound: no document {0}")]
    NotFound(Digest256),
    #[error("SizeLimit: {size} bytes exceeds the {limit} byte limit")]
    SizeLimit { size: usize, limit: usize },
}

/// Content-addressed in-memory store.
#[derive(Debug)]
pub struct DocStore {
    limit: usize,
    docs: BTreeMap<Digest256, OffChainDoc>,
}

impl Default for DocStore {
    fn default() -> Self {
        DocStore::with_limit(DEFAULT_DOC_LIMIT)
    }
}

impl DocStore {
    pub fn with_limit(limit: usize) -> Self {
        DocStore { limit, docs: BTreeMap::new() }
    }

    /// Storing the same bytes twice keeps one copy and returns the same digest.
    pub fn put(&mut self, content: Vec<u8>, media_type: &str) -> Result<Digest256, DocError> {
        if content.len() > self.limit {
            return Err(DocError::SizeLimit { size: content.len(), limit: self.limit });
        }
        let digest = Digest256::of(&content);
        self.docs.entry(digest).or_insert_with(|| OffChainDoc {
            digest,
            size_bytes: content.len(),
            content,
            media_type: media_type.to_string(),
        });
        Ok(digest)
    }

    pub fn get(&self, digest: &Digest256) -> Result<&OffChainDoc, DocError> {
        self.docs.get(digest).ok_or(DocError::NotFound(*digest))
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }
}
