use serde::{Deserialize, Serialize};

use super::tx::{ConfigTransaction, ConsortiumConfig, Envelope, KvWrite, CONSORTIUM_KEY};
use super::LedgerError;
use crate::codec::to_canonical;
use crate::crypto::{KeyPair, Signature};
use crate::msp::{verify_certificate, Certificate, Role};
use crate::Digest256;

/// Upper bound on the canonical encoding of a block, in bytes.
pub const MAX_BLOCK_BYTES: usize = 1_048_576;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockHeader {
    pub number: u64,
    pub prev_hash: Digest256,
    pub data_hash: Digest256,
    /// Milliseconds since the epoch, assigned by the ordering leader.
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrdererSignature {
    pub signer: Certificate,
    pub signature: Signature,
}

impl OrdererSignature {
    pub fn sign(header: &BlockHeader, key: &KeyPair, signer: Certificate) -> Self {
        OrdererSignature { signature: key.sign(compute_block_hash(header).as_bytes()), signer }
    }

    /// Signer is an orderer certified by `orderer_root` and the signature covers `header`.
    pub fn verify(&self, header: &BlockHeader, orderer_root: &Certificate) -> bool {
        self.signer.role == Role::Orderer
            && verify_certificate(&self.signer, orderer_root)
            && self
                .signer
                .public_key
                .verify(compute_block_hash(header).as_bytes(), &self.signature)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub header: BlockHeader,
    pub transactions: Vec<Envelope>,
    /// Absent only on the genesis block.
    pub orderer_signature: Option<OrdererSignature>,
    /// One flag per transaction, filled in when a peer commits the block.
    pub validity_flags: Vec<bool>,
}

impl Block {
    /// Unsigned block over `transactions`, linked to `prev_hash`.
    pub fn assemble(number: u64, prev_hash: Digest256, timestamp: u64, transactions: Vec<Envelope>) -> Self {
        Block {
            header: BlockHeader { number, prev_hash, data_hash: compute_data_hash(&transactions), timestamp },
            transactions,
            orderer_signature: None,
            validity_flags: Vec::new(),
        }
    }

    pub fn signed(mut self, key: &KeyPair, signer: Certificate) -> Self {
        self.orderer_signature = Some(OrdererSignature::sign(&self.header, key, signer));
        self
    }

    pub fn number(&self) -> u64 {
        self.header.number
    }

    pub fn hash(&self) -> Digest256 {
        compute_block_hash(&self.header)
    }

    pub fn encoded(&self) -> Vec<u8> {
        to_canonical(self)
    }

    pub fn encoded_len(&self) -> usize {
        self.encoded().len()
    }

    /// The consortium carried by a genesis block.
    pub fn consortium(&self) -> Option<&ConsortiumConfig> {
        match self.transactions.as_slice() {
            [Envelope::Config(c)] if self.header.number == 0 => Some(&c.consortium),
            _ => None,
        }
    }
}

pub fn compute_block_hash(header: &BlockHeader) -> Digest256 {
    Digest256::of(&to_canonical(header))
}

/// SHA-256 over the concatenated envelope digests, in block order.
pub fn compute_data_hash(transactions: &[Envelope]) -> Digest256 {
    let digests: Vec<Digest256> = transactions.iter().map(Envelope::digest).collect();
    Digest256::of_parts(digests.iter().map(|d| &d.0[..]))
}

/// Block 0: a single config transaction carrying every root certificate.
pub fn create_genesis_block(consortium: ConsortiumConfig) -> Result<Block, LedgerError> {
    if consortium.orgs.is_empty() {
        return Err(LedgerError::EmptyConsortium);
    }
    let write_set = vec![KvWrite {
        key: CONSORTIUM_KEY.to_string(),
        value: Some(to_canonical(&consortium)),
    }];
    let timestamp = consortium.created_at_ms;
    let transactions = vec![Envelope::Config(ConfigTransaction { consortium, write_set })];
    Ok(Block::assemble(0, Digest256::ZERO, timestamp, transactions))
}
