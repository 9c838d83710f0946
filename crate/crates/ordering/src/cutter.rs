use hdlt_core::ledger::{Block, BlockHeader, OrdererSignature, Transaction, MAX_BLOCK_BYTES};
use hdlt_core::codec::canonical_len;
use hdlt_core::Digest256;
use hdlt_core::crypto::Signature;
use hdlt_core::msp::Certificate;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockCutPolicy {
    pub max_tx_count: usize,
    pub max_bytes: usize,
    pub max_wait_ms: u64,
}

impl Default for BlockCutPolicy {
    fn default() -> Self {
        BlockCutPolicy { max_tx_count: 10, max_bytes: MAX_BLOCK_BYTES, max_wait_ms: 500 }
    }
}

impl BlockCutPolicy {
    pub fn is_valid(&self) -> bool {
        self.max_tx_count > 0 && self.max_bytes > 0 && self.max_wait_ms > 0 && self.max_bytes <= MAX_BLOCK_BYTES
    }
}

/// A transaction that has been ordered but not yet placed in a block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PendingTx {
    pub tx: Transaction,
    /// Length of the transaction's envelope in a block's `transactions` array.
    pub encoded_len: usize,
    pub arrived_at: u64,
}

impl PendingTx {
    pub fn new(tx: Transaction, arrived_at: u64) -> Self {
        let encoded_len = envelope_len(&tx);
        PendingTx { tx, encoded_len, arrived_at }
    }
}

pub fn envelope_len(tx: &Transaction) -> usize {
    // `{"type":"endorser",` precedes the transaction's own fields.
    canonical_len(tx) + r#""type":"endorser","#.len()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutDecision {
    Cut(usize),
    NotYet,
}

/// Encoded length of a signed block with no transactions and no flags.
pub fn empty_block_len(number: u64, timestamp: u64, signer: &Certificate) -> usize {
    let block = Block {
        header: BlockHeader { number, prev_hash: Digest256::ZERO, data_hash: Digest256::ZERO, timestamp },
        transactions: Vec::new(),
        orderer_signature: Some(OrdererSignature { signer: signer.clone(), signature: Signature([0; 64]) }),
        validity_flags: Vec::new(),
    };
    block.encoded_len()
}

/// Largest possible empty-block length for `signer`, whatever the height and time.
pub fn empty_block_len_bound(signer: &Certificate) -> usize {
    empty_block_len(u64::MAX, u64::MAX, signer)
}

/// Size of a block holding `count` transactions totalling `tx_bytes` once a
/// peer has filled in its validity flags, assuming every flag is the longer
/// `false`: commas between envelopes, then `false` per flag with commas.
pub fn block_len(empty_len: usize, tx_bytes: usize, count: usize) -> usize {
    if count == 0 {
        return empty_len;
    }
    empty_len + tx_bytes + (count - 1) + (6 * count - 1)
}

/// How many of the oldest pending transactions to cut now.
///
/// Cuts when the count limit is reached, when the next transaction would push
/// the block over `max_bytes`, or when the oldest has waited `max_wait_ms`.
/// Pending transactions must each fit in a block on their own.
pub fn decide(pending: &[PendingTx], policy: &BlockCutPolicy, empty_len: usize, now: u64) -> CutDecision {
    let Some(oldest) = pending.first() else {
        return CutDecision::NotYet;
    };
    let mut fit = 0;
    let mut bytes = 0;
    for p in pending.iter().take(policy.max_tx_count) {
        if block_len(empty_len, bytes + p.encoded_len, fit + 1) > policy.max_bytes {
            break;
        }
        bytes += p.encoded_len;
        fit += 1;
    }
    if fit == 0 {
        return CutDecision::NotYet;
    }
    let full = fit == policy.max_tx_count || fit < pending.len();
    let stale = now.saturating_sub(oldest.arrived_at) >= policy.max_wait_ms;
    if full || stale {
        CutDecision::Cut(fit)
    } else {
        CutDecision::NotYet
    }
}
