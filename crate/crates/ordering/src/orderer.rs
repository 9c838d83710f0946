use std::collections::{HashSet, VecDeque};

use hdlt_core::ledger::{compute_data_hash, Block, BlockHeader, Envelope, OrdererSignature, Transaction};
use hdlt_core::msp::{Certificate, HealthCard};
use hdlt_core::Digest256;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cutter::{self, block_len, envelope_len, BlockCutPolicy, CutDecision, PendingTx};
use crate::raft::{Event, NodeId, Outbound, RaftConfig, RaftNode};

/// Header and signature of a block the leader has cut, replicated through the
/// log so that every orderer builds the identical block when it applies it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutMarker {
    pub header: BlockHeader,
    pub tx_count: u32,
    pub signature: OrdererSignature,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum OrderEntry {
    Tx(Transaction),
    Cut(CutMarker),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SubmitError {
    #[error("not the leader (leader hint: {hint:?})")]
    NotLeader { hint: Option<NodeId> },
    #[error("transaction needs {size} bytes in a block, over the {max} byte limit")]
    Oversize { size: usize, max: usize },
    #[error("transaction carries no endorsement")]
    MissingEndorsement,
    #[error("transaction id or endorsement signatures do not check out")]
    Malformed,
}

/// One ordering node: a Raft participant plus the block chain it cuts.
#[derive(Debug, Clone)]
pub struct Orderer {
    raft: RaftNode<OrderEntry>,
    card: HealthCard,
    orderer_root: Certificate,
    policy: BlockCutPolicy,
    epoch_ms: u64,
    blocks: Vec<Block>,
    queue: VecDeque<PendingTx>,
    seen: HashSet<Digest256>,
    proposed: HashSet<Digest256>,
    proposed_term: u64,
    empty_bound: usize,
}

impl Orderer {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: NodeId,
        cluster: Vec<NodeId>,
        card: HealthCard,
        genesis: Block,
        policy: BlockCutPolicy,
        raft: RaftConfig,
        seed: u64,
        now: u64,
    ) -> Self {
        let consortium = genesis.consortium().expect("genesis block carries the consortium");
        let orderer_root = consortium.orderer_org.root_cert.clone();
        let epoch_ms = genesis.header.timestamp;
        let empty_bound = cutter::empty_block_len_bound(&card.certificate);
        Orderer {
            raft: RaftNode::new(id, cluster, raft, seed, now),
            card,
            orderer_root,
            policy,
            epoch_ms,
            blocks: vec![genesis],
            queue: VecDeque::new(),
            seen: HashSet::new(),
            proposed: HashSet::new(),
            proposed_term: 0,
            empty_bound,
        }
    }

    pub fn id(&self) -> NodeId {
        self.raft.id()
    }

    pub fn raft(&self) -> &RaftNode<OrderEntry> {
        &self.raft
    }

    pub fn is_leader(&self) -> bool {
        self.raft.is_leader()
    }

    pub fn height(&self) -> u64 {
        self.blocks.len() as u64
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn policy(&self) -> &BlockCutPolicy {
        &self.policy
    }

    /// Transactions ordered but not yet in a block.
    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    /// Bytes `tx` would need in a block of its own.
    pub fn solo_block_len(&self, tx: &Transaction) -> usize {
        block_len(self.empty_bound, envelope_len(tx), 1)
    }

    pub fn submit(&mut self, now: u64, tx: Transaction) -> Result<Vec<Outbound<OrderEntry>>, SubmitError> {
        if tx.endorsements.is_empty() {
            return Err(SubmitError::MissingEndorsement);
        }
        let size = self.solo_block_len(&tx);
        if size > self.policy.max_bytes {
            return Err(SubmitError::Oversize { size, max: self.policy.max_bytes });
        }
        if !self.raft.is_leader() {
            return Err(SubmitError::NotLeader { hint: self.raft.leader_hint() });
        }
        if !tx.is_well_formed() {
            return Err(SubmitError::Malformed);
        }
        if self.proposed_term != self.raft.term() {
            self.proposed.clear();
            self.proposed_term = self.raft.term();
        }
        if self.seen.contains(&tx.tx_id) || !self.proposed.insert(tx.tx_id) {
            return Ok(Vec::new());
        }
        let (_, mut out) = self.raft.propose(OrderEntry::Tx(tx)).map_err(|hint| SubmitError::NotLeader { hint })?;
        self.after(now, &mut out);
        Ok(out)
    }

    pub fn step(&mut self, now: u64, event: Event<OrderEntry>) -> Vec<Outbound<OrderEntry>> {
        let mut out = self.raft.step(now, event);
        self.after(now, &mut out);
        out
    }

    /// Fire due timers and cut a block if one is due.
    pub fn poll(&mut self, now: u64) -> Vec<Outbound<OrderEntry>> {
        let mut out = self.raft.poll_timers(now);
        self.after(now, &mut out);
        out
    }

    pub fn restart(&mut self, now: u64) {
        self.raft.restart(now);
    }

    /// Earliest tick at which [`Orderer::poll`] has something to do.
    pub fn next_deadline(&self) -> u64 {
        let raft = self.raft.next_deadline();
        match self.queue.front() {
            Some(p) if self.raft.is_leader() => raft.min(p.arrived_at + self.policy.max_wait_ms),
            _ => raft,
        }
    }

    fn after(&mut self, now: u64, out: &mut Vec<Outbound<OrderEntry>>) {
        for (_, entry) in self.raft.take_committed() {
            match entry.payload {
                Some(OrderEntry::Tx(tx)) => self.apply_tx(now, tx),
                Some(OrderEntry::Cut(marker)) => self.apply_cut(marker),
                None => {}
            }
        }
        self.maybe_cut(now, out);
    }

    fn apply_tx(&mut self, now: u64, tx: Transaction) {
        if self.seen.contains(&tx.tx_id) || self.solo_block_len(&tx) > self.policy.max_bytes {
            return;
        }
        self.seen.insert(tx.tx_id);
        self.queue.push_back(PendingTx::new(tx, now));
    }

    fn apply_cut(&mut self, marker: CutMarker) {
        let tip = self.blocks.last().expect("genesis");
        let n = marker.tx_count as usize;
        if marker.header.number != self.height()
            || marker.header.prev_hash != tip.hash()
            || n == 0
            || n > self.queue.len()
            || !marker.signature.verify(&marker.header, &self.orderer_root)
        {
            return;
        }
        let transactions: Vec<Envelope> = self.queue.iter().take(n).map(|p| Envelope::Endorser(p.tx.clone())).collect();
        if compute_data_hash(&transactions) != marker.header.data_hash {
            return;
        }
        self.queue.drain(..n);
        self.blocks.push(Block {
            header: marker.header,
            transactions,
            orderer_signature: Some(marker.signature),
            validity_flags: Vec::new(),
        });
    }

    fn maybe_cut(&mut self, now: u64, out: &mut Vec<Outbound<OrderEntry>>) {
        if !self.raft.leader_ready() || self.queue.is_empty() {
            return;
        }
        // One block in flight at a time keeps numbering and linking trivial.
        if self.raft.uncommitted().iter().any(|e| matches!(e.payload, Some(OrderEntry::Cut(_)))) {
            return;
        }
        let number = self.height();
        let timestamp = self.epoch_ms + now;
        let empty_len = cutter::empty_block_len(number, timestamp, &self.card.certificate);
        let pending = self.queue.make_contiguous();
        let CutDecision::Cut(n) = cutter::decide(pending, &self.policy, empty_len, now) else {
            return;
        };
        let transactions: Vec<Envelope> = pending[..n].iter().map(|p| Envelope::Endorser(p.tx.clone())).collect();
        let header = BlockHeader {
            number,
            prev_hash: self.blocks.last().expect("genesis").hash(),
            data_hash: compute_data_hash(&transactions),
            timestamp,
        };
        let signature = OrdererSignature::sign(&header, &self.card.key_pair(), self.card.certificate.clone());
        let marker = CutMarker { header, tx_count: n as u32, signature };
        if let Ok((_, more)) = self.raft.propose(OrderEntry::Cut(marker)) {
            out.extend(more);
            // A single-node cluster commits on propose.
            let mut again = Vec::new();
            if self.raft.commit_index() == self.raft.last_index() {
                for (_, entry) in self.raft.take_committed() {
                    if let Some(OrderEntry::Cut(m)) = entry.payload {
                        self.apply_cut(m);
                    }
                }
                self.maybe_cut(now, &mut again);
            }
            out.extend(again);
        }
    }
}
