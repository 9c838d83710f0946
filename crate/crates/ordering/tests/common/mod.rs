#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use hdlt_core::ledger::{
    create_genesis_block, response_digest, Block, ConsortiumConfig, Endorsement, KvWrite, Nonce, OrdererOrgConfig,
    OrgConfig, Proposal, Transaction,
};
use hdlt_core::msp::{CaServer, HealthCard, Role, Stakeholder};
use hdlt_ordering::{BlockCutPolicy, Event, NodeId, Orderer, Outbound, RaftConfig, RaftMessage, RaftNode, Scheduler};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub trait SimNode {
    type P: Clone;
    fn poll(&mut self, now: u64) -> Vec<Outbound<Self::P>>;
    fn deliver(&mut self, now: u64, from: NodeId, msg: RaftMessage<Self::P>) -> Vec<Outbound<Self::P>>;
    fn restart(&mut self, now: u64);
    fn raft_term(&self) -> u64;
    fn raft_is_leader(&self) -> bool;
}

impl<P: Clone> SimNode for RaftNode<P> {
    type P = P;
    fn poll(&mut self, now: u64) -> Vec<Outbound<P>> {
        self.poll_timers(now)
    }
    fn deliver(&mut self, now: u64, from: NodeId, msg: RaftMessage<P>) -> Vec<Outbound<P>> {
        self.step(now, Event::Message { from, msg })
    }
    fn restart(&mut self, now: u64) {
        RaftNode::restart(self, now)
    }
    fn raft_term(&self) -> u64 {
        self.term()
    }
    fn raft_is_leader(&self) -> bool {
        self.is_leader()
    }
}

impl SimNode for Orderer {
    type P = hdlt_ordering::OrderEntry;
    fn poll(&mut self, now: u64) -> Vec<Outbound<Self::P>> {
        Orderer::poll(self, now)
    }
    fn deliver(&mut self, now: u64, from: NodeId, msg: RaftMessage<Self::P>) -> Vec<Outbound<Self::P>> {
        self.step(now, Event::Message { from, msg })
    }
    fn restart(&mut self, now: u64) {
        Orderer::restart(self, now)
    }
    fn raft_term(&self) -> u64 {
        self.raft().term()
    }
    fn raft_is_leader(&self) -> bool {
        self.is_leader()
    }
}

/// Single-threaded tick loop over a set of nodes.
pub struct Sim<N: SimNode> {
    pub nodes: BTreeMap<NodeId, N>,
    pub dead: BTreeSet<NodeId>,
    pub now: u64,
    sched: Scheduler<NodeId, RaftMessage<N::P>>,
    /// Every (term, leader) observed after each tick.
    pub leaders: BTreeSet<(u64, NodeId)>,
}

impl<N: SimNode> Sim<N> {
    pub fn new(nodes: BTreeMap<NodeId, N>, seed: u64) -> Self {
        Sim { nodes, dead: BTreeSet::new(), now: 0, sched: Scheduler::new(seed, 1, 5), leaders: BTreeSet::new() }
    }

    pub fn send_all(&mut self, from: NodeId, out: Vec<Outbound<N::P>>) {
        for o in out {
            self.sched.send(self.now, from, o.to, o.msg);
        }
    }

    pub fn tick(&mut self) {
        self.now += 1;
        while let Some(m) = self.sched.pop_due(self.now) {
            if self.dead.contains(&m.to) || self.dead.contains(&m.from) {
                continue;
            }
            let out = self.nodes.get_mut(&m.to).unwrap().deliver(self.now, m.from, m.payload);
            self.send_all(m.to, out);
        }
        let ids: Vec<NodeId> = self.nodes.keys().copied().collect();
        for id in ids {
            if self.dead.contains(&id) {
                continue;
            }
            let out = self.nodes.get_mut(&id).unwrap().poll(self.now);
            self.send_all(id, out);
        }
        for (id, n) in &self.nodes {
            if n.raft_is_leader() && !self.dead.contains(id) {
                self.leaders.insert((n.raft_term(), *id));
            }
        }
    }

    pub fn run_until(&mut self, max_ticks: u64, mut pred: impl FnMut(&Self) -> bool) -> Option<u64> {
        let start = self.now;
        while !pred(self) {
            if self.now - start >= max_ticks {
                return None;
            }
            self.tick();
        }
        Some(self.now - start)
    }

    pub fn leader(&self) -> Option<NodeId> {
        self.nodes
            .iter()
            .filter(|(id, n)| n.raft_is_leader() && !self.dead.contains(id))
            .max_by_key(|(_, n)| n.raft_term())
            .map(|(id, _)| *id)
    }

    pub fn kill(&mut self, id: NodeId) {
        self.dead.insert(id);
    }

    pub fn revive(&mut self, id: NodeId) {
        self.dead.remove(&id);
        let now = self.now;
        self.nodes.get_mut(&id).unwrap().restart(now);
    }

    /// No two distinct nodes ever led the same term.
    pub fn election_safe(&self) -> bool {
        let mut terms = BTreeSet::new();
        self.leaders.iter().all(|(t, _)| terms.insert(*t))
    }
}

pub fn raft_cluster(ids: &[NodeId], seed: u64) -> Sim<RaftNode<u64>> {
    let nodes = ids
        .iter()
        .map(|&id| (id, RaftNode::new(id, ids.to_vec(), RaftConfig::default(), seed, 0)))
        .collect();
    Sim::new(nodes, seed)
}

pub struct Consortium {
    pub rng: ChaCha20Rng,
    pub genesis: Block,
    pub orderer_cards: Vec<HealthCard>,
    pub client: HealthCard,
    pub peer: HealthCard,
}

pub fn consortium(seed: u64, orderers: usize) -> Consortium {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut ca = CaServer::bootstrap("AuthorityOrg", &mut rng);
    let client = ca.enroll_default_admin(&mut rng).unwrap();
    let peer = ca.enroll("peer0.AuthorityOrg", Role::Peer, &mut rng);
    let mut oca = CaServer::bootstrap("OrdererOrg", &mut rng);
    let orderer_cards = (0..orderers).map(|i| oca.enroll(&format!("orderer{i}"), Role::Orderer, &mut rng)).collect();
    let genesis = create_genesis_block(ConsortiumConfig {
        channel: "healthcare".into(),
        created_at_ms: 1_700_000_000_000,
        orgs: vec![OrgConfig { name: "AuthorityOrg".into(), stakeholder: Stakeholder::Authority, root_cert: ca.root_cert().clone() }],
        orderer_org: OrdererOrgConfig { name: "OrdererOrg".into(), root_cert: oca.root_cert().clone() },
    })
    .unwrap();
    Consortium { rng, genesis, orderer_cards, client, peer }
}

impl Consortium {
    pub fn tx(&mut self, key: &str, value_len: usize) -> Transaction {
        let mut nonce = [0u8; 16];
        self.rng.fill_bytes(&mut nonce);
        let proposal = Proposal::new_signed(&self.client, "put", vec![key.into()], Nonce(nonce), 0);
        let writes = vec![KvWrite { key: key.into(), value: Some(vec![b'x'; value_len]) }];
        let digest = response_digest(&[], &writes, b"");
        Transaction::new(proposal, vec![], writes, vec![], vec![Endorsement::sign(&self.peer, digest)])
    }

    pub fn orderers(&self, ids: &[NodeId], policy: BlockCutPolicy, seed: u64) -> Sim<Orderer> {
        let nodes = ids
            .iter()
            .zip(&self.orderer_cards)
            .map(|(&id, card)| {
                (id, Orderer::new(id, ids.to_vec(), card.clone(), self.genesis.clone(), policy, RaftConfig::default(), seed, 0))
            })
            .collect();
        Sim::new(nodes, seed)
    }
}

impl Sim<Orderer> {
    /// Submit to whichever node is leader, following hints like a client would.
    pub fn submit(&mut self, tx: Transaction) -> Result<(), hdlt_ordering::SubmitError> {
        let mut target = self.leader().unwrap_or(*self.nodes.keys().next().unwrap());
        for _ in 0..3 {
            let now = self.now;
            match self.nodes.get_mut(&target).unwrap().submit(now, tx.clone()) {
                Ok(out) => {
                    self.send_all(target, out);
                    return Ok(());
                }
                Err(hdlt_ordering::SubmitError::NotLeader { hint: Some(h) }) if !self.dead.contains(&h) => target = h,
                Err(e) => return Err(e),
            }
        }
        Err(hdlt_ordering::SubmitError::NotLeader { hint: None })
    }
}
