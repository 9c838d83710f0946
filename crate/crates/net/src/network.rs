use std::collections::{BTreeMap, BTreeSet};

use hdlt_chaincode::{execute, ChaincodeError, Simulation};
use hdlt_core::ledger::{
    create_genesis_block, Block, ConsortiumConfig, Endorsement, OrdererOrgConfig, OrgConfig, Proposal, Transaction,
    WorldState,
};
use hdlt_core::msp::{verify_card, CaServer, Certificate, HealthCard, MspError, Registration, Role, UserProfile, Wallet};
use hdlt_core::CHANNEL;
use hdlt_ordering::{
    BlockCutPolicy, Event, NodeId, OrderEntry, Orderer, Outbound, RaftConfig, RaftMessage, Scheduler, SubmitError,
};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::peer::{Accepted, BlockRejected, NodeKind, Peer};
use crate::topology::TopologyConfig;

/// Genesis time used when none is given, so seeded runs are reproducible.
pub const DEFAULT_EPOCH_MS: u64 = 1_700_000_000_000;
/// Ticks between catch-up pulls a peer sends upstream.
pub const PULL_INTERVAL: u64 = 100;
/// Most blocks returned for one pull.
pub const PULL_BATCH: usize = 8;
/// Redirects followed by [`Network::submit`] before giving up.
pub const MAX_HOPS: usize = 3;

#[derive(Debug, Clone)]
pub enum NetMessage {
    Raft(RaftMessage<OrderEntry>),
    Blocks(Vec<Block>),
    /// Ask for blocks starting at this height.
    Pull { from: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetError {
    #[error("no node listens on port {0}")]
    UnknownNode(u16),
    #[error("no organization named {0}")]
    UnknownOrg(String),
    #[error("predicate still false after {max_ticks} ticks")]
    Timeout { max_ticks: u64 },
    #[error("no orderer is reachable")]
    NoOrderer,
    #[error(transparent)]
    Submit(#[from] SubmitError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EndorseError {
    #[error("no organization named {0}")]
    UnknownOrg(String),
    #[error("anchor peer {0} is down")]
    PeerDown(u16),
    #[error("Invalid Signature")]
    InvalidSignature,
    #[error("Invalid Certificate")]
    InvalidCertificate,
    #[error(transparent)]
    Chaincode(#[from] ChaincodeError),
}

/// Chaincode output signed by an anchor peer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Endorsed {
    pub simulation: Simulation,
    pub endorsement: Endorsement,
}

impl Endorsed {
    pub fn into_transaction(self, proposal: Proposal) -> Transaction {
        let Simulation { read_set, write_set, result } = self.simulation;
        Transaction::new(proposal, read_set, write_set, result, vec![self.endorsement])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Action {
    Kill { node: u16 },
    Revive { node: u16 },
    Partition { a: Vec<u16>, b: Vec<u16> },
    Heal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioStep {
    pub at_tick: u64,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeInfo {
    pub port: u16,
    pub org: String,
    pub kind: NodeKind,
}

/// The whole deployment in one process: CAs, anchor and gossip peers per
/// organization, and the Raft ordering cluster, connected by a seeded
/// latency scheduler. Time only moves when the caller steps it.
pub struct Network {
    config: TopologyConfig,
    now: u64,
    sched: Scheduler<u16, NetMessage>,
    orderers: BTreeMap<u16, Orderer>,
    pushed: BTreeMap<u16, u64>,
    peers: BTreeMap<u16, Peer>,
    nodes: BTreeMap<u16, NodeInfo>,
    anchors: BTreeMap<String, u16>,
    gossip: BTreeMap<u16, Vec<u16>>,
    cas: BTreeMap<String, CaServer>,
    orderer_ca: CaServer,
    admins: BTreeMap<String, HealthCard>,
    anchor_cards: BTreeMap<u16, HealthCard>,
    genesis: Block,
    orderer_root: Certificate,
    dead: BTreeSet<u16>,
    partitions: Vec<(BTreeSet<u16>, BTreeSet<u16>)>,
    leader_trace: BTreeSet<(u64, u16)>,
    leader_cache: Option<u16>,
    rng: ChaCha20Rng,
}

impl Network {
    pub fn start(config: TopologyConfig) -> Self {
        Self::start_with(config, DEFAULT_EPOCH_MS, BlockCutPolicy::default())
    }

    pub fn start_with(config: TopologyConfig, epoch_ms: u64, policy: BlockCutPolicy) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
        let mut cas = BTreeMap::new();
        let mut admins = BTreeMap::new();
        let mut anchor_cards = BTreeMap::new();
        let mut orgs = Vec::new();
        for org in &config.orgs {
            let mut ca = CaServer::bootstrap(&org.name, &mut rng);
            admins.insert(org.name.clone(), ca.enroll_default_admin(&mut rng).expect("fresh CA"));
            anchor_cards.insert(org.anchor_port, ca.enroll(&format!("peer0.{}", org.name), Role::Peer, &mut rng));
            orgs.push(OrgConfig { name: org.name.clone(), stakeholder: org.stakeholder, root_cert: ca.root_cert().clone() });
            cas.insert(org.name.clone(), ca);
        }
        let mut orderer_ca = CaServer::bootstrap("OrdererOrg", &mut rng);
        let orderer_cards: Vec<HealthCard> =
            config.orderers.iter().map(|o| orderer_ca.enroll(&o.id, Role::Orderer, &mut rng)).collect();
        let orderer_root = orderer_ca.root_cert().clone();
        let genesis = create_genesis_block(ConsortiumConfig {
            channel: CHANNEL.into(),
            created_at_ms: epoch_ms,
            orgs,
            orderer_org: OrdererOrgConfig { name: "OrdererOrg".into(), root_cert: orderer_root.clone() },
        })
        .expect("topology has organizations");

        let mut nodes = BTreeMap::new();
        let cluster = config.orderer_ports();
        let mut orderers = BTreeMap::new();
        for (o, card) in config.orderers.iter().zip(orderer_cards) {
            let node = Orderer::new(
                o.port,
                cluster.clone(),
                card,
                genesis.clone(),
                policy,
                RaftConfig::default(),
                config.seed,
                0,
            );
            orderers.insert(o.port, node);
            nodes.insert(o.port, NodeInfo { port: o.port, org: "OrdererOrg".into(), kind: NodeKind::Orderer });
        }
        let pushed = cluster.iter().map(|&p| (p, 1)).collect();

        let mut peers = BTreeMap::new();
        let mut anchors = BTreeMap::new();
        let mut gossip = BTreeMap::new();
        let mut stagger = 0;
        let mut add_peer = |port: u16, org: &str, kind| {
            stagger += 7;
            peers.insert(port, Peer::new(port, org.into(), kind, genesis.clone(), PULL_INTERVAL + stagger % PULL_INTERVAL));
            nodes.insert(port, NodeInfo { port, org: org.into(), kind });
        };
        for org in &config.orgs {
            add_peer(org.anchor_port, &org.name, NodeKind::Anchor);
            for &g in &org.gossip_ports {
                add_peer(g, &org.name, NodeKind::Gossip);
            }
            anchors.insert(org.name.clone(), org.anchor_port);
            gossip.insert(org.anchor_port, org.gossip_ports.clone());
        }

        Network {
            sched: Scheduler::new(config.seed, 1, 5),
            config,
            now: 0,
            orderers,
            pushed,
            peers,
            nodes,
            anchors,
            gossip,
            cas,
            orderer_ca,
            admins,
            anchor_cards,
            genesis,
            orderer_root,
            dead: BTreeSet::new(),
            partitions: Vec::new(),
            leader_trace: BTreeSet::new(),
            leader_cache: None,
            rng,
        }
    }

    pub fn config(&self) -> &TopologyConfig {
        &self.config
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    pub fn genesis(&self) -> &Block {
        &self.genesis
    }

    pub fn consortium(&self) -> &ConsortiumConfig {
        self.genesis.consortium().expect("genesis carries the consortium")
    }

    pub fn nodes(&self) -> impl Iterator<Item = &NodeInfo> {
        self.nodes.values()
    }

    pub fn node(&self, port: u16) -> Option<&NodeInfo> {
        self.nodes.get(&port)
    }

    pub fn peer(&self, port: u16) -> Option<&Peer> {
        self.peers.get(&port)
    }

    pub fn peers(&self) -> impl Iterator<Item = &Peer> {
        self.peers.values()
    }

    pub fn orderer(&self, port: u16) -> Option<&Orderer> {
        self.orderers.get(&port)
    }

    pub fn anchor_port(&self, org: &str) -> Option<u16> {
        self.anchors.get(org).copied()
    }

    pub fn anchor(&self, org: &str) -> Option<&Peer> {
        self.anchor_port(org).and_then(|p| self.peers.get(&p))
    }

    /// Default admin card of an organization's CA.
    pub fn admin(&self, org: &str) -> Option<&HealthCard> {
        self.admins.get(org)
    }

    pub fn anchor_card(&self, org: &str) -> Option<&HealthCard> {
        self.anchor_port(org).and_then(|p| self.anchor_cards.get(&p))
    }

    pub fn ca(&self, org: &str) -> Option<&CaServer> {
        self.cas.get(org)
    }

    pub fn orderer_ca(&self) -> &CaServer {
        &self.orderer_ca
    }

    pub fn is_alive(&self, port: u16) -> bool {
        self.nodes.contains_key(&port) && !self.dead.contains(&port)
    }

    /// Register a member with its organization's CA; the card lands in `wallet`.
    pub fn register_member(
        &mut self,
        org: &str,
        wallet: &mut Wallet,
        admin: &HealthCard,
        profile: &UserProfile,
        role: Role,
        password: &str,
    ) -> Result<Registration, MspError> {
        let ca = self
            .cas
            .get_mut(org)
            .ok_or_else(|| MspError::Authorization(format!("no CA for organization {org}")))?;
        ca.register_user(wallet, admin, profile, role, password, &mut self.rng)
    }

    /// Issue a card directly from an organization's CA.
    pub fn enroll(&mut self, org: &str, subject: &str, role: Role) -> Result<HealthCard, NetError> {
        let ca = self.cas.get_mut(org).ok_or_else(|| NetError::UnknownOrg(org.into()))?;
        Ok(ca.enroll(subject, role, &mut self.rng))
    }

    // ---- endorsement ----

    fn check_proposal(&self, org: &str, proposal: &Proposal) -> Result<&Peer, EndorseError> {
        let port = self.anchor_port(org).ok_or_else(|| EndorseError::UnknownOrg(org.into()))?;
        if self.dead.contains(&port) {
            return Err(EndorseError::PeerDown(port));
        }
        if !proposal.verify_signature() {
            return Err(EndorseError::InvalidSignature);
        }
        let cert = &proposal.invoker_cert;
        match self.consortium().org(&cert.org) {
            Some(member) if verify_card(cert, &member.root_cert) => {}
            _ => return Err(EndorseError::InvalidCertificate),
        }
        Ok(&self.peers[&port])
    }

    /// Simulate `proposal` on `org`'s anchor peer and sign the outcome.
    pub fn endorse(&self, org: &str, proposal: &Proposal) -> Result<Endorsed, EndorseError> {
        let peer = self.check_proposal(org, proposal)?;
        let simulation = execute(&peer.state, proposal)?;
        let digest =
            hdlt_core::ledger::response_digest(&simulation.read_set, &simulation.write_set, &simulation.result);
        let endorsement = Endorsement::sign(&self.anchor_cards[&peer.port], digest);
        Ok(Endorsed { simulation, endorsement })
    }

    /// Simulate without signing; used for reads.
    pub fn query(&self, org: &str, proposal: &Proposal) -> Result<Simulation, EndorseError> {
        let peer = self.check_proposal(org, proposal)?;
        Ok(execute(&peer.state, proposal)?)
    }

    // ---- ordering ----

    /// Hand an endorsed transaction to the ordering service, following
    /// leader hints for up to [`MAX_HOPS`] redirects. Returns the orderer
    /// that accepted it.
    pub fn submit(&mut self, tx: Transaction) -> Result<u16, NetError> {
        let ports = self.config.orderer_ports();
        let mut tried = BTreeSet::new();
        let mut target = self.leader_cache.or_else(|| self.leader());
        let mut last_err = NetError::NoOrderer;
        for _ in 0..=MAX_HOPS {
            let port = match target.filter(|p| !tried.contains(p) && self.is_alive(*p)) {
                Some(p) => p,
                None => match ports.iter().find(|p| !tried.contains(*p) && self.is_alive(**p)) {
                    Some(&p) => p,
                    None => break,
                },
            };
            tried.insert(port);
            let now = self.now;
            match self.orderers.get_mut(&port).expect("orderer port").submit(now, tx.clone()) {
                Ok(out) => {
                    self.leader_cache = Some(port);
                    self.send_raft(port, out);
                    return Ok(port);
                }
                Err(SubmitError::NotLeader { hint }) => {
                    last_err = NetError::Submit(SubmitError::NotLeader { hint });
                    target = hint;
                }
                Err(e) => return Err(NetError::Submit(e)),
            }
        }
        self.leader_cache = None;
        Err(last_err)
    }

    /// Live orderer that leads the highest term.
    pub fn leader(&self) -> Option<u16> {
        self.orderers
            .iter()
            .filter(|(p, o)| o.is_leader() && !self.dead.contains(p))
            .max_by_key(|(_, o)| o.raft().term())
            .map(|(p, _)| *p)
    }

    /// Every (term, leader) pair observed after each processed tick.
    pub fn leader_trace(&self) -> &BTreeSet<(u64, u16)> {
        &self.leader_trace
    }

    /// No term ever had two leaders.
    pub fn election_safe(&self) -> bool {
        let mut terms = BTreeSet::new();
        self.leader_trace.iter().all(|(t, _)| terms.insert(*t))
    }

    // ---- faults ----

    fn known(&self, port: u16) -> Result<(), NetError> {
        if self.nodes.contains_key(&port) {
            Ok(())
        } else {
            Err(NetError::UnknownNode(port))
        }
    }

    /// A killed node drops everything sent to it and stops its timers.
    pub fn kill(&mut self, port: u16) -> Result<(), NetError> {
        self.known(port)?;
        self.dead.insert(port);
        Ok(())
    }

    /// Restart a killed node with the state it had persisted.
    pub fn revive(&mut self, port: u16) -> Result<(), NetError> {
        self.known(port)?;
        if self.dead.remove(&port) {
            let now = self.now;
            if let Some(o) = self.orderers.get_mut(&port) {
                o.restart(now);
            }
            if let Some(p) = self.peers.get_mut(&port) {
                p.next_pull = now + 1;
            }
        }
        Ok(())
    }

    /// Nodes in `a` and nodes in `b` exchange nothing until [`Network::heal`].
    pub fn partition(&mut self, a: &[u16], b: &[u16]) -> Result<(), NetError> {
        for &p in a.iter().chain(b) {
            self.known(p)?;
        }
        self.partitions.push((a.iter().copied().collect(), b.iter().copied().collect()));
        Ok(())
    }

    pub fn heal(&mut self) {
        self.partitions.clear();
    }

    fn can_talk(&self, from: u16, to: u16) -> bool {
        !self.dead.contains(&from)
            && !self.dead.contains(&to)
            && !self
                .partitions
                .iter()
                .any(|(a, b)| (a.contains(&from) && b.contains(&to)) || (b.contains(&from) && a.contains(&to)))
    }

    /// Hand a block straight to a peer, bypassing the network.
    pub fn inject_block(&mut self, port: u16, block: Block) -> Result<Result<Accepted, BlockRejected>, NetError> {
        let root = self.orderer_root.clone();
        let peer = self.peers.get_mut(&port).ok_or(NetError::UnknownNode(port))?;
        let outcome = peer.accept(block, &root);
        if outcome.is_err() {
            peer.rejected += 1;
        }
        Ok(outcome)
    }

    // ---- time ----

    /// Earliest tick after `now` at which anything happens.
    pub fn next_event(&self) -> u64 {
        let mut next = self.sched.next_due().unwrap_or(u64::MAX);
        for (p, o) in &self.orderers {
            if !self.dead.contains(p) {
                next = next.min(o.next_deadline());
            }
        }
        for (p, peer) in &self.peers {
            if !self.dead.contains(p) {
                next = next.min(peer.next_pull);
            }
        }
        next.max(self.now + 1)
    }

    pub fn tick(&mut self) {
        self.process(self.now + 1);
    }

    /// Advance to `target`, visiting only ticks where something is due.
    /// Equivalent to calling [`Network::tick`] repeatedly.
    pub fn advance_to(&mut self, target: u64) {
        while self.now < target {
            let t = self.next_event().min(target);
            self.process(t);
        }
    }

    /// Step until `pred` holds. Returns the ticks that elapsed.
    pub fn run_until(&mut self, max_ticks: u64, mut pred: impl FnMut(&Network) -> bool) -> Result<u64, NetError> {
        let start = self.now;
        while !pred(self) {
            if self.now - start >= max_ticks {
                return Err(NetError::Timeout { max_ticks });
            }
            let t = self.next_event().min(start + max_ticks);
            self.process(t);
        }
        Ok(self.now - start)
    }

    /// Apply scripted faults at their ticks, then run to `end_tick`.
    pub fn run_script(&mut self, script: &[ScenarioStep], end_tick: u64) -> Result<(), NetError> {
        let mut steps: Vec<&ScenarioStep> = script.iter().collect();
        steps.sort_by_key(|s| s.at_tick);
        for step in steps {
            self.advance_to(step.at_tick);
            match &step.action {
                Action::Kill { node } => self.kill(*node)?,
                Action::Revive { node } => self.revive(*node)?,
                Action::Partition { a, b } => self.partition(a, b)?,
                Action::Heal => self.heal(),
            }
        }
        self.advance_to(end_tick);
        Ok(())
    }

    fn process(&mut self, t: u64) {
        self.now = t;
        while let Some(m) = self.sched.pop_due(t) {
            if self.can_talk(m.from, m.to) {
                self.deliver(m.from, m.to, m.payload);
            }
        }
        let ports: Vec<u16> = self.orderers.keys().copied().collect();
        for p in ports {
            if !self.dead.contains(&p) {
                let out = self.orderers.get_mut(&p).expect("orderer").poll(t);
                self.send_raft(p, out);
            }
        }
        let ports: Vec<u16> = self.peers.keys().copied().collect();
        for p in ports {
            if !self.dead.contains(&p) && self.peers[&p].next_pull <= t {
                self.pull(p);
            }
        }
        self.push_new_blocks();
        for (p, o) in &self.orderers {
            if o.is_leader() && !self.dead.contains(p) {
                self.leader_trace.insert((o.raft().term(), *p));
            }
        }
    }

    fn send(&mut self, from: u16, to: u16, msg: NetMessage) {
        self.sched.send(self.now, from, to, msg);
    }

    fn send_raft(&mut self, from: NodeId, out: Vec<Outbound<OrderEntry>>) {
        for o in out {
            self.send(from, o.to, NetMessage::Raft(o.msg));
        }
    }

    fn upstream(&self, port: u16) -> Vec<u16> {
        let peer = &self.peers[&port];
        match peer.kind {
            NodeKind::Anchor => self.config.orderer_ports(),
            _ => vec![self.anchors[&peer.org]],
        }
    }

    fn pull(&mut self, port: u16) {
        let upstream = self.upstream(port);
        let peer = self.peers.get_mut(&port).expect("peer");
        let to = upstream[peer.pull_cursor % upstream.len()];
        peer.pull_cursor += 1;
        peer.next_pull = self.now + PULL_INTERVAL;
        let from = peer.height();
        self.send(port, to, NetMessage::Pull { from });
    }

    /// Leaders stream fresh blocks to every anchor; followers only catch
    /// up their watermark so a new leader does not resend history.
    fn push_new_blocks(&mut self) {
        let anchors: Vec<u16> = self.anchors.values().copied().collect();
        let ports: Vec<u16> = self.orderers.keys().copied().collect();
        for p in ports {
            if self.dead.contains(&p) {
                continue;
            }
            let o = &self.orderers[&p];
            let height = o.height();
            let from = self.pushed[&p];
            if height <= from {
                continue;
            }
            if o.is_leader() {
                let fresh = o.blocks()[from as usize..].to_vec();
                for &a in &anchors {
                    self.send(p, a, NetMessage::Blocks(fresh.clone()));
                }
            }
            self.pushed.insert(p, height);
        }
    }

    fn deliver(&mut self, from: u16, to: u16, msg: NetMessage) {
        match msg {
            NetMessage::Raft(msg) => {
                if let Some(o) = self.orderers.get_mut(&to) {
                    let out = o.step(self.now, Event::Message { from, msg });
                    self.send_raft(to, out);
                }
            }
            NetMessage::Pull { from: height } => {
                let chain: &[Block] = match (self.orderers.get(&to), self.peers.get(&to)) {
                    (Some(o), _) => o.blocks(),
                    (_, Some(p)) => p.blocks(),
                    _ => return,
                };
                let start = (height as usize).min(chain.len());
                let end = (start + PULL_BATCH).min(chain.len());
                if start < end {
                    let blocks = chain[start..end].to_vec();
                    self.send(to, from, NetMessage::Blocks(blocks));
                }
            }
            NetMessage::Blocks(blocks) => self.receive_blocks(to, from, blocks),
        }
    }

    fn receive_blocks(&mut self, port: u16, from: u16, blocks: Vec<Block>) {
        let root = self.orderer_root.clone();
        let Some(peer) = self.peers.get_mut(&port) else {
            return;
        };
        let mut appended = Vec::new();
        let mut gap = false;
        for block in blocks {
            match peer.accept(block, &root) {
                Ok(Accepted::Appended(b)) => appended.push(b),
                Ok(Accepted::Gap) => gap = true,
                Ok(Accepted::Duplicate) => {}
                Err(_) => peer.rejected += 1,
            }
        }
        let height = peer.height();
        let is_anchor = peer.kind == NodeKind::Anchor;
        if gap {
            self.send(port, from, NetMessage::Pull { from: height });
        }
        if is_anchor && !appended.is_empty() {
            for g in self.gossip[&port].clone() {
                self.send(port, g, NetMessage::Blocks(appended.clone()));
            }
        }
    }

    // ---- observation ----

    /// Live peers all at `height` or above.
    pub fn all_peers_at(&self, height: u64) -> bool {
        self.peers.iter().filter(|(p, _)| !self.dead.contains(p)).all(|(_, peer)| peer.height() >= height)
    }

    /// Live peers hold byte-identical chains.
    pub fn converged(&self) -> bool {
        let mut chains = self.peers.iter().filter(|(p, _)| !self.dead.contains(p)).map(|(_, peer)| peer.blocks());
        let Some(first) = chains.next() else {
            return true;
        };
        chains.all(|c| c.len() == first.len() && c.iter().zip(first).all(|(a, b)| a.encoded() == b.encoded()))
    }

    /// World state rebuilt from a peer's chain equals its live state.
    pub fn replay_matches(&self, port: u16) -> bool {
        self.peers
            .get(&port)
            .is_some_and(|p| WorldState::replay(p.blocks()).is_ok_and(|s| s.encoded() == p.state().encoded()))
    }
}
