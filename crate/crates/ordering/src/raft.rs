use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

/// Orderer nodes are addressed by their listening port.
pub type NodeId = u16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RaftConfig {
    pub election_min: u64,
    pub election_max: u64,
    pub heartbeat: u64,
    /// Most entries carried by one AppendEntries.
    pub max_batch: usize,
}

impl Default for RaftConfig {
    fn default() -> Self {
        RaftConfig { election_min: 150, election_max: 300, heartbeat: 50, max_batch: 64 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Follower,
    Candidate,
    Leader,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEntry<P> {
    pub term: u64,
    /// `None` is the no-op a leader appends when its term starts.
    pub payload: Option<P>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RaftMessage<P> {
    RequestVote { term: u64, last_log_index: u64, last_log_term: u64 },
    VoteReply { term: u64, granted: bool },
    AppendEntries { term: u64, prev_index: u64, prev_term: u64, entries: Vec<LogEntry<P>>, leader_commit: u64 },
    /// On failure `hint` is the index the leader should retry from.
    AppendReply { term: u64, success: bool, match_index: u64, hint: u64 },
}

impl<P> RaftMessage<P> {
    pub fn term(&self) -> u64 {
        match self {
            RaftMessage::RequestVote { term, .. }
            | RaftMessage::VoteReply { term, .. }
            | RaftMessage::AppendEntries { term, .. }
            | RaftMessage::AppendReply { term, .. } => *term,
        }
    }
}

#[derive(Debug, Clone)]
pub enum Event<P> {
    Message { from: NodeId, msg: RaftMessage<P> },
    ElectionTimeout,
    Heartbeat,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outbound<P> {
    pub to: NodeId,
    pub msg: RaftMessage<P>,
}

/// A single Raft participant. All state changes go through [`RaftNode::step`]
/// (or [`RaftNode::propose`]); time is passed in, never read.
#[derive(Debug, Clone)]
pub struct RaftNode<P> {
    id: NodeId,
    peers: Vec<NodeId>,
    config: RaftConfig,
    term: u64,
    voted_for: Option<NodeId>,
    role: Role,
    log: Vec<LogEntry<P>>,
    commit_index: u64,
    last_applied: u64,
    leader_hint: Option<NodeId>,
    votes: BTreeSet<NodeId>,
    next_index: BTreeMap<NodeId, u64>,
    match_index: BTreeMap<NodeId, u64>,
    in_flight: BTreeMap<NodeId, bool>,
    /// Index of the no-op that opened the current leadership term.
    term_start: u64,
    election_deadline: u64,
    heartbeat_deadline: u64,
    rng: ChaCha20Rng,
}

impl<P: Clone> RaftNode<P> {
    pub fn new(id: NodeId, peers: Vec<NodeId>, config: RaftConfig, seed: u64, now: u64) -> Self {
        let peers: Vec<NodeId> = peers.into_iter().filter(|p| *p != id).collect();
        let mut node = RaftNode {
            id,
            peers,
            config,
            term: 0,
            voted_for: None,
            role: Role::Follower,
            log: Vec::new(),
            commit_index: 0,
            last_applied: 0,
            leader_hint: None,
            votes: BTreeSet::new(),
            next_index: BTreeMap::new(),
            match_index: BTreeMap::new(),
            in_flight: BTreeMap::new(),
            term_start: 0,
            election_deadline: 0,
            heartbeat_deadline: 0,
            rng: ChaCha20Rng::seed_from_u64(seed ^ (u64::from(id) << 32)),
        };
        node.reset_election(now);
        node
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn term(&self) -> u64 {
        self.term
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn is_leader(&self) -> bool {
        self.role == Role::Leader
    }

    pub fn leader_hint(&self) -> Option<NodeId> {
        self.leader_hint
    }

    pub fn commit_index(&self) -> u64 {
        self.commit_index
    }

    pub fn last_index(&self) -> u64 {
        self.log.len() as u64
    }

    pub fn log(&self) -> &[LogEntry<P>] {
        &self.log
    }

    pub fn entry(&self, index: u64) -> Option<&LogEntry<P>> {
        index.checked_sub(1).and_then(|i| self.log.get(i as usize))
    }

    fn quorum(&self) -> usize {
        (self.peers.len() + 1) / 2 + 1
    }

    fn term_at(&self, index: u64) -> u64 {
        self.entry(index).map_or(0, |e| e.term)
    }

    /// True once this leader has committed an entry of its own term, so its
    /// applied state reflects everything earlier leaders committed.
    pub fn leader_ready(&self) -> bool {
        self.is_leader() && self.commit_index >= self.term_start
    }

    /// Entries proposed in the log but not yet committed.
    pub fn uncommitted(&self) -> &[LogEntry<P>] {
        &self.log[self.commit_index as usize..]
    }

    /// Earliest tick at which a timer fires.
    pub fn next_deadline(&self) -> u64 {
        if self.is_leader() {
            self.heartbeat_deadline
        } else {
            self.election_deadline
        }
    }

    /// Come back after a crash: persistent state (term, vote, log) survives,
    /// leadership does not.
    pub fn restart(&mut self, now: u64) {
        self.role = Role::Follower;
        self.leader_hint = None;
        self.votes.clear();
        self.reset_election(now);
    }

    fn reset_election(&mut self, now: u64) {
        self.election_deadline = now + self.rng.gen_range(self.config.election_min..=self.config.election_max);
    }

    /// Fire whichever timer is due at `now`.
    pub fn poll_timers(&mut self, now: u64) -> Vec<Outbound<P>> {
        if now < self.next_deadline() {
            return Vec::new();
        }
        let event = if self.is_leader() { Event::Heartbeat } else { Event::ElectionTimeout };
        self.step(now, event)
    }

    pub fn step(&mut self, now: u64, event: Event<P>) -> Vec<Outbound<P>> {
        let mut out = Vec::new();
        match event {
            Event::ElectionTimeout => {
                if !self.is_leader() {
                    self.start_election(now, &mut out);
                }
            }
            Event::Heartbeat => {
                if self.is_leader() {
                    self.heartbeat_deadline = now + self.config.heartbeat;
                    for p in self.peers.clone() {
                        self.send_append(p, true, &mut out);
                    }
                }
            }
            Event::Message { from, msg } => self.handle(now, from, msg, &mut out),
        }
        out
    }

    fn start_election(&mut self, now: u64, out: &mut Vec<Outbound<P>>) {
        self.term += 1;
        self.role = Role::Candidate;
        self.voted_for = Some(self.id);
        self.leader_hint = None;
        self.votes = BTreeSet::from([self.id]);
        self.reset_election(now);
        if self.votes.len() >= self.quorum() {
            self.become_leader(now, out);
            return;
        }
        let (last_log_index, last_log_term) = (self.last_index(), self.term_at(self.last_index()));
        for &p in &self.peers {
            out.push(Outbound { to: p, msg: RaftMessage::RequestVote { term: self.term, last_log_index, last_log_term } });
        }
    }

    fn become_leader(&mut self, now: u64, out: &mut Vec<Outbound<P>>) {
        self.role = Role::Leader;
        self.leader_hint = Some(self.id);
        self.log.push(LogEntry { term: self.term, payload: None });
        self.term_start = self.last_index();
        for &p in &self.peers {
            self.next_index.insert(p, self.last_index());
            self.match_index.insert(p, 0);
            self.in_flight.insert(p, false);
        }
        self.heartbeat_deadline = now + self.config.heartbeat;
        for p in self.peers.clone() {
            self.send_append(p, true, out);
        }
        self.advance_commit();
    }

    fn become_follower(&mut self, term: u64) {
        if term > self.term {
            self.term = term;
            self.voted_for = None;
        }
        self.role = Role::Follower;
        self.votes.clear();
    }

    fn handle(&mut self, now: u64, from: NodeId, msg: RaftMessage<P>, out: &mut Vec<Outbound<P>>) {
        if msg.term() > self.term {
            self.become_follower(msg.term());
            self.leader_hint = None;
        }
        match msg {
            RaftMessage::RequestVote { term, last_log_index, last_log_term } => {
                let up_to_date = (last_log_term, last_log_index) >= (self.term_at(self.last_index()), self.last_index());
                let granted = term == self.term && up_to_date && self.voted_for.map_or(true, |v| v == from);
                if granted {
                    self.voted_for = Some(from);
                    self.reset_election(now);
                }
                out.push(Outbound { to: from, msg: RaftMessage::VoteReply { term: self.term, granted } });
            }
            RaftMessage::VoteReply { term, granted } => {
                if self.role == Role::Candidate && term == self.term && granted {
                    self.votes.insert(from);
                    if self.votes.len() >= self.quorum() {
                        self.become_leader(now, out);
                    }
                }
            }
            RaftMessage::AppendEntries { term, prev_index, prev_term, entries, leader_commit } => {
                if term < self.term {
                    out.push(Outbound {
                        to: from,
                        msg: RaftMessage::AppendReply { term: self.term, success: false, match_index: 0, hint: 0 },
                    });
                    return;
                }
                self.role = Role::Follower;
                self.leader_hint = Some(from);
                self.reset_election(now);
                let reply = self.accept_entries(prev_index, prev_term, entries, leader_commit);
                out.push(Outbound { to: from, msg: reply });
            }
            RaftMessage::AppendReply { term, success, match_index, hint } => {
                if !self.is_leader() || term != self.term {
                    return;
                }
                self.in_flight.insert(from, false);
                if success {
                    let m = self.match_index.entry(from).or_insert(0);
                    *m = (*m).max(match_index);
                    let m = *m;
                    self.next_index.insert(from, m + 1);
                    self.advance_commit();
                } else {
                    let next = hint.clamp(1, self.last_index() + 1);
                    self.next_index.insert(from, next);
                }
                if self.next_index[&from] <= self.last_index() || !success {
                    self.send_append(from, false, out);
                }
            }
        }
    }

    fn accept_entries(
        &mut self,
        prev_index: u64,
        prev_term: u64,
        entries: Vec<LogEntry<P>>,
        leader_commit: u64,
    ) -> RaftMessage<P> {
        if prev_index > self.last_index() {
            return RaftMessage::AppendReply { term: self.term, success: false, match_index: 0, hint: self.last_index() + 1 };
        }
        if self.term_at(prev_index) != prev_term {
            // Skip back over the whole conflicting term in one round trip.
            let bad = self.term_at(prev_index);
            let mut first = prev_index;
            while first > self.commit_index + 1 && self.term_at(first - 1) == bad {
                first -= 1;
            }
            return RaftMessage::AppendReply { term: self.term, success: false, match_index: 0, hint: first };
        }
        let mut index = prev_index;
        for entry in entries {
            index += 1;
            if index <= self.last_index() {
                if self.term_at(index) == entry.term {
                    continue;
                }
                self.log.truncate(index as usize - 1);
            }
            self.log.push(entry);
        }
        self.commit_index = self.commit_index.max(leader_commit.min(index));
        RaftMessage::AppendReply { term: self.term, success: true, match_index: index, hint: 0 }
    }

    fn send_append(&mut self, peer: NodeId, force: bool, out: &mut Vec<Outbound<P>>) {
        if !force && self.in_flight.get(&peer).copied().unwrap_or(false) {
            return;
        }
        let next = self.next_index.get(&peer).copied().unwrap_or(1).max(1);
        let prev_index = next - 1;
        let end = (prev_index as usize + self.config.max_batch).min(self.log.len());
        let entries = self.log[prev_index as usize..end].to_vec();
        self.in_flight.insert(peer, true);
        out.push(Outbound {
            to: peer,
            msg: RaftMessage::AppendEntries {
                term: self.term,
                prev_index,
                prev_term: self.term_at(prev_index),
                entries,
                leader_commit: self.commit_index,
            },
        });
    }

    fn advance_commit(&mut self) {
        for n in (self.commit_index + 1..=self.last_index()).rev() {
            if self.term_at(n) != self.term {
                break;
            }
            let acks = 1 + self.match_index.values().filter(|m| **m >= n).count();
            if acks >= self.quorum() {
                self.commit_index = n;
                break;
            }
        }
    }

    /// Append a client command. Only the leader accepts.
    pub fn propose(&mut self, payload: P) -> Result<(u64, Vec<Outbound<P>>), Option<NodeId>> {
        if !self.is_leader() {
            return Err(self.leader_hint);
        }
        self.log.push(LogEntry { term: self.term, payload: Some(payload) });
        let index = self.last_index();
        let mut out = Vec::new();
        for p in self.peers.clone() {
            self.send_append(p, false, &mut out);
        }
        self.advance_commit();
        Ok((index, out))
    }

    /// Committed entries not handed out yet, with their indices.
    pub fn take_committed(&mut self) -> Vec<(u64, LogEntry<P>)> {
        let mut out = Vec::new();
        while self.last_applied < self.commit_index {
            self.last_applied += 1;
            out.push((self.last_applied, self.log[self.last_applied as usize - 1].clone()));
        }
        out
    }
}
