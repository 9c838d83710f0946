use std::collections::{BTreeMap, BTreeSet, HashMap};

use hdlt_core::ledger::{Nonce, Proposal, Transaction};
use hdlt_core::msp::{
    authenticate, hash_password, AuthError, verify_certificate, HealthCard, IdentityRecord, Role, SessionToken, UserProfile,
    Wallet, PASSWORD_ITERATIONS,
};
use hdlt_core::Digest256;
use hdlt_net::{Network, TopologyConfig, DEFAULT_EPOCH_MS};
use hdlt_ordering::BlockCutPolicy;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::docs::{DocStore, DEFAULT_DOC_LIMIT};
use crate::session::{Session, SessionError, SessionStore, SESSION_IDLE_MS};
use crate::GatewayError;

/// Virtual milliseconds between submit attempts while no orderer accepts.
pub const RETRY_MS: u64 = 20;
/// Virtual milliseconds before an accepted but uncommitted transaction is sent again.
pub const RESUBMIT_MS: u64 = 1_000;
/// Default wait for a commit, in virtual milliseconds.
pub const DEFAULT_COMMIT_TIMEOUT_MS: u64 = 10_000;

/// Endorsements a transaction needs before it is ordered.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndorsementPolicy {
    /// The anchor peer of the invoker's organization.
    #[default]
    InvokerOrg,
    /// The anchor peer of every organization, all agreeing.
    AllOrgs,
}

impl EndorsementPolicy {
    fn name(self) -> &'static str {
        match self {
            EndorsementPolicy::InvokerOrg => "invoker_org",
            EndorsementPolicy::AllOrgs => "all_orgs",
        }
    }
}

#[derive(Debug, Clone)]
pub struct GatewayConfig {
    pub topology: TopologyConfig,
    pub policy: EndorsementPolicy,
    /// Password of every organization's bootstrap admin, `admin@<org>`.
    pub admin_password: String,
    pub session_idle_ms: u64,
    pub doc_limit: usize,
    pub epoch_ms: u64,
    pub cut_policy: BlockCutPolicy,
}

impl GatewayConfig {
    pub fn new(topology: TopologyConfig, admin_password: &str) -> Self {
        GatewayConfig {
            topology,
            policy: EndorsementPolicy::default(),
            admin_password: admin_password.to_string(),
            session_idle_ms: SESSION_IDLE_MS,
            doc_limit: DEFAULT_DOC_LIMIT,
            epoch_ms: DEFAULT_EPOCH_MS,
            cut_policy: BlockCutPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitReceipt {
    pub tx_id: Digest256,
    pub block_number: u64,
    pub tx_index: u32,
    pub valid: bool,
}

/// A committed, valid invocation and what the contract returned.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Invoked {
    #[serde(flatten)]
    pub receipt: CommitReceipt,
    pub result: Value,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct NewUser {
    pub identity_id: String,
    pub display_name: String,
    #[serde(default)]
    pub attrs: BTreeMap<String, String>,
    #[serde(default = "user_role")]
    pub role: Role,
    pub password: String,
}

fn user_role() -> Role {
    Role::User
}

#[derive(Debug, Default)]
struct ReceiptIndex {
    indexed: u64,
    by_tx: HashMap<Digest256, CommitReceipt>,
}

/// Client side of the network: holds members' cards (the custodial wallet),
/// sessions and off-chain documents, and runs endorse, order and commit for
/// them. Every method is synchronous; [`Gateway::submit_and_wait`] steps the
/// network itself. The HTTP server instead steps the network from a driver
/// task and uses the finer-grained methods.
pub struct Gateway {
    net: Network,
    policy: EndorsementPolicy,
    wallets: BTreeMap<String, Wallet>,
    sessions: SessionStore,
    docs: DocStore,
    receipts: BTreeMap<String, ReceiptIndex>,
    rng: ChaCha20Rng,
}

impl Gateway {
    /// Start the network, wait for an ordering leader and give every
    /// organization's default admin a password login.
    pub fn start(config: GatewayConfig) -> Result<Self, GatewayError> {
        let seed = config.topology.seed;
        let mut net = Network::start_with(config.topology, config.epoch_ms, config.cut_policy);
        net.run_until(DEFAULT_COMMIT_TIMEOUT_MS, |n| n.leader().is_some())?;
        let mut gw = Gateway {
            net,
            policy: config.policy,
            wallets: BTreeMap::new(),
            sessions: SessionStore::new(config.session_idle_ms),
            docs: DocStore::with_limit(config.doc_limit),
            receipts: BTreeMap::new(),
            rng: ChaCha20Rng::seed_from_u64(seed ^ 0x6761_7465_7761_7921),
        };
        let orgs: Vec<String> = gw.net.config().orgs.iter().map(|o| o.name.clone()).collect();
        let mut pending = Vec::new();
        for org in &orgs {
            let admin = gw.net.admin(org).expect("every org has an admin").clone();
            let mut salt = [0u8; 16];
            gw.rng.fill_bytes(&mut salt);
            let record = IdentityRecord {
                identity_id: admin.identity_id.clone(),
                org: org.clone(),
                role: Role::Admin,
                display_name: format!("{org} administrator"),
                attrs: BTreeMap::new(),
                salt: salt.to_vec(),
                password_digest: hash_password(&config.admin_password, &salt, PASSWORD_ITERATIONS).to_vec(),
                iterations: PASSWORD_ITERATIONS,
            };
            let mut wallet = Wallet::in_memory();
            wallet.insert(admin.clone())?;
            gw.wallets.insert(org.clone(), wallet);
            let proposal = gw.proposal_for(&admin, "register_identity", json!({ "record": record }));
            pending.push(gw.endorse(&proposal)?);
        }
        for tx in pending {
            let receipt = gw.submit_and_wait(tx, DEFAULT_COMMIT_TIMEOUT_MS)?;
            if !receipt.valid {
                return Err(GatewayError::Conflict { receipt });
            }
        }
        Ok(gw)
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn network_mut(&mut self) -> &mut Network {
        &mut self.net
    }

    pub fn policy(&self) -> EndorsementPolicy {
        self.policy
    }

    pub fn set_policy(&mut self, policy: EndorsementPolicy) {
        self.policy = policy;
    }

    pub fn wallet(&self, org: &str) -> Option<&Wallet> {
        self.wallets.get(org)
    }

    pub fn docs(&self) -> &DocStore {
        &self.docs
    }

    pub fn docs_mut(&mut self) -> &mut DocStore {
        &mut self.docs
    }

    /// Lowest height among live anchor peers.
    pub fn height(&self) -> u64 {
        self.net
            .config()
            .orgs
            .iter()
            .filter_map(|o| self.net.anchor(&o.name))
            .filter(|p| self.net.is_alive(p.port()))
            .map(|p| p.height())
            .min()
            .unwrap_or(0)
    }

    /// Step the network `ticks` virtual milliseconds.
    pub fn advance(&mut self, ticks: u64) {
        let target = self.net.now() + ticks;
        self.net.advance_to(target);
    }

    // ---- login ----

    /// Check an identity and password against the wallets and the
    /// identity records on the ledger, and open a session.
    pub fn login(&mut self, identity_id: &str, password: &str, now_ms: u64) -> Result<(SessionToken, Session), GatewayError> {
        let (org, wallet) = self
            .wallets
            .iter()
            .find(|(_, w)| w.contains(identity_id))
            .ok_or(AuthError::InvalidIdentity)?;
        let state = self.net.anchor(org).expect("wallet org has an anchor").state();
        let grant = authenticate(identity_id, password, wallet, state, &mut self.rng)?;
        let stakeholder = self
            .net
            .consortium()
            .org(&grant.card.org)
            .map(|o| o.stakeholder)
            .ok_or_else(|| GatewayError::Unavailable(format!("{} left the consortium", grant.card.org)))?;
        let session = Session {
            identity_id: grant.card.identity_id.clone(),
            org: grant.card.org.clone(),
            role: grant.card.role,
            stakeholder,
            last_seen_ms: now_ms,
        };
        self.sessions.insert(grant.session_token, session.clone());
        Ok((grant.session_token, session))
    }

    pub fn session(&mut self, token: &SessionToken, now_ms: u64) -> Result<Session, GatewayError> {
        Ok(self.sessions.touch(token, now_ms)?)
    }

    fn card(&self, session: &Session) -> Result<&HealthCard, GatewayError> {
        self.wallets
            .get(&session.org)
            .and_then(|w| w.get(&session.identity_id))
            .ok_or(GatewayError::Session(SessionError::Missing))
    }

    // ---- endorse ----

    /// Sign a proposal with the member's card. Logical time is the ledger's
    /// clock: genesis time plus elapsed network time.
    pub fn proposal_for(&mut self, card: &HealthCard, function: &str, args: Value) -> Proposal {
        let mut nonce = [0u8; 16];
        self.rng.fill_bytes(&mut nonce);
        let now = self.net.genesis().header.timestamp + self.net.now();
        Proposal::new_signed(card, function, vec![args], Nonce(nonce), now)
    }

    pub fn proposal(&mut self, session: &Session, function: &str, args: Value) -> Result<Proposal, GatewayError> {
        let card = self.card(session)?.clone();
        Ok(self.proposal_for(&card, function, args))
    }

    /// Collect the endorsements the policy asks for.
    pub fn endorse(&self, proposal: &Proposal) -> Result<Transaction, GatewayError> {
        let invoker_org = proposal.invoker_cert.org.clone();
        let orgs: Vec<String> = match self.policy {
            EndorsementPolicy::InvokerOrg => vec![invoker_org],
            EndorsementPolicy::AllOrgs => self.net.config().orgs.iter().map(|o| o.name.clone()).collect(),
        };
        let mut endorsed = orgs.iter().map(|org| self.net.endorse(org, proposal));
        let first = endorsed.next().expect("at least one endorsing org")?;
        let mut endorsements = vec![first.endorsement.clone()];
        for e in endorsed {
            let e = e?;
            if e.endorsement.response_digest != first.endorsement.response_digest {
                return Err(GatewayError::EndorsementMismatch(proposal.tx_id()));
            }
            endorsements.push(e.endorsement);
        }
        let mut tx = first.into_transaction(proposal.clone());
        tx.endorsements = endorsements;
        Ok(tx)
    }

    /// Valid endorsements over this read/write set, from peers certified by
    /// a member organization, cover what the policy requires.
    pub fn check_policy(&self, tx: &Transaction) -> Result<(), GatewayError> {
        let digest = tx.response_digest();
        let consortium = self.net.consortium();
        let endorsing: BTreeSet<&str> = tx
            .endorsements
            .iter()
            .filter(|e| e.response_digest == digest && e.verify())
            .filter(|e| {
                e.endorser_cert.role == Role::Peer
                    && consortium
                        .org(&e.endorser_cert.org)
                        .is_some_and(|o| verify_certificate(&e.endorser_cert, &o.root_cert))
            })
            .map(|e| e.endorser_cert.org.as_str())
            .collect();
        let satisfied = tx.tx_id == tx.proposal.tx_id()
            && match self.policy {
                EndorsementPolicy::InvokerOrg => endorsing.contains(tx.proposal.invoker_cert.org.as_str()),
                EndorsementPolicy::AllOrgs => consortium.orgs.iter().all(|o| endorsing.contains(o.name.as_str())),
            };
        if satisfied {
            Ok(())
        } else {
            Err(GatewayError::PolicyUnsatisfied(self.policy.name()))
        }
    }

    /// Propose, endorse and check the policy.
    pub fn prepare(&mut self, session: &Session, function: &str, args: Value) -> Result<Transaction, GatewayError> {
        let proposal = self.proposal(session, function, args)?;
        let tx = self.endorse(&proposal)?;
        self.check_policy(&tx)?;
        Ok(tx)
    }

    // ---- order and commit ----

    pub fn submit(&mut self, tx: Transaction) -> Result<u16, GatewayError> {
        Ok(self.net.submit(tx)?)
    }

    /// Where `tx_id` landed on `org`'s anchor peer, once it has the block.
    pub fn receipt(&mut self, org: &str, tx_id: &Digest256) -> Option<CommitReceipt> {
        let peer = self.net.anchor(org)?;
        let index = self.receipts.entry(org.to_string()).or_default();
        for block in &peer.blocks()[index.indexed as usize..] {
            for (i, env) in block.transactions.iter().enumerate() {
                let id = env.tx_id();
                index.by_tx.entry(id).or_insert(CommitReceipt {
                    tx_id: id,
                    block_number: block.number(),
                    tx_index: i as u32,
                    valid: block.validity_flags.get(i).copied().unwrap_or(false),
                });
            }
        }
        index.indexed = peer.height();
        index.by_tx.get(tx_id).copied()
    }

    /// Order `tx` and step the network until the invoker's anchor peer
    /// commits it. Submission is retried while no orderer accepts, and
    /// repeated if an accepted transaction does not show up; the ordering
    /// service drops the copies.
    pub fn submit_and_wait(&mut self, tx: Transaction, timeout_ms: u64) -> Result<CommitReceipt, GatewayError> {
        self.check_policy(&tx)?;
        let org = tx.proposal.invoker_cert.org.clone();
        let tx_id = tx.tx_id;
        let deadline = self.net.now() + timeout_ms;
        let mut next_submit = self.net.now();
        loop {
            if let Some(r) = self.receipt(&org, &tx_id) {
                return Ok(r);
            }
            let now = self.net.now();
            if now >= deadline {
                return Err(GatewayError::Timeout { tx_id, timeout_ms });
            }
            if now >= next_submit {
                next_submit = now + if self.net.submit(tx.clone()).is_ok() { RESUBMIT_MS } else { RETRY_MS };
            }
            self.net.advance_to((now + RETRY_MS).min(deadline));
        }
    }

    /// The contract result of a committed transaction; an invalidated one is a conflict.
    pub fn finish(&self, tx: &Transaction, receipt: CommitReceipt) -> Result<Invoked, GatewayError> {
        if !receipt.valid {
            return Err(GatewayError::Conflict { receipt });
        }
        Ok(Invoked { receipt, result: parse_result(&tx.result)? })
    }

    pub fn invoke(&mut self, session: &Session, function: &str, args: Value) -> Result<Invoked, GatewayError> {
        let tx = self.prepare(session, function, args)?;
        let receipt = self.submit_and_wait(tx.clone(), DEFAULT_COMMIT_TIMEOUT_MS)?;
        self.finish(&tx, receipt)
    }

    /// Run a read-only function on the invoker's anchor peer.
    pub fn query(&mut self, session: &Session, function: &str, args: Value) -> Result<Value, GatewayError> {
        let proposal = self.proposal(session, function, args)?;
        let simulation = self.net.query(&session.org, &proposal)?;
        parse_result(&simulation.result)
    }

    // ---- members ----

    /// Enroll a member with the admin's CA and endorse the write of their
    /// identity record. The card is withdrawn again if that fails; callers
    /// that then fail to commit must call [`Gateway::rollback_registration`].
    pub fn prepare_registration(&mut self, admin: &Session, user: &NewUser) -> Result<Transaction, GatewayError> {
        let admin_card = self.card(admin)?.clone();
        let profile = UserProfile {
            identity_id: user.identity_id.clone(),
            display_name: user.display_name.clone(),
            attrs: user.attrs.clone(),
        };
        if self.wallets.values().any(|w| w.contains(&user.identity_id)) {
            return Err(hdlt_core::msp::MspError::DuplicateIdentity(user.identity_id.clone()).into());
        }
        let wallet = self.wallets.get_mut(&admin.org).expect("session org has a wallet");
        let registration =
            self.net.register_member(&admin.org, wallet, &admin_card, &profile, user.role, &user.password)?;
        let proposal = self.proposal_for(&admin_card, "register_identity", json!({ "record": registration.record }));
        let prepared = self.endorse(&proposal).and_then(|tx| self.check_policy(&tx).map(|_| tx));
        if prepared.is_err() {
            self.rollback_registration(&admin.org, &user.identity_id);
        }
        prepared
    }

    pub fn rollback_registration(&mut self, org: &str, identity_id: &str) {
        if let Some(w) = self.wallets.get_mut(org) {
            let _ = w.remove(identity_id);
        }
    }

    pub fn register_user(&mut self, admin: &Session, user: &NewUser) -> Result<Invoked, GatewayError> {
        let tx = self.prepare_registration(admin, user)?;
        let outcome = self
            .submit_and_wait(tx.clone(), DEFAULT_COMMIT_TIMEOUT_MS)
            .and_then(|r| self.finish(&tx, r));
        if outcome.is_err() {
            self.rollback_registration(&admin.org, &user.identity_id);
        }
        outcome
    }
}

fn parse_result(bytes: &[u8]) -> Result<Value, GatewayError> {
    serde_json::from_slice(bytes).map_err(|e| GatewayError::BadRequest(format!("contract result is not JSON: {e}")))
}
