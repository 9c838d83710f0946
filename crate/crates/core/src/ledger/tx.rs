use serde::{Deserialize, Serialize};

use super::Version;
use crate::codec::{hex_array, hex_bytes, hex_option, to_canonical};
use crate::crypto::Signature;
use crate::msp::{Certificate, HealthCard, Stakeholder};
use crate::Digest256;

/// World-state key holding the consortium configuration written by genesis.
pub const CONSORTIUM_KEY: &str = "config/consortium/healthcare";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Nonce(#[serde(with = "hex_array")] pub [u8; 16]);

/// A client's signed request to invoke a contract function.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proposal {
    pub contract_fn: String,
    pub args: Vec<serde_json::Value>,
    pub invoker_cert: Certificate,
    pub nonce: Nonce,
    /// Logical time the proposal was created; the contract's notion of "now".
    pub created_at_ms: u64,
    pub client_signature: Signature,
}

#[derive(Serialize)]
struct ProposalBody<'a> {
    contract_fn: &'a str,
    args: &'a [serde_json::Value],
    invoker_cert: &'a Certificate,
    nonce: &'a Nonce,
    created_at_ms: u64,
}

impl Proposal {
    pub fn new_signed(
        card: &HealthCard,
        contract_fn: &str,
        args: Vec<serde_json::Value>,
        nonce: Nonce,
        created_at_ms: u64,
    ) -> Self {
        let body = to_canonical(&ProposalBody {
            contract_fn,
            args: &args,
            invoker_cert: &card.certificate,
            nonce: &nonce,
            created_at_ms,
        });
        Proposal {
            contract_fn: contract_fn.to_string(),
            args,
            invoker_cert: card.certificate.clone(),
            nonce,
            created_at_ms,
            client_signature: card.sign(&body),
        }
    }

    fn signed_bytes(&self) -> Vec<u8> {
        to_canonical(&ProposalBody {
            contract_fn: &self.contract_fn,
            args: &self.args,
            invoker_cert: &self.invoker_cert,
            nonce: &self.nonce,
            created_at_ms: self.created_at_ms,
        })
    }

    pub fn verify_signature(&self) -> bool {
        self.invoker_cert
            .public_key
            .verify(&self.signed_bytes(), &self.client_signature)
    }

    pub fn tx_id(&self) -> Digest256 {
        Digest256::of(&to_canonical(self))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KvRead {
    pub key: String,
    /// `None` when the key was absent at simulation time.
    pub version: Option<Version>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KvWrite {
    pub key: String,
    /// `None` is a tombstone.
    #[serde(with = "hex_option")]
    pub value: Option<Vec<u8>>,
}

/// Digest an endorser signs: the simulated read set, write set and result.
pub fn response_digest(read_set: &[KvRead], write_set: &[KvWrite], result: &[u8]) -> Digest256 {
    #[derive(Serialize)]
    struct Response<'a> {
        read_set: &'a [KvRead],
        write_set: &'a [KvWrite],
        #[serde(with = "hex_bytes")]
        result: &'a [u8],
    }
    Digest256::of(&to_canonical(&Response { read_set, write_set, result }))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Endorsement {
    pub endorser_cert: Certificate,
    pub response_digest: Digest256,
    pub signature: Signature,
}

impl Endorsement {
    pub fn sign(card: &HealthCard, response_digest: Digest256) -> Self {
        Endorsement {
            endorser_cert: card.certificate.clone(),
            signature: card.sign(response_digest.as_bytes()),
            response_digest,
        }
    }

    pub fn verify(&self) -> bool {
        self.endorser_cert
            .public_key
            .verify(self.response_digest.as_bytes(), &self.signature)
    }
}

/// An endorsed transaction ready for ordering.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub tx_id: Digest256,
    pub proposal: Proposal,
    pub endorsements: Vec<Endorsement>,
    pub read_set: Vec<KvRead>,
    pub write_set: Vec<KvWrite>,
    #[serde(with = "hex_bytes")]
    pub result: Vec<u8>,
}

impl Transaction {
    pub fn new(
        proposal: Proposal,
        read_set: Vec<KvRead>,
        write_set: Vec<KvWrite>,
        result: Vec<u8>,
        endorsements: Vec<Endorsement>,
    ) -> Self {
        Transaction { tx_id: proposal.tx_id(), proposal, endorsements, read_set, write_set, result }
    }

    pub fn response_digest(&self) -> Digest256 {
        response_digest(&self.read_set, &self.write_set, &self.result)
    }

    /// `tx_id` matches the proposal, at least one endorsement is present and
    /// every endorsement signs this read/write set.
    pub fn is_well_formed(&self) -> bool {
        let digest = response_digest(&self.read_set, &self.write_set, &self.result);
        self.tx_id == self.proposal.tx_id()
            && !self.endorsements.is_empty()
            && self
                .endorsements
                .iter()
                .all(|e| e.response_digest == digest && e.verify())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrgConfig {
    pub name: String,
    pub stakeholder: Stakeholder,
    pub root_cert: Certificate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrdererOrgConfig {
    pub name: String,
    pub root_cert: Certificate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsortiumConfig {
    pub channel: String,
    pub created_at_ms: u64,
    pub orgs: Vec<OrgConfig>,
    pub orderer_org: OrdererOrgConfig,
}

impl ConsortiumConfig {
    pub fn org(&self, name: &str) -> Option<&OrgConfig> {
        self.orgs.iter().find(|o| o.name == name)
    }
}

/// Channel configuration carried by the genesis block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigTransaction {
    pub consortium: ConsortiumConfig,
    pub write_set: Vec<KvWrite>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Envelope {
    Config(ConfigTransaction),
    Endorser(Transaction),
}

impl Envelope {
    pub fn digest(&self) -> Digest256 {
        Digest256::of(&to_canonical(self))
    }

    /// Config envelopes have no proposal; their id is their digest.
    pub fn tx_id(&self) -> Digest256 {
        match self {
            Envelope::Config(_) => self.digest(),
            Envelope::Endorser(tx) => tx.tx_id,
        }
    }

    pub fn read_set(&self) -> &[KvRead] {
        match self {
            Envelope::Config(_) => &[],
            Envelope::Endorser(tx) => &tx.read_set,
        }
    }

    pub fn write_set(&self) -> &[KvWrite] {
        match self {
            Envelope::Config(c) => &c.write_set,
            Envelope::Endorser(tx) => &tx.write_set,
        }
    }

    pub fn as_transaction(&self) -> Option<&Transaction> {
        match self {
            Envelope::Endorser(tx) => Some(tx),
            Envelope::Config(_) => None,
        }
    }
}
