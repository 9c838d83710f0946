#![allow(dead_code)]

use std::collections::BTreeMap;

use hdlt_chaincode::{execute, ChaincodeError, Simulation};
use hdlt_core::ledger::{
    create_genesis_block, Block, ConsortiumConfig, Endorsement, Envelope, Nonce, OrdererOrgConfig, OrgConfig,
    Proposal, Transaction, WorldState,
};
use hdlt_core::msp::{CaServer, HealthCard, Role, Stakeholder, UserProfile, Wallet};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde_json::{json, Value};

pub const T0: u64 = 1_700_000_000_000;

/// Executes contracts and commits each successful call in its own block.
pub struct Ledger {
    pub state: WorldState,
    pub blocks: Vec<Block>,
    pub now: u64,
    rng: ChaCha20Rng,
    cas: BTreeMap<Stakeholder, CaServer>,
    wallets: BTreeMap<Stakeholder, Wallet>,
    pub admins: BTreeMap<Stakeholder, HealthCard>,
    peer: HealthCard,
}

pub fn org_name(s: Stakeholder) -> &'static str {
    match s {
        Stakeholder::Authority => "AuthorityOrg",
        Stakeholder::Doctor => "DoctorOrg",
        Stakeholder::Nagorik => "NagorikOrg",
    }
}

impl Ledger {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut cas = BTreeMap::new();
        let mut admins = BTreeMap::new();
        let mut wallets = BTreeMap::new();
        let mut orgs = Vec::new();
        for s in Stakeholder::ALL {
            let mut ca = CaServer::bootstrap(org_name(s), &mut rng);
            admins.insert(s, ca.enroll_default_admin(&mut rng).unwrap());
            orgs.push(OrgConfig { name: org_name(s).into(), stakeholder: s, root_cert: ca.root_cert().clone() });
            cas.insert(s, ca);
            wallets.insert(s, Wallet::in_memory());
        }
        let peer = cas.get_mut(&Stakeholder::Authority).unwrap().enroll("peer0", Role::Peer, &mut rng);
        let oca = CaServer::bootstrap("OrdererOrg", &mut rng);
        let genesis = create_genesis_block(ConsortiumConfig {
            channel: "healthcare".into(),
            created_at_ms: T0,
            orgs,
            orderer_org: OrdererOrgConfig { name: "OrdererOrg".into(), root_cert: oca.root_cert().clone() },
        })
        .unwrap();
        let mut state = WorldState::new();
        state.commit_block(&genesis).unwrap();
        Ledger { state, blocks: vec![genesis], now: T0, rng, cas, wallets, admins, peer }
    }

    /// Enroll and register a member; citizens may carry attributes such as allergies.
    pub fn member(&mut self, s: Stakeholder, id: &str, attrs: &[(&str, &str)]) -> HealthCard {
        let profile = UserProfile {
            identity_id: id.into(),
            display_name: format!("Member {id}"),
            attrs: attrs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        };
        let admin = self.admins[&s].clone();
        let reg = self
            .cas
            .get_mut(&s)
            .unwrap()
            .register_user(self.wallets.get_mut(&s).unwrap(), &admin, &profile, Role::User, "pw", &mut self.rng)
            .unwrap();
        self.invoke(&admin, "register_identity", json!({ "record": reg.record })).unwrap();
        reg.card
    }

    pub fn proposal(&mut self, card: &HealthCard, f: &str, args: Value) -> Proposal {
        let mut nonce = [0u8; 16];
        self.rng.fill_bytes(&mut nonce);
        Proposal::new_signed(card, f, vec![args], Nonce(nonce), self.now)
    }

    pub fn simulate(&mut self, card: &HealthCard, f: &str, args: Value) -> Result<(Proposal, Simulation), ChaincodeError> {
        let p = self.proposal(card, f, args);
        let sim = execute(&self.state, &p)?;
        Ok((p, sim))
    }

    pub fn to_tx(&self, p: Proposal, sim: Simulation) -> Transaction {
        let digest = hdlt_core::ledger::response_digest(&sim.read_set, &sim.write_set, &sim.result);
        Transaction::new(p, sim.read_set, sim.write_set, sim.result, vec![Endorsement::sign(&self.peer, digest)])
    }

    /// Commit transactions together in one block; returns their validity flags.
    pub fn commit(&mut self, txs: Vec<Transaction>) -> Vec<bool> {
        let prev = self.blocks.last().unwrap();
        let mut block = Block::assemble(prev.number() + 1, prev.hash(), self.now, txs.into_iter().map(Envelope::Endorser).collect());
        block.validity_flags = self.state.commit_block(&block).unwrap();
        let flags = block.validity_flags.clone();
        self.blocks.push(block);
        flags
    }

    /// Simulate and commit; returns the decoded result.
    pub fn invoke(&mut self, card: &HealthCard, f: &str, args: Value) -> Result<Value, ChaincodeError> {
        let (p, sim) = self.simulate(card, f, args)?;
        let result: Value = serde_json::from_slice(&sim.result).unwrap();
        let tx = self.to_tx(p, sim);
        assert_eq!(self.commit(vec![tx]), vec![true]);
        self.now += 1_000;
        Ok(result)
    }

    /// Simulate only.
    pub fn query(&mut self, card: &HealthCard, f: &str, args: Value) -> Result<Value, ChaincodeError> {
        let (_, sim) = self.simulate(card, f, args)?;
        Ok(serde_json::from_slice(&sim.result).unwrap())
    }

    pub fn authority(&self) -> HealthCard {
        self.admins[&Stakeholder::Authority].clone()
    }
}

/// Register and approve a doctor with the given specialty.
pub fn approved_doctor(l: &mut Ledger, id: &str, specialty: &str) -> HealthCard {
    let card = l.member(Stakeholder::Doctor, id, &[]);
    l.invoke(&card, "register_doctor", json!({"name": format!("Dr {id}"), "specialty": specialty})).unwrap();
    let auth = l.authority();
    l.invoke(&auth, "approve_doctor", json!({"doctor_id": id, "decision": "approve"})).unwrap();
    card
}

pub fn medicine(l: &mut Ledger, id: &str, contra: &[&str]) {
    let auth = l.authority();
    l.invoke(&auth, "add_medicine", json!({"medicine_id": id, "generic_name": id.to_lowercase(), "authorized": true, "contraindications": contra})).unwrap();
}
